"""Figure rendering for the slowfast CSV output contract.

This package never recomputes any science: it reads the documented CSV
columns and draws them. Rendering is deterministic (fixed figure size,
fonts and metadata, no timestamps), so identical inputs give identical
image bytes.
"""

from .render import PlotJob, SchemaError, render

__version__ = "0.1.0"
