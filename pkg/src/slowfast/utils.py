"""Small shared helpers: RNG streams, array shaping, CSV output."""

import csv
import hashlib

import numpy as np

__version__ = "0.1.0"

# Stable stream tags so that every stochastic operation owns a disjoint
# counter-based stream derived from the user seed.
STREAM_COUPLED = 101
STREAM_FROZEN = 202
STREAM_FILTER_PROP = 303
STREAM_FILTER_RESAMPLE = 304
STREAM_RELAX = 404
STREAM_ASSUMP = 505
STREAM_CONVERGENCE = 606


def stream(seed, *tags):
    """Counter-based generator for (seed, *tags).

    Philox streams keyed on the full tag tuple are independent and
    reproducible no matter in which order (or on which worker) they are
    consumed.
    """
    ss = np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF,
                                spawn_key=tuple(int(t) for t in tags))
    return np.random.Generator(np.random.Philox(ss))


def as_batch(v, dim, name="argument"):
    """Coerce `v` to an array whose trailing axis has length `dim`.

    Scalars and trailing-axis-free arrays are allowed when dim == 1.
    Returns (array, had_trailing_axis).
    """
    a = np.asarray(v, dtype=float)
    if a.ndim >= 1 and a.shape[-1] == dim:
        return a, True
    if dim == 1:
        return a[..., None], False
    raise ValueError(f"{name} must have trailing axis of length {dim}, got shape {a.shape}")


def smoothed_sign(width=0.25):
    """Bounded odd test function tanh(y/width), applied to the first
    coordinate of the fast variable."""
    w = float(width)

    def f(y):
        y = np.asarray(y, dtype=float)
        if y.ndim >= 1 and y.shape[-1] >= 1:
            y = y[..., 0]
        return np.tanh(y / w)

    f.__name__ = f"smoothed_sign_{w:g}"
    return f


def config_hash(mapping):
    """Short stable hash of a flat configuration mapping."""
    blob = "\n".join(f"{k}={mapping[k]}" for k in sorted(mapping))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def write_csv(path, columns, rows, seed=None, cfg_hash=None):
    """Write rows (iterable of sequences) with a metadata comment line.

    The comment line carries package version, seed and config hash so
    that every output file is traceable to the run that produced it.
    """
    with open(path, "w", newline="") as fh:
        fh.write(f"# slowfast={__version__} seed={seed} config={cfg_hash}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (int, np.integer)):
        return int(v)
    return v


def read_csv(path):
    """Read a CSV written by `write_csv`: returns (columns, list of rows)."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]
