"""Render the three canonical CSV kinds into figures.

Column contracts (header comment lines starting with '#' are skipped):

  convergence : epsilon, mean_sup_dist, stderr[, n_paths, seed]
  density     : y_1, weight[, log_density]  plus an atoms file y_1, weight
  arrhenius   : s, inv_s_sq, tau[, fit_r2]
"""

import csv
from dataclasses import dataclass

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("convergence", "density", "arrhenius")

_REQUIRED = {
    "convergence": ("epsilon", "mean_sup_dist", "stderr"),
    "density": ("y_1", "weight"),
    "density_atoms": ("y_1", "weight"),
    "arrhenius": ("inv_s_sq", "tau"),
}

_STYLE = {"figure.figsize": (6.0, 4.0), "figure.dpi": 120,
          "font.size": 10, "svg.hashsalt": "slowfast"}
_METADATA = {"Software": "slowfast-plots"}


class SchemaError(Exception):
    """Input CSV does not satisfy the required column contract."""


@dataclass(frozen=True)
class PlotJob:
    """One rendering request: input CSV path(s), kind, output image."""

    kind: str
    inputs: tuple
    output: str
    logx: bool = True
    logy: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise SchemaError(f"unknown plot kind '{self.kind}'")
        need = 2 if self.kind == "density" else 1
        if len(self.inputs) != need:
            raise SchemaError(
                f"kind '{self.kind}' expects {need} input file(s), "
                f"got {len(self.inputs)}")


def read_table(path, required):
    """Read a slowfast CSV into a dict of float columns; strict columns."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    if not rows:
        raise SchemaError(f"{path}: empty CSV")
    header, data = rows[0], rows[1:]
    missing = [c for c in required if c not in header]
    if missing:
        raise SchemaError(f"{path}: missing columns {missing}")
    if not data:
        raise SchemaError(f"{path}: no data rows")
    cols = {}
    for c in required:
        j = header.index(c)
        try:
            cols[c] = np.array([float(r[j]) for r in data])
        except (ValueError, IndexError) as exc:
            raise SchemaError(f"{path}: bad value in column '{c}'") from exc
    return cols


def render(job: PlotJob) -> str:
    """Draw the figure for a job and write it to the output path."""
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        if job.kind == "convergence":
            t = read_table(job.inputs[0], _REQUIRED["convergence"])
            order = np.argsort(t["epsilon"])
            ax.errorbar(t["epsilon"][order], t["mean_sup_dist"][order],
                        yerr=t["stderr"][order], marker="o", capsize=3)
            if job.logx:
                ax.set_xscale("log")
            ax.set_xlabel("epsilon")
            ax.set_ylabel("mean sup distance to limit")
            ax.set_title("slow-path convergence")
        elif job.kind == "density":
            dens = read_table(job.inputs[0], _REQUIRED["density"])
            atoms = read_table(job.inputs[1], _REQUIRED["density_atoms"])
            y = dens["y_1"]
            w = dens["weight"]
            dy = np.median(np.diff(np.sort(np.unique(y))))
            ax.plot(y, w / dy, lw=1.2, label="invariant density")
            top = (w / dy).max()
            for yloc, aw in zip(atoms["y_1"], atoms["weight"]):
                ax.vlines(yloc, 0.0, aw * top, colors="C3", lw=2.0)
            ax.vlines([], [], [], colors="C3", lw=2.0,
                      label="limit atoms (scaled)")
            ax.set_xlabel("y")
            ax.set_ylabel("density")
            ax.set_title("invariant density and small-noise atoms")
            ax.legend(loc="upper right")
        else:  # arrhenius
            t = read_table(job.inputs[0], _REQUIRED["arrhenius"])
            order = np.argsort(t["inv_s_sq"])
            ax.plot(t["inv_s_sq"][order], t["tau"][order], marker="s")
            if job.logy:
                ax.set_yscale("log")
            ax.set_xlabel("1 / s^2")
            ax.set_ylabel("relaxation time")
            ax.set_title("Arrhenius slowdown")
        ax.grid(True, alpha=0.3)
        fig.tight_layout()
        fig.savefig(job.output, metadata=dict(_METADATA))
        plt.close(fig)
    return job.output
