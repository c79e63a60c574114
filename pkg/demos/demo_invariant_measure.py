"""Gibbs densities of the frozen fast process and their small-noise limit.

On the asymmetric two-well (curvatures 1 and 4 at equal depths) the mass
splits 2:1 in favour of the flatter well as the noise vanishes: the limit
weights are inverse square roots of the Hessian determinants.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slowfast import (find_global_minima, invariant_density_grid,
                      laplace_limit_measure, make_asymmetric_two_well)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

p = make_asymmetric_two_well()
ms = find_global_minima(p, 0.0)
atoms = laplace_limit_measure(ms)
print("minima:", ms.ys.ravel(), "hessians:", np.round(ms.hess_dets, 5))
print("limit weights:", atoms.weights)

fig, ax = plt.subplots(figsize=(7, 4))
for s_val, color in ((0.5, "C0"), (0.3, "C1"), (0.15, "C2")):
    gm = invariant_density_grid(p, 0.0, s_val, box=(-6, 6), num=4001)
    y = gm.nodes[:, 0]
    dy = y[1] - y[0]
    ax.plot(y, gm.weights / dy, color=color, label=f"s = {s_val:g}")
for loc, w in zip(atoms.locations[:, 0], atoms.weights):
    ax.annotate(f"w = {w:.3f}", (loc, 0), xytext=(loc, 2.2),
                ha="center", arrowprops={"arrowstyle": "->"})
ax.set_xlim(-5, 4)
ax.set_xlabel("y")
ax.set_ylabel("invariant density")
ax.legend()
fig.tight_layout()
path = os.path.join(OUT, "invariant_measure.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
