"""The built-in landscapes and how their global minima move with the slow
state.

The symmetric double well keeps two equal minima for every x; the merging
well collapses them into one degenerate minimum at x = 0; the tilted well
switches which side is global as x crosses zero. The minima search (grid
scan + Newton polish) tracks all of this automatically.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slowfast import find_global_minima, make_model

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

fig, axes = plt.subplots(2, 3, figsize=(12, 6.5))
ys = np.linspace(-1.6, 1.6, 400)

for col, name in enumerate(["example_2_1", "example_2_2", "example_2_3"]):
    p = make_model(name)

    ax = axes[0, col]
    for x in (0.0, 0.5, 1.5):
        ax.plot(ys, p.eval(np.full_like(ys, x), ys), label=f"x={x:g}")
    ax.set_title(name)
    ax.set_xlabel("y")
    ax.set_ylabel("U(x, y)")
    ax.legend(fontsize=8)

    # minima branches over the slow state
    ax = axes[1, col]
    xs = np.linspace(-2.5, 2.5, 201)
    for x in xs:
        ms = find_global_minima(p, x)
        ax.plot([x] * ms.L, ms.ys[:, 0], "k.", ms=2)
    ax.set_xlabel("x")
    ax.set_ylabel("global minima y_i(x)")

fig.tight_layout()
path = os.path.join(OUT, "landscapes.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
