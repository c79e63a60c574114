"""Relaxation slowdown of the frozen fast process as its noise shrinks.

Crossing the barrier between the two wells takes exp(2 * barrier / s^2)
time, so ln(tau) against 1/s^2 is a line whose slope is predicted by the
landscape's transition cost (a quarter of the cost is the barrier height,
and the Gibbs exponent doubles it). This demo uses modest noise levels to
stay quick; the acceptance suite pushes further down.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from slowfast import (estimate_relaxation_time, find_global_minima,
                      make_example_u1, quasipotential_1d, smoothed_sign,
                      w_graph_constants)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

p = make_example_u1()
ms = find_global_minima(p, 0.0)
vt = quasipotential_1d(p, 0.0, ms)
V = w_graph_constants(vt, ms.L)
predicted_slope = (V[0] - V[1]) / 2.0
print(f"transition cost {vt[0, 1]:.3f}, predicted slope "
      f"{predicted_slope:.3f}")

f = smoothed_sign(0.25)
s_list = [0.50, 0.44, 0.40, 0.36]
taus = []
for i, s in enumerate(s_list):
    t_max = 15.0 * np.exp(predicted_slope / s ** 2)
    tau, fit = estimate_relaxation_time(p, 0.0, s, f, ensemble=500,
                                        t_max=t_max, dt=0.0125, seed=30 + i)
    taus.append(tau)
    print(f"s={s:.2f}: tau={tau:8.2f}  (fit r2={fit.r2:.3f})")

inv = np.array([1 / s ** 2 for s in s_list])
coef = np.polyfit(inv, np.log(taus), 1)
print(f"fitted slope {coef[0]:.3f} vs predicted {predicted_slope:.3f}")

fig, ax = plt.subplots(figsize=(6, 4))
ax.semilogy(inv, taus, "o", label="measured tau")
grid = np.linspace(inv.min(), inv.max(), 50)
ax.semilogy(grid, np.exp(coef[1] + coef[0] * grid), "-",
            label=f"fit, slope {coef[0]:.2f}")
ax.semilogy(grid, taus[0] * np.exp(predicted_slope * (grid - inv[0])), "--",
            label=f"barrier prediction, slope {predicted_slope:.2f}")
ax.set_xlabel("1 / s^2")
ax.set_ylabel("relaxation time")
ax.legend(fontsize=8)
fig.tight_layout()
path = os.path.join(OUT, "arrhenius.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
