"""Averaging in action: slow sample paths against the deterministic limit.

As eps shrinks, the fast component equilibrates ever faster and the slow
component hugs the solution of xdot = h(x), where h averages the drift over
the two wells with equal weights (the Hessians match on this landscape).
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from slowfast import (AveragedField, NoiseSchedule, SimConfig, make_drift,
                      make_example_u1, simulate_coupled_ensemble,
                      solve_limit_ode)

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

p = make_example_u1()
b = make_drift("cos")
sch = NoiseSchedule(alpha=0.25, big_c=1.0)
field = AveragedField(potential=p, drift=b, mode="laplace")
limit = solve_limit_ode(field, 0.0, 1.0, 2e-3)

fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), sharey=True)
for ax, eps in zip(axes, (0.05, 0.01, 0.002)):
    cfg = SimConfig(epsilon=eps, horizon=1.0, x0=(0.0,), y0=(0.0,),
                    schedule=sch, seed=7)
    times, XS, _ = simulate_coupled_ensemble(p, b, cfg, 12)
    for i in range(12):
        ax.plot(times, XS[i, :, 0], lw=0.6, alpha=0.5, color="C0")
    ax.plot(limit.times, limit.xs[:, 0], "k--", lw=2.0, label="limit ODE")
    ax.set_title(f"eps = {eps:g}")
    ax.set_xlabel("t")
    ax.legend(loc="lower right", fontsize=8)
axes[0].set_ylabel("X_t")
fig.tight_layout()
path = os.path.join(OUT, "averaging.png")
fig.savefig(path, dpi=120)
print(f"wrote {path}")
