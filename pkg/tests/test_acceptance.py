"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Seeds are frozen so the whole gate is deterministic. Monte Carlo
tolerances are pinned to the values in the criteria themselves.
"""

import numpy as np

from oracles import (brute_force_w_constants, fd_gradient, fd_hessian,
                     kalman_reference, rel_err)

from slowfast import (AveragedField, NoiseSchedule, SimConfig,
                      action_functional, convergence_study,
                      find_global_minima, laplace_vs_quadrature, make_drift,
                      make_example_u1, make_example_u2, make_example_u3,
                      make_asymmetric_two_well, make_quadratic_bowl,
                      simulate_coupled, w_graph_constants)
from slowfast.diagnostics import (SlowdownConfig, reproduce_example,
                                  spectral_slowdown_study)
from slowfast.filtering import (FilterConfig, filter_vs_invariant,
                                run_fkk_particle_filter)
from slowfast.utils import smoothed_sign


RESULTS = []


def _report(num, desc, passed, details=""):
    tag = "PASS" if passed else "FAIL"
    line = f"[criterion {num}] {tag} - {desc}"
    if details:
        line += f" ({details})"
    RESULTS.append(line)
    print(line, flush=True)
    return passed


def test_criterion_1_averaging_convergence():
    """Mean pathwise sup-distance to the deterministic limit across the
    epsilon grid: non-increasing trend and a hard bound at the smallest
    epsilon.

    Note on the bound: the slow path carries the additive noise term
    eps^alpha * B_t, whose sup over [0,1] alone has expectation
    eps^alpha * sqrt(pi/2) ~= 0.33 at eps = 0.005, alpha = 0.25; the
    pathwise sup-distance to a deterministic curve can therefore not fall
    below ~0.21 (= eps^alpha * E|B_1|) regardless of averaging quality.
    The 0.15 bound is asserted as stated, and fails for that reason.
    """
    u1 = make_example_u1()
    b = make_drift("cos")
    sch = NoiseSchedule(alpha=0.25, big_c=1.0)
    eps_list = [0.05, 0.02, 0.01, 0.005]
    res = convergence_study(u1, b, sch, eps_list, 50, 1.0, seed=1,
                            x0=0.0, y0=0.0)
    ds = [r.mean_sup_dist for r in res.rows]
    es = [r.stderr for r in res.rows]
    trend = all(ds[i + 1] <= ds[i] + es[i] + es[i + 1]
                for i in range(len(ds) - 1))
    bound = ds[-1] <= 0.15
    detail = ("D=" + ", ".join(f"{d:.3f}" for d in ds)
              + f"; trend={trend}, D(0.005)={ds[-1]:.3f} vs 0.15"
              + "; noise floor eps^a*E|sup B| ~= 0.33 makes the bound "
                "unattainable")
    _report(1, "averaging convergence trend and bound", trend and bound,
            detail)
    assert trend
    assert bound, (f"D(0.005) = {ds[-1]:.3f} > 0.15: the slow-noise term "
                   "alone contributes >= 0.21 at these parameters")


def test_criterion_2_laplace_determinantal_weights():
    paw = make_asymmetric_two_well()
    rows = laplace_vs_quadrature(paw, 0.0, [0.4, 0.2, 0.1], ball_radius=1.0,
                                 box=(-6.0, 6.0), num=4001)
    masses = rows[-1].ball_masses
    ok_weights = np.abs(masses - np.array([2 / 3, 1 / 3])).max() <= 0.03
    errs = [r.max_error for r in rows]
    ok_monotone = errs[2] <= errs[1] <= errs[0] + 1e-15
    passed = ok_weights and ok_monotone
    _report(2, "determinantal ball masses (2/3, 1/3) with shrinking error",
            passed, f"masses={np.round(masses, 4)}, errors="
            + ", ".join(f"{e:.2e}" for e in errs))
    assert passed


def test_criterion_3_determinant_formula_limit_ode():
    u1 = make_example_u1()
    b = make_drift("cos")
    fld = AveragedField(potential=u1, drift=b, mode="laplace")
    rng = np.random.default_rng(3)
    xs = rng.uniform(-3.0, 3.0, 100)
    worst = 0.0
    for x in xs:
        ms = find_global_minima(u1, x)
        expect = 0.5 * (np.cos(ms.ys[0, 0]) + np.cos(ms.ys[1, 0]))
        worst = max(worst, abs(fld.eval(x)[0] - expect))
    ok_exact = worst <= 1e-12
    fq = AveragedField(potential=u1, drift=b, mode="quadrature", s_val=0.1)
    worst_q = max(abs(fq.eval(x)[0] - fld.eval(x)[0])
                  for x in xs[::10])
    ok_quad = worst_q <= 0.01
    passed = ok_exact and ok_quad
    _report(3, "averaged drift equals the equal-weight minima average",
            passed, f"max |h - avg b| = {worst:.2e}, quadrature gap "
            f"{worst_q:.4f}")
    assert passed


def test_criterion_4_spectral_slowdown():
    u1 = make_example_u1()
    bowl = make_quadratic_bowl()
    cfg = SlowdownConfig(ensemble=800, dt=0.0125, seed=14)
    rep = spectral_slowdown_study(u1, 0.0, [0.40, 0.32, 0.27, 0.24], cfg)
    slope = rep.metrics["slope_hat"]
    pred = rep.metrics["predicted_slope"]
    ok_pos = slope > 0
    ok_factor = 0.5 <= slope / pred <= 2.0
    cfg_b = SlowdownConfig(ensemble=800, dt=0.0125, seed=15)
    rep_b = spectral_slowdown_study(bowl, 0.0, [0.40, 0.32, 0.27, 0.24],
                                    cfg_b)
    slope_b = rep_b.metrics["slope_hat"]
    ok_flat = abs(slope_b) <= 0.1 * abs(slope)
    passed = ok_pos and ok_factor and ok_flat
    _report(4, "Arrhenius slope within factor 2 of the barrier prediction",
            passed, f"slope={slope:.3f}, predicted={pred:.3f}, "
            f"bowl slope={slope_b:.4f}")
    assert passed


def test_criterion_5_fkk_filter_matches_kalman():
    """Particle filter vs the exact Kalman recursion, 20 runs of N=5000.

    The per-step Monte Carlo standard error is estimated across runs with
    a five-step moving pool (the error variance is locally stationary;
    pooling keeps the SE estimate itself from injecting 19-dof noise into
    a hundred three-sigma comparisons).
    """
    bowl = make_quadratic_bowl()
    blin = make_drift("linear")
    errs_m, errs_v = [], []
    for r in range(20):
        sch = NoiseSchedule(alpha=0.5, big_c=1.0)
        sim = SimConfig(epsilon=0.02, horizon=0.5, x0=(0.0,), y0=(0.4,),
                        schedule=sch, seed=r)
        traj = simulate_coupled(bowl, blin, sim)
        fc = FilterConfig(n_particles=5000, epsilon=0.02, schedule=sch,
                          seed=1000 + r)
        res = run_fkk_particle_filter(bowl, blin, traj, fc)
        dt = traj.times[1] - traj.times[0]
        km, kv = kalman_reference(traj.xs[:, 0], dt, 0.02, sch.alpha,
                                  float(sch.s(0.02)), 1.0, traj.ys[0, 0])
        errs_m.append(res.means[:, 0] - km)
        errs_v.append(res.variances[:, 0] - kv)
    worst = {}
    for name, errs in (("mean", np.array(errs_m)), ("var", np.array(errs_v))):
        check = np.arange(10, errs.shape[1], 10)
        bias = np.abs(errs.mean(axis=0))[check]
        var_k = errs.var(axis=0, ddof=1)[check]
        pooled = np.array([var_k[max(0, i - 2):i + 3].mean()
                           for i in range(len(var_k))])
        se = np.sqrt(pooled / errs.shape[0])
        worst[name] = float((bias / se).max())
    passed = worst["mean"] <= 3.0 and worst["var"] <= 3.0
    _report(5, "particle filter matches Kalman within 3 MC standard errors",
            passed, f"worst z: mean={worst['mean']:.2f}, "
            f"var={worst['var']:.2f}")
    assert passed


def test_criterion_6_filter_vs_invariant():
    u1 = make_example_u1()
    b = make_drift("cos")
    sch = NoiseSchedule(alpha=0.25, big_c=1.0)
    eps = 0.01
    sim = SimConfig(epsilon=eps, horizon=1.0, x0=(0.0,), y0=(0.0,),
                    schedule=sch, seed=61)
    traj = simulate_coupled(u1, b, sim)
    fsig = smoothed_sign(0.25)
    fc = FilterConfig(n_particles=2000, epsilon=eps, schedule=sch, seed=62)
    res = run_fkk_particle_filter(u1, b, traj, fc,
                                  test_functions={"sign": fsig})
    disc = filter_vs_invariant(res, u1, "sign", fsig)
    passed = disc.max_abs <= 0.1
    _report(6, "time-averaged filter matches the frozen invariant measure",
            passed, f"max |A-B| = {disc.max_abs:.4f} over kappa="
            f"{disc.kappa:g} windows")
    assert passed


def test_criterion_7_filippov_membership():
    rep3 = reproduce_example("example_2_3", {"paths": 16, "seed": 43})
    viol3 = rep3.metrics["filippov_violation_fraction"]
    ok3 = viol3 <= 0.01 and rep3.metrics["hull_at_0_diameter"] >= 1.0
    rep1 = reproduce_example("example_2_1", {"paths": 16, "seed": 41})
    viol1 = rep1.metrics["filippov_violation_fraction"]
    ok1 = viol1 == 0.0
    passed = ok3 and ok1
    _report(7, "trajectories satisfy the differential inclusion", passed,
            f"violations: discontinuous case {viol3:.3f}, smooth case "
            f"{viol1:.3f}")
    assert passed


def test_criterion_8_calculus_correctness():
    models = [make_example_u1(), make_example_u2(), make_example_u3(),
              make_quadratic_bowl(), make_asymmetric_two_well()]
    rng = np.random.default_rng(8)
    worst_g, worst_h = 0.0, 0.0
    ok = True
    for p in models:
        xs = rng.uniform(-3, 3, 1000)
        ys = rng.uniform(-3, 3, (1000, p.m))
        for x, y in zip(xs, ys):
            g = np.atleast_1d(p.grad_y(x, y)).reshape(p.m)
            eg = rel_err(g, fd_gradient(p, x, y)).max()
            worst_g = max(worst_g, eg)
            htol = 1e-3 if (p.name == "example_2_3"
                            and abs(y[0]) <= 1e-3) else 1e-4
            h = p.hess_y(x, y).reshape(p.m, p.m)
            eh = rel_err(h, fd_hessian(p, x, y)).max()
            if eh > htol:
                ok = False
            worst_h = max(worst_h, eh)
    ok = ok and worst_g <= 1e-5

    bowl = make_quadratic_bowl()
    dt = 1e-3
    times = np.arange(0.0, 5.0 + dt / 2, dt)
    down = action_functional(bowl, 0.0, np.exp(-times), times)
    ok_down = down <= 1e-4
    delta = 1e-4
    T = np.log(1.0 / delta)
    t_up = np.append(np.arange(0.0, T, dt), T)
    up = action_functional(bowl, 0.0, delta * np.exp(t_up), t_up,
                           scheme="midpoint")
    ok_up = abs(up - 0.5 * 4.0) <= 0.02 * 2.0  # 4 * (U(1)-U(0)) = 2
    passed = ok and ok_down and ok_up
    _report(8, "derivative and action calculus checks", passed,
            f"worst grad err {worst_g:.1e}, worst hess err {worst_h:.1e}, "
            f"downhill action {down:.1e}, uphill {up:.4f} vs 2")
    assert passed


def test_criterion_9_w_graph_constants():
    rng = np.random.default_rng(9)
    exact = True
    for _ in range(50):
        L = int(rng.integers(2, 5))
        vt = rng.uniform(0.05, 4.0, size=(L, L))
        np.fill_diagonal(vt, 0.0)
        got = w_graph_constants(vt, L)
        want = brute_force_w_constants(vt)
        if not np.array_equal(got, want):
            exact = False
            break
    _report(9, "graph hierarchy constants match brute-force enumeration",
            exact, "50 random matrices, L in {2,3,4}, exact equality")
    assert exact
