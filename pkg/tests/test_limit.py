import numpy as np
import pytest
from dataclasses import dataclass

from oracles import brownian_abs_sup_mean

from slowfast import (AveragedField, DomainError, FilippovProbe, NoiseSchedule,
                      PotentialSpec, SingularHessian, averaged_drift,
                      check_filippov, convergence_study, filippov_enlargement,
                      make_drift, solve_limit_ode)
from slowfast.limit import LimitTrajectory
from slowfast.potential import DriftSpec


def scalar_drift(fun, bound=1.0, k1=0.0, name="test"):
    def evaluate(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        xs = x[..., 0] if x.ndim and x.shape[-1] == 1 else x
        ys = y[..., 0] if y.ndim and y.shape[-1] == 1 else y
        xs, ys = np.broadcast_arrays(xs, ys)
        return fun(xs, ys)[..., None]
    return DriftSpec(d=1, m=1, eval=evaluate, bound=bound, k1=k1, name=name)


@dataclass
class StubField:
    """Field defined by a bare callable; enough for hull machinery."""
    fn: callable
    s_val: float | None = None
    mode: str = "stub"

    def eval(self, x):
        return np.atleast_1d(self.fn(np.atleast_1d(x)[0]))


# ---------------------------------------------------------------------------
# Averaged drift
# ---------------------------------------------------------------------------

def test_averaged_drift_u1_cos(u1, cos_drift):
    fld = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    for x in np.linspace(-2, 2, 9):
        y1 = np.sqrt((0.5 + x ** 2) / (1 + x ** 2))
        h = averaged_drift(fld, x)
        assert abs(h[0] - np.cos(y1)) <= 1e-9


def test_averaged_drift_odd_b_vanishes(u1, linear_drift):
    fld = AveragedField(potential=u1, drift=linear_drift, mode="laplace")
    for x in np.linspace(-2, 2, 7):
        assert abs(averaged_drift(fld, x)[0]) <= 1e-12


def test_averaged_drift_quadrature_close_to_laplace(u1, cos_drift):
    fl = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    fq = AveragedField(potential=u1, drift=cos_drift, mode="quadrature",
                       s_val=0.1)
    for x in (-1.0, 0.0, 0.4):
        assert abs(fl.eval(x)[0] - fq.eval(x)[0]) <= 0.01


def test_averaged_drift_bounded(u1, cos_drift):
    fld = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    for x in np.linspace(-3, 3, 13):
        assert np.linalg.norm(fld.eval(x)) <= cos_drift.bound + 1e-12


def test_averaged_drift_scale_invariance(u1, cos_drift):
    c = 3.7
    scaled = PotentialSpec(
        d=1, m=1,
        eval=lambda x, y: c * u1.eval(x, y),
        grad_y=lambda x, y: c * u1.grad_y(x, y),
        hess_y=lambda x, y: c * u1.hess_y(x, y),
        declared=u1.declared, name="scaled")
    f1 = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    f2 = AveragedField(potential=scaled, drift=cos_drift, mode="laplace")
    for x in (-1.2, 0.0, 0.8):
        assert abs(f1.eval(x)[0] - f2.eval(x)[0]) <= 1e-12


def test_averaged_drift_singular_raises(u2, cos_drift):
    fld = AveragedField(potential=u2, drift=cos_drift, mode="laplace")
    with pytest.raises(SingularHessian):
        averaged_drift(fld, 0.0)


def test_averaged_drift_lipschitz_sampled(u1, cos_drift):
    # h(x) = cos(y1(x)); |h'| <= |y1'| <= 0.23 for this landscape
    fld = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    xs = np.linspace(-3, 3, 61)
    hs = np.array([fld.eval(x)[0] for x in xs])
    quot = np.abs(np.diff(hs) / np.diff(xs))
    assert quot.max() <= 0.25


# ---------------------------------------------------------------------------
# Limit ODE
# ---------------------------------------------------------------------------

def test_limit_ode_zero_field_constant(u1, linear_drift):
    fld = AveragedField(potential=u1, drift=linear_drift, mode="laplace")
    traj = solve_limit_ode(fld, 0.7, 1.0, 0.01)
    assert np.allclose(traj.xs, 0.7, atol=1e-12)


def test_limit_ode_rk4_self_convergence(u1, cos_drift):
    fld = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    a = solve_limit_ode(fld, 0.0, 1.0, 0.02)
    b = solve_limit_ode(fld, 0.0, 1.0, 0.01)
    assert abs(a.xs[-1, 0] - b.xs[-1, 0]) <= 1e-8


def test_limit_ode_example22_clipped_bilinear(u2):
    bxy = scalar_drift(lambda xs, ys: np.clip(xs * ys, -5.0, 5.0), bound=5.0,
                       k1=5.0, name="xy")
    fld = AveragedField(potential=u2, drift=bxy, mode="laplace", s_val=0.25)
    traj = solve_limit_ode(fld, 0.8, 1.0, 0.01)
    # the two atoms are symmetric, so the averaged field vanishes and the
    # classical solution is frozen at its start
    assert np.allclose(traj.xs, 0.8, atol=1e-10)


def test_limit_ode_singular_start_uses_quadrature_fallback(u2, cos_drift):
    fld = AveragedField(potential=u2, drift=cos_drift, mode="laplace",
                        s_val=0.2)
    traj = solve_limit_ode(fld, 0.0, 0.05, 0.01)
    assert traj.flagged[1]
    assert np.isfinite(traj.xs).all()


# ---------------------------------------------------------------------------
# Filippov enlargement
# ---------------------------------------------------------------------------

def test_hull_of_sign_field():
    hull = filippov_enlargement(StubField(lambda x: np.sign(x)), 0.0)
    assert hull.lo[0] == pytest.approx(-1.0)
    assert hull.hi[0] == pytest.approx(1.0)
    assert hull.contains(0.0)


def test_hull_collapses_where_continuous(u1, cos_drift):
    fld = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    hull = filippov_enlargement(fld, 0.5,
                                FilippovProbe(deltas=(1e-2, 1e-3)))
    assert hull.diameter <= 0.25 * 1e-3 * 2 + 1e-9


def test_hull_example23_segment(u3):
    bsin = make_drift("sin")
    fld = AveragedField(potential=u3, drift=bsin, mode="laplace")
    hull = filippov_enlargement(fld, 0.0)
    side = np.sin(np.sqrt(0.5))
    assert hull.lo[0] == pytest.approx(-side, abs=5e-3)
    assert hull.hi[0] == pytest.approx(side, abs=5e-3)
    # contains both one-sided limits and the two-atom average
    assert hull.contains(side, tol=6e-3)
    assert hull.contains(0.0)


def test_hull_monotone_under_refinement(u3):
    bsin = make_drift("sin")
    fld = AveragedField(potential=u3, drift=bsin, mode="laplace")
    big = filippov_enlargement(fld, 0.0, FilippovProbe(deltas=(1e-2,)))
    small = filippov_enlargement(fld, 0.0,
                                 FilippovProbe(deltas=(1e-2, 1e-3)))
    assert small.lo[0] >= big.lo[0] - 1e-9
    assert small.hi[0] <= big.hi[0] + 1e-9


# ---------------------------------------------------------------------------
# Filippov membership of trajectories
# ---------------------------------------------------------------------------

def test_check_filippov_smooth_solution(u1, cos_drift):
    fld = AveragedField(potential=u1, drift=cos_drift, mode="laplace")
    traj = solve_limit_ode(fld, 0.0, 1.0, 0.005)
    rep = check_filippov(traj, fld, tol=0.05, stride=10)
    assert rep.violation_fraction == 0.0


def test_check_filippov_constant_trajectory():
    fld = StubField(lambda x: 0.0)
    times = np.linspace(0, 1, 101)
    traj = LimitTrajectory(times=times, xs=np.full((101, 1), 0.3),
                           flagged=np.zeros(101, dtype=bool))
    rep = check_filippov(traj, fld, tol=1e-6, stride=5)
    assert rep.violation_fraction == 0.0


def test_check_filippov_sliding_mode():
    fld = StubField(lambda x: -np.sign(x) if x != 0 else 0.0)
    times = np.linspace(0, 1, 201)
    traj = LimitTrajectory(times=times, xs=np.zeros((201, 1)),
                           flagged=np.zeros(201, dtype=bool))
    rep = check_filippov(traj, fld, tol=1e-9, stride=7)
    assert rep.violation_fraction == 0.0  # 0 lies in [-1, 1]


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------

def test_convergence_pure_noise_matches_reflection_oracle(u1, zero_drift):
    sch = NoiseSchedule(alpha=0.25, big_c=1.0)
    res = convergence_study(u1, zero_drift, sch, [0.05, 0.02], 200, 1.0,
                            seed=31, x0=0.0, y0=0.0)
    expect = brownian_abs_sup_mean(1.0)
    for row in res.rows:
        assert row.mean_sup_dist == pytest.approx(
            row.epsilon ** 0.25 * expect, rel=0.05)


def test_convergence_stderr_scaling(u1, cos_drift):
    sch = NoiseSchedule(alpha=0.25, big_c=1.0)
    r1 = convergence_study(u1, cos_drift, sch, [0.05], 100, 0.5, seed=5)
    r2 = convergence_study(u1, cos_drift, sch, [0.05], 200, 0.5, seed=5)
    ratio = r2.rows[0].stderr / r1.rows[0].stderr
    assert 0.55 <= ratio <= 0.9


def test_convergence_requires_decreasing_eps(u1, cos_drift):
    sch = NoiseSchedule(alpha=0.25, big_c=1.0)
    with pytest.raises(DomainError):
        convergence_study(u1, cos_drift, sch, [0.01, 0.05], 10, 0.5, seed=1)


def test_convergence_csv(tmp_path, u1, cos_drift):
    from slowfast.utils import read_csv
    sch = NoiseSchedule(alpha=0.25, big_c=1.0)
    res = convergence_study(u1, cos_drift, sch, [0.05, 0.02], 8, 0.3, seed=2)
    path = tmp_path / "conv.csv"
    res.to_csv(path, seed=2, cfg_hash="x")
    cols, rows = read_csv(path)
    assert cols == ["epsilon", "mean_sup_dist", "stderr", "n_paths", "seed"]
    assert len(rows) == 2


def test_thread_cap_does_not_change_results(monkeypatch, u1, cos_drift):
    sch = NoiseSchedule(alpha=0.25, big_c=1.0)
    serial = convergence_study(u1, cos_drift, sch, [0.05, 0.02], 8, 0.3,
                               seed=6)
    monkeypatch.setenv("SLOWFAST_THREADS", "2")
    threaded = convergence_study(u1, cos_drift, sch, [0.05, 0.02], 8, 0.3,
                                 seed=6)
    for a, b in zip(serial.rows, threaded.rows):
        assert a.mean_sup_dist == b.mean_sup_dist
        assert a.stderr == b.stderr
