"""Averaged limit dynamics and Filippov differential-inclusion checks.

The averaged drift at a slow state x is the drift b(x, .) integrated
against the limit measure of the fast process: either the atomic
small-noise limit with inverse-root-determinant weights (laplace mode) or
the finite-noise Gibbs measure by quadrature (quadrature mode, also the
fallback wherever the atomic weights are undefined because a Hessian
degenerates). Where the averaged field jumps, solutions are only
meaningful as differential inclusions, so the module also builds convex
hulls of field values over punctured neighbourhoods and tests trajectory
derivatives for membership.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, NonFiniteState, SingularHessian
from .fastproc import invariant_density_grid, laplace_limit_measure
from .potential import (DriftSpec, PotentialSpec, SearchBox,
                        find_global_minima)
from .sde import NoiseSchedule, SimConfig, simulate_coupled_ensemble
from .utils import STREAM_CONVERGENCE, write_csv


def _max_workers():
    try:
        return max(1, int(os.environ.get("SLOWFAST_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class AveragedField:
    """Averaged drift h(x) with a selectable averaging measure."""

    potential: PotentialSpec
    drift: DriftSpec
    mode: str = "laplace"  # or "quadrature"
    s_val: float | None = None
    search: SearchBox | None = None
    tie_tol: float = 1e-9
    grid_num: int | None = None
    grid_box: tuple | None = None

    def __post_init__(self):
        if self.mode not in ("laplace", "quadrature"):
            raise DomainError("mode must be laplace or quadrature")
        if self.mode == "quadrature" and (self.s_val is None or self.s_val <= 0):
            raise DomainError("quadrature mode needs a positive s_val")

    @property
    def bound(self):
        return self.drift.bound

    def eval(self, x):
        if self.mode == "laplace":
            return self._eval_laplace(x)
        return self._eval_quadrature(x)

    def _eval_laplace(self, x):
        p = self.potential
        ms = find_global_minima(p, x, search=self.search, tie_tol=self.tie_tol)
        am = laplace_limit_measure(ms)
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        xb = np.broadcast_to(xa, (ms.L, xa.shape[0]))
        bvals = np.atleast_2d(self.drift.eval(xb, ms.ys)).reshape(ms.L, p.d)
        return am.weights @ bvals

    def _eval_quadrature(self, x):
        p = self.potential
        if p.m > 2:
            raise DomainError("quadrature averaging supports m <= 2")
        gm = invariant_density_grid(p, x, self.s_val, box=self.grid_box,
                                    num=self.grid_num)
        xa = np.atleast_1d(np.asarray(x, dtype=float))
        xb = np.broadcast_to(xa, (gm.nodes.shape[0], xa.shape[0]))
        bvals = np.atleast_2d(self.drift.eval(xb, gm.nodes))
        bvals = bvals.reshape(gm.nodes.shape[0], p.d)
        return gm.weights @ bvals


def averaged_drift(f: AveragedField, x):
    """Field value at x; raises SingularHessian in laplace mode wherever a
    global-minimum Hessian degenerates."""
    return f.eval(x)


@dataclass(frozen=True)
class LimitTrajectory:
    times: np.ndarray
    xs: np.ndarray      # (n+1, d)
    flagged: np.ndarray  # nodes where a singular point forced substitution

    def to_csv(self, path, seed=None, cfg_hash=None):
        d = self.xs.shape[1]
        cols = ["t"] + [f"x_{i+1}" for i in range(d)] + ["flagged"]
        rows = ([t] + list(xr) + [int(fl)] for t, xr, fl in
                zip(self.times, self.xs, self.flagged))
        write_csv(path, cols, rows, seed=seed, cfg_hash=cfg_hash)


def solve_limit_ode(f: AveragedField, x0, T, dt) -> LimitTrajectory:
    """Classical RK4 integration of xdot = h(x).

    At isolated states where the laplace weights are undefined the solver
    reuses the last field value from the side it came from (falling back
    to quadrature when available) and flags the node.
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    n = int(np.ceil(T / dt - 1e-12))
    dt = T / n
    d = len(np.atleast_1d(x0))
    xs = np.empty((n + 1, d))
    flagged = np.zeros(n + 1, dtype=bool)
    xs[0] = np.atleast_1d(np.asarray(x0, dtype=float))
    last_h = {"value": None}

    def rhs(x):
        try:
            h = np.atleast_1d(f.eval(x))
            last_h["value"] = h
            return h, False
        except SingularHessian:
            if f.s_val is not None and f.mode == "laplace":
                quad = AveragedField(potential=f.potential, drift=f.drift,
                                     mode="quadrature", s_val=f.s_val,
                                     grid_num=f.grid_num, grid_box=f.grid_box)
                h = np.atleast_1d(quad.eval(x))
                last_h["value"] = h
                return h, True
            if last_h["value"] is None:
                raise
            return last_h["value"], True

    for k in range(n):
        x = xs[k]
        k1, f1 = rhs(x)
        k2, f2 = rhs(x + 0.5 * dt * k1)
        k3, f3 = rhs(x + 0.5 * dt * k2)
        k4, f4 = rhs(x + dt * k3)
        xs[k + 1] = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        flagged[k + 1] = f1 or f2 or f3 or f4
        if not np.all(np.isfinite(xs[k + 1])):
            raise NonFiniteState(f"limit ODE produced non-finite state at "
                                 f"step {k + 1}")
    times = np.linspace(0.0, T, n + 1)
    return LimitTrajectory(times=times, xs=xs, flagged=flagged)


# ---------------------------------------------------------------------------
# Filippov enlargement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FilippovProbe:
    """Sampling scheme for the enlargement: a decreasing list of radii and
    the number of field samples in each punctured neighbourhood."""

    deltas: tuple = (1e-2, 3e-3, 1e-3)
    n_samples: int = 40
    puncture: float = 1e-9


@dataclass(frozen=True)
class FilippovSet:
    """Convex hull of nearby field values.

    For d = 1 the hull is the interval [lo, hi]; in higher dimension only
    a sampled vertex cloud with support-function membership is kept.
    """

    x: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    points: np.ndarray | None = None

    @property
    def diameter(self):
        return float(np.max(self.hi - self.lo))

    def distance(self, v):
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if self.points is None:
            below = self.lo - v
            above = v - self.hi
            return float(np.max(np.maximum(np.maximum(below, above), 0.0)))
        # support-function lower bound on the distance to the hull
        dirs = _sphere_directions(64, v.size)
        sup = self.points @ dirs.T
        gap = v @ dirs.T - sup.max(axis=0)
        return float(np.max(np.maximum(gap, 0.0)))

    def contains(self, v, tol=1e-9):
        return self.distance(v) <= tol


def _sphere_directions(n, d):
    rng = np.random.Generator(np.random.Philox(12345))
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def filippov_enlargement(f: AveragedField, x,
                         probe: FilippovProbe | None = None) -> FilippovSet:
    """Sampled essential convex hull of the field near x.

    For each radius, the field is evaluated on the punctured neighbourhood
    (samples where the weights are undefined are skipped, standing in for
    the removed null set) and the hulls are intersected over the radius
    list. Where the field is continuous the hull collapses to nearly a
    point.
    """
    if probe is None:
        probe = FilippovProbe()
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    d = xa.size
    lo_run = np.full(d, -np.inf)
    hi_run = np.full(d, np.inf)
    pts_last = None
    for delta in sorted(probe.deltas, reverse=True):
        if d == 1:
            offs = np.linspace(-delta, delta, probe.n_samples)
            offs = offs[np.abs(offs) > probe.puncture * delta][:, None]
        else:
            dirs = _sphere_directions(probe.n_samples, d)
            radii = delta * np.linspace(0.1, 1.0, probe.n_samples)[:, None]
            offs = dirs * radii
        vals = []
        for off in offs:
            try:
                vals.append(np.atleast_1d(f.eval(xa + off)))
            except SingularHessian:
                continue
        if not vals:
            continue
        vals = np.asarray(vals)
        lo_run = np.maximum(lo_run, vals.min(axis=0))
        hi_run = np.minimum(hi_run, vals.max(axis=0))
        pts_last = vals
    if not np.all(np.isfinite(lo_run)):
        raise DomainError("no admissible probe sample near x")
    hi_run = np.maximum(hi_run, lo_run)
    return FilippovSet(x=xa, lo=lo_run, hi=hi_run,
                       points=None if d == 1 else pts_last)


@dataclass
class FilippovReport:
    violation_fraction: float
    n_checked: int
    distances: np.ndarray
    checked_idx: np.ndarray
    tol: float


def check_filippov(traj, f: AveragedField, tol,
                   probe: FilippovProbe | None = None,
                   stride=1) -> FilippovReport:
    """Membership test of a trajectory in the field's enlargement.

    Central finite differences at interior nodes are compared with the
    sampled hull at the corresponding state; the report carries the
    fraction of nodes whose derivative lies farther than ``tol``.

    The default probe radii scale with dt * |h|_inf: a discrete solution
    tracks a sliding surface only up to its own step size, so hulls must
    not be probed below that resolution.
    """
    times = traj.times
    xs = traj.xs if traj.xs.ndim == 2 else traj.xs[:, None]
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-8):
        raise DomainError("trajectory must be on a uniform grid")
    if probe is None:
        bound = getattr(f, "bound", 1.0)
        if not np.isfinite(bound) or bound <= 0:
            bound = 1.0
        base = max(dt * max(bound, 1.0), 1e-6)
        probe = FilippovProbe(deltas=(16 * base, 8 * base, 4 * base))
    idx = np.arange(1, len(times) - 1)[::stride]
    dists = np.empty(idx.size)
    for j, k in enumerate(idx):
        v = (xs[k + 1] - xs[k - 1]) / (2.0 * dt)
        hull = filippov_enlargement(f, xs[k], probe=probe)
        dists[j] = hull.distance(v)
    violations = dists > tol
    return FilippovReport(
        violation_fraction=float(violations.mean()) if idx.size else 0.0,
        n_checked=int(idx.size), distances=dists, checked_idx=idx, tol=tol)


# ---------------------------------------------------------------------------
# Convergence study
# ---------------------------------------------------------------------------

@dataclass
class ConvergenceRow:
    epsilon: float
    mean_sup_dist: float
    stderr: float
    n_paths: int
    seed: int


@dataclass
class ConvergenceResult:
    rows: list
    limit: LimitTrajectory

    def to_csv(self, path, seed=None, cfg_hash=None):
        cols = ["epsilon", "mean_sup_dist", "stderr", "n_paths", "seed"]
        rows = ([r.epsilon, r.mean_sup_dist, r.stderr, r.n_paths, r.seed]
                for r in self.rows)
        write_csv(path, cols, rows, seed=seed, cfg_hash=cfg_hash)


def convergence_study(p: PotentialSpec, b: DriftSpec, sch: NoiseSchedule,
                      eps_list, n_paths, T, seed, x0=0.0, y0=0.0,
                      field: AveragedField | None = None, limit_dt=1e-3,
                      dt_max=0.01, stab_c=0.05) -> ConvergenceResult:
    """Mean pathwise sup-distance between the coupled slow path and the
    shared deterministic limit, per epsilon.

    The metric is the mean over paths of sup_t |X^eps_t - Xbar_t| (the
    distance of means would hide the slow-noise fluctuations, so it is
    deliberately not used).
    """
    eps_list = list(eps_list)
    if any(e2 >= e1 for e1, e2 in zip(eps_list, eps_list[1:])):
        raise DomainError("eps_list must be strictly decreasing")
    if field is None:
        field = AveragedField(potential=p, drift=b, mode="laplace",
                              s_val=float(sch.s(min(eps_list))))
    limit = solve_limit_ode(field, x0, T, limit_dt)

    def run_one(i_eps):
        eps = eps_list[i_eps]
        child = int(np.random.SeedSequence(
            (int(seed), STREAM_CONVERGENCE, i_eps)).generate_state(
                1, np.uint64)[0])
        cfg = SimConfig(epsilon=eps, horizon=T,
                        x0=tuple(np.atleast_1d(x0)),
                        y0=tuple(np.atleast_1d(y0)), schedule=sch,
                        dt_max=dt_max, stab_c=stab_c, seed=child)
        times, XS, _ = simulate_coupled_ensemble(p, b, cfg, n_paths)
        ref = np.stack([np.interp(times, limit.times, limit.xs[:, j])
                        for j in range(limit.xs.shape[1])], axis=-1)
        dist = np.linalg.norm(XS - ref[None, :, :], axis=-1)
        sup = dist.max(axis=1)
        return ConvergenceRow(epsilon=float(eps),
                              mean_sup_dist=float(sup.mean()),
                              stderr=float(sup.std(ddof=1)
                                           / np.sqrt(n_paths)),
                              n_paths=int(n_paths), seed=int(seed))

    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run_one, range(len(eps_list))))
    else:
        rows = [run_one(i) for i in range(len(eps_list))]
    return ConvergenceResult(rows=rows, limit=limit)
