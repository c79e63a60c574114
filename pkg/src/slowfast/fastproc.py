"""Frozen-x fast process analysis.

Quadrature representation of the Gibbs invariant measure with density
proportional to exp(-2 U(x, y) / s^2), its small-s atomic limit with
inverse-root-determinant weights, empirical relaxation times of the
frozen dynamics, and the landscape constants (pairwise transition costs,
graph hierarchy values, their sup-gap) that control the slowdown.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (DimensionError, DomainError, SingularHessian,
                     TailMassTooLarge, TooManyMinima)
from .potential import MinimaSet, PotentialSpec, find_global_minima
from .sde import simulate_frozen
from .utils import STREAM_RELAX

TAIL_TOL = 1e-8


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridMeasure:
    """Quadrature representation of the invariant measure at noise s_val.

    ``log_density`` is the unnormalized log-density -2U/s^2 on the nodes,
    ``log_norm`` the log of the absolute normalizer (trapezoid estimate of
    the integral), and ``weights`` the normalized quadrature masses.
    """

    axes: tuple
    nodes: np.ndarray        # (N, m)
    log_density: np.ndarray  # (N,)
    log_norm: float
    weights: np.ndarray      # (N,), sums to one
    tail_estimate: float
    s_val: float
    x: np.ndarray

    @property
    def m(self):
        return self.nodes.shape[1]

    def to_csv(self, path, seed=None, cfg_hash=None):
        from .utils import write_csv
        cols = [f"y_{j+1}" for j in range(self.m)] + ["weight", "log_density"]
        rows = (list(n) + [w, ld] for n, w, ld in
                zip(self.nodes, self.weights, self.log_density))
        write_csv(path, cols, rows, seed=seed, cfg_hash=cfg_hash)


@dataclass(frozen=True)
class AtomicMeasure:
    """Finitely supported small-noise limit measure."""

    locations: np.ndarray  # (L, m)
    weights: np.ndarray    # (L,), positive, sums to one

    @property
    def L(self):
        return self.locations.shape[0]

    def to_csv(self, path, seed=None, cfg_hash=None):
        from .utils import write_csv
        m = self.locations.shape[1]
        cols = [f"y_{j+1}" for j in range(m)] + ["weight"]
        rows = (list(loc) + [w] for loc, w in
                zip(self.locations, self.weights))
        write_csv(path, cols, rows, seed=seed, cfg_hash=cfg_hash)


def _default_box(p, s_val):
    rp = 1.0 if p.declared is None else max(p.declared.r_prime, 1.0)
    half = rp + 1.0 + 2.0 * s_val
    return (-half, half)


def invariant_density_grid(p: PotentialSpec, x, s_val, box=None,
                           num=None) -> GridMeasure:
    """Trapezoid quadrature of the Gibbs density on a tensor grid.

    All arithmetic is kept in the log domain, so small s never underflows;
    the reported tail estimate bounds the mass lost outside the box using
    the outward slope of U at the boundary (U is convex out there, hence
    grows at least linearly along outward rays).
    """
    if s_val <= 0:
        raise DomainError("s_val must be positive")
    if p.m > 2:
        raise DimensionError("quadrature supports m <= 2")
    m = p.m
    if box is None:
        box = _default_box(p, s_val)
    lo, hi = float(box[0]), float(box[1])
    if p.declared is not None and hi < p.declared.r_prime:
        raise DomainError("box must contain [-r', r']")
    if num is None:
        num = 4001 if m == 1 else 241
    axes = tuple(np.linspace(lo, hi, num) for _ in range(m))
    mesh = np.meshgrid(*axes, indexing="ij")
    nodes = np.stack([g.ravel() for g in mesh], axis=-1)
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    xb = np.broadcast_to(xa, (nodes.shape[0], xa.shape[0]))
    u = np.atleast_1d(p.eval(xb, nodes))
    logdens = -2.0 * u / s_val ** 2

    w1 = np.full(num, (hi - lo) / (num - 1))
    w1[0] *= 0.5
    w1[-1] *= 0.5
    if m == 1:
        logw = np.log(w1)
    else:
        logw = (np.log(w1)[:, None] + np.log(w1)[None, :]).ravel()
    log_norm = float(logsumexp(logdens + logw))
    weights = np.exp(logdens + logw - log_norm)
    weights /= weights.sum()

    tail = _tail_estimate(p, xa, s_val, axes, log_norm)
    if tail >= TAIL_TOL:
        raise TailMassTooLarge(
            f"estimated tail mass {tail:.2e} >= {TAIL_TOL:g}; enlarge box")
    return GridMeasure(axes=axes, nodes=nodes, log_density=logdens,
                       log_norm=log_norm, weights=weights,
                       tail_estimate=tail, s_val=s_val, x=xa)


def _tail_estimate(p, xa, s_val, axes, log_norm):
    """Upper bound on relative mass outside the box.

    Along each outward boundary normal, U grows at least linearly with the
    boundary slope a = <grad U, n>, so the exterior integral per face is
    bounded by a boundary integral times s^2 / (2a).
    """
    m = len(axes)
    s2 = s_val ** 2
    pieces = []
    if m == 1:
        grid = axes[0]
        for edge, nvec in ((grid[0], -1.0), (grid[-1], 1.0)):
            y = np.array([[edge]])
            a = float(p.grad_y(xa[None, :], y).reshape(-1)[0]) * nvec
            if a <= 0:
                return 1.0  # cannot certify smallness: box too small
            u_edge = float(np.atleast_1d(p.eval(xa[None, :], y))[0])
            pieces.append(-2.0 * u_edge / s2 + math.log(s2 / (2.0 * a)))
    else:
        g0, g1 = axes
        w_edge = np.full(g0.size, (g0[-1] - g0[0]) / (g0.size - 1))
        w_edge[0] *= 0.5
        w_edge[-1] *= 0.5
        for axis in (0, 1):
            other = g1 if axis == 0 else g0
            for edge, sgn in ((axes[axis][0], -1.0), (axes[axis][-1], 1.0)):
                pts = np.zeros((other.size, 2))
                pts[:, axis] = edge
                pts[:, 1 - axis] = other
                xb = np.broadcast_to(xa, (pts.shape[0], xa.shape[0]))
                grads = np.atleast_2d(p.grad_y(xb, pts))
                a = sgn * grads[:, axis]
                if np.any(a <= 0):
                    return 1.0
                u_edge = np.atleast_1d(p.eval(xb, pts))
                vals = (-2.0 * u_edge / s2 + np.log(s2 / (2.0 * a))
                        + np.log(w_edge))
                pieces.append(float(logsumexp(vals)))
    log_tail = logsumexp(np.array(pieces))
    return float(np.exp(log_tail - log_norm))


def invariant_expectation(g: GridMeasure, f) -> float:
    """Quadrature expectation of a vectorized observable f(nodes)."""
    vals = np.asarray(f(g.nodes), dtype=float).reshape(-1)
    if vals.shape[0] != g.nodes.shape[0]:
        raise DomainError("observable must map (N, m) nodes to (N,) values")
    return float(np.dot(g.weights, vals))


def laplace_limit_measure(ms: MinimaSet, pd_tol=1e-10) -> AtomicMeasure:
    """Small-noise limit: atoms at the global minima with weights
    proportional to det(Hess)^{-1/2}."""
    if ms.L < 1:
        raise DomainError("empty minima set")
    if np.any(~ms.hess_pd) or np.any(ms.hess_dets <= pd_tol):
        raise SingularHessian(
            "degenerate Hessian at a global minimum; weights undefined")
    raw = ms.hess_dets ** -0.5
    w = raw / raw.sum()
    return AtomicMeasure(locations=ms.ys.copy(), weights=w)


@dataclass(frozen=True)
class LaplaceErrorRow:
    s_val: float
    ball_masses: np.ndarray
    laplace_weights: np.ndarray
    errors: np.ndarray

    @property
    def max_error(self):
        return float(self.errors.max())


def laplace_vs_quadrature(p: PotentialSpec, x, s_list, ball_radius,
                          search=None, num=None, box=None):
    """Quadrature ball masses around each minimum versus the limit weights,
    per noise level; the discrepancy should shrink as s decreases."""
    ms = find_global_minima(p, x, search=search)
    am = laplace_limit_measure(ms)
    dists = np.linalg.norm(ms.ys[:, None, :] - ms.ys[None, :, :], axis=-1)
    off = dists[~np.eye(ms.L, dtype=bool)]
    if off.size and off.min() <= 2.0 * ball_radius:
        raise DomainError("balls around minima are not disjoint")
    rows = []
    for s_val in s_list:
        gm = invariant_density_grid(p, x, s_val, box=box, num=num)
        masses = np.empty(ms.L)
        for i in range(ms.L):
            inside = np.linalg.norm(gm.nodes - ms.ys[i], axis=-1) <= ball_radius
            masses[i] = gm.weights[inside].sum()
        rows.append(LaplaceErrorRow(
            s_val=float(s_val), ball_masses=masses,
            laplace_weights=am.weights.copy(),
            errors=np.abs(masses - am.weights)))
    return rows


# ---------------------------------------------------------------------------
# Relaxation time
# ---------------------------------------------------------------------------

@dataclass
class RelaxationFit:
    """Log-linear fit of the ensemble-mean gap |E f(Z_t) - nu(f)|."""

    tau: float
    r2: float
    ok: bool
    reason: str
    window: tuple
    n_points: int
    noise_floor: float
    ref: float
    times: np.ndarray
    gaps: np.ndarray


def estimate_relaxation_time(p: PotentialSpec, x, s_val, f, ensemble=1000,
                             t_max=2000.0, dt=0.02, seed=0, z0=None,
                             record_dt=None, stop_frac=0.02,
                             grid_num=None, box=None):
    """Empirical relaxation time of the frozen process at (x, s_val).

    Starts the whole ensemble off equilibrium (default: at the largest
    global minimum), tracks the gap between the ensemble mean of ``f`` and
    its invariant expectation, and fits exp(-t/tau) on the stretch where
    the gap sits between 90% and 10% of its initial value. The run is
    chunked and stops early once the gap falls below ``stop_frac`` of the
    initial gap, so large relaxation times do not cost the full horizon.
    """
    gm = invariant_density_grid(p, x, s_val, num=grid_num, box=box)
    ref = invariant_expectation(gm, f)
    var_f = invariant_expectation(gm, lambda y: np.asarray(f(y)) ** 2) - ref ** 2
    noise_floor = math.sqrt(max(var_f, 0.0) / ensemble)
    if z0 is None:
        # one unit beyond the outermost minimum: off equilibrium for
        # single wells, fully one-sided for multi-well landscapes
        ms = find_global_minima(p, x)
        z0 = ms.ys[-1] + 1.0
    if record_dt is None:
        record_dt = max(dt, min(0.05, t_max / 4000.0))
    stride = max(1, int(round(record_dt / dt)))

    times_all = [np.array([0.0])]
    z = np.broadcast_to(np.atleast_1d(np.asarray(z0, dtype=float)),
                        (ensemble, p.m)).copy()
    gap0 = abs(float(np.mean(f(z))) - ref)
    gaps_all = [np.array([gap0])]
    n_chunks = 64
    chunk_T = max(t_max / n_chunks, stride * dt * 8)
    t_done = 0.0
    chunk = 0
    while t_done < t_max - 1e-9:
        span = min(chunk_T, t_max - t_done)
        child = int(np.random.SeedSequence(
            (int(seed), STREAM_RELAX, chunk)).generate_state(1, np.uint64)[0])
        res = simulate_frozen(p, x, s_val, (t_done, t_done + span), dt,
                              ensemble, seed=child, z0=z,
                              record_stride=stride,
                              observables={"f": f}, record_paths=False)
        z = res.z_final
        times_all.append(res.times[1:])
        gaps_all.append(np.abs(res.observables["f"][1:] - ref))
        t_done += span
        chunk += 1
        if gaps_all[-1].size and gaps_all[-1][-1] <= stop_frac * gap0:
            break
    times = np.concatenate(times_all)
    gaps = np.concatenate(gaps_all)
    fit = _fit_exponential(times, gaps, gap0, noise_floor, ref)
    return fit.tau, fit


def _fit_exponential(times, gaps, gap0, noise_floor, ref):
    hi, lo = 0.9 * gap0, 0.1 * gap0
    below_hi = np.nonzero(gaps <= hi)[0]
    i0 = int(below_hi[0]) if below_hi.size else 0
    below_lo = np.nonzero(gaps[i0:] <= lo)[0]
    i1 = i0 + int(below_lo[0]) + 1 if below_lo.size else len(gaps)
    if i1 - i0 < 5:
        i0, i1 = 0, len(gaps)
    t_win = times[i0:i1]
    g_win = gaps[i0:i1]
    pos = g_win > 0
    t_win, g_win = t_win[pos], g_win[pos]
    if len(t_win) < 3:
        return RelaxationFit(tau=float("nan"), r2=0.0, ok=False,
                             reason="window too short", window=(0.0, 0.0),
                             n_points=len(t_win), noise_floor=noise_floor,
                             ref=ref, times=times, gaps=gaps)
    lg = np.log(g_win)
    A = np.vstack([np.ones_like(t_win), t_win]).T
    coef, *_ = np.linalg.lstsq(A, lg, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((lg - pred) ** 2))
    ss_tot = float(np.sum((lg - lg.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    slope = coef[1]
    tau = float("inf") if slope >= 0 else -1.0 / slope
    jumps = np.diff(g_win) > 5.0 * noise_floor
    nonmono = bool(jumps.any())
    ok = (slope < 0) and r2 >= 0.8 and not nonmono
    reason = "ok" if ok else ("non-monotone beyond noise floor" if nonmono
                              else "poor log-linear fit")
    return RelaxationFit(tau=tau, r2=r2, ok=ok, reason=reason,
                         window=(float(t_win[0]), float(t_win[-1])),
                         n_points=len(t_win), noise_floor=noise_floor,
                         ref=ref, times=times, gaps=gaps)


# ---------------------------------------------------------------------------
# Action functional and landscape constants
# ---------------------------------------------------------------------------

def action_functional(p: PotentialSpec, x, path, times, scheme="left"):
    """Discretized cost sum ||dphi/dt + grad_y U(x, phi)||^2 dt of a path.

    Zero exactly on downhill gradient flow; uphill segments pay four times
    the energy rise (no 1/2 in front of the integral).
    """
    phi = np.asarray(path, dtype=float)
    if phi.ndim == 1:
        phi = phi[:, None]
    t = np.asarray(times, dtype=float)
    if np.any(np.diff(t) <= 0):
        raise DomainError("times must be strictly increasing")
    dt = np.diff(t)
    vel = (phi[1:] - phi[:-1]) / dt[:, None]
    if scheme == "midpoint":
        where = 0.5 * (phi[1:] + phi[:-1])
    elif scheme == "left":
        where = phi[:-1]
    else:
        raise DomainError("scheme must be 'left' or 'midpoint'")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    xb = np.broadcast_to(xa, (where.shape[0], xa.shape[0]))
    g = np.atleast_2d(p.grad_y(xb, where)).reshape(where.shape)
    integrand = np.sum((vel + g) ** 2, axis=-1)
    return float(np.sum(integrand * dt))


def quasipotential_1d(p: PotentialSpec, x, ms: MinimaSet, n_grid=20001):
    """Pairwise minimal transition costs between global minima in 1-D.

    Moving right from y_i to y_j costs four times the total uphill rise of
    U along the segment (downhill stretches are free); a pair separated by
    another global minimum gets +inf because admissible paths must avoid
    the intermediate minima.
    """
    if p.m != 1:
        raise DimensionError("quasipotential_1d requires m = 1")
    L = ms.L
    vt = np.zeros((L, L))
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    for i in range(L - 1):
        a = float(ms.ys[i, 0])
        b = float(ms.ys[i + 1, 0])
        grid = np.linspace(a, b, n_grid)[:, None]
        xb = np.broadcast_to(xa, (n_grid, xa.shape[0]))
        u = np.atleast_1d(p.eval(xb, grid))
        du = np.diff(u)
        vt[i, i + 1] = 4.0 * float(np.sum(np.maximum(du, 0.0)))
        vt[i + 1, i] = 4.0 * float(np.sum(np.maximum(-du, 0.0)))
    for i in range(L):
        for j in range(L):
            if abs(i - j) >= 2:
                vt[i, j] = np.inf
    return vt


def w_graph_constants(vtilde, L=None):
    """Hierarchy constants V^1 >= ... >= V^L from exhaustive enumeration.

    A W-graph assigns one outgoing edge to every node outside W with no
    directed cycles; V^l is the cheapest total edge weight over all W of
    size l. With l = L the empty graph gives V^L = 0.
    """
    vt = np.asarray(vtilde, dtype=float)
    if L is None:
        L = vt.shape[0]
    if vt.shape != (L, L):
        raise DomainError("vtilde must be an L x L matrix")
    if L > 6:
        raise TooManyMinima("exhaustive enumeration capped at L = 6")
    out = np.full(L, np.inf)
    nodes = list(range(L))
    for l in range(1, L + 1):
        best = np.inf
        for W in itertools.combinations(nodes, l):
            wset = set(W)
            tails = [n for n in nodes if n not in wset]
            if not tails:
                best = min(best, 0.0)
                continue
            choices = [[n for n in nodes if n != t] for t in tails]
            for targets in itertools.product(*choices):
                succ = dict(zip(tails, targets))
                if _has_cycle(succ):
                    continue
                cost = sum(vt[t, succ[t]] for t in tails)
                if cost < best:
                    best = cost
        out[l - 1] = best
    return out


def _has_cycle(succ):
    for start in succ:
        seen = set()
        n = start
        while n in succ:
            if n in seen:
                return True
            seen.add(n)
            n = succ[n]
    return False


@dataclass
class QuasipotentialReport:
    """Landscape constants along a slow-state grid and their sup gap."""

    x_grid: np.ndarray
    L_values: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    vtilde: list
    lambda_hat: float
    argmax_x: float

    def to_csv(self, path, seed=None, cfg_hash=None):
        from .utils import write_csv
        cols = ["x", "L", "v1", "v2", "gap"]
        rows = ([x, int(l), v1, v2, v1 - v2] for x, l, v1, v2 in
                zip(self.x_grid, self.L_values, self.v1, self.v2))
        write_csv(path, cols, rows, seed=seed, cfg_hash=cfg_hash)


def estimate_lambda(p: PotentialSpec, x_grid, search=None) -> QuasipotentialReport:
    """Maximize V1(x) - V2(x) over a finite slow-state grid (m = 1)."""
    if p.m != 1:
        raise DimensionError("lambda estimation requires m = 1")
    x_grid = np.asarray(x_grid, dtype=float).reshape(-1)
    v1 = np.empty(x_grid.size)
    v2 = np.empty(x_grid.size)
    Ls = np.empty(x_grid.size, dtype=int)
    vts = []
    for i, xv in enumerate(x_grid):
        ms = find_global_minima(p, xv, search=search)
        vt = quasipotential_1d(p, xv, ms)
        vts.append(vt)
        V = w_graph_constants(vt, ms.L)
        Ls[i] = ms.L
        v1[i] = V[0]
        v2[i] = V[1] if ms.L >= 2 else 0.0
    gaps = v1 - v2
    k = int(np.argmax(gaps))
    return QuasipotentialReport(x_grid=x_grid, L_values=Ls, v1=v1, v2=v2,
                                vtilde=vts, lambda_hat=float(gaps[k]),
                                argmax_x=float(x_grid[k]))
