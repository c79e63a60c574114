"""Potential landscapes, drifts, global-minima search and assumption audits.

The energy models here drive everything else: the fast process relaxes in
``U(x, .)``, the averaged dynamics is controlled by the global minima of
``U(x, .)`` and their Hessians, and the standing regularity assumptions on
``U`` and the slow drift ``b`` are audited by sampling.

All evaluators are vectorized: ``x`` broadcasts with trailing axis ``d``
and ``y`` with trailing axis ``m`` (plain scalars are accepted when the
dimension is one).
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, EmptySearch, NoConvergence
from .utils import STREAM_ASSUMP, as_batch, stream

GRAD_TOL = 1e-10
MAX_NEWTON_ITER = 100


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AssumptionConstants:
    """Declared analytic constants for the standing assumptions.

    k1       Lipschitz constant of the drift in the slow variable.
    k2       Lipschitz constant of grad_y U in the slow variable.
    k3       convexity constant of U(x, .) outside radius ``r``.
    big_m    bound on |U|, |grad|, |hess| inside radius ``r``.
    r        inner radius separating the bounded core from the convex tail.
    r_prime  radius beyond which <grad U, y> >= k4 |y|^2 (r_prime >= r).
    k4       coercivity constant.
    eta      ultracontractivity exponent (> 1).
    gamma    integral of the relaxation bound g, when known analytically.
    lam      sup over x of V1(x) - V2(x), when known analytically.
    """

    k1: float = 0.0
    k2: float = 0.0
    k3: float = 0.0
    big_m: float = 0.0
    r: float = 0.0
    r_prime: float = 0.0
    k4: float = 0.0
    eta: float = 2.0
    gamma: float | None = None
    lam: float | None = None

    def __post_init__(self):
        values = [self.k1, self.k2, self.k3, self.big_m, self.r,
                  self.r_prime, self.k4]
        if self.gamma is not None:
            values.append(self.gamma)
        if self.lam is not None:
            values.append(self.lam)
        if any(v < 0 for v in values):
            raise DomainError("assumption constants must be nonnegative")
        if not self.eta > 1:
            raise DomainError("eta must exceed 1")
        if self.r_prime < self.r:
            raise DomainError("r_prime must be >= r")


@dataclass(frozen=True)
class PotentialSpec:
    """Evaluator bundle for an energy U(x, y).

    ``eval``, ``grad_y`` and ``hess_y`` must accept broadcastable batches
    and return shapes ``batch``, ``batch + (m,)`` and ``batch + (m, m)``.
    """

    d: int
    m: int
    eval: callable
    grad_y: callable
    hess_y: callable
    declared: AssumptionConstants | None = None
    name: str = "custom"

    def u(self, x, y):
        return self.eval(x, y)

    def grad(self, x, y):
        return self.grad_y(x, y)

    def hess(self, x, y):
        return self.hess_y(x, y)


@dataclass(frozen=True)
class DriftSpec:
    """Slow drift b(x, y) with its declared sup-norm and x-Lipschitz bound."""

    d: int
    m: int
    eval: callable
    bound: float
    k1: float = 0.0
    name: str = "custom"

    def __call__(self, x, y):
        return self.eval(x, y)


@dataclass(frozen=True)
class MinimaSet:
    """Global minima of U(x, .) at a fixed slow state.

    ``ys`` has shape (L, m); ``values``, ``hess_dets`` and ``hess_pd``
    are aligned with it. Entries are sorted lexicographically in y so a
    given landscape always yields the same ordering.
    """

    x: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    hess_dets: np.ndarray
    hess_pd: np.ndarray
    tie_tol: float
    dedupe_radius: float

    @property
    def L(self):
        return self.ys.shape[0]

    def __iter__(self):
        for i in range(self.L):
            yield (self.ys[i], self.values[i], self.hess_dets[i],
                   bool(self.hess_pd[i]))


@dataclass(frozen=True)
class SearchBox:
    """Scan region for the minima search: per-dimension bounds plus the
    number of grid points along each axis."""

    lo: tuple
    hi: tuple
    num: int = 401

    def axes(self):
        return [np.linspace(l, h, self.num) for l, h in zip(self.lo, self.hi)]

    @property
    def spacing(self):
        return max((h - l) / (self.num - 1) for l, h in zip(self.lo, self.hi))


def default_search_box(p: PotentialSpec, num=None) -> SearchBox:
    """Box guaranteed to contain [-r', r']^m with a margin."""
    rp = 1.0 if p.declared is None else max(p.declared.r_prime, 1.0)
    half = 1.25 * rp + 0.5
    if num is None:
        num = {1: 601, 2: 81, 3: 25}.get(p.m, 25)
    return SearchBox(lo=(-half,) * p.m, hi=(half,) * p.m, num=num)


# ---------------------------------------------------------------------------
# Built-in landscapes
# ---------------------------------------------------------------------------

def _smoothstep(r):
    """Order-3 smoothstep of t = (r - 10)/10 on the blend annulus.

    Returns (rho, drho_dr, d2rho_dr2); first and second derivatives vanish
    at r = 10 and r = 20, so blended potentials stay C^2.
    """
    t = np.clip((r - 10.0) / 10.0, 0.0, 1.0)
    rho = t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)
    d1 = 3.0 * t ** 2 * (1.0 - t) ** 2
    d2 = 0.6 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return rho, d1, d2


def _blended_double_well(cfun, name, extra=None, declared=None):
    """Family y^4 - 2 c(x) y^2 + 1 inside |y|<=10, blended to the frozen
    coefficient c=1 beyond |y|>=20.

    ``extra`` optionally adds a perturbation term (u, u_y, u_yy)(x, y).
    """

    def parts(x, y):
        xb, _ = as_batch(x, 1, "x")
        yb, _ = as_batch(y, 1, "y")
        xs = xb[..., 0]
        ys = yb[..., 0]
        xs, ys = np.broadcast_arrays(xs, ys)
        c = cfun(xs)
        r = np.abs(ys)
        rho, d1, d2 = _smoothstep(r)
        cb = c + rho * (1.0 - c)
        sgn = np.sign(ys)
        return xs, ys, c, cb, d1, d2, sgn

    def evaluate(x, y):
        xs, ys, c, cb, _, _, _ = parts(x, y)
        u = ys ** 4 - 2.0 * cb * ys ** 2 + 1.0
        if extra is not None:
            u = u + extra[0](xs, ys)
        return u

    def grad(x, y):
        xs, ys, c, cb, d1, _, sgn = parts(x, y)
        g = 4.0 * ys ** 3 - 4.0 * cb * ys - 2.0 * ys ** 2 * (1.0 - c) * d1 * sgn
        if extra is not None:
            g = g + extra[1](xs, ys)
        return g[..., None]

    def hess(x, y):
        xs, ys, c, cb, d1, d2, sgn = parts(x, y)
        h = (12.0 * ys ** 2 - 4.0 * cb
             - 8.0 * ys * (1.0 - c) * d1 * sgn
             - 2.0 * ys ** 2 * (1.0 - c) * d2)
        if extra is not None:
            h = h + extra[2](xs, ys)
        return h[..., None, None]

    return PotentialSpec(d=1, m=1, eval=evaluate, grad_y=grad, hess_y=hess,
                         declared=declared, name=name)


def make_example_u1() -> PotentialSpec:
    """Symmetric double well whose two global minima +-sqrt(c(x)) persist
    for every slow state; both Hessians equal 8 c(x) >= 4."""
    declared = AssumptionConstants(k1=0.0, k2=64.0, k3=1.0, big_m=6.0,
                                   r=0.7, r_prime=1.2, k4=1.0, eta=2.0,
                                   lam=4.0)
    return _blended_double_well(
        lambda xs: (0.5 + xs ** 2) / (1.0 + xs ** 2), "example_2_1",
        declared=declared)


def make_example_u2() -> PotentialSpec:
    """Double well whose minima +-x/sqrt(1+x^2) merge at the origin, where
    the Hessian degenerates."""
    declared = AssumptionConstants(k1=0.0, k2=64.0, k3=1.0, big_m=6.0,
                                   r=0.7, r_prime=1.2, k4=1.0, eta=2.0)
    return _blended_double_well(
        lambda xs: xs ** 2 / (1.0 + xs ** 2), "example_2_2",
        declared=declared)


def default_phi(x):
    """Default tilt for the created-minimum example: odd, zero at zero,
    bounded in [-1/2, 1/2]."""
    x = np.asarray(x, dtype=float)
    return x / (1.0 + x ** 2)


def make_example_u3(phi=None) -> PotentialSpec:
    """Tilted double well: the e2.1 landscape plus phi(x) y^4 on y >= 0.

    For phi > 0 the left minimum is the unique global one, for phi < 0 the
    right one; both survive only where phi vanishes. ``phi`` must satisfy
    phi(0) = 0 and phi >= -1/2 (checked on a sample grid).
    """
    if phi is None:
        phi = default_phi
    probe = np.linspace(-50.0, 50.0, 4001)
    vals = np.asarray(phi(probe), dtype=float)
    if np.any(vals < -0.5 - 1e-12):
        raise DomainError("phi must stay >= -1/2")
    if abs(float(phi(0.0))) > 1e-12:
        raise DomainError("phi must vanish at zero")

    def u_extra(xs, ys):
        return phi(xs) * ys ** 4 * (ys >= 0)

    def g_extra(xs, ys):
        return 4.0 * phi(xs) * ys ** 3 * (ys >= 0)

    def h_extra(xs, ys):
        return 12.0 * phi(xs) * ys ** 2 * (ys >= 0)

    declared = AssumptionConstants(k1=0.0, k2=160.0, k3=1.0, big_m=16.0,
                                   r=0.95, r_prime=1.6, k4=1.0, eta=2.0)
    spec = _blended_double_well(
        lambda xs: (0.5 + xs ** 2) / (1.0 + xs ** 2), "example_2_3",
        extra=(u_extra, g_extra, h_extra), declared=declared)
    return spec


def make_quadratic_bowl(curvature=1.0, m=1) -> PotentialSpec:
    """Single convex well U = curvature |y|^2 / 2, independent of x."""
    k = float(curvature)
    m = int(m)
    if k <= 0:
        raise DomainError("curvature must be positive")

    def evaluate(x, y):
        yb, _ = as_batch(y, m, "y")
        return 0.5 * k * np.sum(yb ** 2, axis=-1)

    def grad(x, y):
        yb, _ = as_batch(y, m, "y")
        return k * yb

    def hess(x, y):
        yb, _ = as_batch(y, m, "y")
        eye = np.eye(m)
        return np.broadcast_to(k * eye, yb.shape[:-1] + (m, m)).copy()

    declared = AssumptionConstants(k1=0.0, k2=0.0, k3=k, big_m=max(k, 1.0),
                                   r=0.5, r_prime=1.0, k4=0.9 * k, eta=2.0,
                                   gamma=0.0, lam=0.0)
    return PotentialSpec(d=1, m=m, eval=evaluate, grad_y=grad, hess_y=hess,
                         declared=declared, name="quadratic_bowl")


def _lncosh(z):
    az = np.abs(z)
    return az + np.log1p(np.exp(-2.0 * az)) - np.log(2.0)


def make_asymmetric_two_well(hess_neg=1.0, hess_pos=4.0,
                             steepness=4.0) -> PotentialSpec:
    """Two wells of equal depth zero with prescribed curvatures.

    Built as W(phi(y)) with W(z) = (z^2-1)^2 and a monotone warp phi whose
    slope is sqrt(hess_neg/8) far left and sqrt(hess_pos/8) far right, so
    the Hessians at the minima hit the requested values up to exponentially
    small corrections while the depths match exactly.
    """
    if hess_neg <= 0 or hess_pos <= 0:
        raise DomainError("target curvatures must be positive")
    sp = np.sqrt(hess_pos / 8.0)
    sn = np.sqrt(hess_neg / 8.0)
    a = 0.5 * (sp + sn)
    bb = 0.5 * (sp - sn)
    c = float(steepness)

    def warp(ys):
        return a * ys + (bb / c) * _lncosh(c * ys)

    def warp1(ys):
        return a + bb * np.tanh(c * ys)

    def warp2(ys):
        th = np.tanh(c * ys)
        return bb * c * (1.0 - th ** 2)

    def evaluate(x, y):
        yb, _ = as_batch(y, 1, "y")
        f = warp(yb[..., 0])
        return (f ** 2 - 1.0) ** 2

    def grad(x, y):
        yb, _ = as_batch(y, 1, "y")
        ys = yb[..., 0]
        f = warp(ys)
        return (4.0 * f * (f ** 2 - 1.0) * warp1(ys))[..., None]

    def hess(x, y):
        yb, _ = as_batch(y, 1, "y")
        ys = yb[..., 0]
        f = warp(ys)
        f1 = warp1(ys)
        f2 = warp2(ys)
        h = 4.0 * ((3.0 * f ** 2 - 1.0) * f1 ** 2 + f * (f ** 2 - 1.0) * f2)
        return h[..., None, None]

    declared = AssumptionConstants(k1=0.0, k2=0.0, k3=1.0, big_m=300.0,
                                   r=3.5, r_prime=5.0, k4=1.0, eta=2.0)
    return PotentialSpec(d=1, m=1, eval=evaluate, grad_y=grad, hess_y=hess,
                         declared=declared, name="asymmetric_two_well")


# ---------------------------------------------------------------------------
# Built-in drifts
# ---------------------------------------------------------------------------

def _drift_from_scalar(fun, bound, k1, name):
    def evaluate(x, y):
        xb, _ = as_batch(x, 1, "x")
        yb, _ = as_batch(y, 1, "y")
        xs, ys = np.broadcast_arrays(xb[..., 0], yb[..., 0])
        return fun(xs, ys)[..., None]

    return DriftSpec(d=1, m=1, eval=evaluate, bound=bound, k1=k1, name=name)


def make_drift(name, **params) -> DriftSpec:
    """Registry of bounded slow drifts (plus the unbounded linear probe)."""
    if name == "cos":
        return _drift_from_scalar(lambda xs, ys: np.cos(ys), 1.0, 0.0, "cos")
    if name == "sin":
        return _drift_from_scalar(lambda xs, ys: np.sin(ys), 1.0, 0.0, "sin")
    if name == "cos_over_sqrt":
        return _drift_from_scalar(
            lambda xs, ys: np.cos(ys) / np.sqrt(1.0 + xs ** 2),
            1.0, 0.4, "cos_over_sqrt")
    if name == "sin_over_sqrt":
        return _drift_from_scalar(
            lambda xs, ys: np.sin(ys) / np.sqrt(1.0 + xs ** 2),
            1.0, 0.4, "sin_over_sqrt")
    if name == "zero":
        return _drift_from_scalar(lambda xs, ys: np.zeros_like(ys), 0.0, 0.0,
                                  "zero")
    if name == "constant":
        cval = float(params.get("value", 1.0))
        return _drift_from_scalar(
            lambda xs, ys: np.full_like(ys, cval), abs(cval), 0.0, "constant")
    if name == "linear":
        # Identity observation map used by the exactly solvable filter
        # instance; deliberately unbounded, so not admissible for the
        # averaging theory itself.
        return _drift_from_scalar(lambda xs, ys: ys, np.inf, 0.0, "linear")
    raise DomainError(f"unknown drift '{name}'")


MODELS = {
    "example_2_1": make_example_u1,
    "example_2_2": make_example_u2,
    "example_2_3": make_example_u3,
    "quadratic_bowl": make_quadratic_bowl,
    "asymmetric_two_well": make_asymmetric_two_well,
}


def make_model(name, **params) -> PotentialSpec:
    if name not in MODELS:
        raise DomainError(f"unknown model '{name}'")
    return MODELS[name](**params)


# ---------------------------------------------------------------------------
# Global minima search
# ---------------------------------------------------------------------------

def find_global_minima(p: PotentialSpec, x, search: SearchBox | None = None,
                       tie_tol=1e-9, dedupe_radius=1e-6) -> MinimaSet:
    """Grid scan plus damped Newton polish of critical points of U(x, .).

    Seeds where the Hessian is positive definite take Newton steps on the
    gradient; elsewhere they fall back to gradient descent with Armijo
    backtracking (saddle and ridge seeds slide into adjacent basins).
    Polished points are deduplicated and the global minima selected by a
    relative value tie within ``tie_tol``.
    """
    if search is None:
        search = default_search_box(p)
    if search.num < 2:
        raise DomainError("grid resolution must be positive")
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    axes = search.axes()
    mesh = np.meshgrid(*axes, indexing="ij")
    grid_pts = np.stack([g.ravel() for g in mesh], axis=-1)  # (S, m)
    spacing = search.spacing
    step_cap = 2.0 * spacing

    # scan: evaluate U everywhere, polish only the local grid minima
    xg = np.broadcast_to(xa, (grid_pts.shape[0], xa.shape[0]))
    u_grid = np.atleast_1d(p.eval(xg, grid_pts))
    shape = (search.num,) * p.m
    from scipy.ndimage import minimum_filter
    is_min = minimum_filter(u_grid.reshape(shape), size=3,
                            mode="nearest") >= u_grid.reshape(shape)
    min_idx = np.nonzero(is_min.ravel())[0]
    if min_idx.size == 0:
        min_idx = np.array([int(np.argmin(u_grid))])
    # sub-grid structure around a scan minimum (e.g. a barely split pair of
    # wells) is recovered by also polishing the neighbouring nodes
    seed_idx = set()
    for flat in min_idx:
        multi = np.array(np.unravel_index(flat, shape))
        seed_idx.add(flat)
        for ax in range(p.m):
            for off in (-1, 1):
                nb = multi.copy()
                nb[ax] += off
                if 0 <= nb[ax] < search.num:
                    seed_idx.add(int(np.ravel_multi_index(nb, shape)))
    seeds = grid_pts[sorted(seed_idx)]

    ys = seeds.copy()
    S, m = ys.shape
    xb = np.broadcast_to(xa, (S, xa.shape[0]))
    active = np.ones(S, dtype=bool)
    converged = np.zeros(S, dtype=bool)

    for _ in range(MAX_NEWTON_ITER):
        if not active.any():
            break
        idx = np.nonzero(active)[0]
        yi = ys[idx]
        g = np.atleast_2d(p.grad_y(xb[idx], yi))
        gnorm = np.linalg.norm(g, axis=-1)
        done = gnorm <= GRAD_TOL
        if done.any():
            converged[idx[done]] = True
            active[idx[done]] = False
            keep = ~done
            idx, yi, g, gnorm = idx[keep], yi[keep], g[keep], gnorm[keep]
            if idx.size == 0:
                continue
        h = p.hess_y(xb[idx], yi)
        h = h.reshape(len(idx), m, m)
        if m == 1:
            hd = h[:, 0, 0]
            pd = hd > 1e-14
            step = np.where(pd[:, None], -g / np.where(pd, hd, 1.0)[:, None],
                            0.0)
        else:
            eigmin = np.linalg.eigvalsh(h)[:, 0]
            pd = eigmin > 1e-12
            step = np.zeros_like(g)
            if pd.any():
                step[pd] = -np.linalg.solve(h[pd], g[pd][..., None])[..., 0]
        # cap Newton steps to a trust region of a couple of grid cells
        snorm = np.linalg.norm(step, axis=-1)
        big = snorm > step_cap
        if big.any():
            step[big] *= (step_cap / snorm[big])[:, None]
        if (~pd).any():
            step[~pd] = _armijo_descent(p, xb[idx][~pd], yi[~pd], g[~pd],
                                        step_cap)
        ys[idx] = yi + step

    if not converged.any():
        raise NoConvergence(
            "no grid seed reached the gradient tolerance; refine the grid")

    cand = ys[converged]
    cand = _newton_refine(p, xa, cand, step_cap)
    lo = np.asarray(search.lo) - spacing
    hi = np.asarray(search.hi) + spacing
    inside = np.all((cand >= lo) & (cand <= hi), axis=-1)
    cand = cand[inside]
    if cand.size == 0:
        raise EmptySearch("search box excludes all critical points")

    # deterministic dedupe: lexicographic sort, then cluster by radius
    order = np.lexsort(cand.T[::-1])
    cand = cand[order]
    reps = [cand[0]]
    for yc in cand[1:]:
        if all(np.linalg.norm(yc - r) > dedupe_radius for r in reps):
            reps.append(yc)
    reps = np.asarray(reps)

    xrep = np.broadcast_to(xa, (len(reps), xa.shape[0]))
    hs = p.hess_y(xrep, reps).reshape(len(reps), m, m)
    eig = np.linalg.eigvalsh(hs)
    scale = np.maximum(1.0, np.abs(eig).max(axis=-1))
    # drop strict maxima / saddles so a degenerate tie cannot pull one in
    keep = eig[:, 0] >= -1e-6 * scale
    reps, hs, eig, scale = reps[keep], hs[keep], eig[keep], scale[keep]
    if len(reps) == 0:
        raise EmptySearch("no candidate minima inside the search box")

    vals = np.atleast_1d(p.eval(np.broadcast_to(xa, (len(reps), xa.shape[0])),
                                reps))
    vmin = vals.min()
    tie = vals <= vmin + tie_tol * max(1.0, abs(vmin))
    ys_min = reps[tie]
    order = np.lexsort(ys_min.T[::-1])
    ys_min = ys_min[order]
    vals_min = vals[tie][order]
    hs_min = hs[tie][order]
    eig_min = eig[tie][order]
    scale_min = scale[tie][order]
    dets = np.linalg.det(hs_min)
    pd_flags = eig_min[:, 0] > 1e-8 * scale_min
    return MinimaSet(x=xa, ys=ys_min, values=vals_min, hess_dets=dets,
                     hess_pd=pd_flags, tie_tol=tie_tol,
                     dedupe_radius=dedupe_radius)


def _newton_refine(p, xa, cand, cap, iters=60):
    """Root-polish converged candidates to machine precision.

    Degenerate minima (vanishing Hessian) leave the gradient tolerance
    satisfied on a whole plateau; the extra Newton-on-the-gradient sweep
    collapses that plateau to a single point so deduplication can work.
    """
    ys = cand.copy()
    S, m = ys.shape
    if S == 0:
        return ys
    xb = np.broadcast_to(xa, (S, xa.shape[0]))
    for _ in range(iters):
        g = np.atleast_2d(p.grad_y(xb, ys)).reshape(S, m)
        h = p.hess_y(xb, ys).reshape(S, m, m)
        if m == 1:
            hd = h[:, 0, 0]
            safe = np.abs(hd) > 1e-300
            step = np.where(safe[:, None], -g / np.where(safe, hd, 1.0)[:, None], 0.0)
        else:
            step = np.zeros_like(g)
            for i in range(S):
                try:
                    step[i] = -np.linalg.solve(h[i], g[i])
                except np.linalg.LinAlgError:
                    step[i] = -np.linalg.lstsq(h[i], g[i], rcond=None)[0]
        snorm = np.linalg.norm(step, axis=-1)
        big = snorm > cap
        if big.any():
            step[big] *= (cap / snorm[big])[:, None]
        ys = ys + step
        if np.all(snorm <= 1e-14 * (1.0 + np.linalg.norm(ys, axis=-1))):
            break
    return ys


def _armijo_descent(p, xb, yi, g, cap):
    """Vectorized backtracking descent step for non-PD seeds."""
    gnorm = np.linalg.norm(g, axis=-1)
    t = np.minimum(1.0, cap / np.maximum(gnorm, 1e-30))
    u0 = np.atleast_1d(p.eval(xb, yi))
    step = -g * t[:, None]
    for _ in range(20):
        u1 = np.atleast_1d(p.eval(xb, yi + step))
        ok = u1 <= u0 - 1e-4 * np.sum(step * (-g), axis=-1).clip(min=0.0)
        if ok.all():
            break
        step[~ok] *= 0.5
    return step


# ---------------------------------------------------------------------------
# Assumption audit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SamplingPlan:
    """How many points to draw for each sampled assumption check."""

    x_lo: tuple = (-3.0,)
    x_hi: tuple = (3.0,)
    n_x: int = 40
    n_convexity: int = 10000
    n_inner: int = 4000
    n_pairs: int = 4000
    n_coercivity: int = 4000
    r_max: float | None = None
    n_r: int = 60
    n_pairs_per_r: int = 400


@dataclass
class AssumptionReport:
    """Sampled audit of the standing assumptions; violations are reported
    with their worst sample, never raised."""

    constants: AssumptionConstants
    convexity_violation_max: float
    convexity_worst: tuple
    inner_bound_max: float
    inner_bound_ok: bool
    k1_quotient_max: float
    k1_ok: bool
    k2_quotient_max: float
    k2_ok: bool
    drift_bound_max: float
    drift_bound_ok: bool
    coercivity_margin_min: float
    coercivity_ok: bool
    ultra_max: dict
    ultra_ok: bool
    r_grid: np.ndarray
    g_curve: np.ndarray
    gamma_hat: float
    n_samples: int

    def to_dict(self):
        return {
            "convexity_violation_max": float(self.convexity_violation_max),
            "inner_bound_max": float(self.inner_bound_max),
            "inner_bound_ok": bool(self.inner_bound_ok),
            "k1_quotient_max": float(self.k1_quotient_max),
            "k1_ok": bool(self.k1_ok),
            "k2_quotient_max": float(self.k2_quotient_max),
            "k2_ok": bool(self.k2_ok),
            "drift_bound_max": float(self.drift_bound_max),
            "drift_bound_ok": bool(self.drift_bound_ok),
            "coercivity_margin_min": float(self.coercivity_margin_min),
            "coercivity_ok": bool(self.coercivity_ok),
            "ultra_max": {k: float(v) for k, v in self.ultra_max.items()},
            "ultra_ok": bool(self.ultra_ok),
            "gamma_hat": float(self.gamma_hat),
            "n_samples": int(self.n_samples),
        }


def check_assumptions(p: PotentialSpec, b: DriftSpec | None = None,
                      plan: SamplingPlan | None = None, seed=0,
                      constants: AssumptionConstants | None = None
                      ) -> AssumptionReport:
    """Sampled audit of convexity, boundedness, Lipschitz and coercivity
    constants, plus the empirical relaxation curve g(r) and its integral.

    The conditions are universally quantified, so this is evidence, not a
    certificate: the report records the worst sampled violation.
    """
    if plan is None:
        plan = SamplingPlan()
    cst = constants or p.declared
    if cst is None:
        raise DomainError("no declared constants to audit")
    rng = stream(seed, STREAM_ASSUMP)
    d, m = p.d, p.m
    x_lo = np.asarray(plan.x_lo, dtype=float)
    x_hi = np.asarray(plan.x_hi, dtype=float)

    def draw_x(n):
        return x_lo + (x_hi - x_lo) * rng.random((n, d))

    def draw_dirs(n):
        v = rng.standard_normal((n, m))
        return v / np.linalg.norm(v, axis=-1, keepdims=True)

    # convexity outside radius r: k3 |xi|^2 <= <xi, H xi> for |y| > r
    n = plan.n_convexity
    span = max(2.0, cst.r)
    ys = draw_dirs(n) * (cst.r + span * rng.random(n))[:, None]
    xs = draw_x(n)
    xi = draw_dirs(n)
    H = p.hess_y(xs, ys).reshape(n, m, m)
    quad = np.einsum("ni,nij,nj->n", xi, H, xi)
    conv_viol = cst.k3 - quad
    worst = int(np.argmax(conv_viol))
    convexity_violation_max = float(max(conv_viol[worst], 0.0))
    convexity_worst = (xs[worst].copy(), ys[worst].copy())

    # bounded core: sup over |y| <= r of |U|, |grad|, |hess|
    n = plan.n_inner
    ys = draw_dirs(n) * (cst.r * rng.random(n) ** (1.0 / m))[:, None]
    xs = draw_x(n)
    uvals = np.abs(np.atleast_1d(p.eval(xs, ys)))
    gvals = np.linalg.norm(np.atleast_2d(p.grad_y(xs, ys)), axis=-1)
    hvals = np.linalg.norm(p.hess_y(xs, ys).reshape(n, m, m), axis=(-2, -1))
    inner_bound_max = float(np.max([uvals.max(), gvals.max(), hvals.max()]))
    inner_bound_ok = inner_bound_max <= cst.big_m * (1.0 + 1e-9)

    # x-Lipschitz quotients of grad U and of the drift
    n = plan.n_pairs
    xs = draw_x(n)
    xs2 = draw_x(n)
    ys = draw_dirs(n) * (2.0 * cst.r_prime * rng.random(n))[:, None]
    dx = np.linalg.norm(xs - xs2, axis=-1)
    ok = dx > 1e-9
    dgrad = np.linalg.norm(np.atleast_2d(p.grad_y(xs, ys))
                           - np.atleast_2d(p.grad_y(xs2, ys)), axis=-1)
    k2_quotient_max = float((dgrad[ok] / dx[ok]).max())
    k2_ok = k2_quotient_max <= cst.k2 * (1.0 + 1e-6)

    if b is not None:
        db = np.linalg.norm(np.atleast_2d(b.eval(xs, ys))
                            - np.atleast_2d(b.eval(xs2, ys)), axis=-1)
        k1_quotient_max = float((db[ok] / dx[ok]).max())
        k1_ok = k1_quotient_max <= b.k1 * (1.0 + 1e-6) + 1e-12
        bnorm = np.linalg.norm(np.atleast_2d(b.eval(xs, ys)), axis=-1)
        drift_bound_max = float(bnorm.max())
        drift_bound_ok = drift_bound_max <= b.bound * (1.0 + 1e-9)
    else:
        k1_quotient_max, k1_ok = 0.0, True
        drift_bound_max, drift_bound_ok = 0.0, True

    # coercivity margin <grad U, y> - k4 |y|^2 beyond r'
    n = plan.n_coercivity
    rad = cst.r_prime * (1.0 + rng.random(n))
    ys = draw_dirs(n) * rad[:, None]
    xs = draw_x(n)
    g = np.atleast_2d(p.grad_y(xs, ys))
    margin = np.einsum("ni,ni->n", g, ys) - cst.k4 * rad ** 2
    coercivity_margin_min = float(margin.min())
    coercivity_ok = coercivity_margin_min >= -1e-9

    # smoothing (ultracontractivity) condition: the smoothed log-Sobolev
    # quantity must stay under big_m * s^(eta/(eta-1)); the quantifier
    # range is not certifiable numerically, so it is probed at a = 1 and
    # a handful of s values (the far tail is dominated by -|grad U|^2, so
    # the sup sits inside a bounded window)
    ultra_max = {}
    ultra_ok = True
    ygrid = np.linspace(-3.0 * cst.r_prime - 3.0, 3.0 * cst.r_prime + 3.0,
                        1501)
    yq = np.repeat(ygrid, 8)[:, None] if m == 1 else None
    if m == 1:
        xq = draw_x(yq.shape[0])
        uq = np.atleast_1d(p.eval(xq, yq))
        gq = np.atleast_2d(p.grad_y(xq, yq))
        hq = p.hess_y(xq, yq).reshape(-1, m, m)
        lap = np.trace(hq, axis1=-2, axis2=-1)
        gsq = np.sum(gq ** 2, axis=-1)
        for s_chk in (1.0, 2.0, 4.0, 8.0):
            q = (4.0 * lap - 4.0 * gsq) / (4.0 * math.pi * math.e * s_chk) \
                + 2.0 * uq
            ultra_max[f"s={s_chk:g}"] = float(q.max())
            if q.max() > cst.big_m * s_chk ** (cst.eta / (cst.eta - 1.0)) \
                    * (1.0 + 1e-9):
                ultra_ok = False

    # relaxation curve g(r): sup over pairs at distance r of the negative
    # mean curvature along the segment, and its trapezoid integral
    r_max = plan.r_max if plan.r_max is not None else 3.0 * cst.r_prime + 2.0
    r_grid = np.linspace(r_max / plan.n_r, r_max, plan.n_r)
    g_curve = np.empty_like(r_grid)
    half = cst.r_prime + 2.0
    for i, r in enumerate(r_grid):
        k = plan.n_pairs_per_r
        ys = -half + 2.0 * half * rng.random((k, m))
        u = draw_dirs(k)
        xs = draw_x(k)
        g1 = np.atleast_2d(p.grad_y(xs, ys + r * u))
        g0 = np.atleast_2d(p.grad_y(xs, ys))
        g_curve[i] = np.max(-np.einsum("ni,ni->n", g1 - g0, u))
    gamma_hat = float(np.trapezoid(np.maximum(g_curve, 0.0), r_grid))

    return AssumptionReport(
        constants=cst,
        convexity_violation_max=convexity_violation_max,
        convexity_worst=convexity_worst,
        inner_bound_max=inner_bound_max,
        inner_bound_ok=inner_bound_ok,
        k1_quotient_max=k1_quotient_max,
        k1_ok=k1_ok,
        k2_quotient_max=k2_quotient_max,
        k2_ok=k2_ok,
        drift_bound_max=drift_bound_max,
        drift_bound_ok=drift_bound_ok,
        coercivity_margin_min=coercivity_margin_min,
        coercivity_ok=coercivity_ok,
        ultra_max=ultra_max,
        ultra_ok=ultra_ok,
        r_grid=r_grid,
        g_curve=g_curve,
        gamma_hat=gamma_hat,
        n_samples=plan.n_convexity + plan.n_inner + plan.n_pairs
        + plan.n_coercivity + plan.n_r * plan.n_pairs_per_r,
    )
