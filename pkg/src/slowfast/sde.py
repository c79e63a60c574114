"""Euler-Maruyama simulation of the coupled slow-fast system and of the
frozen-x fast relaxation process.

The coupled update reads

    X_{k+1} = X_k + b(X_k, Y_k) dt + eps^alpha sqrt(dt) xi_k
    Y_{k+1} = Y_k - (1/eps) grad_y U(X_k, Y_k) dt + (s(eps)/sqrt(eps)) sqrt(dt) zeta_k

with independent standard Gaussians per step. The step obeys
dt = min(dt_max, stab_c * eps) because the fast drift is O(1/eps) and
explicit Euler needs dt * Lip(grad U) / eps < 1. Noise is drawn from
counter-based Philox streams keyed by (seed, stream, path), so an ensemble
is bit-identical to the corresponding sequence of single-path runs no
matter how the paths are scheduled.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import (BudgetExceeded, DomainError, Explosion)
from .potential import DriftSpec, PotentialSpec
from .utils import STREAM_COUPLED, STREAM_FROZEN, stream

EXPLOSION_NORM = 1e8
DEFAULT_STEP_BUDGET = 10 ** 9


@dataclass(frozen=True)
class NoiseSchedule:
    """Noise decay s(eps) = sqrt(big_c / ln(1 + 1/eps)) with slow-noise
    exponent alpha in (0, 1)."""

    alpha: float
    big_c: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0,1)")
        if self.big_c <= 0:
            raise DomainError("big_c must be positive")

    def s(self, eps):
        return s_of_epsilon(self, eps)

    def threshold(self, lam, gamma):
        """Smallest admissible big_c given estimates of Lambda and Gamma."""
        return 2.0 * (lam + 2.0 * gamma) / (1.0 - self.alpha)

    def below_threshold(self, lam, gamma):
        return self.big_c <= self.threshold(lam, gamma)


def s_of_epsilon(sch: NoiseSchedule, eps):
    """Evaluate the schedule; decreasing in eps and vanishing at zero."""
    eps = np.asarray(eps, dtype=float)
    if np.any(eps <= 0):
        raise DomainError("eps must be positive")
    return np.sqrt(sch.big_c / np.log1p(1.0 / eps))


@dataclass(frozen=True)
class SimConfig:
    """One coupled run: horizon, initial data, step control and seed."""

    epsilon: float
    horizon: float
    x0: tuple
    y0: tuple
    schedule: NoiseSchedule
    dt_max: float = 0.01
    stab_c: float = 0.05
    seed: int = 0
    step_budget: int = DEFAULT_STEP_BUDGET

    def __post_init__(self):
        if self.epsilon <= 0:
            raise DomainError("epsilon must be positive")
        if self.horizon <= 0:
            raise DomainError("horizon must be positive")
        if min(self.dt_max, self.stab_c) <= 0:
            raise DomainError("dt_max and stab_c must be positive")

    @property
    def dt(self):
        dt_eff = min(self.dt_max, self.stab_c * self.epsilon)
        return self.horizon / self.n_steps_for(dt_eff)

    @property
    def n_steps(self):
        return self.n_steps_for(min(self.dt_max, self.stab_c * self.epsilon))

    def n_steps_for(self, dt_eff):
        n = int(math.ceil(self.horizon / dt_eff - 1e-12))
        if n > self.step_budget:
            raise BudgetExceeded(f"{n} steps exceed budget {self.step_budget}")
        return n


@dataclass(frozen=True)
class TrajectoryPair:
    """One sampled path of the coupled system on a uniform grid."""

    times: np.ndarray
    xs: np.ndarray  # (n+1, d)
    ys: np.ndarray  # (n+1, m)
    epsilon: float
    seed: int

    def validate(self, x0=None, y0=None):
        t = self.times
        if t[0] != 0.0 or np.any(np.diff(t) <= 0):
            raise DomainError("times must increase from zero")
        if not (np.all(np.isfinite(self.xs)) and np.all(np.isfinite(self.ys))):
            raise DomainError("non-finite samples in trajectory")
        if x0 is not None and not np.allclose(self.xs[0], x0):
            raise DomainError("trajectory does not start at x0")
        if y0 is not None and not np.allclose(self.ys[0], y0):
            raise DomainError("trajectory does not start at y0")
        return True

    def to_csv(self, path, seed=None, cfg_hash=None):
        from .utils import write_csv
        d = self.xs.shape[1]
        m = self.ys.shape[1]
        cols = (["t"] + [f"x_{i+1}" for i in range(d)]
                + [f"y_{j+1}" for j in range(m)])
        rows = ([t] + list(xr) + list(yr)
                for t, xr, yr in zip(self.times, self.xs, self.ys))
        write_csv(path, cols, rows, seed=self.seed if seed is None else seed,
                  cfg_hash=cfg_hash)


def _draw_path_noise(seed, path_index, n_steps, d, m):
    rng = stream(seed, STREAM_COUPLED, path_index)
    block = rng.standard_normal((n_steps, d + m))
    return block[:, :d], block[:, d:]


def simulate_coupled_given_noise(p: PotentialSpec, b: DriftSpec,
                                 cfg: SimConfig, xi, zeta):
    """Deterministic integrator core: advance the coupled system with the
    supplied standard-normal increments (shape (..., n, d) and (..., n, m)).

    Exposed so that self-convergence studies can refine dt while sharing
    one underlying Brownian path.
    """
    xi = np.asarray(xi, dtype=float)
    zeta = np.asarray(zeta, dtype=float)
    n = xi.shape[-2]
    dt = cfg.horizon / n
    sdt = math.sqrt(dt)
    eps = cfg.epsilon
    x_amp = eps ** cfg.schedule.alpha * sdt
    y_amp = cfg.schedule.s(eps) / math.sqrt(eps) * sdt
    d = len(np.atleast_1d(cfg.x0))
    m = len(np.atleast_1d(cfg.y0))
    batch = xi.shape[:-2]

    xs = np.empty(batch + (n + 1, d))
    ys = np.empty(batch + (n + 1, m))
    xs[..., 0, :] = np.atleast_1d(cfg.x0)
    ys[..., 0, :] = np.atleast_1d(cfg.y0)
    xk = np.broadcast_to(np.atleast_1d(np.asarray(cfg.x0, float)),
                         batch + (d,)).copy()
    yk = np.broadcast_to(np.atleast_1d(np.asarray(cfg.y0, float)),
                         batch + (m,)).copy()
    for k in range(n):
        bk = np.atleast_1d(b.eval(xk, yk))
        gk = np.atleast_1d(p.grad_y(xk, yk))
        bk = bk.reshape(batch + (d,))
        gk = gk.reshape(batch + (m,))
        xk = xk + bk * dt + x_amp * xi[..., k, :]
        yk = yk - gk * (dt / eps) + y_amp * zeta[..., k, :]
        xs[..., k + 1, :] = xk
        ys[..., k + 1, :] = yk
        worst = max(np.abs(xk).max(), np.abs(yk).max())
        if not np.isfinite(worst) or worst > EXPLOSION_NORM:
            raise Explosion(k + 1, float(worst))
    times = np.linspace(0.0, cfg.horizon, n + 1)
    return times, xs, ys


def simulate_coupled(p: PotentialSpec, b: DriftSpec, cfg: SimConfig,
                     path_index=0) -> TrajectoryPair:
    """Simulate one path of the coupled system; deterministic given
    (cfg, model, path_index)."""
    d = len(np.atleast_1d(cfg.x0))
    m = len(np.atleast_1d(cfg.y0))
    n = cfg.n_steps
    xi, zeta = _draw_path_noise(cfg.seed, path_index, n, d, m)
    times, xs, ys = simulate_coupled_given_noise(p, b, cfg, xi, zeta)
    traj = TrajectoryPair(times=times, xs=xs, ys=ys, epsilon=cfg.epsilon,
                          seed=cfg.seed)
    traj.validate(x0=np.atleast_1d(cfg.x0), y0=np.atleast_1d(cfg.y0))
    return traj


def simulate_coupled_ensemble(p: PotentialSpec, b: DriftSpec, cfg: SimConfig,
                              n_paths):
    """Vectorized ensemble; row i is bit-identical to
    ``simulate_coupled(..., path_index=i)``."""
    d = len(np.atleast_1d(cfg.x0))
    m = len(np.atleast_1d(cfg.y0))
    n = cfg.n_steps
    if n_paths * n * (d + m) > 4e8:
        raise BudgetExceeded("ensemble noise block too large; reduce paths "
                             "or horizon")
    xi = np.empty((n_paths, n, d))
    zeta = np.empty((n_paths, n, m))
    for i in range(n_paths):
        xi[i], zeta[i] = _draw_path_noise(cfg.seed, i, n, d, m)
    return simulate_coupled_given_noise(p, b, cfg, xi, zeta)


@dataclass
class FrozenResult:
    """Ensemble of frozen-x fast paths, recorded on a strided grid."""

    times: np.ndarray
    zs: np.ndarray | None  # (n_paths, n_rec, m) when recorded
    observables: dict
    z_final: np.ndarray  # (n_paths, m)
    s_val: float
    dt: float


def simulate_frozen(p: PotentialSpec, x, s_val, t_span, dt, n_paths, seed,
                    z0=0.0, record_stride=1, observables=None,
                    record_paths=None, chunk_steps=4096) -> FrozenResult:
    """Simulate dZ = -grad_y U(x, Z) dt + s_val dW for an ensemble.

    ``observables`` maps names to vectorized functions of the particle
    block (n_paths, m); their ensemble means are recorded every
    ``record_stride`` steps. Full paths are kept only when requested (or
    by default when no observables are given), so long relaxation runs
    stay within memory.
    """
    if s_val < 0:
        raise DomainError("s_val must be nonnegative")
    t0, t1 = float(t_span[0]), float(t_span[1])
    if t1 <= t0 or dt <= 0:
        raise DomainError("need t1 > t0 and dt > 0")
    hmax = _sampled_hess_bound(p, x)
    if dt > 0.5 / hmax:
        raise DomainError(
            f"dt={dt:g} unstable: sampled Hessian bound {hmax:.3g} requires "
            f"dt <= {0.5 / hmax:.3g}")
    n = int(math.ceil((t1 - t0) / dt - 1e-12))
    if n > DEFAULT_STEP_BUDGET:
        raise BudgetExceeded(f"{n} steps exceed budget")
    dt = (t1 - t0) / n
    m = p.m
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if record_paths is None:
        record_paths = observables is None
    observables = observables or {}

    z = np.broadcast_to(np.atleast_1d(np.asarray(z0, dtype=float)),
                        (n_paths, m)).astype(float).copy()
    n_rec = n // record_stride + 1
    times = t0 + dt * record_stride * np.arange(n_rec)
    zs = np.empty((n_paths, n_rec, m)) if record_paths else None
    if record_paths and zs.size > 6e7:
        raise BudgetExceeded("recorded ensemble too large; increase "
                             "record_stride or pass observables")
    obs = {k: np.empty(n_rec) for k in observables}

    def record(j):
        if zs is not None:
            zs[:, j, :] = z
        for k, f in observables.items():
            obs[k][j] = float(np.mean(f(z)))

    record(0)
    rng = stream(seed, STREAM_FROZEN)
    amp = s_val * math.sqrt(dt)
    xb = np.broadcast_to(xa, (n_paths, xa.shape[0]))
    k = 0
    j = 1
    while k < n:
        todo = min(chunk_steps, n - k)
        noise = rng.standard_normal((todo, n_paths, m))
        for i in range(todo):
            g = np.atleast_1d(p.grad_y(xb, z)).reshape(n_paths, m)
            z = z - g * dt + amp * noise[i]
            k += 1
            if k % record_stride == 0 and j < n_rec:
                record(j)
                j += 1
        worst = np.abs(z).max()
        if not np.isfinite(worst) or worst > EXPLOSION_NORM:
            raise Explosion(k, float(worst))
    return FrozenResult(times=times, zs=zs, observables=obs, z_final=z,
                        s_val=s_val, dt=dt)


def _sampled_hess_bound(p, x, half=None, n=257):
    """Crude sup bound of |hess| over the region the fast process visits."""
    xa = np.atleast_1d(np.asarray(x, dtype=float))
    if half is None:
        rp = 1.0 if p.declared is None else max(p.declared.r_prime, 1.0)
        half = 1.5 * rp
    axes = [np.linspace(-half, half, n)] * p.m
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in mesh], axis=-1)
    xb = np.broadcast_to(xa, (pts.shape[0], xa.shape[0]))
    h = p.hess_y(xb, pts).reshape(pts.shape[0], p.m, p.m)
    return float(np.linalg.norm(h, axis=(-2, -1)).max())


def ensemble_to_csv(path, times, xs, ys, seed=None, cfg_hash=None):
    """Long-format export: one row per (path, time) node."""
    from .utils import write_csv
    n_paths, n_nodes, d = xs.shape
    m = ys.shape[2]
    cols = (["path", "t"] + [f"x_{i+1}" for i in range(d)]
            + [f"y_{j+1}" for j in range(m)])

    def rows():
        for pidx in range(n_paths):
            for k in range(n_nodes):
                yield ([pidx, times[k]] + list(xs[pidx, k])
                       + list(ys[pidx, k]))

    write_csv(path, cols, rows(), seed=seed, cfg_hash=cfg_hash)
