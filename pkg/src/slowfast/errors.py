"""Exception hierarchy shared across the package."""


class SlowFastError(Exception):
    """Base class for all package errors."""


class DomainError(SlowFastError):
    """An argument lies outside the mathematically admissible domain."""


class NoConvergence(SlowFastError):
    """Newton polish failed to converge from every grid seed."""


class EmptySearch(SlowFastError):
    """The search box contains no critical point."""


class Explosion(SlowFastError):
    """A simulated state norm exceeded the explosion threshold.

    Usually a sign that the explicit Euler step is too large for the
    fast drift; retry with a smaller stability fraction.
    """

    def __init__(self, step, norm, message=None):
        self.step = step
        self.norm = norm
        super().__init__(
            message
            or f"state norm {norm:.3e} exceeded threshold at step {step}; "
            "reduce stab_c or dt"
        )


class BudgetExceeded(SlowFastError):
    """The requested run needs more steps than the configured budget."""


class TailMassTooLarge(SlowFastError):
    """Quadrature box too small: estimated tail mass above tolerance."""


class SingularHessian(SlowFastError):
    """A minimum has a (numerically) singular Hessian; the determinant
    weights are undefined there and a quadrature route must be used."""


class DimensionError(SlowFastError):
    """Operation not available in this dimension."""


class TooManyMinima(SlowFastError):
    """Exhaustive graph enumeration is capped at six minima."""


class Degenerate(SlowFastError):
    """All particle likelihoods underflowed the floor."""

    def __init__(self, step, message=None):
        self.step = step
        super().__init__(
            message
            or f"all particle likelihoods underflowed at step {step}; "
            "increase n_particles or the time step"
        )


class GridTooCoarse(SlowFastError):
    """The averaging window is shorter than two observation steps."""


class NonFiniteState(SlowFastError):
    """An ODE solve produced a non-finite state."""


class ConfigError(SlowFastError):
    """Invalid or unknown configuration key/value."""
