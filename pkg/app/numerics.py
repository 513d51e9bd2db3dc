"""Special functions, quadrature and grid line searches shared by the rate
formulas.
"""

import logging
import math
import warnings
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import numpy.typing as npt
from scipy import optimize, special
from scipy.integrate import IntegrationWarning, quad

from config import INTEGRATION_TOL

logger = logging.getLogger(__name__)

FloatArray = npt.NDArray[np.float64]
ScalarFn = Callable[[float], float]
VectorFn = Callable[[FloatArray], npt.ArrayLike]

HALLEY_MAX_ITERS = 20
QUAD_SUBINTERVALS = 200
# Extra e-folds kept beyond ln(1/tol) when truncating an improper integral.
DECAY_MARGIN = 20.0
DEFAULT_COARSE_POINTS = 256
DEFAULT_REFINEMENTS = 4


class NumericsError(Exception):
    """Base class for errors raised by a numerical routine."""


class DomainError(NumericsError, ValueError):
    """Raised when an argument lies outside the supported domain."""


class IntegrationError(NumericsError):
    """Raised when quadrature cannot reach the requested tolerance."""

    def __init__(self, abserr: float, tol: float) -> None:
        super().__init__(
            f"Quadrature error estimate {abserr:.3g} exceeds tolerance {tol:.3g}"
        )
        self.abserr = abserr
        self.tol = tol


class MaximizationError(NumericsError, ValueError):
    """Raised for a line search over an empty or unbounded interval."""


@dataclass(frozen=True, slots=True)
class RealInterval:
    """Closed interval [lo, hi]. `hi` may be +inf."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.lo):
            raise DomainError(f"Interval lower end must be finite, got {self.lo}")
        if math.isnan(self.hi) or self.hi < self.lo:
            raise DomainError(f"Invalid interval [{self.lo}, {self.hi}]")

    @property
    def is_bounded(self) -> bool:
        return math.isfinite(self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo


def lambert_w(x: float) -> float:
    """Principal branch of the Lambert W function for x >= 0.

    The scipy value is polished by Halley steps so that w * exp(w) matches x
    to 1e-12 relative; bracketing root finding takes over if it does not.
    """
    if not math.isfinite(x) or x < 0:
        raise DomainError(f"lambert_w is defined here for finite x >= 0, got {x}")
    if x == 0:
        return 0.0

    tol = 1e-12 * max(1.0, x)
    w = float(special.lambertw(x).real)
    for _ in range(HALLEY_MAX_ITERS):
        ew = math.exp(w)
        residual = w * ew - x
        if abs(residual) <= tol:
            return w
        wp1 = w + 1.0
        step = residual / (ew * wp1 - (w + 2.0) * residual / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    if abs(w * math.exp(w) - x) <= tol:
        return w

    logger.debug("Halley iteration stalled at x=%g, bracketing instead", x)
    hi = max(1.0, math.log(x) + 1.0)
    root = optimize.brentq(
        lambda v: v * math.exp(v) - x, 0.0, hi, xtol=1e-300, rtol=1e-15, maxiter=500
    )
    return float(root)


def integrate(
    f: ScalarFn,
    interval: RealInterval,
    tol: float = INTEGRATION_TOL,
    *,
    decay_rate: float | None = None,
) -> float:
    """Adaptive quadrature of `f` over `interval` to absolute error `tol`.

    An infinite upper end needs `decay_rate`, the rate k of an envelope
    exp(-k x) bounding the integrand; the range is truncated where the
    envelope has fallen DECAY_MARGIN e-folds below tol.
    """
    if tol <= 0:
        raise DomainError(f"Tolerance must be positive, got {tol}")
    hi = interval.hi
    if not interval.is_bounded:
        if decay_rate is None or decay_rate <= 0:
            raise DomainError("An unbounded interval needs a positive decay_rate")
        hi = interval.lo + (math.log(1.0 / tol) + DECAY_MARGIN) / decay_rate
    if hi == interval.lo:
        return 0.0

    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IntegrationWarning)
        value, abserr = quad(
            f, interval.lo, hi, epsabs=tol, epsrel=0.0, limit=QUAD_SUBINTERVALS
        )
    for warning in caught:
        logger.debug("quad: %s", warning.message)
    if abserr > tol:
        raise IntegrationError(abserr, tol)
    return float(value)


def maximize_1d(
    f: VectorFn,
    interval: RealInterval,
    coarse_points: int = DEFAULT_COARSE_POINTS,
    refinements: int = DEFAULT_REFINEMENTS,
) -> tuple[float, float]:
    """Grid line search: evaluate `f` on a uniform grid, then repeatedly
    re-grid the bracket around the best point.

    `f` is called with a numpy array of abscissae. No unimodality is assumed;
    ties go to the smallest abscissa and NaN values never win. The returned
    point is within `final_cell_width(...)` of the best sampled maximizer.
    """
    if not interval.is_bounded:
        raise MaximizationError("Line search needs a bounded interval")
    if interval.width <= 0:
        raise MaximizationError(f"Empty interval [{interval.lo}, {interval.hi}]")
    if coarse_points < 3:
        raise MaximizationError(f"Need at least 3 grid points, got {coarse_points}")

    xs = np.linspace(interval.lo, interval.hi, coarse_points)
    best_x, best_value = interval.lo, -math.inf
    for level in range(refinements + 1):
        values = np.broadcast_to(np.asarray(f(xs), dtype=np.float64), xs.shape)
        values = np.where(np.isnan(values), -np.inf, values)
        i = int(np.argmax(values))
        if values[i] > best_value or (values[i] == best_value and xs[i] < best_x):
            best_x, best_value = float(xs[i]), float(values[i])
        if level == refinements:
            break
        left = xs[max(i - 1, 0)]
        right = xs[min(i + 1, xs.size - 1)]
        xs = np.linspace(left, right, coarse_points)
    return best_x, best_value


def final_cell_width(
    interval: RealInterval,
    coarse_points: int = DEFAULT_COARSE_POINTS,
    refinements: int = DEFAULT_REFINEMENTS,
) -> float:
    """Grid spacing of the last refinement level of `maximize_1d`."""
    cell = interval.width / (coarse_points - 1)
    return cell * (2.0 / (coarse_points - 1)) ** refinements
