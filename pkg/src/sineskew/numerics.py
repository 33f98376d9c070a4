"""Special functions and deterministic quadrature on the torus.

Everything here is a pure function of its inputs (no shared mutable
state), so all operations are safe to call from multiple threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import gammaincinv, gammaln, iv, logsumexp

__all__ = [
    "QuadratureGrid",
    "bessel_i",
    "log_bessel_i",
    "torus_integrate",
    "log_torus_integrate",
    "chi_square_quantile",
    "wrap_angle",
    "IntegrationError",
]

TWO_PI = 2.0 * np.pi

MAX_BESSEL_ORDER = 200
# internal log-scale evaluation supports higher orders for series work
MAX_LOG_BESSEL_ORDER = 1000


class IntegrationError(RuntimeError):
    """Raised when an integrand produces non-finite values on the grid."""


def wrap_angle(x):
    """Wrap angles to [-pi, pi); pi maps to -pi.

    Values already inside the interval pass through bit-exactly.
    """
    arr = np.asarray(x, dtype=float)
    wrapped = np.mod(arr + np.pi, TWO_PI) - np.pi
    out = np.where((arr >= -np.pi) & (arr < np.pi), arr, wrapped)
    if np.ndim(x) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class QuadratureGrid:
    """Tensor-product grid of equally spaced angles on the d-torus.

    Equally weighted equispaced nodes make the rule the periodic
    trapezoidal rule, which converges spectrally for smooth periodic
    integrands.  Per-node weight is (2*pi/N)**d.
    """

    dimension: int
    points_per_dim: int

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        if self.points_per_dim < 1:
            raise ValueError("points_per_dim must be a positive integer")

    @property
    def weight(self) -> float:
        return (TWO_PI / self.points_per_dim) ** self.dimension

    @property
    def axis_nodes(self) -> np.ndarray:
        """The N equispaced nodes of one dimension, in [-pi, pi)."""
        n = self.points_per_dim
        return -np.pi + TWO_PI * np.arange(n) / n

    @property
    def nodes(self) -> np.ndarray:
        """All N**d nodes as an (N**d, d) array."""
        axes = np.meshgrid(*([self.axis_nodes] * self.dimension), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)


def default_grid(dimension: int) -> QuadratureGrid:
    """Default grid sizes: 256 per dimension for d <= 2, 64 for d = 3."""
    if dimension > 3:
        raise ValueError("quadrature supported up to d=3 (grid growth is exponential)")
    return QuadratureGrid(dimension, 256 if dimension <= 2 else 64)


def torus_integrate(f: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid) -> float:
    """Integrate f over the d-torus with the periodic trapezoidal rule.

    ``f`` must accept an (m, d) array of points and return m values.
    """
    values = np.asarray(f(grid.nodes), dtype=float)
    if not np.all(np.isfinite(values)):
        raise IntegrationError("integrand produced non-finite values on the grid")
    return float(np.sum(values) * grid.weight)


def log_torus_integrate(log_f: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid) -> float:
    """log of the torus integral of exp(log_f), computed without overflow.

    ``log_f`` may return -inf (zero integrand) but not +inf or nan.
    """
    values = np.asarray(log_f(grid.nodes), dtype=float)
    if np.any(np.isnan(values)) or np.any(values == np.inf):
        raise IntegrationError("log-integrand produced nan or +inf on the grid")
    return float(logsumexp(values) + grid.dimension * np.log(TWO_PI / grid.points_per_dim))


def bessel_i(order: int, x: float) -> float:
    """Modified Bessel function of the first kind, I_order(x).

    Integer order 0..200, x >= 0.  Relative error <= 1e-12 (delegates to
    scipy's iv).  Overflows to inf for x beyond ~700; use log_bessel_i in
    log-space code paths.
    """
    if order != int(order) or order < 0:
        raise ValueError("order must be a non-negative integer")
    if order > MAX_BESSEL_ORDER:
        raise ValueError(f"order must be <= {MAX_BESSEL_ORDER}")
    if not np.isfinite(x) or x < 0:
        raise ValueError("x must be finite and non-negative")
    return float(iv(int(order), x))


def log_bessel_i(order, x):
    """log I_order(x) for integer order >= 0 and x >= 0, overflow-safe.

    Evaluates the ascending power series in log space, so it stays
    accurate where iv/ive overflow or underflow (large x, or order large
    relative to x).  Vectorized over ``order``.

    Returns -inf where I_order(0) = 0 (order >= 1 at x = 0).
    """
    orders = np.atleast_1d(np.asarray(order))
    if np.any(orders != orders.astype(int)) or np.any(orders < 0):
        raise ValueError("order must be a non-negative integer")
    if np.any(orders > MAX_LOG_BESSEL_ORDER):
        raise ValueError(f"order must be <= {MAX_LOG_BESSEL_ORDER}")
    if not np.isfinite(x) or x < 0:
        raise ValueError("x must be finite and non-negative")
    orders = orders.astype(int)

    scalar_input = np.ndim(order) == 0
    if x == 0.0:
        out = np.where(orders == 0, 0.0, -np.inf).astype(float)
        return float(out[0]) if scalar_input else out

    # Series term k: (2k+n) log(x/2) - lgamma(k+1) - lgamma(n+k+1).
    # The summand peaks near k* = (-n + sqrt(n^2 + x^2))/2 <= x/2 and then
    # decays factorially; the margin below is far beyond 1e-16 relative.
    k_max = int(0.5 * x) + 70 + int(3.0 * np.sqrt(x + 1.0))
    k = np.arange(k_max + 1)
    log_half_x = np.log(0.5 * x)

    n_col = orders.ravel()[:, None].astype(float)
    terms = (2 * k[None, :] + n_col) * log_half_x
    terms -= gammaln(k[None, :] + 1.0) + gammaln(n_col + k[None, :] + 1.0)
    out = logsumexp(terms, axis=1).reshape(orders.shape)
    if scalar_input:
        return float(out.ravel()[0])
    return out


def chi_square_quantile(p: float, df: int) -> float:
    """Quantile of the chi-square distribution with df degrees of freedom.

    Solves regularized-lower-incomplete-gamma(df/2, q/2) = p for q.
    """
    if not (0.0 < p < 1.0):
        raise ValueError("p must lie strictly inside (0, 1)")
    if df != int(df) or df < 1:
        raise ValueError("df must be a positive integer")
    return float(2.0 * gammaincinv(df / 2.0, p))
