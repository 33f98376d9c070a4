"""Sine-skewing of symmetric toroidal densities.

A skewed model multiplies a symmetric base density f(x - mu) by the
factor 1 + sum_s lambda_s sin(x_s - mu_s).  The factor integrates the
perturbation away, so the base normalizing constant is reused unchanged;
everything here (density, cdf, sampling, trigonometric moments, shape
parameters, marginals, mode search) builds on that fact.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import minimize
from scipy.special import logsumexp, roots_legendre

from . import families
from .families import Family, FamilyParams, base_log_density, base_sample, base_score_x
from .numerics import TWO_PI, wrap_angle

__all__ = [
    "SkewModel",
    "ShapeSummary",
    "Mode",
    "skew_log_density",
    "skew_score_x",
    "skew_cdf",
    "sample",
    "trig_moments",
    "shape_summary",
    "marginal_log_density",
    "marginal_closed_form_gate",
    "find_modes",
]

logger = logging.getLogger(__name__)

LAMBDA_BUDGET_TOL = 1e-12
MODE_MERGE_TOL = 1e-4


@dataclass(frozen=True)
class SkewModel:
    """Location mu, base-family parameters theta, and skewness lambda.

    lambda lives in the l1 unit ball: each entry in [-1, 1] and the
    absolute entries summing to at most 1.
    """

    mu: tuple
    theta: FamilyParams
    lam: tuple

    def __post_init__(self):
        mu = tuple(float(v) for v in np.atleast_1d(np.asarray(self.mu, dtype=float)))
        lam = tuple(float(v) for v in np.atleast_1d(np.asarray(self.lam, dtype=float)))
        object.__setattr__(self, "mu", tuple(float(v) for v in wrap_angle(mu)))
        object.__setattr__(self, "lam", lam)
        d = self.theta.dimension
        if len(self.mu) != d or len(self.lam) != d:
            raise ValueError("mu, lambda and theta dimensions must agree")
        if any(abs(l) > 1.0 + LAMBDA_BUDGET_TOL for l in lam):
            raise ValueError("each lambda entry must lie in [-1, 1]")
        if sum(abs(l) for l in lam) > 1.0 + LAMBDA_BUDGET_TOL:
            raise ValueError("lambda must satisfy sum_s |lambda_s| <= 1")

    @property
    def dimension(self) -> int:
        return self.theta.dimension

    @property
    def mu_array(self) -> np.ndarray:
        return np.asarray(self.mu)

    @property
    def lam_array(self) -> np.ndarray:
        return np.asarray(self.lam)


@dataclass(frozen=True)
class ShapeSummary:
    """First-order toroidal moments and shape parameters, per coordinate."""

    mean_direction: tuple
    concentration: tuple
    variance: tuple
    skewness: tuple
    kurtosis: tuple


def _centered(model: SkewModel, x) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    if pts.shape[-1] != model.dimension:
        raise ValueError(f"point dimension {pts.shape[-1]} does not match model "
                         f"dimension {model.dimension}")
    return wrap_angle(pts - model.mu_array)


def skew_log_density(model: SkewModel, x) -> np.ndarray | float:
    """log g(x) for the sine-skewed model; -inf where the skewing factor
    vanishes (boundary lambda)."""
    scalar = np.asarray(x).ndim == 1
    u = _centered(model, x)
    base = base_log_density(model.theta, u)
    factor = 1.0 + np.sin(u) @ model.lam_array
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.asarray(base) + np.where(factor > 0.0, np.log(np.maximum(factor, 1e-300)), -np.inf)
    return float(out[0]) if scalar else out


def skew_score_x(model: SkewModel, x) -> np.ndarray:
    """Gradient of log g with respect to the point, shape (..., d)."""
    u = _centered(model, np.atleast_2d(np.asarray(x, dtype=float)))
    lam = model.lam_array
    factor = 1.0 + np.sin(u) @ lam
    return base_score_x(model.theta, u) + lam * np.cos(u) / factor[..., None]


def skew_cdf(model: SkewModel, x, points_per_dim: int = 200) -> float:
    """P(X_1 <= x_1, ..., X_d <= x_d) with the lower corner fixed at -pi.

    Tensor-product Gauss-Legendre quadrature of the density over the box
    [-pi, x_1] x ... x [-pi, x_d].
    """
    upper = np.atleast_1d(np.asarray(x, dtype=float))
    if upper.shape != (model.dimension,):
        raise ValueError("cdf point must have one coordinate per dimension")
    if np.any(upper < -np.pi) or np.any(upper > np.pi):
        raise ValueError("cdf coordinates must lie in [-pi, pi)")
    if np.any(upper == -np.pi):
        return 0.0
    xi, w = roots_legendre(points_per_dim)
    axes, weights = [], []
    for s in range(model.dimension):
        half = 0.5 * (upper[s] + np.pi)
        axes.append(-np.pi + half * (xi + 1.0))
        weights.append(half * w)
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    wmesh = np.meshgrid(*weights, indexing="ij")
    wts = np.prod(np.stack([m.ravel() for m in wmesh], axis=-1), axis=-1)
    dens = np.exp(skew_log_density(model, pts))
    return float(np.clip(np.sum(dens * wts), 0.0, 1.0))


def sample(model: SkewModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points: sample the base, then reflect about mu with
    probability (1 - sum_s lambda_s sin(Y_s - mu_s)) / 2.  Output wrapped
    to [-pi, pi)^d; deterministic given the generator state."""
    if n < 0:
        raise ValueError("n must be non-negative")
    mu = model.mu_array
    y = wrap_angle(base_sample(model.theta, n, rng) + mu)
    if n == 0:
        return y
    u = rng.uniform(size=n)
    keep = u <= 0.5 * (1.0 + np.sin(wrap_angle(y - mu)) @ model.lam_array)
    out = np.where(keep[:, None], y, -y + 2.0 * mu)
    return wrap_angle(out)


# ---------------------------------------------------------------------------
# Trigonometric moments and shape parameters
# ---------------------------------------------------------------------------

def _unit(d: int, s: int) -> np.ndarray:
    e = np.zeros(d, dtype=int)
    e[s] = 1
    return e


def trig_moments(model: SkewModel, p, base_cosine_moment=None) -> tuple:
    """(alpha_p, beta_p) of the skewed model about mu.

    alpha_p equals the base cosine moment; beta_p is the lambda-weighted
    half-difference of neighbouring base cosine moments.  A custom
    ``base_cosine_moment(q)`` oracle may be supplied; the default uses
    the base family's analytic or quadrature moments.
    """
    p = np.atleast_1d(np.asarray(p, dtype=int))
    if p.shape != (model.dimension,):
        raise ValueError("moment order must have one entry per dimension")
    if base_cosine_moment is None:
        theta = model.theta
        base_cosine_moment = lambda q: families.base_cosine_moment(theta, q)
    alpha = float(base_cosine_moment(tuple(p)))
    beta = 0.0
    for s, lam_s in enumerate(model.lam):
        if lam_s == 0.0:
            continue
        e = _unit(model.dimension, s)
        beta += 0.5 * lam_s * (base_cosine_moment(tuple(p - e))
                               - base_cosine_moment(tuple(p + e)))
    return alpha, float(beta)


DEGENERATE_VARIANCE = 1e-12


def shape_summary(model: SkewModel, base_cosine_moment=None) -> ShapeSummary:
    """Mean direction, concentration, variance, skewness and kurtosis.

    All moments are taken about mu, so that at lambda = 0 the reported
    mean direction equals mu itself.
    """
    d = model.dimension
    if base_cosine_moment is None:
        theta = model.theta
        base_cosine_moment = lambda q: families.base_cosine_moment(theta, q)
    a0 = lambda q: float(base_cosine_moment(tuple(np.asarray(q, dtype=int))))
    lam = model.lam_array

    mean, conc, var, skw, krt = [], [], [], [], []
    for s in range(d):
        e_s = _unit(d, s)
        a = a0(e_s)
        a2 = a0(2 * e_s)
        L = lam[s] * (1.0 - a2)
        M = lam[s] * (a - a0(3 * e_s))
        for p in range(d):
            if p == s:
                continue
            e_p = _unit(d, p)
            L += lam[p] * (a0(e_s - e_p) - a0(e_s + e_p))
            M += lam[p] * (a0(2 * e_s - e_p) - a0(2 * e_s + e_p))
        b = 0.5 * L
        rho = min(math.hypot(a, b), 1.0)
        V = 1.0 - rho
        offset = math.atan2(b, a)
        mean.append(float(wrap_angle(model.mu[s] + offset)))
        conc.append(rho)
        var.append(V)
        if V < DEGENERATE_VARIANCE:
            raise ValueError(
                f"circular variance below {DEGENERATE_VARIANCE} in coordinate {s}; "
                "skewness and kurtosis are undefined")
        rho2 = rho * rho
        if rho2 < 1e-300:
            # moments about the mean reduce to moments about mu
            beta_bar = 0.5 * M
            alpha_bar = a2
        else:
            core = a * a - 0.25 * L * L
            beta_bar = M / (2.0 * rho2) * core - (a * a2 / rho2) * L
            alpha_bar = a2 / rho2 * core + a / (2.0 * rho2) * L * M
        skw.append(beta_bar / V**1.5)
        krt.append((alpha_bar - rho2) / V**2)
    return ShapeSummary(tuple(mean), tuple(conc), tuple(var), tuple(skw), tuple(krt))


# ---------------------------------------------------------------------------
# Marginals of the bivariate Sine / Cosine skewed models
# ---------------------------------------------------------------------------

MARGINAL_QUAD_N = 512
MARGINAL_GATE_TOL = 1e-6


def _marginal_quadrature(model: SkewModel, coordinate: int, x) -> np.ndarray:
    """log marginal density by integrating the joint over the other
    coordinate with the periodic trapezoidal rule."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    other = -np.pi + TWO_PI * np.arange(MARGINAL_QUAD_N) / MARGINAL_QUAD_N
    pts = np.empty((x.size, MARGINAL_QUAD_N, 2))
    pts[..., coordinate] = x[:, None]
    pts[..., 1 - coordinate] = other[None, :]
    log_joint = skew_log_density(model, pts.reshape(-1, 2)).reshape(x.size, MARGINAL_QUAD_N)
    return logsumexp(log_joint, axis=1) + math.log(TWO_PI / MARGINAL_QUAD_N)


def _marginal_closed_form(model: SkewModel, coordinate: int, x) -> np.ndarray:
    """The printed closed-form marginal, evaluated exactly as displayed
    (subject to the validation gate before use)."""
    theta = model.theta
    if theta.family not in (Family.SINE, Family.COSINE):
        raise ValueError("closed-form marginals exist for the Sine and Cosine families")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    j, o = coordinate, 1 - coordinate
    k_j, k_o = theta.kappa[j], theta.kappa[o]
    r = theta.r
    lam_j, lam_o = model.lam[j], model.lam[o]
    mu_j, mu_o = model.mu[j], model.mu[o]
    delta = wrap_angle(x - mu_j)
    sd = np.sin(delta)
    if theta.family is Family.SINE:
        a = np.sqrt(k_o**2 + r**2 * sd**2)
        b = np.arctan2(r * sd, k_o)
    else:
        a = np.sqrt(k_o**2 + r**2 + 2.0 * k_o * r * np.cos(delta))
        b = np.arctan2(r * sd, k_o + r * np.cos(delta))
    log_c = families.log_norm_const(theta)

    from scipy.special import ive

    # log I_0(a), log I_1(a), overflow-safe for any a >= 0
    la0 = np.log(ive(0, a)) + a
    with np.errstate(divide="ignore"):
        la1 = np.log(ive(1, a)) + a
    # bracket = 2*pi*I0(a)*(1 + lam_j sin) + lam_o * I1(a)/I0(a) * cos(mu_o + b),
    # factored by I0(a) to stay in log space
    inner = (TWO_PI * (1.0 + lam_j * sd)
             + lam_o * np.exp(la1 - 2.0 * la0) * np.cos(mu_o + b))
    with np.errstate(divide="ignore", invalid="ignore"):
        return k_j * np.cos(delta) - log_c + la0 + np.log(inner)


@lru_cache(maxsize=128)
def _gate_result(model: SkewModel, coordinate: int) -> tuple:
    grid = np.linspace(-np.pi, np.pi, 181, endpoint=False)
    quad = np.exp(_marginal_quadrature(model, coordinate, grid))
    with np.errstate(invalid="ignore"):
        closed = np.exp(_marginal_closed_form(model, coordinate, grid))
    diff = float(np.max(np.abs(np.nan_to_num(closed, nan=np.inf) - quad)))
    return (diff <= MARGINAL_GATE_TOL, diff)


def marginal_closed_form_gate(model: SkewModel, coordinate: int) -> tuple:
    """Validate the printed closed-form marginal against quadrature.

    Returns (enabled, max_abs_density_difference).  The closed form is
    only usable when it reproduces the quadrature marginal to 1e-6; the
    discrepancy is logged otherwise, never silently corrected.
    """
    if model.dimension != 2:
        raise ValueError("marginals are defined for bivariate models")
    if coordinate not in (0, 1):
        raise ValueError("coordinate must be 0 or 1")
    return _gate_result(model, coordinate)


def marginal_log_density(model: SkewModel, coordinate: int, x,
                         use_closed_form: bool = False) -> np.ndarray | float:
    """log marginal density of one coordinate of a bivariate Sine or
    Cosine skewed model.

    The default path integrates the joint numerically.  Passing
    ``use_closed_form=True`` evaluates the printed closed form instead,
    but only after it passes the validation gate; on gate failure the
    quadrature result is returned and the discrepancy logged.
    """
    if model.theta.family not in (Family.SINE, Family.COSINE):
        raise ValueError("marginals are implemented for the Sine and Cosine families")
    if model.dimension != 2:
        raise ValueError("marginals are defined for bivariate models")
    if coordinate not in (0, 1):
        raise ValueError("coordinate must be 0 or 1")
    scalar = np.ndim(x) == 0
    if use_closed_form:
        enabled, diff = marginal_closed_form_gate(model, coordinate)
        if enabled:
            out = _marginal_closed_form(model, coordinate, x)
            return float(out[0]) if scalar else out
        logger.warning(
            "closed-form marginal disabled: max density difference %.3e vs "
            "quadrature exceeds %g; using quadrature", diff, MARGINAL_GATE_TOL)
    out = _marginal_quadrature(model, coordinate, x)
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# Mode finding
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Mode:
    """A local maximum of the density.  ``ridge`` lists coordinates along
    which the density is constant (uniform base with zero skewness)."""

    point: tuple
    density: float
    ridge: tuple = ()


def _toroidal_close(a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(wrap_angle(a - b))) <= tol)


def find_modes(model: SkewModel, grid_n: int = 360, refine_tol: float = 1e-8) -> list:
    """All local maxima of a bivariate skewed density, highest first.

    Coarse toroidal grid scan followed by gradient-based ascent; modes
    closer than 1e-4 radians are merged.  Uniform bases are handled
    analytically (flat directions are reported as ridges).
    """
    if model.dimension != 2:
        raise ValueError("mode search is implemented for bivariate models")
    if model.theta.family is Family.UNIFORM:
        lam = model.lam_array
        point = []
        ridge = []
        for s in range(2):
            if lam[s] == 0.0:
                ridge.append(s)
                point.append(model.mu[s])
            else:
                point.append(float(wrap_angle(model.mu[s] + math.copysign(0.5 * math.pi, lam[s]))))
        dens = float(np.exp(skew_log_density(model, np.array(point))))
        return [Mode(tuple(point), dens, tuple(ridge))]

    axis = -np.pi + TWO_PI * np.arange(grid_n) / grid_n
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    pts = np.stack([xx.ravel(), yy.ravel()], axis=-1)
    vals = np.asarray(skew_log_density(model, pts)).reshape(grid_n, grid_n)

    is_max = np.ones_like(vals, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            is_max &= vals >= np.roll(np.roll(vals, di, axis=0), dj, axis=1)
    strict = np.zeros_like(is_max)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            strict |= vals > np.roll(np.roll(vals, di, axis=0), dj, axis=1)
    candidates = np.argwhere(is_max & strict)

    def neg_log_density(z):
        return -float(skew_log_density(model, z))

    def neg_grad(z):
        return -skew_score_x(model, z[None, :])[0]

    # probe circle rejecting saddles and degenerate ridges that the grid
    # scan and gradient descent cannot distinguish from maxima
    angles = TWO_PI * np.arange(16) / 16
    probe_offsets = 1e-3 * np.stack([np.cos(angles), np.sin(angles)], axis=-1)

    modes: list[Mode] = []
    for i, j in candidates:
        z0 = np.array([axis[i], axis[j]])
        res = minimize(neg_log_density, z0, jac=neg_grad, method="BFGS",
                       options={"gtol": refine_tol, "maxiter": 500})
        z = wrap_angle(res.x)
        center = float(skew_log_density(model, z))
        probes = skew_log_density(model, wrap_angle(z + probe_offsets))
        if np.max(probes) > center + 1e-10:
            continue
        dens = float(np.exp(center))
        merged = False
        for k, m in enumerate(modes):
            if _toroidal_close(z, np.asarray(m.point), MODE_MERGE_TOL):
                if dens > m.density:
                    modes[k] = Mode(tuple(z), dens)
                merged = True
                break
        if not merged:
            modes.append(Mode(tuple(z), dens))
    modes.sort(key=lambda m: -m.density)
    return modes
