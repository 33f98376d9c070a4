"""Pointwise-symmetric base densities on the torus.

Four families, all centered at 0 (location is applied by the skewing
layer): the uniform, the Sine and Cosine bivariate von Mises submodels
(with d-variate extensions), and the bivariate wrapped Cauchy.

All densities are evaluated in log space throughout so that large
concentrations (kappa up to ~200) never overflow.  FamilyParams values
are immutable and hashable; normalizing constants and moments are
memoized behind thread-safe caches.
"""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from .numerics import (
    QuadratureGrid,
    TWO_PI,
    default_grid,
    log_bessel_i,
    log_torus_integrate,
    wrap_angle,
)

__all__ = [
    "Family",
    "Modality",
    "FamilyParams",
    "WCCoefficients",
    "sine_log_norm_const",
    "cosine_log_norm_const",
    "wc_coefficients",
    "base_log_density",
    "base_score_x",
    "base_score_theta",
    "base_sample",
    "base_is_unimodal",
    "base_cosine_moment",
    "SeriesConvergenceError",
    "SamplingError",
]

logger = logging.getLogger(__name__)

LOG_4PI2 = math.log(4.0 * math.pi**2)

SERIES_TOL = 1e-14
SERIES_MAX_TERMS = 500
# Beyond this the printed binomial-Bessel series is numerically ill-posed
# and the constant is evaluated by quadrature instead.
SINE_SERIES_RATIO_LIMIT = 1e3

REJECTION_PROPOSAL_CAP = 10**6
GIBBS_BURN_IN = 500


class SeriesConvergenceError(RuntimeError):
    """A normalizing-constant series failed to meet tolerance."""


class SamplingError(RuntimeError):
    """A rejection sampler exceeded its proposal budget."""


class Family(enum.Enum):
    UNIFORM = "uniform"
    SINE = "sine"
    COSINE = "cosine"
    WRAPPED_CAUCHY = "wc"

    @classmethod
    def parse(cls, name: str) -> "Family":
        name = name.strip().lower()
        for fam in cls:
            if name in (fam.value, fam.name.lower()):
                return fam
        raise ValueError(f"unknown family {name!r}; expected one of "
                         f"{[f.value for f in cls]}")


class Modality(enum.Enum):
    UNIMODAL = "unimodal"
    MULTIMODAL = "multimodal"
    UNKNOWN = "unknown"


def _as_tuple(values) -> tuple:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(values, dtype=float)))


@dataclass(frozen=True)
class FamilyParams:
    """Parameters of a base symmetric density (everything except location).

    ``kappa`` holds the d concentrations.  ``dep`` is the dependence
    parameter: a scalar r for d = 2, a symmetric zero-diagonal matrix
    (stored as a tuple of row tuples) for d > 2, or None when absent.
    """

    family: Family
    dimension: int
    kappa: tuple = ()
    dep: object = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be a positive integer")
        kappa = () if self.kappa is None else _as_tuple(self.kappa)
        object.__setattr__(self, "kappa", kappa)
        if self.family is Family.UNIFORM:
            if self.kappa != () or self.dep is not None:
                raise ValueError("uniform family has no kappa or dependence parameters")
            return
        if len(self.kappa) != self.dimension:
            raise ValueError("kappa must have one entry per dimension")
        if self.family is Family.WRAPPED_CAUCHY:
            if self.dimension != 2:
                raise ValueError("wrapped Cauchy is bivariate only")
            if not all(0.0 <= k < 1.0 for k in self.kappa):
                raise ValueError("wrapped Cauchy requires each kappa in [0, 1)")
            r = float(self.dep) if self.dep is not None else 0.0
            if not abs(r) < 1.0:
                raise ValueError("wrapped Cauchy requires |r| < 1")
            object.__setattr__(self, "dep", r)
            return
        # Sine / Cosine
        if any(k < 0 for k in self.kappa):
            raise ValueError("kappa entries must be non-negative")
        if self.dimension == 1:
            if self.dep is not None:
                raise ValueError("no dependence parameter in one dimension")
        elif self.dimension == 2:
            r = float(self.dep) if self.dep is not None else 0.0
            if not np.isfinite(r):
                raise ValueError("r must be finite")
            object.__setattr__(self, "dep", r)
        else:
            R = np.asarray(self.dep, dtype=float) if self.dep is not None else np.zeros(
                (self.dimension, self.dimension))
            if R.shape != (self.dimension, self.dimension):
                raise ValueError("R must be a d x d matrix")
            if not np.allclose(R, R.T, atol=0.0):
                raise ValueError("R must be symmetric")
            if np.any(np.diag(R) != 0.0):
                raise ValueError("R must have a zero diagonal")
            object.__setattr__(self, "dep", tuple(tuple(float(v) for v in row) for row in R))

    @property
    def r(self) -> float:
        """Scalar dependence parameter (d = 2 families)."""
        if self.dimension != 2 or self.family is Family.UNIFORM:
            raise ValueError("scalar r is defined for bivariate non-uniform families")
        return float(self.dep)

    @property
    def dep_matrix(self) -> np.ndarray:
        """Dependence as a d x d matrix (scalar r maps to R12 = R21 = r/2)."""
        d = self.dimension
        R = np.zeros((d, d))
        if self.family is Family.UNIFORM or d == 1:
            return R
        if d == 2:
            R[0, 1] = R[1, 0] = 0.5 * float(self.dep)
            return R
        return np.asarray(self.dep, dtype=float)


@dataclass(frozen=True)
class WCCoefficients:
    """The five trigonometric-polynomial coefficients of the bivariate
    wrapped Cauchy denominator."""

    c0: float
    c1: float
    c2: float
    c3: float
    c4: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c0, self.c1, self.c2, self.c3, self.c4])


def wc_coefficients(kappa1: float, kappa2: float, r: float) -> WCCoefficients:
    """Denominator coefficients of the bivariate wrapped Cauchy density.

    Note the absolute value of r in c0..c3 but the signed r in c4.
    """
    if not (0.0 <= kappa1 < 1.0 and 0.0 <= kappa2 < 1.0):
        raise ValueError("wrapped Cauchy requires each kappa in [0, 1)")
    if not abs(r) < 1.0:
        raise ValueError("wrapped Cauchy requires |r| < 1")
    k1s, k2s, rs = kappa1**2, kappa2**2, r**2
    a = abs(r)
    return WCCoefficients(
        c0=(1 + rs) * (1 + k1s) * (1 + k2s) - 8 * a * kappa1 * kappa2,
        c1=2 * (1 + rs) * kappa1 * (1 + k2s) - 4 * a * (1 + k1s) * kappa2,
        c2=2 * (1 + rs) * (1 + k1s) * kappa2 - 4 * a * kappa1 * (1 + k2s),
        c3=-4 * (1 + rs) * kappa1 * kappa2 + 2 * a * (1 + k1s) * (1 + k2s),
        c4=2 * r * (1 - k1s) * (1 - k2s),
    )


# ---------------------------------------------------------------------------
# Normalizing constants
# ---------------------------------------------------------------------------

def _quadrature_log_const(exponent, dimension: int, grid: QuadratureGrid | None = None) -> float:
    grid = grid or default_grid(dimension)
    return log_torus_integrate(exponent, grid)


_SERIES_CHUNK = 24


class _SeriesCancellation(Exception):
    """Signed series lost too many digits to cancellation."""


def _accumulate_log_series(term_fn, label: str) -> float:
    """Sum a (possibly signed) series given log-magnitude/sign chunks.

    ``term_fn(i_array) -> (log_terms, signs)``.  Terms are accumulated in
    log space; the series stops when a term's relative contribution drops
    below SERIES_TOL past the running peak.
    """
    logs = []
    signs = []
    peak_seen = -np.inf
    for start in range(0, SERIES_MAX_TERMS, _SERIES_CHUNK):
        i = np.arange(start, min(start + _SERIES_CHUNK, SERIES_MAX_TERMS))
        lt, sg = term_fn(i)
        logs.append(lt)
        signs.append(sg)
        log_abs = np.concatenate(logs)
        total_abs = logsumexp(log_abs)
        peak_seen = max(peak_seen, float(lt.max()))
        last = float(lt[-1])
        if last < peak_seen and last - total_abs < math.log(SERIES_TOL):
            total, sign = logsumexp(log_abs, b=np.concatenate(signs), return_sign=True)
            if sign <= 0 or total < total_abs - 27.0:
                # alternating terms cancelled essentially all float digits
                raise _SeriesCancellation(label)
            return float(total)
    raise SeriesConvergenceError(
        f"{label} series did not converge within {SERIES_MAX_TERMS} terms")


def sine_log_norm_const(kappa1: float, kappa2: float, r: float) -> float:
    """log normalizing constant of the bivariate Sine density.

    Uses the binomial-Bessel series, accumulated in log space; falls back
    to quadrature where the series is ill-posed (kappa1*kappa2 = 0 with
    r != 0, or r^2/(4 kappa1 kappa2) > 1e3).
    """
    if kappa1 < 0 or kappa2 < 0 or not np.isfinite(r):
        raise ValueError("require kappa >= 0 and finite r")
    if r == 0.0:
        return LOG_4PI2 + float(log_bessel_i(0, kappa1) + log_bessel_i(0, kappa2))
    kk = kappa1 * kappa2
    if kk == 0.0 or r * r / (4.0 * kk) > SINE_SERIES_RATIO_LIMIT:
        return _quadrature_log_const(
            lambda p: kappa1 * np.cos(p[:, 0]) + kappa2 * np.cos(p[:, 1])
            + r * np.sin(p[:, 0]) * np.sin(p[:, 1]), 2)
    log_q = 2.0 * math.log(abs(r)) - math.log(4.0 * kk)

    from scipy.special import gammaln

    def term(i):
        lt = (gammaln(2 * i + 1.0) - 2.0 * gammaln(i + 1.0) + i * log_q
              + log_bessel_i(i, kappa1) + log_bessel_i(i, kappa2))
        return lt, np.ones_like(lt)

    label = f"Sine constant (kappa=({kappa1}, {kappa2}), r={r})"
    try:
        return LOG_4PI2 + _accumulate_log_series(term, label)
    except SeriesConvergenceError:
        # very large kappa with sizeable q needs more than 500 terms;
        # the integral is still easy
        return _quadrature_log_const(
            lambda p: kappa1 * np.cos(p[:, 0]) + kappa2 * np.cos(p[:, 1])
            + r * np.sin(p[:, 0]) * np.sin(p[:, 1]), 2, QuadratureGrid(2, 512))


def cosine_log_norm_const(kappa1: float, kappa2: float, r: float) -> float:
    """log normalizing constant of the bivariate Cosine density.

    Triple-Bessel series; terms carry alternating signs when r < 0 and
    are combined with a signed log-sum-exp.
    """
    if kappa1 < 0 or kappa2 < 0 or not np.isfinite(r):
        raise ValueError("require kappa >= 0 and finite r")
    a = abs(r)
    if a == 0.0 or kappa1 == 0.0 or kappa2 == 0.0:
        # only the i = 0 term survives (I_i(0) = 0 for i >= 1)
        return LOG_4PI2 + float(log_bessel_i(0, kappa1) + log_bessel_i(0, kappa2)
                                + log_bessel_i(0, a))
    negative_r = r < 0

    def term(i):
        lt = (log_bessel_i(i, kappa1) + log_bessel_i(i, kappa2)
              + log_bessel_i(i, a))
        lt = lt + np.where(i > 0, math.log(2.0), 0.0)
        sg = np.ones_like(lt)
        if negative_r:
            sg[i % 2 == 1] = -1.0
        return lt, sg

    label = f"Cosine constant (kappa=({kappa1}, {kappa2}), r={r})"
    try:
        return LOG_4PI2 + _accumulate_log_series(term, label)
    except _SeriesCancellation:
        # deep cancellation for strongly negative r at large kappa;
        # the integral itself is well behaved
        return _quadrature_log_const(
            lambda p: kappa1 * np.cos(p[:, 0]) + kappa2 * np.cos(p[:, 1])
            + r * np.cos(p[:, 0] - p[:, 1]), 2, QuadratureGrid(2, 512))


def _exponent(params: FamilyParams, x: np.ndarray) -> np.ndarray:
    """Exponent of the (unnormalized) Sine/Cosine density at centered x."""
    kappa = np.asarray(params.kappa)
    c = np.cos(x)
    s = np.sin(x)
    out = c @ kappa
    if params.dimension == 1:
        return out
    if params.dimension == 2:
        r = params.r
        if params.family is Family.SINE:
            return out + r * s[..., 0] * s[..., 1]
        return out + r * np.cos(x[..., 0] - x[..., 1])
    R = params.dep_matrix
    out = out + np.einsum("...i,ij,...j->...", s, R, s)
    if params.family is Family.COSINE:
        out = out + np.einsum("...i,ij,...j->...", c, R, c)
    return out


@lru_cache(maxsize=256)
def log_norm_const(params: FamilyParams) -> float:
    """log normalizing constant of a base family (cached).

    d > 2 Sine/Cosine constants have no known closed form and are
    evaluated by tensor quadrature (supported up to d = 3).
    """
    if params.family is Family.UNIFORM:
        return params.dimension * math.log(TWO_PI)
    if params.family is Family.WRAPPED_CAUCHY:
        # closed form: the density carries its own constant
        return 0.0
    if params.dimension == 1:
        return math.log(TWO_PI) + float(log_bessel_i(0, params.kappa[0]))
    if params.dimension == 2:
        k1, k2 = params.kappa
        if params.family is Family.SINE:
            return sine_log_norm_const(k1, k2, params.r)
        return cosine_log_norm_const(k1, k2, params.r)
    return _quadrature_log_const(lambda p: _exponent(params, p), params.dimension)


def base_log_density(params: FamilyParams, x) -> np.ndarray | float:
    """log f(x; params) for centered x on the torus (x already x - mu).

    ``x`` may be a single point of shape (d,) or an array (..., d).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 1
    pts = np.atleast_2d(x)
    if pts.shape[-1] != params.dimension:
        raise ValueError(
            f"point dimension {pts.shape[-1]} does not match params dimension "
            f"{params.dimension}")
    if params.family is Family.UNIFORM:
        out = np.full(pts.shape[:-1], -params.dimension * math.log(TWO_PI))
    elif params.family is Family.WRAPPED_CAUCHY:
        k1, k2 = params.kappa
        r = params.r
        co = wc_coefficients(k1, k2, r)
        c1, c2 = np.cos(pts[..., 0]), np.cos(pts[..., 1])
        s1, s2 = np.sin(pts[..., 0]), np.sin(pts[..., 1])
        denom = co.c0 - co.c1 * c1 - co.c2 * c2 - co.c3 * c1 * c2 - co.c4 * s1 * s2
        out = (math.log((1 - r * r) * (1 - k1 * k1) * (1 - k2 * k2))
               - LOG_4PI2 - np.log(denom))
    else:
        out = _exponent(params, pts) - log_norm_const(params)
    return float(out[0]) if scalar else out


def base_score_x(params: FamilyParams, x) -> np.ndarray:
    """Gradient of log f with respect to the point x (centered), shape (..., d)."""
    pts = np.asarray(x, dtype=float)
    c = np.cos(pts)
    s = np.sin(pts)
    if params.family is Family.UNIFORM:
        return np.zeros_like(pts)
    if params.family is Family.WRAPPED_CAUCHY:
        co = wc_coefficients(*params.kappa, params.r)
        c1, c2 = c[..., 0], c[..., 1]
        s1, s2 = s[..., 0], s[..., 1]
        denom = co.c0 - co.c1 * c1 - co.c2 * c2 - co.c3 * c1 * c2 - co.c4 * s1 * s2
        d1 = co.c1 * s1 + co.c3 * s1 * c2 - co.c4 * c1 * s2
        d2 = co.c2 * s2 + co.c3 * c1 * s2 - co.c4 * s1 * c2
        return -np.stack([d1, d2], axis=-1) / denom[..., None]
    kappa = np.asarray(params.kappa)
    grad = -kappa * s
    if params.dimension == 1:
        return grad
    R = params.dep_matrix
    grad = grad + 2.0 * c * (s @ R)
    if params.family is Family.COSINE:
        grad = grad - 2.0 * s * (c @ R)
    return grad


# ---------------------------------------------------------------------------
# Free dependence/concentration parameters ("theta") for inference
# ---------------------------------------------------------------------------

def theta_names(params: FamilyParams) -> tuple:
    if params.family is Family.UNIFORM:
        return ()
    names = tuple(f"kappa{s + 1}" for s in range(params.dimension))
    if params.dimension == 1:
        return names
    if params.dimension == 2:
        return names + ("r",)
    d = params.dimension
    return names + tuple(f"R{i + 1}{j + 1}" for i in range(d) for j in range(i + 1, d))


def theta_values(params: FamilyParams) -> np.ndarray:
    if params.family is Family.UNIFORM:
        return np.zeros(0)
    vals = list(params.kappa)
    if params.dimension == 2:
        vals.append(params.r)
    elif params.dimension > 2:
        R = params.dep_matrix
        d = params.dimension
        vals.extend(R[i, j] for i in range(d) for j in range(i + 1, d))
    return np.asarray(vals, dtype=float)


def with_theta(params: FamilyParams, values) -> FamilyParams:
    """A copy of params with the free theta parameters replaced."""
    values = np.asarray(values, dtype=float)
    if params.family is Family.UNIFORM:
        if values.size:
            raise ValueError("uniform family has no theta parameters")
        return params
    d = params.dimension
    kappa = values[:d]
    if d == 1:
        dep = None
    elif d == 2:
        dep = float(values[d])
    else:
        R = np.zeros((d, d))
        idx = d
        for i in range(d):
            for j in range(i + 1, d):
                R[i, j] = R[j, i] = values[idx]
                idx += 1
        dep = R
    return FamilyParams(params.family, d, kappa=kappa, dep=dep)


def _suff_stats(params: FamilyParams, pts: np.ndarray) -> np.ndarray:
    """Sufficient statistics of the Sine/Cosine exponent, shape (..., m)."""
    c = np.cos(pts)
    s = np.sin(pts)
    cols = [c[..., j] for j in range(params.dimension)]
    d = params.dimension
    if d == 2:
        if params.family is Family.SINE:
            cols.append(s[..., 0] * s[..., 1])
        else:
            cols.append(np.cos(pts[..., 0] - pts[..., 1]))
    elif d > 2:
        for i in range(d):
            for j in range(i + 1, d):
                if params.family is Family.SINE:
                    cols.append(2.0 * s[..., i] * s[..., j])
                else:
                    cols.append(2.0 * np.cos(pts[..., i] - pts[..., j]))
    return np.stack(cols, axis=-1)


@lru_cache(maxsize=256)
def _suff_stat_means(params: FamilyParams) -> tuple:
    grid = default_grid(params.dimension)
    pts = grid.nodes
    f = np.exp(base_log_density(params, pts))
    t = _suff_stats(params, pts)
    return tuple(float(v) for v in (t * f[:, None]).sum(axis=0) * grid.weight)


_FD_STEP = 1e-5


def base_score_theta(params: FamilyParams, x) -> np.ndarray:
    """Gradient of log f with respect to the free theta parameters, (..., m).

    Exponential families (Sine/Cosine) use sufficient statistics minus
    their expectations; the wrapped Cauchy uses central finite
    differences on the full log density (its constant is closed form).
    """
    pts = np.asarray(x, dtype=float)
    if params.family is Family.UNIFORM:
        return np.zeros(pts.shape[:-1] + (0,))
    if params.family in (Family.SINE, Family.COSINE):
        t = _suff_stats(params, pts)
        means = np.asarray(_suff_stat_means(params))
        return t - means
    vals = theta_values(params)
    cols = []
    for k in range(vals.size):
        step = np.zeros_like(vals)
        step[k] = _FD_STEP
        hi = base_log_density(with_theta(params, vals + step), pts)
        lo = base_log_density(with_theta(params, vals - step), pts)
        cols.append((hi - lo) / (2.0 * _FD_STEP))
    return np.stack(cols, axis=-1)


# ---------------------------------------------------------------------------
# Unimodality
# ---------------------------------------------------------------------------

def base_is_unimodal(params: FamilyParams) -> Modality:
    """Modality of the symmetric base density (bivariate families only).

    The Sine and Cosine criteria come from strict inequalities, so the
    equality boundary is reported as UNKNOWN rather than guessed.
    """
    if params.dimension != 2:
        raise ValueError("modality criteria are available for d = 2 only")
    if params.family is Family.UNIFORM:
        return Modality.UNKNOWN
    k1, k2 = params.kappa
    if params.family is Family.WRAPPED_CAUCHY:
        return Modality.UNIMODAL if (k1 > 0 and k2 > 0) else Modality.UNKNOWN
    r = params.r
    if params.family is Family.SINE:
        if k1 * k2 == 0.0:
            raise ValueError("the Sine modality criterion assumes kappa1*kappa2 != 0")
        if k1 * k2 > r * r:
            return Modality.UNIMODAL
        if k1 * k2 < r * r:
            return Modality.MULTIMODAL
        return Modality.UNKNOWN
    if k1 + k2 == 0.0:
        return Modality.UNKNOWN
    ratio = k1 * k2 / (k1 + k2)
    if -r < ratio:
        return Modality.UNIMODAL
    if -r > ratio:
        return Modality.MULTIMODAL
    return Modality.UNKNOWN


# ---------------------------------------------------------------------------
# Trigonometric moments of the base density
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def _cosine_moment_cached(params: FamilyParams, q: tuple) -> float:
    if params.family is Family.UNIFORM:
        return 1.0 if all(v == 0 for v in q) else 0.0
    independent = (params.dimension == 1
                   or (params.dimension == 2 and params.r == 0.0))
    if independent:
        out = 1.0
        if params.family is Family.WRAPPED_CAUCHY:
            for ks, qs in zip(params.kappa, q):
                out *= ks ** abs(qs) if qs != 0 else 1.0
            return out
        for ks, qs in zip(params.kappa, q):
            out *= math.exp(log_bessel_i(abs(qs), ks) - log_bessel_i(0, ks)) if qs else 1.0
        return out
    grid = default_grid(params.dimension)
    pts = grid.nodes
    f = np.exp(base_log_density(params, pts))
    qv = np.asarray(q, dtype=float)
    return float(np.sum(np.cos(pts @ qv) * f) * grid.weight)


def base_cosine_moment(params: FamilyParams, q) -> float:
    """Cosine moment E[cos(q . X)] of the centered base density.

    Analytic for the uniform and for independent marginals (r = 0);
    otherwise evaluated by quadrature and cached.
    """
    q = tuple(int(v) for v in np.atleast_1d(q))
    if len(q) != params.dimension:
        raise ValueError("moment order must have one entry per dimension")
    # cosine moments are even in q
    q = q if (q > tuple(-v for v in q)) or all(v == 0 for v in q) else tuple(-v for v in q)
    return _cosine_moment_cached(params, q)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

def _sample_wrapped_cauchy(mu, rho, rng: np.random.Generator, size) -> np.ndarray:
    """Exact draws from the univariate wrapped Cauchy via wrapping a Cauchy.

    Concentration rho in [0, 1); rho = 0 degenerates to the uniform.
    """
    rho = np.broadcast_to(np.asarray(rho, dtype=float), (size,))
    mu = np.broadcast_to(np.asarray(mu, dtype=float), (size,))
    raw = rng.standard_cauchy(size)
    flat = rho <= 1e-300
    out = np.empty(size, dtype=float)
    out[~flat] = mu[~flat] - np.log(rho[~flat]) * raw[~flat]
    if flat.any():
        out[flat] = rng.uniform(-np.pi, np.pi, int(flat.sum()))
    return wrap_angle(out)


def _sample_bivariate_vm(params: FamilyParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Rejection sampler for bivariate Sine/Cosine with independent von
    Mises proposals and envelope exp(|r|)."""
    k1, k2 = params.kappa
    r = params.r
    out = np.empty((n, 2))
    filled = 0
    proposals = 0
    budget = REJECTION_PROPOSAL_CAP * max(n, 1)
    batch = max(1024, 2 * n)
    while filled < n:
        if proposals > budget:
            raise SamplingError(
                f"rejection sampler exceeded {REJECTION_PROPOSAL_CAP} proposals per draw "
                f"(kappa={params.kappa}, r={r})")
        y1 = rng.vonmises(0.0, k1, batch)
        y2 = rng.vonmises(0.0, k2, batch)
        if params.family is Family.SINE:
            log_acc = r * np.sin(y1) * np.sin(y2) - abs(r)
        else:
            log_acc = r * np.cos(y1 - y2) - abs(r)
        keep = np.log(rng.uniform(size=batch)) <= log_acc
        taken = min(int(keep.sum()), n - filled)
        idx = np.flatnonzero(keep)[:taken]
        out[filled:filled + taken, 0] = y1[idx]
        out[filled:filled + taken, 1] = y2[idx]
        filled += taken
        proposals += batch
    return out


def _sample_bivariate_wc(params: FamilyParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Exact sampler for the bivariate wrapped Cauchy: wrapped Cauchy
    marginal in x1, then the (wrapped Cauchy) conditional in x2."""
    k1, k2 = params.kappa
    co = wc_coefficients(k1, k2, params.r)
    x1 = _sample_wrapped_cauchy(0.0, k1, rng, n)
    # joint denominator as a function of x2:  A - B cos(x2) - C sin(x2)
    a = co.c0 - co.c1 * np.cos(x1)
    b = co.c2 + co.c3 * np.cos(x1)
    c = co.c4 * np.sin(x1)
    amp = np.hypot(b, c)
    phase = np.arctan2(c, b)
    # density positivity guarantees a > amp; clip float residue
    root = np.sqrt(np.maximum(a * a - amp * amp, 0.0))
    rho = np.divide(a - root, amp, out=np.zeros(n), where=amp > 1e-14)
    x2 = _sample_wrapped_cauchy(phase, rho, rng, n)
    return np.stack([x1, x2], axis=-1)


def _sample_gibbs(params: FamilyParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Gibbs sampler for d > 2 Sine/Cosine (full conditionals are von
    Mises, so each sweep is exact; the joint chain is approximate)."""
    logger.warning(
        "d > 2 %s sampling uses a Gibbs chain; draws are approximate "
        "(burn-in %d sweeps)", params.family.value, GIBBS_BURN_IN)
    d = params.dimension
    kappa = np.asarray(params.kappa)
    R = params.dep_matrix
    state = rng.uniform(-np.pi, np.pi, d)
    out = np.empty((n, d))
    total = GIBBS_BURN_IN + n
    for it in range(total):
        for j in range(d):
            s = np.sin(state)
            c = np.cos(state)
            b = 2.0 * (R[j] @ s)
            a = kappa[j]
            if params.family is Family.COSINE:
                a = a + 2.0 * (R[j] @ c)
            conc = math.hypot(a, b)
            loc = math.atan2(b, a)
            state[j] = rng.vonmises(loc, conc)
        if it >= GIBBS_BURN_IN:
            out[it - GIBBS_BURN_IN] = state
    return out


def base_sample(params: FamilyParams, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n points from the centered base density; shape (n, d)."""
    if n < 0:
        raise ValueError("n must be non-negative")
    d = params.dimension
    if n == 0:
        return np.empty((0, d))
    if params.family is Family.UNIFORM:
        return rng.uniform(-np.pi, np.pi, (n, d))
    if params.family is Family.WRAPPED_CAUCHY:
        return _sample_bivariate_wc(params, n, rng)
    if d == 1:
        return wrap_angle(rng.vonmises(0.0, params.kappa[0], (n, 1)))
    if d == 2:
        return _sample_bivariate_vm(params, n, rng)
    return _sample_gibbs(params, n, rng)
