"""Finite mixtures of sine-skewed toroidal densities.

Fitting is expectation-maximization with constrained M-steps: the
E-step computes responsibilities from the component log densities, the
M-step reuses the single-model fitter with responsibility weights and
warm starts at the current component parameters, which makes the
observed-data log-likelihood non-decreasing across iterations.
Initialization comes from angular k-means partitions (chord distance on
the torus); several partitions are tried and the best final likelihood
wins.  AIC/BIC bookkeeping lives in ModelScore.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .families import Family
from .inference import FitOptions, fit_mle, free_param_count
from .numerics import wrap_angle
from .skew import skew_log_density, sample as sample_skew

__all__ = [
    "MixtureModel",
    "ModelScore",
    "ModelRanking",
    "DegenerateComponentError",
    "component_param_count",
    "mixture_log_density",
    "sample_mixture",
    "fit_mixture",
    "select_model",
]

MIN_WEIGHT = 1e-4
MAX_PARTITION_RETRIES = 5


class DegenerateComponentError(RuntimeError):
    """A mixture component lost essentially all its responsibility."""


@dataclass(frozen=True)
class MixtureModel:
    """K sine-skewed components with mixing weights on the simplex."""

    components: tuple
    weights: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        w = tuple(float(v) for v in self.weights)
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "weights", w)
        if len(comps) != len(w) or not comps:
            raise ValueError("components and weights must be nonempty and aligned")
        if any(v < 0 for v in w) or abs(sum(w) - 1.0) > 1e-9:
            raise ValueError("weights must be non-negative and sum to 1")
        d = comps[0].dimension
        fam = comps[0].theta.family
        if any(c.dimension != d or c.theta.family is not fam for c in comps):
            raise ValueError("components must share family and dimension")

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def dimension(self) -> int:
        return self.components[0].dimension


@dataclass(frozen=True)
class ModelScore:
    """Log-likelihood with AIC/BIC bookkeeping."""

    log_lik: float
    k_params: int
    aic: float
    bic: float
    n: int

    @classmethod
    def from_log_lik(cls, log_lik: float, k_params: int, n: int) -> "ModelScore":
        return cls(
            log_lik=float(log_lik),
            k_params=int(k_params),
            aic=2.0 * k_params - 2.0 * log_lik,
            bic=k_params * math.log(n) - 2.0 * log_lik,
            n=int(n),
        )


def component_param_count(family: Family, d: int, skewed: bool) -> int:
    """Free parameters of one mixture component.

    Non-uniform skewed families have d(d+5)/2 (location, concentration,
    dependence, skewness); their symmetric submodels drop the d skewness
    parameters.  The uniform base has location+skewness only, and its
    symmetric submodel has no parameters at all.
    """
    return free_param_count(family, d, skewed)


def mixture_param_count(family: Family, d: int, skewed: bool, k: int) -> int:
    return k * component_param_count(family, d, skewed) + (k - 1)


def _component_log_densities(mix: MixtureModel, x: np.ndarray) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(x, dtype=float))
    return np.stack([skew_log_density(c, pts) for c in mix.components], axis=0)


def mixture_log_density(mix: MixtureModel, x) -> np.ndarray | float:
    """log of the weighted component mixture, via log-sum-exp."""
    scalar = np.asarray(x).ndim == 1
    logs = _component_log_densities(mix, x)
    with np.errstate(divide="ignore"):
        logw = np.log(np.asarray(mix.weights))[:, None]
    out = logsumexp(logs + logw, axis=0)
    return float(out[0]) if scalar else out


def sample_mixture(mix: MixtureModel, n: int, rng: np.random.Generator) -> np.ndarray:
    """n draws: choose components by weight, then sample each component."""
    counts = rng.multinomial(n, mix.weights)
    parts = [sample_skew(c, int(k), rng) for c, k in zip(mix.components, counts)]
    out = np.concatenate(parts, axis=0)
    perm = rng.permutation(n)
    return out[perm]


def _kmeans_partition(data: np.ndarray, k: int, rng: np.random.Generator,
                      iters: int = 50) -> np.ndarray:
    """Angular k-means labels using the chord embedding (cos, sin) per
    coordinate, k-means++ style seeding."""
    emb = np.concatenate([np.cos(data), np.sin(data)], axis=1)
    n = emb.shape[0]
    centers = [emb[rng.integers(n)]]
    for _ in range(k - 1):
        d2 = np.min([np.sum((emb - c) ** 2, axis=1) for c in centers], axis=0)
        total = d2.sum()
        if total <= 0:
            centers.append(emb[rng.integers(n)])
            continue
        centers.append(emb[rng.choice(n, p=d2 / total)])
    centers = np.stack(centers)
    labels = np.zeros(n, dtype=int)
    for _ in range(iters):
        dist = ((emb[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new_labels = dist.argmin(axis=1)
        if np.array_equal(new_labels, labels) and _ > 0:
            break
        labels = new_labels
        for j in range(k):
            mask = labels == j
            if mask.any():
                centers[j] = emb[mask].mean(axis=0)
    return labels


def _m_step_options(options: FitOptions) -> FitOptions:
    # single warm start per M-step; monotonicity comes from never
    # accepting a worse point than the warm start
    return FitOptions(n_starts=1, max_iters=min(options.max_iters, 100),
                      tol=options.tol, seed=options.seed)


def _em_run(family: Family, skewed: bool, data: np.ndarray, labels: np.ndarray,
            k: int, options: FitOptions, c_params: int,
            warm: MixtureModel | None = None):
    n, d = data.shape
    m_opts = _m_step_options(options)
    if warm is None:
        comps = []
        weights = np.zeros(k)
        for j in range(k):
            subset = data[labels == j]
            if subset.shape[0] < c_params + 2:
                raise DegenerateComponentError(
                    f"initial partition left component {j} with {subset.shape[0]} points")
            fit = fit_mle(family, skewed, subset, m_opts)
            comps.append(fit.model)
            weights[j] = subset.shape[0] / n
    else:
        comps = list(warm.components)
        weights = np.asarray(warm.weights, dtype=float)

    mix = MixtureModel(tuple(comps), tuple(weights))
    prev_ll = -np.inf
    converged = False
    for it in range(options.max_iters):
        logs = _component_log_densities(mix, data)
        with np.errstate(divide="ignore"):
            weighted = logs + np.log(np.maximum(weights, 1e-300))[:, None]
        norm = logsumexp(weighted, axis=0)
        ll = float(np.sum(norm))
        resp = np.exp(weighted - norm[None, :])

        if ll < prev_ll - 1e-9 * (1.0 + abs(ll)):
            raise RuntimeError("EM log-likelihood decreased; M-step inconsistency")
        if it > 0 and abs(ll - prev_ll) <= options.tol * (1.0 + abs(ll)):
            prev_ll = ll
            converged = True
            break
        prev_ll = ll

        new_weights = resp.sum(axis=1) / n
        if np.any(new_weights < MIN_WEIGHT) or np.any(resp.sum(axis=1) < c_params + 2):
            raise DegenerateComponentError(
                f"component weight collapsed below {MIN_WEIGHT}")
        new_comps = []
        for j in range(k):
            fit = fit_mle(family, skewed, data, m_opts, weights=resp[j],
                          warm_start=mix.components[j])
            new_comps.append(fit.model)
        weights = new_weights
        mix = MixtureModel(tuple(new_comps), tuple(weights))
    return mix, prev_ll, converged


def fit_mixture(family: Family, skewed: bool, k: int, data,
                options: FitOptions | None = None,
                warm: MixtureModel | None = None):
    """EM fit of a K-component mixture; returns (MixtureModel, ModelScore,
    converged flag).

    Multi-start over angular-k-means partitions (options.n_starts of
    them); a warm mixture (e.g. the symmetric fit when fitting the
    skewed variant) adds one more start, which also guarantees the
    skewed mixture never scores below the symmetric one.
    """
    options = options or FitOptions()
    if isinstance(family, str):
        family = Family.parse(family)
    data = wrap_angle(np.atleast_2d(np.asarray(data, dtype=float)))
    n, d = data.shape
    if k < 1:
        raise ValueError("k must be >= 1")
    c_params = component_param_count(family, d, skewed)
    k_params = mixture_param_count(family, d, skewed, k)
    if n < k * c_params + k:
        raise ValueError(f"need at least {k * c_params + k} observations for "
                         f"a {k}-component fit; got {n}")

    if k == 1:
        fit = fit_mle(family, skewed, data, options)
        mix = MixtureModel((fit.model,), (1.0,))
        return mix, ModelScore.from_log_lik(fit.log_lik, k_params, n), fit.converged

    rng = np.random.default_rng(options.seed)
    best = None
    attempts = 0
    start = 0
    while start < options.n_starts:
        labels = _kmeans_partition(data, k, rng)
        try:
            mix, ll, conv = _em_run(family, skewed, data, labels, k, options, c_params)
        except DegenerateComponentError:
            attempts += 1
            if attempts > MAX_PARTITION_RETRIES:
                if best is not None:
                    break
                raise
            continue
        if best is None or ll > best[1] + 1e-12:
            best = (mix, ll, conv)
        start += 1
    if warm is not None:
        try:
            mix, ll, conv = _em_run(family, skewed, data, None, k, options,
                                    c_params, warm=warm)
            if best is None or ll > best[1] + 1e-12:
                best = (mix, ll, conv)
        except DegenerateComponentError:
            if best is None:
                raise
    mix, ll, conv = best
    return mix, ModelScore.from_log_lik(ll, k_params, n), conv


@dataclass(frozen=True)
class ModelRanking:
    """Candidate names ordered best-first by AIC and by BIC."""

    by_aic: tuple
    by_bic: tuple
    best_aic: str
    best_bic: str
    criteria_disagree: bool


def select_model(scores) -> ModelRanking:
    """Rank (name, ModelScore) candidates by AIC and BIC.

    Ties break toward fewer parameters, then name order; a flag records
    when the two criteria disagree about the winner.
    """
    scores = list(scores)
    if not scores:
        raise ValueError("no candidate scores supplied")
    by_aic = tuple(name for name, s in sorted(
        scores, key=lambda kv: (kv[1].aic, kv[1].k_params, kv[0])))
    by_bic = tuple(name for name, s in sorted(
        scores, key=lambda kv: (kv[1].bic, kv[1].k_params, kv[0])))
    return ModelRanking(by_aic, by_bic, by_aic[0], by_bic[0],
                        by_aic[0] != by_bic[0])
