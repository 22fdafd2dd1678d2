"""The BayesSum estimator family.

Posterior mean/variance from a Gram factorization and a kernel mean
embedding, the flat-prior Stein variant, mixed-domain estimation,
empirical-Bayes hyperparameter selection, precomputed weights, the
convergence bound, and active sample selection by mutual information.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .distributions import Distribution, MixedProduct, enumerate_support, make_rng
from .embeddings import EmbeddingPair, kme, kme_many, initial_error
from .errors import ContractError, NumericalError, SingularGramError
from .kernels import Kernel, SteinDiscrete, gram, cross_gram

JITTER_BASE = 1e-12
JITTER_MAX = 1e-6
VARIANCE_CLAMP = 1e-8

# candidate grids for empirical Bayes, amplitude x lengthscale
DEFAULT_AMPLITUDE_GRID = (1.0, 10.0, 100.0, 1000.0)
DEFAULT_LENGTHSCALE_GRID = (0.1, 0.3, 1.0, 3.0, 10.0)


@dataclass(frozen=True)
class PosteriorEstimate:
    mean: float
    variance: float


@dataclass
class QuadratureState:
    points: list
    fvals: np.ndarray
    kernel: Kernel
    embedding: EmbeddingPair
    gram_chol: Optional[tuple]
    kme_vec: np.ndarray
    initial_err: float
    jitter: float = 0.0

    def __post_init__(self):
        if not (len(self.points) == len(self.fvals) == len(self.kme_vec)):
            raise ContractError("points, fvals, kme_vec must be length-matched")


def chol_with_jitter(K: np.ndarray):
    """Cholesky factor of K + jitter*I with an escalating jitter ladder.

    Ladder starts at JITTER_BASE * trace / N and grows tenfold up to
    JITTER_MAX * trace / N; failure beyond that raises SingularGramError.
    """
    n = K.shape[0]
    scale = max(float(np.trace(K)) / n, np.finfo(float).tiny)
    jitter = 0.0
    while True:
        try:
            factor = cho_factor(K + jitter * np.eye(n), lower=True)
            # LAPACK can round an exactly singular pivot to a tiny positive
            # number; treat such pivots as failures so duplicates escalate
            pivot_min = float(np.diagonal(factor[0]).min())
            if pivot_min * pivot_min > n * np.finfo(float).eps * scale:
                return factor, jitter
        except np.linalg.LinAlgError:
            pass
        jitter = JITTER_BASE * scale if jitter == 0.0 else jitter * 10.0
        if jitter > JITTER_MAX * scale * (1 + 1e-12):
            raise SingularGramError(
                "Gram matrix not positive definite after jitter escalation; "
                "check for repeated or near-duplicate points"
            )


def make_state(points: Sequence, fvals, pair: EmbeddingPair) -> QuadratureState:
    """Assemble a quadrature state; N = 0 yields the prior state."""
    fvals = np.asarray(fvals, dtype=float)
    if len(points) == 0:
        return QuadratureState(
            points=[],
            fvals=fvals,
            kernel=pair.kernel,
            embedding=pair,
            gram_chol=None,
            kme_vec=np.zeros(0),
            initial_err=initial_error(pair),
        )
    K = gram(pair.kernel, list(points))
    factor, jitter = chol_with_jitter(K)
    return QuadratureState(
        points=list(points),
        fvals=fvals,
        kernel=pair.kernel,
        embedding=pair,
        gram_chol=factor,
        kme_vec=kme_many(pair, points),
        initial_err=initial_error(pair),
        jitter=jitter,
    )


def precompute_weights(state: QuadratureState) -> np.ndarray:
    """w = K^{-1} mu_P(x_{1:N}); reusable across integrands."""
    if state.gram_chol is None:
        return np.zeros(0)
    return cho_solve(state.gram_chol, state.kme_vec)


def _clamped_variance(raw: float, scale: float) -> float:
    if raw >= 0:
        return raw
    if raw >= -VARIANCE_CLAMP * max(scale, 1.0):
        return 0.0
    raise NumericalError(f"posterior variance {raw} below the clamp window")


def bayessum(state: QuadratureState) -> PosteriorEstimate:
    """Posterior mean and variance of the integral."""
    if state.gram_chol is None:
        return PosteriorEstimate(mean=0.0, variance=state.initial_err)
    w = precompute_weights(state)
    mean = float(w @ state.fvals)
    var = state.initial_err - float(w @ state.kme_vec)
    return PosteriorEstimate(mean=mean, variance=_clamped_variance(var, state.initial_err))


def stein_bayessum(points: Sequence, fvals, stein_kernel: SteinDiscrete) -> PosteriorEstimate:
    """Flat-prior-mean estimator for kernels with zero mean embedding."""
    fvals = np.asarray(fvals, dtype=float)
    if len(points) == 0 or len(points) != len(fvals):
        raise ContractError("need equal, nonzero numbers of points and values")
    K = gram(stein_kernel, list(points))
    factor, _ = chol_with_jitter(K)
    ones = np.ones(len(points))
    a = cho_solve(factor, ones)
    denom = float(a @ ones)
    mean = float(a @ fvals) / denom
    return PosteriorEstimate(mean=mean, variance=_clamped_variance(1.0 / denom, 1.0))


def mixed_bayessum(points: Sequence, fvals, pair: EmbeddingPair) -> PosteriorEstimate:
    """BayesSum over a mixed (discrete, continuous) domain.

    Same algebra as `bayessum` with the composed kernel's Gram matrix and
    the factorized embedding.
    """
    if not isinstance(pair.dist, MixedProduct):
        raise ContractError("mixed_bayessum requires a MixedProduct law")
    return bayessum(make_state(points, fvals, pair))


def log_marginal_likelihood(points: Sequence, fvals, kernel: Kernel) -> float:
    """GP evidence -0.5 f'K^{-1}f - 0.5 log|K| - (N/2) log 2 pi."""
    fvals = np.asarray(fvals, dtype=float)
    K = gram(kernel, list(points))
    factor, _ = chol_with_jitter(K)
    alpha = cho_solve(factor, fvals)
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    n = len(points)
    return -0.5 * float(fvals @ alpha) - 0.5 * logdet - 0.5 * n * math.log(2.0 * math.pi)


def select_hyperparams(
    points: Sequence,
    fvals,
    family: Callable[..., Kernel],
    grids: dict[str, Sequence[float]],
) -> Kernel:
    """Empirical Bayes over a finite grid of kernel hyperparameters.

    Returns the grid point maximizing the log marginal likelihood; ties
    resolve to the lexicographically smallest parameter combination in
    the grids' sorted order.
    """
    names = list(grids)
    if not names or any(len(grids[n]) == 0 for n in names):
        raise ContractError("nonempty grids required")
    best: Optional[Kernel] = None
    best_lml = -math.inf
    n_singular = 0
    seen = set()
    for combo in itertools.product(*(sorted(grids[n]) for n in names)):
        if combo in seen:
            continue
        seen.add(combo)
        kern = family(**dict(zip(names, combo)))
        try:
            lml = log_marginal_likelihood(points, fvals, kern)
        except SingularGramError:
            n_singular += 1
            continue
        if lml > best_lml:
            best, best_lml = kern, lml
    if best is None:
        raise SingularGramError(f"all {n_singular} grid points produced singular Grams")
    return best


def acquisition_mi(state: QuadratureState, x_star) -> float:
    """Mutual information between the integral and a new evaluation.

    Candidates already observed, or with vanishing posterior variance at
    the candidate, score minus infinity.
    """
    if x_star in state.points:
        return -math.inf
    pair = state.embedding
    k = pair.kernel
    k_ss = k.eval(x_star, x_star)
    mu_star = kme(pair, x_star)
    if state.gram_chol is None:
        ktilde_ss = k_ss
        cov = mu_star
    else:
        k_vec = cross_gram(k, state.points, [x_star])[:, 0]
        alpha = cho_solve(state.gram_chol, k_vec)
        ktilde_ss = k_ss - float(k_vec @ alpha)
        cov = mu_star - float(state.kme_vec @ alpha)
    if ktilde_ss <= 1e-12:
        return -math.inf
    est = bayessum(state)
    if est.variance <= 0:
        return -math.inf
    ratio = cov * cov / (est.variance * ktilde_ss)
    ratio = min(ratio, 1.0 - 1e-15)
    return -math.log1p(-ratio)


def _candidate_universe(dist: Distribution, window: int = 200) -> list:
    size = dist.support_size()
    if size is not None:
        return list(enumerate_support(dist))
    from .distributions import Logarithmic, Skellam

    if isinstance(dist, Logarithmic):
        return list(range(1, window + 1))
    if isinstance(dist, Skellam):
        return list(range(-window, window + 1))
    return list(range(window + 1))


def active_select(
    state: QuadratureState,
    candidate_pool_size: int = 256,
    seed: int = 0,
    support_window: int = 200,
):
    """Next query point: argmax of the acquisition over a random pool.

    The pool is drawn uniformly without replacement from unobserved
    domain elements (truncated to `support_window` for countable
    domains).  Returns None once the domain is exhausted or every
    candidate is excluded.
    """
    universe = _candidate_universe(state.embedding.dist, support_window)
    observed = set(state.points)
    unobserved = [x for x in universe if x not in observed]
    if not unobserved:
        return None
    rng = make_rng(seed)
    if len(unobserved) > candidate_pool_size:
        idx = rng.choice(len(unobserved), size=candidate_pool_size, replace=False)
        pool = [unobserved[i] for i in sorted(idx)]
    else:
        pool = unobserved
    best, best_score = None, -math.inf
    for x in pool:  # enumeration order; first max wins ties
        score = acquisition_mi(state, x)
        if score > best_score:
            best, best_score = x, score
    if best_score == -math.inf:
        return None
    return best


def thm1_bound(C: float, rkhs_norm: float, observed_mass: float) -> float:
    """Worst-case error bound C * ||f|| * (1 - accumulated probability mass)."""
    if rkhs_norm < 0 or C < 0:
        raise ContractError("C and the RKHS norm must be nonnegative")
    if observed_mass > 1.0 + 1e-12:
        raise ContractError(f"observed mass {observed_mass} exceeds 1")
    return C * rkhs_norm * max(0.0, 1.0 - observed_mass)


def rkhs_norm_of_combination(kernel: Kernel, centers: Sequence, coeffs) -> float:
    """||sum_i c_i k(z_i, .)||_H via the Gram quadratic form."""
    coeffs = np.asarray(coeffs, dtype=float)
    K = gram(kernel, list(centers))
    return math.sqrt(max(0.0, float(coeffs @ K @ coeffs)))
