"""Closed-form kernel mean embeddings and initial errors.

Each supported (distribution, kernel) pair exposes mu_P(y) = E[k(X, y)]
and the initial error E[k(X, X')].  `brute_force_kme` enumerates or
truncates the support and serves as the independent oracle for every
closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import special as _sp

from . import specfn
from .distributions import (
    CMP,
    Distribution,
    Logarithmic,
    MixedProduct,
    NegBinomial,
    Poisson,
    Skellam,
    UniformCategorical,
    UniformInterval,
    UniformIsing,
    enumerate_support,
)
from .errors import CapabilityError, DomainError
from .kernels import (
    BrownianMin,
    ExpHamming,
    GaussianRBF,
    Kernel,
    MixedAdditiveProduct,
    Polynomial,
    ProductKernel,
    Tanimoto,
)

DEFAULT_TRUNCATION = 100


@dataclass(frozen=True)
class EmbeddingPair:
    dist: Distribution
    kernel: Kernel
    truncation_budget: int = DEFAULT_TRUNCATION

    @property
    def closed_form(self) -> bool:
        return _dispatch(self) is not None


def _log_binom(n: float, k: float) -> float:
    return _sp.gammaln(n + 1) - _sp.gammaln(k + 1) - _sp.gammaln(n - k + 1)


# --- per-row embeddings ----------------------------------------------------


def _kme_poisson_brownian(d: Poisson, y: int) -> float:
    if y < 0 or y != int(y):
        raise DomainError(f"{y} outside support")
    y = int(y)
    head = sum(n * d.pmf(n) for n in range(y + 1))
    return head + y * (1.0 - specfn.reg_gamma_q(y + 1, d.eta))


def _ie_poisson_brownian(d: Poisson, budget: int) -> float:
    return sum((1.0 - specfn.reg_gamma_q(r + 1, d.eta)) ** 2 for r in range(budget))


def _kme_nb_brownian(d: NegBinomial, y: int) -> float:
    if y < 0 or y != int(y):
        raise DomainError(f"{y} outside support")
    y = int(y)
    return y - sum(specfn.reg_inc_beta(d.tau, n + 1, d.q) for n in range(y))


def _ie_nb_brownian(d: NegBinomial, budget: int) -> float:
    return sum((1.0 - specfn.reg_inc_beta(d.tau, m + 1, d.q)) ** 2 for m in range(budget))


def _kme_log_brownian(d: Logarithmic, y: int) -> float:
    if y < 1 or y != int(y):
        raise DomainError(f"{y} outside support")
    y = int(y)
    tail = sum((y - n) * d.p**n / n for n in range(1, y))
    return y + tail / math.log1p(-d.p)


def _kme_poisson_poly(d: Poisson, k: Polynomial, y) -> float:
    return sum(math.comb(k.r, n) * y**n * specfn.touchard(n, d.eta) for n in range(k.r + 1))


def _ie_poisson_poly(d: Poisson, k: Polynomial) -> float:
    return sum(math.comb(k.r, n) * specfn.touchard(n, d.eta) ** 2 for n in range(k.r + 1))


def _kme_nb_poly(d: NegBinomial, k: Polynomial, y) -> float:
    return sum(
        math.comb(k.r, n) * y**n * specfn.gen_touchard(n, d.tau, d.q) for n in range(k.r + 1)
    )


def _ie_nb_poly(d: NegBinomial, k: Polynomial) -> float:
    return sum(
        math.comb(k.r, n) * specfn.gen_touchard(n, d.tau, d.q) ** 2 for n in range(k.r + 1)
    )


def _kme_skellam_poly(d: Skellam, k: Polynomial, y) -> float:
    return sum(
        math.comb(k.r, n) * y**n * specfn.bell_complete(n, d.cumulants(n))
        for n in range(k.r + 1)
    )


def _ie_skellam_poly(d: Skellam, k: Polynomial) -> float:
    return sum(
        math.comb(k.r, n) * specfn.bell_complete(n, d.cumulants(n)) ** 2
        for n in range(k.r + 1)
    )


def _kme_ising_exphamming(d: UniformIsing, k: ExpHamming) -> float:
    # constant over y
    return math.exp(-0.5 * k.lam * d.d) * math.cosh(0.5 * k.lam) ** d.d


def _kme_categorical_exphamming(d: UniformCategorical, k: ExpHamming) -> float:
    # constant over y; holds for any alphabet size m + 1
    return ((1.0 + d.m * math.exp(-k.lam)) / (d.m + 1)) ** d.d


def _kme_binary_tanimoto(d: UniformCategorical, y) -> float:
    dim = d.d
    t = int(sum(y))
    total = 0.0
    for s in range(dim + 1):
        for a in range(max(1, s - dim + t), min(s, t) + 1):
            log_w = _log_binom(t, a) + _log_binom(dim - t, s - a) - dim * math.log(2.0)
            total += a / (s + t - a) * math.exp(log_w)
    return total


def _ie_binary_tanimoto(d: UniformCategorical) -> float:
    dim = d.d
    total = 0.0
    for t in range(dim + 1):
        for s in range(dim + 1):
            for a in range(max(1, s - dim + t), min(s, t) + 1):
                log_w = (
                    _log_binom(dim, t)
                    + _log_binom(t, a)
                    + _log_binom(dim - t, s - a)
                    - 2 * dim * math.log(2.0)
                )
                total += a / (s + t - a) * math.exp(log_w)
    return total


def _kme_uniform_rbf(d: UniformInterval, k: GaussianRBF, y: float) -> float:
    scale = k.ell * math.sqrt(math.pi / 2.0) / (d.b - d.a)
    rt2 = math.sqrt(2.0) * k.ell
    return scale * (math.erf((d.b - y) / rt2) - math.erf((d.a - y) / rt2))


def _ie_uniform_rbf(d: UniformInterval, k: GaussianRBF) -> float:
    w = d.b - d.a
    rt2 = math.sqrt(2.0) * k.ell
    return (2.0 / w**2) * (
        w * k.ell * math.sqrt(math.pi / 2.0) * math.erf(w / rt2)
        - k.ell**2 * (1.0 - math.exp(-(w**2) / (2.0 * k.ell**2)))
    )


# --- dispatch --------------------------------------------------------------


def _dispatch(pair: EmbeddingPair):
    d, k = pair.dist, pair.kernel
    table = {
        (Poisson, BrownianMin): "poisson_brownian",
        (NegBinomial, BrownianMin): "nb_brownian",
        (Logarithmic, BrownianMin): "log_brownian",
        (Poisson, Polynomial): "poisson_poly",
        (NegBinomial, Polynomial): "nb_poly",
        (Skellam, Polynomial): "skellam_poly",
        (UniformIsing, ExpHamming): "ising_exphamming",
        (UniformCategorical, ExpHamming): "categorical_exphamming",
        (UniformCategorical, Tanimoto): "binary_tanimoto",
        (UniformInterval, GaussianRBF): "uniform_rbf",
        (MixedProduct, ProductKernel): "mixed",
        (MixedProduct, MixedAdditiveProduct): "mixed",
    }
    row = table.get((type(d), type(k)))
    if row == "binary_tanimoto" and d.m != 1:
        return None
    return row


def kme(pair: EmbeddingPair, y) -> float:
    """Closed-form kernel mean embedding A * mu_P(y)."""
    row = _dispatch(pair)
    if row is None:
        raise CapabilityError(
            f"no closed-form embedding for ({type(pair.dist).__name__}, "
            f"{type(pair.kernel).__name__}); use brute_force_kme"
        )
    d, k = pair.dist, pair.kernel
    a = k.amplitude
    if row == "poisson_brownian":
        return a * (_kme_poisson_brownian(d, y) + k.offset)
    if row == "nb_brownian":
        return a * (_kme_nb_brownian(d, y) + k.offset)
    if row == "log_brownian":
        return a * (_kme_log_brownian(d, y) + k.offset)
    if row == "poisson_poly":
        return a * _kme_poisson_poly(d, k, y)
    if row == "nb_poly":
        return a * _kme_nb_poly(d, k, y)
    if row == "skellam_poly":
        return a * _kme_skellam_poly(d, k, y)
    if row == "ising_exphamming":
        return a * _kme_ising_exphamming(d, k)
    if row == "categorical_exphamming":
        return a * _kme_categorical_exphamming(d, k)
    if row == "binary_tanimoto":
        return a * _kme_binary_tanimoto(d, y)
    if row == "uniform_rbf":
        return a * _kme_uniform_rbf(d, k, y)
    if row == "mixed":
        return mixed_kme(pair, y)
    raise AssertionError(row)


def kme_many(pair: EmbeddingPair, ys) -> np.ndarray:
    """Embedding vector mu_P(y_1..y_n)."""
    return np.array([kme(pair, y) for y in ys])


def initial_error(pair: EmbeddingPair) -> float:
    """A * E_{X, X'}[k(X, X')]; CapabilityError where no expression exists."""
    row = _dispatch(pair)
    if row is None:
        raise CapabilityError(
            f"no initial error for ({type(pair.dist).__name__}, "
            f"{type(pair.kernel).__name__})"
        )
    d, k = pair.dist, pair.kernel
    a = k.amplitude
    if row == "poisson_brownian":
        return a * (_ie_poisson_brownian(d, pair.truncation_budget) + k.offset)
    if row == "nb_brownian":
        return a * (_ie_nb_brownian(d, pair.truncation_budget) + k.offset)
    if row == "log_brownian":
        raise CapabilityError(
            "logarithmic / Brownian initial error has no closed form; "
            "use a Stein kernel or brute force"
        )
    if row == "poisson_poly":
        return a * _ie_poisson_poly(d, k)
    if row == "nb_poly":
        return a * _ie_nb_poly(d, k)
    if row == "skellam_poly":
        return a * _ie_skellam_poly(d, k)
    if row == "ising_exphamming":
        return a * _kme_ising_exphamming(d, k)
    if row == "categorical_exphamming":
        return a * _kme_categorical_exphamming(d, k)
    if row == "binary_tanimoto":
        return a * _ie_binary_tanimoto(d)
    if row == "uniform_rbf":
        return a * _ie_uniform_rbf(d, k)
    if row == "mixed":
        return mixed_initial_error(pair)
    raise AssertionError(row)


# --- mixed-domain composition ---------------------------------------------


def _mixed_parts(pair: EmbeddingPair):
    d: MixedProduct = pair.dist  # type: ignore[assignment]
    k = pair.kernel
    px = EmbeddingPair(d.continuous, k.kx, pair.truncation_budget)
    py = EmbeddingPair(d.discrete, k.ky, pair.truncation_budget)
    if not (px.closed_form and py.closed_form):
        raise CapabilityError("missing component embedding for the mixed pair")
    return px, py


def mixed_kme(pair: EmbeddingPair, point) -> float:
    """Factorized embedding of a product law under a composed kernel."""
    px, py = _mixed_parts(pair)
    x, y = point
    mx = kme(px, x)
    my = kme(py, y)
    if isinstance(pair.kernel, MixedAdditiveProduct):
        return mx + my + mx * my
    return mx * my


def mixed_initial_error(pair: EmbeddingPair) -> float:
    px, py = _mixed_parts(pair)
    ex = initial_error(px)
    ey = initial_error(py)
    if isinstance(pair.kernel, MixedAdditiveProduct):
        return ex + ey + ex * ey
    return ex * ey


# --- brute-force oracle ----------------------------------------------------


def _truncated_support(dist: Distribution, budget: int):
    if isinstance(dist, (Poisson, NegBinomial, CMP)):
        return list(range(budget + 1))
    if isinstance(dist, Logarithmic):
        return list(range(1, budget + 1))
    if isinstance(dist, Skellam):
        return list(range(-budget, budget + 1))
    return None


def brute_force_kme(
    dist: Distribution,
    kernel: Kernel,
    y,
    budget: int = 200,
    return_tail: bool = False,
):
    """sum_x k(x, y) p(x) over the enumerated or truncated support.

    Unnormalized families are normalized over the enumerated support.
    With return_tail=True also reports the truncated tail mass.
    """
    if dist.support_size() is not None:
        pts = list(enumerate_support(dist))
        tail = 0.0
    else:
        pts = _truncated_support(dist, budget)
        if pts is None:
            raise CapabilityError(f"no enumeration for {type(dist).__name__}")
        tail = None  # computed below for normalized families
    masses = np.array([dist.pmf(x) for x in pts])
    if not dist.normalized:
        masses = masses / masses.sum()
        tail = 0.0
    if tail is None:
        tail = max(0.0, 1.0 - float(masses.sum()))
    vals = np.array([kernel.eval(x, y) for x in pts])
    result = float(vals @ masses)
    if return_tail:
        return result, tail
    return result


def brute_force_initial_error(dist: Distribution, kernel: Kernel, budget: int = 200) -> float:
    """Double sum E[k(X, X')] over the enumerated / truncated support."""
    if dist.support_size() is not None:
        pts = list(enumerate_support(dist))
    else:
        pts = _truncated_support(dist, budget)
        if pts is None:
            raise CapabilityError(f"no enumeration for {type(dist).__name__}")
    masses = np.array([dist.pmf(x) for x in pts])
    if not dist.normalized:
        masses = masses / masses.sum()
    vals = np.array([[kernel.eval(x, xp) for xp in pts] for x in pts])
    return float(masses @ vals @ masses)
