"""Special-function routines backing the embedding dictionary and ground truths.

All routines are deterministic pure functions.  The Stirling triangle is
built lazily on first use and cached for the lifetime of the process.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as _sp

from .errors import CapabilityError, ContractError, DomainError

MAX_STIRLING_N = 20
MAX_TOUCHARD_DEGREE = 16
MAX_BESSEL_ARG = 700.0
_BESSEL_MAX_TERMS = 500


@dataclass(frozen=True)
class SpecFnResult:
    """Outcome of a truncated series evaluation."""

    value: float
    converged: bool
    terms_used: int


def reg_gamma_q(s: float, x: float) -> float:
    """Upper regularized incomplete gamma Q(s, x).

    Relates to the Poisson CDF through P(Poisson(eta) <= y) = 1 - Q(y+1, eta)
    complemented, i.e. Q(y+1, eta) equals the upper Poisson tail mass.
    """
    if not (math.isfinite(s) and math.isfinite(x)):
        raise DomainError(f"non-finite arguments ({s}, {x})")
    if s <= 0 or x < 0:
        raise DomainError(f"require s > 0 and x >= 0, got ({s}, {x})")
    return float(_sp.gammaincc(s, x))


def reg_inc_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(x)):
        raise DomainError(f"non-finite arguments ({a}, {b}, {x})")
    if a <= 0 or b <= 0:
        raise DomainError(f"require a, b > 0, got ({a}, {b})")
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"x must lie in [0, 1], got {x}")
    return float(_sp.betainc(a, b, x))


@lru_cache(maxsize=1)
def _stirling_triangle() -> tuple[tuple[int, ...], ...]:
    """Second-kind Stirling triangle S(n, j) for n, j <= MAX_STIRLING_N."""
    size = MAX_STIRLING_N + 1
    tri = [[0] * size for _ in range(size)]
    tri[0][0] = 1
    for n in range(1, size):
        for j in range(1, n + 1):
            tri[n][j] = j * tri[n - 1][j] + tri[n - 1][j - 1]
    return tuple(tuple(row) for row in tri)


def stirling2(n: int, j: int) -> int:
    """Stirling number of the second kind S(n, j)."""
    if n < 0 or j < 0 or j > n:
        raise DomainError(f"require 0 <= j <= n, got ({n}, {j})")
    if n > MAX_STIRLING_N:
        raise CapabilityError(f"Stirling triangle capped at n = {MAX_STIRLING_N}")
    return _stirling_triangle()[n][j]


def touchard(n: int, eta: float) -> float:
    """Touchard polynomial T_n(eta): n-th raw moment of Poisson(eta)."""
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    if n > MAX_TOUCHARD_DEGREE:
        raise CapabilityError(f"polynomial degree capped at {MAX_TOUCHARD_DEGREE}")
    if eta <= 0:
        raise DomainError(f"require eta > 0, got {eta}")
    return float(sum(stirling2(n, j) * eta**j for j in range(n + 1)))


def gen_touchard(n: int, tau: float, q: float) -> float:
    """Generalized Touchard M_n(tau, q): n-th raw moment of NB(tau, q).

    M_n = sum_j S(n, j) * Gamma(tau + j) / Gamma(tau) * ((1 - q)/q)^j.
    """
    if n < 0:
        raise DomainError(f"degree must be nonnegative, got {n}")
    if n > MAX_TOUCHARD_DEGREE:
        raise CapabilityError(f"polynomial degree capped at {MAX_TOUCHARD_DEGREE}")
    if tau <= 0 or not 0.0 < q < 1.0:
        raise DomainError(f"require tau > 0 and q in (0, 1), got ({tau}, {q})")
    ratio = (1.0 - q) / q
    total = 0.0
    rising = 1.0  # Gamma(tau + j) / Gamma(tau)
    for j in range(n + 1):
        total += stirling2(n, j) * rising * ratio**j
        rising *= tau + j
    return float(total)


def bell_complete(n: int, cumulants: list[float]) -> float:
    """Complete exponential Bell polynomial B_n at the given argument list.

    Computed by the recurrence B_{m+1} = sum_k C(m, k) B_{m-k} x_{k+1}.
    Fed with cumulants of a distribution it returns the n-th raw moment.
    """
    if n < 0:
        raise DomainError(f"order must be nonnegative, got {n}")
    if len(cumulants) != n:
        raise ContractError(f"expected {n} cumulants, got {len(cumulants)}")
    bell = [1.0]
    for m in range(n):
        nxt = sum(math.comb(m, k) * bell[m - k] * cumulants[k] for k in range(m + 1))
        bell.append(float(nxt))
    return bell[n]


def bessel_i_series(n: int, x: float) -> SpecFnResult:
    """Modified Bessel I_n(x) by power series, relative tolerance 1e-12."""
    if n < 0:
        raise DomainError(f"order must be nonnegative, got {n}")
    if not math.isfinite(x) or abs(x) > MAX_BESSEL_ARG:
        raise DomainError(f"|x| must be <= {MAX_BESSEL_ARG}, got {x}")
    half = x / 2.0
    term = half**n / math.factorial(n) if n <= 170 else 0.0
    if n > 170:
        # leading term below double-precision underflow for the supported range
        term = math.exp(n * math.log(abs(half)) - math.lgamma(n + 1)) if half != 0 else 0.0
        if half < 0 and n % 2 == 1:
            term = -term
    total = term
    for m in range(1, _BESSEL_MAX_TERMS + 1):
        term *= half * half / (m * (m + n))
        total += term
        if abs(term) <= 1e-12 * max(abs(total), 1e-300):
            return SpecFnResult(value=float(total), converged=True, terms_used=m + 1)
    return SpecFnResult(value=float(total), converged=False, terms_used=_BESSEL_MAX_TERMS + 1)


def bessel_i(n: int, x: float) -> float:
    """Modified Bessel function of the first kind I_n(x)."""
    res = bessel_i_series(n, x)
    if not res.converged:
        raise CapabilityError(f"Bessel series did not converge for I_{n}({x})")
    return res.value


def log_factorial(x) -> np.ndarray:
    """log(x!) for nonnegative integer arrays, via lgamma."""
    return _sp.gammaln(np.asarray(x, dtype=float) + 1.0)
