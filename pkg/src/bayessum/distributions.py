"""Discrete and mixed probability laws.

Provides pmf evaluation, i.i.d. and without-replacement sampling, a
Metropolis-Hastings sampler for unnormalized laws, difference-score
oracles for Stein kernels, and support enumeration for brute-force
ground truths.

All randomness flows through the counter-based Philox generator keyed by
a 64-bit seed, so identical seeds reproduce identical batches bit for bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import CapabilityError, ContractError, DomainError, SingularScoreError
from .specfn import bessel_i, log_factorial

ENUMERATION_CAP = 20_000_000
REJECTION_CAP = 1_000_000


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based generator; the single RNG entry point of the library."""
    return np.random.Generator(np.random.Philox(key=seed))


@dataclass(frozen=True)
class SampleBatch:
    points: list
    replacement_mode: str  # "with" | "without"
    rng_seed: int
    weights: Optional[list] = None

    def __post_init__(self):
        if self.replacement_mode not in ("with", "without"):
            raise ContractError(f"unknown replacement mode {self.replacement_mode!r}")
        if self.weights is not None:
            if len(self.weights) != len(self.points):
                raise ContractError("weights length must match points length")
            if any(w <= 0 for w in self.weights):
                raise ContractError("weights must be positive")
        if self.replacement_mode == "without":
            if len(set(self.points)) != len(self.points):
                raise ContractError("without-replacement batch contains duplicates")

    def __len__(self):
        return len(self.points)


class Distribution:
    """Base class; subclasses define a discrete (or mixed) probability law."""

    normalized: bool = True

    def pmf(self, x) -> float:
        return math.exp(self.log_pmf(x))

    def log_pmf(self, x) -> float:
        raise NotImplementedError

    def sample_iid(self, n: int, rng: np.random.Generator) -> list:
        raise CapabilityError(f"{type(self).__name__} has no direct sampler")

    def support_size(self) -> Optional[int]:
        """Cardinality for finite-enumerable families, else None."""
        return None

    def iter_support(self) -> Iterator:
        raise CapabilityError(f"{type(self).__name__} is not finite-enumerable")


# ---------------------------------------------------------------------------
# Count families on N0 / N+ / Z
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Poisson(Distribution):
    eta: float

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"require eta > 0, got {self.eta}")

    def log_pmf(self, x) -> float:
        if x < 0 or x != int(x):
            raise DomainError(f"{x} outside Poisson support")
        x = int(x)
        return x * math.log(self.eta) - self.eta - math.lgamma(x + 1)

    def sample_iid(self, n, rng):
        return [int(v) for v in rng.poisson(self.eta, size=n)]


@dataclass(frozen=True)
class NegBinomial(Distribution):
    """P(X = x) = C(x + tau - 1, x) (1 - q)^x q^tau on N0."""

    tau: float
    q: float

    def __post_init__(self):
        if not (self.tau > 0 and 0.0 < self.q < 1.0):
            raise DomainError(f"require tau > 0, q in (0,1), got ({self.tau}, {self.q})")

    def log_pmf(self, x) -> float:
        if x < 0 or x != int(x):
            raise DomainError(f"{x} outside NB support")
        x = int(x)
        return (
            math.lgamma(x + self.tau)
            - math.lgamma(self.tau)
            - math.lgamma(x + 1)
            + x * math.log1p(-self.q)
            + self.tau * math.log(self.q)
        )

    def sample_iid(self, n, rng):
        return [int(v) for v in rng.negative_binomial(self.tau, self.q, size=n)]


@dataclass(frozen=True)
class Logarithmic(Distribution):
    """P(X = x) = -p^x / (x ln(1 - p)) on N+."""

    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError(f"require p in (0,1), got {self.p}")

    def log_pmf(self, x) -> float:
        if x < 1 or x != int(x):
            raise DomainError(f"{x} outside logarithmic support")
        x = int(x)
        return x * math.log(self.p) - math.log(x) - math.log(-math.log1p(-self.p))

    def sample_iid(self, n, rng):
        return [int(v) for v in rng.logseries(self.p, size=n)]


@dataclass(frozen=True)
class Skellam(Distribution):
    """Difference of two independent Poissons, support Z."""

    lam1: float
    lam2: float

    def __post_init__(self):
        if not (self.lam1 > 0 and self.lam2 > 0):
            raise DomainError("require lam1, lam2 > 0")

    def pmf(self, x) -> float:
        if x != int(x):
            raise DomainError(f"{x} outside Skellam support")
        x = int(x)
        # log space: the ratio term overflows in the far tail where the
        # Bessel factor has already underflowed to zero
        bess = bessel_i(abs(x), 2.0 * math.sqrt(self.lam1 * self.lam2))
        if bess == 0.0:
            return 0.0
        return math.exp(
            -(self.lam1 + self.lam2)
            + 0.5 * x * (math.log(self.lam1) - math.log(self.lam2))
            + math.log(bess)
        )

    def log_pmf(self, x) -> float:
        return math.log(self.pmf(x))

    def sample_iid(self, n, rng):
        d = rng.poisson(self.lam1, size=n) - rng.poisson(self.lam2, size=n)
        return [int(v) for v in d]

    def cumulants(self, n: int) -> list[float]:
        """Cumulant sequence kappa_j = lam1 + (-1)^j lam2, j = 1..n."""
        return [self.lam1 + (-1) ** j * self.lam2 for j in range(1, n + 1)]


@dataclass(frozen=True)
class CMP(Distribution):
    """Conway-Maxwell-Poisson, known up to its normalization constant.

    Unnormalized mass theta1^x (x!)^(-theta2) on N0.
    """

    theta1: float
    theta2: float
    normalized = False

    def __post_init__(self):
        if not (self.theta1 > 0 and self.theta2 >= 0):
            raise DomainError("require theta1 > 0 and theta2 >= 0")

    def log_pmf(self, x) -> float:
        if x < 0 or x != int(x):
            raise DomainError(f"{x} outside CMP support")
        x = int(x)
        return x * math.log(self.theta1) - self.theta2 * math.lgamma(x + 1)

    def log_z(self, terms: int = 500) -> float:
        """log of the truncated normalization sum (oracle use only)."""
        j = np.arange(terms)
        logs = j * math.log(self.theta1) - self.theta2 * log_factorial(j)
        m = float(np.max(logs))
        return m + math.log(float(np.sum(np.exp(logs - m))))

    def sample_iid(self, n, rng, truncation: int = 200):
        """Inverse-CDF draws from the truncation-normalized law."""
        j = np.arange(truncation + 1)
        logs = j * math.log(self.theta1) - self.theta2 * log_factorial(j)
        w = np.exp(logs - logs.max())
        probs = w / w.sum()
        return [int(v) for v in rng.choice(j, size=n, p=probs)]


# ---------------------------------------------------------------------------
# Finite product families (integer-coded sites)
# ---------------------------------------------------------------------------


class SiteProduct(Distribution):
    """Common machinery for laws over a product of per-site alphabets."""

    n_sites: int
    alphabet: tuple  # per-site symbols in declared cyclic order

    def _check(self, x):
        if len(x) != self.n_sites or any(v not in self._symbol_index for v in x):
            raise DomainError(f"{x} outside {type(self).__name__} support")

    @property
    def _symbol_index(self):
        return {s: i for i, s in enumerate(self.alphabet)}

    def cycle_site(self, x, i: int, step: int):
        """Advance (step=+1) or rewind (step=-1) site i in the cyclic order."""
        idx = self._symbol_index[x[i]]
        sym = self.alphabet[(idx + step) % len(self.alphabet)]
        return tuple(x[:i]) + (sym,) + tuple(x[i + 1 :])

    def support_size(self):
        return len(self.alphabet) ** self.n_sites

    def iter_support(self):
        if self.support_size() > ENUMERATION_CAP:
            raise CapabilityError(
                f"cardinality {self.support_size()} exceeds cap {ENUMERATION_CAP}"
            )
        return itertools.product(self.alphabet, repeat=self.n_sites)


@dataclass(frozen=True)
class UniformCategorical(SiteProduct):
    """Uniform law over {0, ..., m}^d."""

    m: int
    d: int

    def __post_init__(self):
        if self.m < 1 or self.d < 1:
            raise DomainError("require m >= 1 and d >= 1")

    @property
    def n_sites(self):
        return self.d

    @property
    def alphabet(self):
        return tuple(range(self.m + 1))

    def log_pmf(self, x) -> float:
        self._check(x)
        return -self.d * math.log(self.m + 1)

    def sample_iid(self, n, rng):
        draws = rng.integers(0, self.m + 1, size=(n, self.d))
        return [tuple(int(v) for v in row) for row in draws]


@dataclass(frozen=True)
class UniformIsing(SiteProduct):
    """Uniform law over {-1, +1}^d; cyclic site order -1 -> +1 -> -1."""

    d: int

    def __post_init__(self):
        if self.d < 1:
            raise DomainError("require d >= 1")

    @property
    def n_sites(self):
        return self.d

    @property
    def alphabet(self):
        return (-1, 1)

    def log_pmf(self, x) -> float:
        self._check(x)
        return -self.d * math.log(2.0)

    def sample_iid(self, n, rng):
        draws = rng.integers(0, 2, size=(n, self.d)) * 2 - 1
        return [tuple(int(v) for v in row) for row in draws]


@dataclass(frozen=True)
class PottsUnnormalized(SiteProduct):
    """Potts law over {0, ..., S-1}^L, known up to normalization.

    log p(x) = sign * beta * (sum_i h_i x_i + sum_{|i-j|=1} J_ij 1{x_i = x_j}).
    Chain adjacency; pairwise term is the equality indicator obtained from
    the inner product of one-hot site encodings.
    """

    h: tuple
    J: tuple  # row-major (L, L) couplings; only adjacent entries are read
    beta: float
    L: int
    S: int
    sign: float = -1.0
    normalized = False

    @staticmethod
    def build(h, J, beta: float, L: int, S: int, sign: float = -1.0) -> "PottsUnnormalized":
        """Accepts scalar or array h / J and freezes them into tuples."""
        h_arr = np.broadcast_to(np.asarray(h, dtype=float), (L,)).copy()
        J_arr = np.broadcast_to(np.asarray(J, dtype=float), (L, L)).copy()
        return PottsUnnormalized(
            h=tuple(h_arr),
            J=tuple(map(tuple, J_arr)),
            beta=float(beta),
            L=L,
            S=S,
            sign=float(sign),
        )

    @property
    def n_sites(self):
        return self.L

    @property
    def alphabet(self):
        return tuple(range(self.S))

    def energy_many(self, states: np.ndarray) -> np.ndarray:
        """sum_i h_i x_i + sum_adjacent J_ij 1{x_i = x_j} for stacked states."""
        states = np.atleast_2d(np.asarray(states))
        h = np.asarray(self.h)
        J = np.asarray(self.J)
        field_term = states @ h
        adj = np.array([J[i, i + 1] for i in range(self.L - 1)]) if self.L > 1 else np.zeros(0)
        if self.L > 1:
            eq = (states[:, :-1] == states[:, 1:]).astype(float)
            pair_term = eq @ adj
        else:
            pair_term = np.zeros(states.shape[0])
        return field_term + pair_term

    def log_pmf_many(self, states: np.ndarray) -> np.ndarray:
        return self.sign * self.beta * self.energy_many(states)

    def log_pmf(self, x) -> float:
        self._check(x)
        return float(self.log_pmf_many(np.asarray(x))[0])


# ---------------------------------------------------------------------------
# Continuous and mixed components
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniformInterval(Distribution):
    """Continuous uniform on [a, b]; density, not a pmf."""

    a: float = -1.0
    b: float = 1.0

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError("require b > a")

    def log_pmf(self, x) -> float:
        if not self.a <= x <= self.b:
            raise DomainError(f"{x} outside [{self.a}, {self.b}]")
        return -math.log(self.b - self.a)

    def sample_iid(self, n, rng):
        return [float(v) for v in rng.uniform(self.a, self.b, size=n)]


@dataclass(frozen=True)
class MixedProduct(Distribution):
    """Independent product of a continuous part and a discrete part.

    Elements are (continuous value, discrete tuple) pairs.
    """

    continuous: UniformInterval
    discrete: SiteProduct

    def log_pmf(self, x) -> float:
        c, d = x
        return self.continuous.log_pmf(c) + self.discrete.log_pmf(d)

    def sample_iid(self, n, rng):
        cs = self.continuous.sample_iid(n, rng)
        ds = self.discrete.sample_iid(n, rng)
        return list(zip(cs, ds))


# ---------------------------------------------------------------------------
# Module-level operations
# ---------------------------------------------------------------------------


def pmf(dist: Distribution, x) -> float:
    """Probability mass at x; unnormalized mass for unnormalized families."""
    return dist.pmf(x)


def sample(
    dist: Distribution,
    n: int,
    mode: str = "with",
    seed: int = 0,
    allow_partial: bool = False,
) -> SampleBatch:
    """Draw n points i.i.d. ("with") or with duplicates rejected ("without").

    Without-replacement draws keep the order of first appearance.  On
    countable domains the rejection loop is capped at REJECTION_CAP
    proposals; exhausting the cap raises CapabilityError unless
    allow_partial is set, in which case the distinct points collected so
    far are returned.
    """
    if n < 1:
        raise ContractError(f"require n >= 1, got {n}")
    rng = make_rng(seed)
    if mode == "with":
        return SampleBatch(points=dist.sample_iid(n, rng), replacement_mode="with", rng_seed=seed)
    if mode != "without":
        raise ContractError(f"unknown replacement mode {mode!r}")

    card = dist.support_size()
    if card is not None and n > card:
        raise CapabilityError(f"cannot draw {n} distinct points from a domain of size {card}")

    seen: set = set()
    points: list = []
    proposed = 0
    chunk = max(n, 64)
    while len(points) < n and proposed < REJECTION_CAP:
        take = min(chunk, REJECTION_CAP - proposed)
        for x in dist.sample_iid(take, rng):
            if x not in seen:
                seen.add(x)
                points.append(x)
                if len(points) == n:
                    break
        proposed += take
        chunk = min(chunk * 2, 65536)
    if len(points) < n and not allow_partial:
        raise CapabilityError(
            f"collected only {len(points)}/{n} distinct points "
            f"within {REJECTION_CAP} proposals"
        )
    return SampleBatch(points=points, replacement_mode="without", rng_seed=seed)


def mh_sample(
    dist: SiteProduct,
    n: int,
    burn_in: int = 10,
    thinning: int = 5,
    seed: int = 0,
    initial=None,
) -> SampleBatch:
    """Metropolis-Hastings chain with single-site uniform proposals.

    Emits every `thinning`-th state after `burn_in` accepted-or-rejected
    steps; duplicates are retained (chain samples are "with" replacement).
    """
    if n < 1 or burn_in < 0 or thinning < 1:
        raise ContractError("require n >= 1, burn_in >= 0, thinning >= 1")
    rng = make_rng(seed)
    n_sym = len(dist.alphabet)
    if initial is None:
        state = tuple(dist.alphabet[i] for i in rng.integers(0, n_sym, size=dist.n_sites))
    else:
        state = tuple(initial)
    log_p = dist.log_pmf(state)

    out = []
    step = 0
    while len(out) < n:
        site = int(rng.integers(0, dist.n_sites))
        shift = int(rng.integers(1, n_sym)) if n_sym > 1 else 0
        prop = dist.cycle_site(state, site, shift)
        log_q = dist.log_pmf(prop)
        if math.log(rng.uniform()) < log_q - log_p:
            state, log_p = prop, log_q
        step += 1
        if step > burn_in and (step - burn_in) % thinning == 0:
            out.append(state)
    return SampleBatch(points=out, replacement_mode="with", rng_seed=seed)


def diff_score(dist: SiteProduct, x) -> np.ndarray:
    """Difference score s(x)_i = 1 - p(forward-cycled x at site i) / p(x).

    Valid up to the normalization constant of p.
    """
    if not isinstance(dist, SiteProduct):
        raise ContractError("difference score requires a per-site alphabet")
    log_px = dist.log_pmf(x)
    if log_px == -math.inf:
        raise SingularScoreError(f"zero probability at {x}")
    score = np.empty(dist.n_sites)
    for i in range(dist.n_sites):
        score[i] = 1.0 - math.exp(dist.log_pmf(dist.cycle_site(x, i, +1)) - log_px)
    return score


def enumerate_support(dist: Distribution) -> Iterator:
    """Each support element exactly once, in deterministic order."""
    size = dist.support_size()
    if size is None:
        raise CapabilityError(f"{type(dist).__name__} is not finite-enumerable")
    if size > ENUMERATION_CAP:
        raise CapabilityError(f"cardinality {size} exceeds cap {ENUMERATION_CAP}")
    return dist.iter_support()
