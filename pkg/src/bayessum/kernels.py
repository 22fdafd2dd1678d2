"""Positive-semidefinite kernels on discrete, continuous, and mixed domains.

Kernel objects are immutable; `eval` and `gram` are pure.  The discrete
Stein construction combines a base kernel with a difference-score oracle
so that the resulting kernel has zero mean embedding under the model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .distributions import SiteProduct, diff_score
from .errors import ContractError, DomainError


class Kernel:
    """Base class; subclasses implement a symmetric PSD function."""

    amplitude: float = 1.0

    def eval(self, x, y) -> float:
        raise NotImplementedError

    def __call__(self, x, y) -> float:
        return self.eval(x, y)


@dataclass(frozen=True)
class BrownianMin(Kernel):
    """k(x, y) = A * (min(x, y) + offset) on nonnegative scalars.

    The constant offset keeps the kernel PSD and lets the associated GP
    represent functions that are nonzero at the origin (min alone pins
    f(0) = 0).
    """

    amplitude: float = 1.0
    offset: float = 0.0

    def __post_init__(self):
        if self.offset < 0:
            raise DomainError(f"require offset >= 0, got {self.offset}")

    def eval(self, x, y):
        return self.amplitude * (min(x, y) + self.offset)


@dataclass(frozen=True)
class Polynomial(Kernel):
    """k(x, y) = A * (x y + 1)^r on scalars."""

    r: int
    amplitude: float = 1.0

    def __post_init__(self):
        if self.r < 0:
            raise DomainError(f"degree must be nonnegative, got {self.r}")

    def eval(self, x, y):
        return self.amplitude * (x * y + 1.0) ** self.r


def hamming_distance(x, y) -> int:
    if len(x) != len(y):
        raise ContractError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return sum(a != b for a, b in zip(x, y))


@dataclass(frozen=True)
class ExpHamming(Kernel):
    """k(x, y) = A * exp(-lam * d_H(x, y)) on equal-length sequences."""

    lam: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise DomainError(f"require lam >= 0, got {self.lam}")

    def eval(self, x, y):
        return self.amplitude * math.exp(-self.lam * hamming_distance(x, y))


@dataclass(frozen=True)
class Hamming(Kernel):
    """k(x, y) = A * d_H(x, y).

    Not PSD in general; exposed for completeness and excluded from
    estimator paths.
    """

    amplitude: float = 1.0

    def eval(self, x, y):
        return self.amplitude * hamming_distance(x, y)


@dataclass(frozen=True)
class Tanimoto(Kernel):
    """k(x, y) = A * x.y / (|x|^2 + |y|^2 - x.y) on binary vectors.

    Defined as 0 when both inputs are all-zero (limit convention).
    """

    amplitude: float = 1.0

    def eval(self, x, y):
        if len(x) != len(y):
            raise ContractError(f"dimension mismatch: {len(x)} vs {len(y)}")
        dot = sum(a * b for a, b in zip(x, y))
        denom = sum(a * a for a in x) + sum(b * b for b in y) - dot
        if denom == 0:
            return 0.0
        return self.amplitude * dot / denom


@dataclass(frozen=True)
class GaussianRBF(Kernel):
    """k(x, y) = A * exp(-(x - y)^2 / (2 ell^2)) on scalars."""

    ell: float
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.ell > 0:
            raise DomainError(f"require ell > 0, got {self.ell}")

    def eval(self, x, y):
        return self.amplitude * math.exp(-((x - y) ** 2) / (2.0 * self.ell**2))


@dataclass(frozen=True)
class ProductKernel(Kernel):
    """k((x, y), (x', y')) = k_X(x, x') * k_Y(y, y') on paired inputs."""

    kx: Kernel
    ky: Kernel

    def eval(self, a, b):
        return self.kx.eval(a[0], b[0]) * self.ky.eval(a[1], b[1])


@dataclass(frozen=True)
class MixedAdditiveProduct(Kernel):
    """k = k_X + k_Y + k_X * k_Y on paired (continuous, discrete) inputs."""

    kx: Kernel
    ky: Kernel

    def eval(self, a, b):
        vx = self.kx.eval(a[0], b[0])
        vy = self.ky.eval(a[1], b[1])
        return vx + vy + vx * vy


@dataclass(frozen=True)
class SteinDiscrete(Kernel):
    """Discrete Stein kernel built from a base kernel and a score oracle.

    k_p(x,y) = s(x).s(y) k(x,y) - s(x).D*_y k(x,y) - D*_x k(x,y).s(y)
               + trace(D*_{x,y} k(x,y)),
    where D*_i f(x) = f(x) - f(x with site i rewound in the cyclic order)
    and s is the forward difference score of the model.
    """

    base: Kernel
    model: SiteProduct

    def eval(self, x, y):
        return stein_eval(self, x, y)


def eval(k: Kernel, x, y) -> float:  # noqa: A001 - mirrors the operation name
    return k.eval(x, y)


def gram(k: Kernel, points: Sequence) -> np.ndarray:
    """Gram matrix K_ij = k(x_i, x_j), symmetric by construction."""
    if len(points) == 0:
        raise ContractError("empty point list")
    fast = _fast_gram(k, points)
    if fast is not None:
        return fast
    n = len(points)
    out = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            v = k.eval(points[i], points[j])
            out[i, j] = v
            out[j, i] = v
    return out


def _fast_gram(k: Kernel, points) -> np.ndarray | None:
    """Vectorized Gram paths for the kernels used in large benchmarks."""
    if isinstance(k, ExpHamming):
        pts = np.asarray(points)
        d = (pts[:, None, :] != pts[None, :, :]).sum(axis=2)
        return k.amplitude * np.exp(-k.lam * d)
    if isinstance(k, BrownianMin):
        pts = np.asarray(points, dtype=float)
        return k.amplitude * (np.minimum(pts[:, None], pts[None, :]) + k.offset)
    if isinstance(k, SteinDiscrete) and isinstance(k.base, ExpHamming):
        return stein_gram_exphamming(k, points)
    if isinstance(k, MixedAdditiveProduct) and isinstance(k.kx, GaussianRBF) and isinstance(
        k.ky, ExpHamming
    ):
        xs = np.asarray([p[0] for p in points], dtype=float)
        ys = np.asarray([p[1] for p in points])
        gx = k.kx.amplitude * np.exp(
            -((xs[:, None] - xs[None, :]) ** 2) / (2.0 * k.kx.ell**2)
        )
        dh = (ys[:, None, :] != ys[None, :, :]).sum(axis=2)
        gy = k.ky.amplitude * np.exp(-k.ky.lam * dh)
        return gx + gy + gx * gy
    return None


def cross_gram(k: Kernel, points_a: Sequence, points_b: Sequence) -> np.ndarray:
    """Rectangular kernel matrix k(a_i, b_j)."""
    out = np.empty((len(points_a), len(points_b)))
    for i, a in enumerate(points_a):
        for j, b in enumerate(points_b):
            out[i, j] = k.eval(a, b)
    return out


def stein_eval(k_p: SteinDiscrete, x, y) -> float:
    """Straightforward evaluation of the discrete Stein kernel."""
    model, base = k_p.model, k_p.base
    sx = diff_score(model, x)
    sy = diff_score(model, y)
    n = model.n_sites
    kxy = base.eval(x, y)

    total = float(sx @ sy) * kxy
    for i in range(n):
        x_back = model.cycle_site(x, i, -1)
        y_back = model.cycle_site(y, i, -1)
        dy = kxy - base.eval(x, y_back)  # D*_{y_i} k
        dx = kxy - base.eval(x_back, y)  # D*_{x_i} k
        dxy = kxy - base.eval(x_back, y) - base.eval(x, y_back) + base.eval(x_back, y_back)
        total += -sx[i] * dy - dx * sy[i] + dxy
    return total


def _site_scores(model: SiteProduct, pts: np.ndarray) -> np.ndarray:
    """Difference scores for stacked integer-coded states, vectorized."""
    from .distributions import PottsUnnormalized

    if isinstance(model, PottsUnnormalized):
        logp = model.log_pmf_many(pts)
        scores = np.empty(pts.shape, dtype=float)
        for i in range(model.n_sites):
            fwd = pts.copy()
            fwd[:, i] = (fwd[:, i] + 1) % model.S
            scores[:, i] = 1.0 - np.exp(model.log_pmf_many(fwd) - logp)
        return scores
    return np.array([diff_score(model, tuple(row)) for row in pts])


def stein_gram_exphamming(k_p: SteinDiscrete, points) -> np.ndarray:
    """Vectorized Stein Gram for an exponential-Hamming base kernel.

    Exploits that rewinding one site changes the Hamming distance by at
    most one, and that jointly rewinding both arguments at the same site
    leaves it unchanged.
    """
    base: ExpHamming = k_p.base  # type: ignore[assignment]
    model = k_p.model
    pts = np.asarray(points)
    if pts.ndim != 2:
        raise ContractError("stein gram expects stacked integer-coded states")
    n_sym = len(model.alphabet)
    codes = np.asarray(model.alphabet)
    if not np.array_equal(codes, np.arange(n_sym)):
        raise ContractError("fast path requires integer-coded alphabets 0..S-1")

    s = _site_scores(model, pts)  # (n, L)
    neq = pts[:, None, :] != pts[None, :, :]  # (n, n, L)
    d = neq.sum(axis=2)
    kmat = base.amplitude * np.exp(-base.lam * d)

    back = (pts - 1) % n_sym  # site-rewound symbols
    total = (s @ s.T) * kmat
    lam = base.lam
    for i in range(model.n_sites):
        neq_i = neq[:, :, i]
        # k(x, back_i y): distance changes by (x_i != back y_i) - (x_i != y_i)
        delta_y = (pts[:, None, i] != back[None, :, i]).astype(int) - neq_i
        delta_x = (back[:, None, i] != pts[None, :, i]).astype(int) - neq_i
        k_by = kmat * np.exp(-lam * delta_y)
        k_bx = kmat * np.exp(-lam * delta_x)
        # joint rewind keeps equality pattern: k(back_i x, back_i y) = k(x, y)
        dy = kmat - k_by
        dx = kmat - k_bx
        dxy = 2.0 * kmat - k_bx - k_by
        total += -s[:, i : i + 1] * dy - dx * s[:, i][None, :] + dxy
    return total
