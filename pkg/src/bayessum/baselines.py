"""Baseline estimators: Monte Carlo, importance sampling, Russian roulette,
and stratified sampling.

All estimators are unbiased and deterministic under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .distributions import Distribution, SampleBatch, make_rng
from .errors import ContractError, DomainError


@dataclass(frozen=True)
class BaselineConfig:
    method: str  # "mc" | "is" | "rr" | "ss"
    is_proposal: Optional[Distribution] = None
    rr_rho: float = 0.95
    ss_cutoff: Optional[int] = None  # countable-domain two-region split
    ss_cells: int = 4  # finite-domain equal index subsets

    def __post_init__(self):
        if not 0.0 < self.rr_rho < 1.0:
            raise DomainError(f"rr_rho must be in (0, 1), got {self.rr_rho}")


def monte_carlo(f: Callable, samples: SampleBatch) -> float:
    """(1/N) sum f(x_i) over with-replacement draws from the target."""
    if len(samples) == 0:
        raise ContractError("empty sample batch")
    return float(np.mean([f(x) for x in samples.points]))


def importance_sampling(
    f: Callable, dist: Distribution, proposal: Distribution, samples: SampleBatch
) -> float:
    """(1/N) sum f(x_i) p(x_i)/q(x_i) over draws from the proposal."""
    if len(samples) == 0:
        raise ContractError("empty sample batch")
    total = 0.0
    for x in samples.points:
        q = proposal.pmf(x)
        if q == 0.0:
            raise ContractError(f"proposal has zero mass at sampled point {x}")
        total += f(x) * dist.pmf(x) / q
    return total / len(samples)


def russian_roulette(
    f: Callable,
    dist: Distribution,
    index_to_point: Callable[[int], object],
    rho: float = 0.95,
    seed: int = 0,
) -> float:
    """Random-truncation estimator over an indexed enumeration of the domain.

    A single truncation level J is drawn with P(J >= j) = rho^j, and the
    retained prefix is re-weighted by the inclusion probabilities rho^j,
    which keeps the estimator unbiased.
    """
    if not 0.0 < rho < 1.0:
        raise DomainError(f"rho must be in (0, 1), got {rho}")
    rng = make_rng(seed)
    # number of successes before the first failure: P(J >= j) = rho^j
    level = int(rng.geometric(1.0 - rho)) - 1
    total = 0.0
    for j in range(level + 1):
        x = index_to_point(j)
        if x is None:  # enumeration exhausted (finite domain)
            break
        total += f(x) * dist.pmf(x) / rho**j
    return total


@dataclass(frozen=True)
class StratifiedCell:
    probability: float
    sampler: Callable[[int, np.random.Generator], list]


def stratified_sampling(
    f: Callable, cells: Sequence[StratifiedCell], n: int, seed: int = 0
) -> float:
    """sum_cells P(cell) * conditional cell mean of f, floor(n/M) draws each.

    Cells with zero probability are skipped with zero weight.
    """
    if not cells:
        raise ContractError("at least one cell required")
    per_cell = max(1, n // len(cells))
    rng = make_rng(seed)
    total = 0.0
    for cell in cells:
        if cell.probability <= 0.0:
            continue
        draws = cell.sampler(per_cell, rng)
        total += cell.probability * float(np.mean([f(x) for x in draws]))
    return total


def countable_tail_cells(
    dist: Distribution, cutoff: int, upper: int = 10_000
) -> list[StratifiedCell]:
    """Two-region split {x < c} / {x >= c} of a countable law on N0.

    Conditional draws use the inverse CDF of the truncated region; the
    upper region is truncated at `upper` (negligible tail mass for the
    benchmarked parameters).
    """
    xs_lo = np.arange(cutoff)
    xs_hi = np.arange(cutoff, upper + 1)
    p_lo = np.array([dist.pmf(int(x)) for x in xs_lo])
    p_hi = np.array([dist.pmf(int(x)) for x in xs_hi])
    cells = []
    for xs, p in ((xs_lo, p_lo), (xs_hi, p_hi)):
        mass = float(p.sum())
        if mass <= 0.0:
            cells.append(StratifiedCell(probability=0.0, sampler=lambda k, rng: []))
            continue
        probs = p / mass
        values = [int(v) for v in xs]

        def sampler(k, rng, values=values, probs=probs):
            return [int(v) for v in rng.choice(values, size=k, p=probs)]

        cells.append(StratifiedCell(probability=mass, sampler=sampler))
    return cells


def equal_index_cells(
    universe: Sequence, n_cells: int, pmf: Callable
) -> list[StratifiedCell]:
    """Equal-size index subsets of a finite enumeration, uniform within each.

    Suited to uniform targets, where the conditional within an index cell
    is uniform; the cell weight is the cell's total mass.
    """
    size = len(universe)
    bounds = [round(i * size / n_cells) for i in range(n_cells + 1)]
    cells = []
    for i in range(n_cells):
        chunk = list(universe[bounds[i] : bounds[i + 1]])
        mass = float(sum(pmf(x) for x in chunk))

        def sampler(k, rng, chunk=chunk):
            idx = rng.integers(0, len(chunk), size=k)
            return [chunk[j] for j in idx]

        cells.append(StratifiedCell(probability=mass, sampler=sampler))
    return cells
