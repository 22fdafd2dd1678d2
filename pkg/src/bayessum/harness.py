"""Benchmark problems, ground truths, and the estimator comparison runner.

Four problem cases are provided:

  a  Gaussian-bump integrand under Poisson(30) on the nonnegative integers
  b  Boltzmann-weight integrand under the uniform law on {0,1,2}^L
  c  logistic integrand under an unnormalized chain Potts law on {0,1,2}^L
  d  mixed continuous/discrete integrand on [-1,1] x a 17x17 value grid

Ground truths come from truncation (a), exact enumeration (b, c), and a
closed-form Bessel series (d).
"""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import baselines
from .distributions import (
    Distribution,
    MixedProduct,
    NegBinomial,
    Poisson,
    PottsUnnormalized,
    SampleBatch,
    SiteProduct,
    UniformCategorical,
    UniformInterval,
    enumerate_support,
    make_rng,
    mh_sample,
    sample,
)
from .embeddings import EmbeddingPair
from .errors import BayesSumError, ContractError, DomainError, NumericalError
from .kernels import (
    BrownianMin,
    ExpHamming,
    GaussianRBF,
    MixedAdditiveProduct,
    SteinDiscrete,
)
from .quadrature import (
    DEFAULT_AMPLITUDE_GRID,
    DEFAULT_LENGTHSCALE_GRID,
    active_select,
    bayessum,
    make_state,
    select_hyperparams,
    stein_bayessum,
)
from .specfn import bessel_i

POISSON_RATE = 30.0
POTTS_FIELD = 0.1
POTTS_COUPLING = 0.1
POTTS_BETA = 1.0 / 2.269
TRUNCATION_A = 200
CSV_HEADER = ["method", "problem", "n", "seed", "abs_error", "posterior_sd", "wall_time_ns"]


@dataclass(frozen=True)
class BenchmarkRecord:
    method: str
    problem: str
    n: int
    seed: int
    abs_error: float
    posterior_sd: Optional[float]
    wall_time_ns: int


@dataclass(frozen=True)
class ProblemCase:
    id: str
    dist: Distribution
    integrand: Callable
    truth_method: str  # "truncation" | "enumeration" | "closed_form"


@dataclass(frozen=True)
class FactorizedCategorical(Distribution):
    """Independent per-site categorical law; used as an IS proposal."""

    site_probs: tuple  # (d, S) row-major probabilities

    def log_pmf(self, x) -> float:
        probs = np.asarray(self.site_probs)
        if len(x) != probs.shape[0]:
            raise DomainError("dimension mismatch")
        return float(sum(math.log(probs[i][v]) for i, v in enumerate(x)))

    def sample_iid(self, n, rng):
        probs = np.asarray(self.site_probs)
        cols = [rng.choice(probs.shape[1], size=n, p=probs[i]) for i in range(probs.shape[0])]
        return [tuple(int(c[j]) for c in cols) for j in range(n)]


# --- case definitions ------------------------------------------------------


def _bump(x):
    return math.exp(-((x - 15.0) ** 2) / 8.0)


def case_a() -> ProblemCase:
    return ProblemCase("a", Poisson(POISSON_RATE), _bump, "truncation")


def _energy_model(L: int, sign: float = -1.0) -> PottsUnnormalized:
    return PottsUnnormalized.build(
        h=POTTS_FIELD, J=POTTS_COUPLING, beta=POTTS_BETA, L=L, S=3, sign=sign
    )


def case_b(L: int = 6) -> ProblemCase:
    model = _energy_model(L)

    def f(x):
        return math.exp(model.log_pmf(x))

    return ProblemCase(f"b_L{L}", UniformCategorical(2, L), f, "enumeration")


def case_c(L: int = 6) -> ProblemCase:
    model = _energy_model(L)

    def f(x):
        return 1.0 / (1.0 + math.exp(-sum(x) / len(x)))

    return ProblemCase(f"c_L{L}", model, f, "enumeration")


GRID_STEP = 0.125
GRID_SIDE = 17


def grid_value(code: int) -> float:
    return -1.0 + GRID_STEP * code


def case_d() -> ProblemCase:
    dist = MixedProduct(UniformInterval(-1.0, 1.0), UniformCategorical(GRID_SIDE - 1, 2))

    def f(point):
        x, codes = point
        y1, y2 = grid_value(codes[0]), grid_value(codes[1])
        t1 = -20.0 * math.exp(-0.2 * abs((1.0 + 0.1 * y1 + 0.1 * y2) * x))
        t2 = -math.exp(math.cos(2.0 * math.pi * x * (1.0 + 0.05 * (y1**2 + y2**2))))
        return t1 + t2 + 20.0 + math.e

    return ProblemCase("d", dist, f, "closed_form")


def get_case(name: str, L: int = 6) -> ProblemCase:
    name = name.lower()
    if name == "a":
        return case_a()
    if name == "b":
        return case_b(L)
    if name == "c":
        return case_c(L)
    if name == "d":
        return case_d()
    raise ContractError(f"unknown case {name!r}")


# --- ground truths ---------------------------------------------------------


def _case_d_cell_truth(y1: float, y2: float, rel_tol: float = 1e-12) -> float:
    a = 1.0 + 0.1 * (y1 + y2)
    b = 2.0 * math.pi * (1.0 + 0.05 * (y1**2 + y2**2))
    first = -20.0 * (1.0 - math.exp(-0.2 * a)) / (0.2 * a)
    series = bessel_i(0, 1.0)
    n = 1
    while True:
        term = 2.0 * bessel_i(n, 1.0) * math.sin(n * b) / (n * b)
        series += term
        if abs(2.0 * bessel_i(n, 1.0) / (n * b)) < rel_tol * max(abs(series), 1.0):
            break
        n += 1
    return first - series + 20.0 + math.e


def ground_truth(case: ProblemCase) -> float:
    if case.truth_method == "truncation":
        return sum(case.integrand(x) * case.dist.pmf(x) for x in range(TRUNCATION_A + 1))
    if case.truth_method == "enumeration":
        pts = list(enumerate_support(case.dist))
        if isinstance(case.dist, PottsUnnormalized):
            logp = case.dist.log_pmf_many(np.asarray(pts))
            w = np.exp(logp - logp.max())
            probs = w / w.sum()
        else:
            probs = np.array([case.dist.pmf(x) for x in pts])
        fvals = np.array([case.integrand(x) for x in pts])
        return float(fvals @ probs)
    if case.truth_method == "closed_form":
        cells = [
            _case_d_cell_truth(grid_value(i), grid_value(j))
            for i in range(GRID_SIDE)
            for j in range(GRID_SIDE)
        ]
        return float(np.mean(cells))
    raise ContractError(f"unknown truth method {case.truth_method!r}")


# --- per-method estimation -------------------------------------------------


def _cell_seed(seed: int, n: int, salt: int = 0) -> int:
    return (seed * 1_000_003 + n * 101 + salt) % (2**63)


def _eb_brownian(points, fvals):
    return select_hyperparams(
        points,
        fvals,
        lambda amplitude: BrownianMin(amplitude=amplitude),
        {"amplitude": list(DEFAULT_AMPLITUDE_GRID)},
    )


# residual amplitudes after mean centering are far below 1, so the grid
# extends the default downward
CENTERED_AMPLITUDE_GRID = tuple(10.0**k for k in range(-6, 4))


def _eb_exphamming(points, fvals):
    return select_hyperparams(
        points,
        fvals,
        lambda amplitude, lam: ExpHamming(lam=lam, amplitude=amplitude),
        {"amplitude": list(CENTERED_AMPLITUDE_GRID), "lam": list(DEFAULT_LENGTHSCALE_GRID)},
    )


def _estimate_bayessum(case: ProblemCase, n: int, seed: int, replacement: str = "without"):
    """BayesSum posterior for cases a, b, d; empirical-Bayes hyperparameters."""
    if case.id == "a":
        batch = sample(case.dist, n, replacement, seed=seed, allow_partial=True)
        pts = batch.points if replacement == "without" else list(batch.points)
        fvals = [case.integrand(x) for x in pts]
        kernel = _eb_brownian(pts, fvals)
        pair = EmbeddingPair(case.dist, kernel)
    elif case.id.startswith("b"):
        # center the integrand: the GP models the residual around the
        # sample mean, which keeps the amplitude (and the posterior sd)
        # on the scale of the actual variation of f
        batch = sample(case.dist, n, replacement, seed=seed)
        pts = batch.points
        raw = np.array([case.integrand(x) for x in pts])
        center = float(raw.mean())
        fvals = raw - center
        kernel = _eb_exphamming(pts, fvals)
        state = make_state(pts, fvals, EmbeddingPair(case.dist, kernel))
        est = bayessum(state)
        return center + est.mean, math.sqrt(max(est.variance, 0.0)), state.jitter
    elif case.id == "d":
        # continuous coordinate is almost surely distinct, so joint draws
        # are treated as non-repetitive
        rng = make_rng(seed)
        pts = case.dist.sample_iid(n, rng)
        fvals = [case.integrand(x) for x in pts]
        kernel = select_hyperparams(
            pts,
            fvals,
            lambda ell, lam: MixedAdditiveProduct(GaussianRBF(ell=ell), ExpHamming(lam=lam)),
            {"ell": list(DEFAULT_LENGTHSCALE_GRID), "lam": list(DEFAULT_LENGTHSCALE_GRID)},
        )
        pair = EmbeddingPair(case.dist, kernel)
    else:
        raise ContractError(f"bayessum runner does not handle case {case.id}")
    state = make_state(pts, fvals, pair)
    est = bayessum(state)
    return est.mean, math.sqrt(max(est.variance, 0.0)), state.jitter


def _estimate_active(case: ProblemCase, n: int, seed: int):
    """Sequential BayesSum with mutual-information selection (case a)."""
    if case.id != "a":
        raise ContractError("active runner only supports case a")
    kernel = BrownianMin()
    pair = EmbeddingPair(case.dist, kernel)
    pts: list = []
    fvals: list = []
    state = make_state(pts, fvals, pair)
    for step in range(n):
        x = active_select(state, candidate_pool_size=256, seed=_cell_seed(seed, n, step))
        if x is None:
            break
        pts.append(x)
        fvals.append(case.integrand(x))
        state = make_state(pts, fvals, pair)
    kernel = _eb_brownian(pts, fvals)
    state = make_state(pts, fvals, EmbeddingPair(case.dist, kernel))
    est = bayessum(state)
    return est.mean, math.sqrt(max(est.variance, 0.0))


def _is_proposal(case: ProblemCase) -> Distribution:
    if case.id == "a":
        tau = 5.0
        return NegBinomial(tau, tau / (tau + POISSON_RATE))
    if case.id.startswith("b"):
        model = _energy_model(case.dist.d)
        h = np.asarray(model.h)
        probs = []
        for i in range(case.dist.d):
            logits = -model.beta * h[i] * np.arange(3)
            w = np.exp(logits - logits.max())
            probs.append(tuple(w / w.sum()))
        return FactorizedCategorical(site_probs=tuple(probs))
    raise ContractError(f"no IS proposal configured for case {case.id}")


def _rr_indexer(case: ProblemCase) -> Callable[[int], object]:
    if case.id == "a":
        return lambda j: j
    if case.id.startswith("b"):
        d = case.dist.d
        size = 3**d

        def idx(j):
            if j >= size:
                return None
            digits = []
            for _ in range(d):
                digits.append(j % 3)
                j //= 3
            return tuple(reversed(digits))

        return idx
    raise ContractError(f"no RR indexing configured for case {case.id}")


def _ss_cells(case: ProblemCase):
    if case.id == "a":
        return baselines.countable_tail_cells(case.dist, cutoff=100)
    if case.id.startswith("b"):
        universe = list(enumerate_support(case.dist))
        return baselines.equal_index_cells(universe, 4, case.dist.pmf)
    raise ContractError(f"no SS partition configured for case {case.id}")


def _estimate_baseline(case: ProblemCase, method: str, n: int, seed: int) -> float:
    f = case.integrand
    if method == "mc":
        batch = sample(case.dist, n, "with", seed=seed)
        return baselines.monte_carlo(f, batch)
    if method == "is":
        proposal = _is_proposal(case)
        batch = sample(proposal, n, "with", seed=seed)
        return baselines.importance_sampling(f, case.dist, proposal, batch)
    if method == "rr":
        return baselines.russian_roulette(f, case.dist, _rr_indexer(case), rho=0.95, seed=seed)
    if method == "ss":
        return baselines.stratified_sampling(f, _ss_cells(case), n, seed=seed)
    raise ContractError(f"unknown baseline {method!r}")


def _case_c_cell(case: ProblemCase, methods: Sequence[str], n: int, seed: int, truth: float):
    """Case c shares one Metropolis-Hastings chain between all methods."""
    chain = mh_sample(case.dist, n, burn_in=10, thinning=5, seed=seed)
    records = []
    for method in methods:
        t0 = time.perf_counter_ns()
        sd = None
        if method == "mc":
            est = baselines.monte_carlo(case.integrand, chain)
        elif method in ("stein", "bayessum"):
            unique = list(dict.fromkeys(chain.points))
            kp = SteinDiscrete(ExpHamming(lam=1.0), case.dist)
            post = stein_bayessum(unique, [case.integrand(x) for x in unique], kp)
            est = post.mean
            sd = math.sqrt(max(post.variance, 0.0))
        else:
            raise ContractError(f"case c supports mc and stein, not {method!r}")
        records.append(
            BenchmarkRecord(
                method=method,
                problem=case.id,
                n=n,
                seed=seed,
                abs_error=abs(est - truth),
                posterior_sd=sd,
                wall_time_ns=time.perf_counter_ns() - t0,
            )
        )
    return records


def run_benchmark(
    case: ProblemCase,
    methods: Sequence[str],
    n_grid: Sequence[int],
    seeds: Sequence[int],
    replacement: str = "without",
) -> list[BenchmarkRecord]:
    """One record per (method, n, seed); estimator failures become NaN rows."""
    truth = ground_truth(case)
    records: list[BenchmarkRecord] = []
    for n in n_grid:
        for seed in seeds:
            if case.id.startswith("c"):
                records.extend(_case_c_cell(case, methods, n, seed, truth))
                continue
            for method in methods:
                t0 = time.perf_counter_ns()
                sd = None
                try:
                    if method == "bayessum":
                        est, sd, _ = _estimate_bayessum(
                            case, n, _cell_seed(seed, n), replacement
                        )
                    elif method == "active":
                        est, sd = _estimate_active(case, n, seed)
                    else:
                        est = _estimate_baseline(case, method, n, _cell_seed(seed, n))
                    err = abs(est - truth)
                except BayesSumError:
                    err = float("nan")
                records.append(
                    BenchmarkRecord(
                        method=method,
                        problem=case.id,
                        n=n,
                        seed=seed,
                        abs_error=err,
                        posterior_sd=sd,
                        wall_time_ns=time.perf_counter_ns() - t0,
                    )
                )
    records.sort(key=lambda r: (r.method, r.problem, r.n, r.seed))
    return records


# --- analytics -------------------------------------------------------------


def empirical_rate(records: Sequence[BenchmarkRecord]) -> float:
    """Negated slope of log mean-abs-error against log n.

    n values whose mean error is exactly zero are excluded; an all-zero
    input has no defined rate.
    """
    by_n: dict[int, list[float]] = {}
    for r in records:
        if math.isfinite(r.abs_error):
            by_n.setdefault(r.n, []).append(r.abs_error)
    pts = [
        (math.log(n), math.log(np.mean(errs)))
        for n, errs in sorted(by_n.items())
        if np.mean(errs) > 0.0
    ]
    if len(pts) < 3:
        raise NumericalError("need >= 3 n values with positive mean error")
    xs, ys = zip(*pts)
    slope = np.polyfit(xs, ys, 1)[0]
    return float(-slope)


def calibration_curve(
    records: Sequence[BenchmarkRecord], levels: Sequence[float]
) -> list[tuple[float, float]]:
    """Empirical coverage of central Gaussian credible intervals."""
    from scipy.stats import norm

    rows = [r for r in records if r.posterior_sd is not None]
    out = []
    for level in levels:
        z = float(norm.ppf(0.5 * (1.0 + level)))
        hits = [r.abs_error <= z * r.posterior_sd for r in rows]
        out.append((level, float(np.mean(hits)) if hits else float("nan")))
    return out


# --- CSV I/O ---------------------------------------------------------------


def write_records(records: Sequence[BenchmarkRecord], path: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow(
                [
                    r.method,
                    r.problem,
                    r.n,
                    r.seed,
                    repr(r.abs_error),
                    "" if r.posterior_sd is None else repr(r.posterior_sd),
                    r.wall_time_ns,
                ]
            )


def read_records(path: str) -> list[BenchmarkRecord]:
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ContractError(f"unexpected CSV header {reader.fieldnames}")
        for row in reader:
            records.append(
                BenchmarkRecord(
                    method=row["method"],
                    problem=row["problem"],
                    n=int(row["n"]),
                    seed=int(row["seed"]),
                    abs_error=float(row["abs_error"]),
                    posterior_sd=float(row["posterior_sd"]) if row["posterior_sd"] else None,
                    wall_time_ns=int(row["wall_time_ns"]),
                )
            )
    return records


def read_count_data(path: str) -> list[int]:
    """Single-column headerless CSV of nonnegative integers."""
    out = []
    with open(path, newline="") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            v = int(line)
            if v < 0:
                raise ContractError(f"negative count {v}")
            out.append(v)
    return out


def read_sequences(path: str) -> list[tuple]:
    """One integer-coded sequence per line, symbols separated by whitespace."""
    out = []
    with open(path) as fh:
        for line in fh:
            if line.strip():
                out.append(tuple(int(tok) for tok in line.split()))
    return out


# re-exported training entry points
from .training import (  # noqa: E402
    TrainState,
    cmp_exact_nll,
    cmp_train,
    discrete_ksd,
    potts_exact_log_z,
    potts_nll,
    potts_train,
    synthetic_count_data,
    synthetic_sequences,
)

__all__ = [
    "BenchmarkRecord",
    "ProblemCase",
    "TrainState",
    "calibration_curve",
    "case_a",
    "cmp_exact_nll",
    "potts_exact_log_z",
    "potts_nll",
    "case_b",
    "case_c",
    "case_d",
    "cmp_train",
    "discrete_ksd",
    "empirical_rate",
    "get_case",
    "ground_truth",
    "potts_train",
    "read_count_data",
    "read_records",
    "read_sequences",
    "run_benchmark",
    "synthetic_count_data",
    "synthetic_sequences",
    "write_records",
]
