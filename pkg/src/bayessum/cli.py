"""Command line interface.

Subcommands:

  bench          run an estimator comparison and write the record CSV
  rates          empirical convergence rates from a record CSV
  calibrate      credible-interval coverage from a record CSV
  cmp-train      fit the two-parameter count model by gradient descent
  potts-train    fit the chain Potts model by gradient descent
  validate-kme   compare every closed-form embedding row to brute force
  validate-stein check the zero-mean property of the Stein kernel

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
Output goes to --output, else to $BAYESSUM_OUT, else to stdout or a
default file name.  A --config file of key=value lines supplies
defaults; explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys

import numpy as np

from . import harness
from .distributions import (
    Logarithmic,
    NegBinomial,
    Poisson,
    PottsUnnormalized,
    Skellam,
    UniformCategorical,
    UniformIsing,
    enumerate_support,
    make_rng,
)
from .embeddings import EmbeddingPair, brute_force_kme, kme
from .errors import (
    CapabilityError,
    ContractError,
    DomainError,
    NumericalError,
    SingularGramError,
)
from .kernels import BrownianMin, ExpHamming, Polynomial, SteinDiscrete, Tanimoto

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _load_config(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            for ln, line in enumerate(fh, 1):
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ContractError(f"{path}:{ln}: expected key=value, got {line!r}")
                key, val = line.split("=", 1)
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise ContractError(f"cannot read config file {path}: {exc}")
    return out


def _resolve_output(args, default_name: str | None) -> str | None:
    if args.output:
        return args.output
    env = os.environ.get("BAYESSUM_OUT")
    if env:
        return env
    return default_name


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip()]


def _float_list(text: str) -> list[float]:
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _cmd_bench(args) -> int:
    case = harness.get_case(args.case, L=args.L)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    records = harness.run_benchmark(
        case,
        methods,
        _int_list(args.n_grid),
        list(range(args.seeds)),
        replacement=args.replacement,
    )
    out = _resolve_output(args, f"bench_{args.case}.csv")
    harness.write_records(records, out)
    print(f"wrote {len(records)} records to {out}")
    return EXIT_OK


def _cmd_rates(args) -> int:
    records = harness.read_records(args.input)
    methods = sorted({r.method for r in records})
    for method in methods:
        sub = [r for r in records if r.method == method]
        rate = harness.empirical_rate(sub)
        print(f"{method}: rate {rate:.3f}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    records = harness.read_records(args.input)
    levels = _float_list(args.levels)
    rows = harness.calibration_curve(records, levels)
    for level, coverage in rows:
        print(f"level {level:.2f}: coverage {coverage:.3f}")
    return EXIT_OK


def _write_trace(trace, out: str, param_names: list[str]) -> None:
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "lr", "loss"] + param_names)
        for ts in trace:
            flat = []
            for p in ts.params:
                if np.ndim(p) == 0:
                    flat.append(repr(float(p)))
                else:
                    flat.append(";".join(repr(float(v)) for v in p))
            writer.writerow([ts.iteration, repr(ts.lr), repr(ts.loss)] + flat)


def _cmd_cmp_train(args) -> int:
    if args.data:
        data = harness.read_count_data(args.data)
    else:
        data = harness.synthetic_count_data(seed=args.seed)
    trace = harness.cmp_train(
        data,
        estimator=args.estimator,
        lr=args.lr,
        iters=args.iters,
        seed=args.seed,
    )
    out = _resolve_output(args, f"cmp_train_{args.estimator}.csv")
    _write_trace(trace, out, ["theta1", "theta2"])
    final = trace[-1]
    print(
        f"final theta=({final.params[0]:.4f}, {final.params[1]:.4f}) "
        f"loss {final.loss:.6f}; trace in {out}"
    )
    return EXIT_OK


def _cmd_potts_train(args) -> int:
    if args.data:
        seqs = harness.read_sequences(args.data)
    else:
        seqs = harness.synthetic_sequences(L=args.L, seed=args.seed)
    trace = harness.potts_train(
        seqs,
        estimator=args.estimator,
        lr=args.lr,
        iters=args.iters,
        M=args.anchors,
        N=args.pool,
        seed=args.seed,
    )
    out = _resolve_output(args, f"potts_train_{args.estimator}.csv")
    _write_trace(trace, out, ["h", "J"])
    final = trace[-1]
    nll = harness.potts_nll(seqs, final.params)
    print(f"final exact NLL {nll:.6f}; trace in {out}")
    return EXIT_OK


def _validation_rows():
    return [
        ("poisson/brownian", Poisson(2.0), BrownianMin(), 3),
        ("negbinomial/brownian", NegBinomial(2.0, 0.5), BrownianMin(), 3),
        ("logarithmic/brownian", Logarithmic(0.5), BrownianMin(), 3),
        ("poisson/polynomial", Poisson(2.0), Polynomial(3), 2),
        ("negbinomial/polynomial", NegBinomial(2.0, 0.5), Polynomial(3), 2),
        ("skellam/polynomial", Skellam(1.5, 1.0), Polynomial(3), 2),
        ("ising/exphamming", UniformIsing(4), ExpHamming(0.7), (1, -1, 1, -1)),
        ("categorical/exphamming", UniformCategorical(3, 4), ExpHamming(0.7), (0, 1, 2, 3)),
        ("binary/tanimoto", UniformCategorical(1, 5), Tanimoto(), (1, 0, 1, 1, 0)),
    ]


def _cmd_validate_kme(args) -> int:
    worst = 0.0
    for name, dist, kernel, point in _validation_rows():
        pair = EmbeddingPair(dist, kernel)
        closed = kme(pair, point)
        brute = brute_force_kme(dist, kernel, point, budget=args.budget)
        rel = abs(closed - brute) / max(abs(brute), 1e-300)
        worst = max(worst, rel)
        print(f"{name}: closed {closed:.12g} brute {brute:.12g} rel {rel:.2e}")
    if worst > args.tol:
        print(f"FAIL: worst relative deviation {worst:.2e} exceeds {args.tol:.2e}")
        return EXIT_NUMERICAL
    print(f"OK: worst relative deviation {worst:.2e}")
    return EXIT_OK


def _cmd_validate_stein(args) -> int:
    rng = make_rng(args.seed)
    model = PottsUnnormalized.build(
        h=rng.normal(0, 0.5, size=args.L),
        J=rng.normal(0, 0.5, size=(args.L, args.L)),
        beta=0.7,
        L=args.L,
        S=args.S,
    )
    kernel = SteinDiscrete(ExpHamming(0.7), model)
    support = list(enumerate_support(model))
    logp = model.log_pmf_many(np.array(support))
    probs = np.exp(logp - logp.max())
    probs /= probs.sum()
    worst = 0.0
    for y in support[:: max(1, len(support) // args.probes)][: args.probes]:
        total = sum(p * kernel.eval(x, y) for x, p in zip(support, probs))
        worst = max(worst, abs(total))
        print(f"y={y}: sum_x p(x) k_p(x, y) = {total:.3e}")
    if worst > args.tol:
        print(f"FAIL: worst residual {worst:.2e} exceeds {args.tol:.2e}")
        return EXIT_NUMERICAL
    print(f"OK: worst residual {worst:.2e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayessum", description="Probabilistic quadrature over discrete domains"
    )
    parser.add_argument("--config", help="key=value file of defaults")
    sub = parser.add_subparsers(dest="command", required=True)
    parser.sub_map = {}

    p = parser.sub_map["bench"] = sub.add_parser("bench", help="run an estimator comparison")
    p.add_argument("--case", default="a", choices=["a", "b", "c", "d"])
    p.add_argument("--methods", default="bayessum,mc")
    p.add_argument("--n-grid", default="5,10,20,40,80")
    p.add_argument("--seeds", type=int, default=50)
    p.add_argument("--L", type=int, default=6)
    p.add_argument("--replacement", default="without", choices=["with", "without"])
    p.add_argument("--output")
    p.set_defaults(func=_cmd_bench)

    p = parser.sub_map["rates"] = sub.add_parser("rates", help="empirical convergence rates from a record CSV")
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_rates)

    p = parser.sub_map["calibrate"] = sub.add_parser("calibrate", help="credible-interval coverage from a record CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--levels", default="0.5,0.8,0.9,0.95,0.99")
    p.set_defaults(func=_cmd_calibrate)

    p = parser.sub_map["cmp-train"] = sub.add_parser("cmp-train", help="fit the two-parameter count model")
    p.add_argument("--estimator", default="bq", choices=["bq", "mc"])
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--iters", type=int, default=800)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", help="single-column CSV of counts; synthetic when omitted")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_cmp_train)

    p = parser.sub_map["potts-train"] = sub.add_parser("potts-train", help="fit the chain Potts model")
    p.add_argument("--estimator", default="bq", choices=["bq", "mc"])
    p.add_argument("--lr", type=float, default=0.02)
    p.add_argument("--iters", type=int, default=2000)
    p.add_argument("--anchors", type=int, default=5)
    p.add_argument("--pool", type=int, default=60)
    p.add_argument("--L", type=int, default=6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--data", help="whitespace-separated integer sequences, one per line")
    p.add_argument("--output")
    p.set_defaults(func=_cmd_potts_train)

    p = parser.sub_map["validate-kme"] = sub.add_parser("validate-kme", help="check closed-form embeddings against brute force")
    p.add_argument("--budget", type=int, default=400)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=_cmd_validate_kme)

    p = parser.sub_map["validate-stein"] = sub.add_parser("validate-stein", help="check the Stein kernel zero-mean property")
    p.add_argument("--L", type=int, default=3)
    p.add_argument("--S", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--probes", type=int, default=5)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_validate_stein)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.config:
            defaults = _load_config(args.config)
            sub_parser = parser.sub_map.get(args.command, parser)
            for key, val in defaults.items():
                if hasattr(args, key):
                    current = getattr(args, key)
                    spec = sub_parser.get_default(key)  # flags left at default are overridable
                    if current == spec:
                        setattr(args, key, type(current)(val) if current is not None else val)
        return args.func(args)
    except (ContractError, DomainError, CapabilityError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericalError, SingularGramError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
