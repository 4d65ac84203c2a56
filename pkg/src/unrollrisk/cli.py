"""Command-line surface: formula evaluation, sweeps, verification, training.

Exit codes: 0 success, 1 check failure, 2 usage error, 3 I/O error.
A JSON file passed via --config supplies defaults for the invoked
subcommand; explicit flags override it. All emitted numbers use shortest
round-trip formatting, so identical invocations produce identical bytes.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .estimators import softplus
from .experiment import (DEFAULT_OMEGA, TrainConfig, depth_sweep_csv, ingest_frames,
                         sweep_depth, synthetic_frames)
from .expressivity import c_constant
from .model import KIND_CONST, KIND_IID, ModelParams
from .optimal import best_linear, bilevel_optimal, optimal_omega, scalar_landscape, unrolling_optimal
from .sweep import QUANTITIES, SweepSpec, rows_to_csv, rows_to_json, run_sweep
from .verify import run_suite

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _int_axis(text: str) -> tuple[int, ...]:
    """Comma list and/or lo:hi ranges, e.g. '1,4,16' or '1:500'."""
    values: list[int] = []
    for part in text.split(","):
        if ":" in part:
            lo, hi = part.split(":")
            values.extend(range(int(lo), int(hi) + 1))
        else:
            values.append(int(part))
    return tuple(values)


def _float_axis(text: str) -> tuple[float, ...]:
    return tuple(float(p) for p in text.split(","))


def _kind_axis(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in text.split(","))


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _params_from_args(args, kind: str | None = None, n: int | None = None) -> ModelParams:
    return ModelParams(n=n if n is not None else args.n, mu=args.mu,
                       theta2=args.theta**2, sigma2=args.sigma**2,
                       kind=kind if kind is not None else args.model)


def _add_model_flags(parser, n_default=4):
    parser.add_argument("--model", choices=(KIND_CONST, KIND_IID), default=KIND_CONST)
    parser.add_argument("--n", type=int, default=n_default)
    parser.add_argument("--mu", type=float, default=1.0)
    parser.add_argument("--theta", type=float, default=0.5)
    parser.add_argument("--sigma", type=float, default=1.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="unrollrisk",
                                     description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="evaluate a quantity over a parameter grid")
    p.add_argument("--quantity", choices=QUANTITIES, required=True)
    p.add_argument("--kind", type=_kind_axis, default=(KIND_CONST,))
    p.add_argument("--n", type=_int_axis, default=(4,))
    p.add_argument("--mu", type=_float_axis, default=(1.0,))
    p.add_argument("--theta", type=_float_axis, default=(0.5,))
    p.add_argument("--sigma", type=_float_axis, default=(1.0,))
    p.add_argument("--k", type=_int_axis, default=(1,))
    p.add_argument("--n-steps", type=_int_axis, default=(2,))
    p.add_argument("--omega", type=_float_axis, default=(1.0,))
    p.add_argument("--ratio", default=None,
                   help="NUM/DEN for risk-ratio, sides: linear|bilevel|unrolling|unrolling-optw")
    p.add_argument("--mc-samples", type=int, default=20_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=1, help="0 means all cores")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)

    p = sub.add_parser("verify", help="run an oracle battery and report JSON")
    p.add_argument("--suite", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)

    p = sub.add_parser("train", help="train the regularizer over a list of depths")
    p.add_argument("--k", type=int, default=1)
    _add_model_flags(p, n_default=32)
    p.add_argument("--sigma-noise", type=float, default=None,
                   help="noise level for file data (defaults to --sigma)")
    p.add_argument("--depths", type=_int_axis, default=(1, 2, 4, 8, 16))
    p.add_argument("--omega", type=float, default=DEFAULT_OMEGA)
    p.add_argument("--omega-raw-init", type=float, default=-2.0)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--frames-count", type=int, default=500)
    p.add_argument("--data", default=None, help="signal file; synthetic when omitted")
    p.add_argument("--limit", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)

    p = sub.add_parser("landscape", help="scalar risk landscape over the regularizer value")
    p.add_argument("--n-steps", type=int, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--sigma", type=float, default=0.1)
    p.add_argument("--theta", type=float, default=0.02)
    p.add_argument("--r-max", type=float, default=8.0)
    p.add_argument("--points", type=int, default=1000)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)

    p = sub.add_parser("c-constant", help="odd-depth spectral floor with certified bounds")
    p.add_argument("--n-steps", type=int, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)

    p = sub.add_parser("best-risk", help="closed-form best risk of one estimator class")
    p.add_argument("--quantity", choices=("linear", "bilevel", "unrolling"), required=True)
    _add_model_flags(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n-steps", type=int, default=2)
    p.add_argument("--omega", type=float, default=1.0)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)

    p = sub.add_parser("optimal-omega", help="best stepsize(s) and optimized risk")
    _add_model_flags(p)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--n-steps", type=int, default=2)
    p.add_argument("--out", default=None)
    p.add_argument("--config", default=None)

    return parser


def _cmd_sweep(args) -> int:
    spec = SweepSpec(quantity=args.quantity, kinds=tuple(args.kind), ns=tuple(args.n),
                     mus=tuple(args.mu), thetas=tuple(args.theta), sigmas=tuple(args.sigma),
                     ks=tuple(args.k), depths=tuple(args.n_steps), omegas=tuple(args.omega),
                     ratio=args.ratio, mc_samples=args.mc_samples, seed=args.seed)
    print(f"sweep: {spec.cell_count()} cells", file=sys.stderr)
    rows = run_sweep(spec, threads=args.threads)
    text = rows_to_csv(rows, spec.quantity) if args.format == "csv" else rows_to_json(rows)
    _emit(text, args.out)
    return EXIT_OK


def _cmd_verify(args) -> int:
    report = run_suite(args.suite, args.seed)
    _emit(json.dumps(report, indent=2) + "\n", args.out)
    return EXIT_OK if report["passed"] else EXIT_CHECK_FAILED


def _cmd_train(args) -> int:
    if args.data:
        noise = args.sigma_noise if args.sigma_noise is not None else args.sigma
        data = ingest_frames(args.data, args.n, limit=args.limit, noise_sigma=noise)
    else:
        params = _params_from_args(args)
        data = synthetic_frames(params, args.frames_count, args.seed)
    cfg = TrainConfig(n=args.n, k=args.k, depth=int(args.depths[0]),
                      omega=args.omega, omega_raw_init=args.omega_raw_init,
                      learning_rate=args.lr, steps=args.steps, seed=args.seed)
    rows = sweep_depth(cfg, data, args.depths)
    _emit(depth_sweep_csv(rows), args.out)
    return EXIT_OK


def _cmd_landscape(args) -> int:
    params = ModelParams(n=1, mu=args.mu, theta2=args.theta**2,
                         sigma2=args.sigma**2, kind=KIND_CONST)
    grid = np.linspace(0.0, args.r_max, args.points)
    risks = scalar_landscape(args.n_steps, args.omega, params, grid)
    lines = ["r,risk"] + [f"{repr(float(r))},{repr(float(v))}" for r, v in zip(grid, risks)]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def _cmd_c_constant(args) -> int:
    bounds = c_constant(args.n_steps, args.omega)
    _emit(json.dumps({"branch": bounds.branch, "lower": bounds.lower,
                      "upper": bounds.upper, "value": bounds.value}) + "\n", args.out)
    return EXIT_OK


def _cmd_best_risk(args) -> int:
    params = _params_from_args(args)
    if args.quantity == "linear":
        report = best_linear(params)
    elif args.quantity == "bilevel":
        report = bilevel_optimal(params, args.k)
    else:
        report = unrolling_optimal(params, args.k, args.n_steps, args.omega)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


def _cmd_optimal_omega(args) -> int:
    params = _params_from_args(args)
    report = optimal_omega(params, args.k, args.n_steps)
    _emit(report.to_json() + "\n", args.out)
    return EXIT_OK


_DISPATCH = {
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
    "train": _cmd_train,
    "landscape": _cmd_landscape,
    "c-constant": _cmd_c_constant,
    "best-risk": _cmd_best_risk,
    "optimal-omega": _cmd_optimal_omega,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", default=None)
    known, _ = pre.parse_known_args(argv)
    parser = build_parser()
    if known.config:
        try:
            with open(known.config) as fh:
                config = json.load(fh)
        except OSError as exc:
            print(f"error reading config: {exc}", file=sys.stderr)
            return EXIT_IO
        defaults = {key.replace("-", "_"): value for key, value in config.items()}
        for action in parser._subparsers._group_actions:
            for sp in action.choices.values():
                sp.set_defaults(**defaults)
                for sub_action in sp._actions:
                    if sub_action.dest in defaults:
                        sub_action.required = False
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else EXIT_OK
    try:
        return _DISPATCH[args.command](args)
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except RuntimeError as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
