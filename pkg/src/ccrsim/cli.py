"""Command-line front end: region computation, single runs, sweeps, study.

Every invocation writes a manifest next to its outputs recording the
resolved configuration, seed, package version and wall-clock time, so any
output file can be traced back to the exact command that produced it.
Randomized subcommands either take an explicit --seed or draw one and
print it; silent nondeterminism is not allowed.

Exit codes: 0 success, 2 bad flags/config/model file, 3 violated
precondition or unreachable configuration, 4 internal assertion failure.
"""

from __future__ import annotations

import argparse
import json
import secrets
import sys
import time
from pathlib import Path
from typing import Optional

from . import __version__
from .alg2 import MixParams
from .erasure import (
    CaseLabel,
    ErasureModel,
    ModelError,
    PreconditionError,
    classify_case,
    model_from_dict,
)
from .experiments import (
    GridSpec,
    convergence_sweep,
    deviation_study,
    make_policy,
    write_deviation_csv,
)
from .regions import (
    RatePair,
    inner_bound_max_r2,
    outer_bound_max_r2,
    r1_upper_bound,
    t_hat,
)
from .simcore import ConfigError, DecodeError, SimConfig, run_loop

EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_INTERNAL = 4


class CliError(Exception):
    def __init__(self, message: str, code: int) -> None:
        super().__init__(message)
        self.code = code


def _load_model(path: str) -> ErasureModel:
    try:
        with open(path) as fh:
            raw = json.load(fh, parse_float=str)  # keep decimals exact
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read model {path}: {exc}", EXIT_CONFIG) from exc
    return model_from_dict(raw)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    seed = secrets.randbits(63)
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _write_manifest(out_path: Optional[str], subcommand: str, config: dict,
                    seed: Optional[int], outputs: list[str], started: float) -> None:
    manifest = {
        "subcommand": subcommand,
        "config": config,
        "seed": seed,
        "version": __version__,
        "outputs": outputs,
        "wall_clock_s": round(time.time() - started, 3),
    }
    if out_path:
        path = Path(out_path).with_suffix(Path(out_path).suffix + ".manifest.json")
        path.write_text(json.dumps(manifest, indent=2) + "\n")
    else:
        print(json.dumps({"manifest": manifest}), file=sys.stderr)


def _emit(text: str, out: Optional[str]) -> list[str]:
    if out:
        Path(out).write_text(text)
        return [out]
    sys.stdout.write(text)
    return []


def _cmd_classify(args) -> int:
    model = _load_model(args.model)
    label = classify_case(model)
    payload = {"case": label.value, "B": r1_upper_bound(model)}
    print(json.dumps(payload))
    return 0


def _cmd_region(args) -> int:
    started = time.time()
    model = _load_model(args.model)
    label = classify_case(model)
    cap = r1_upper_bound(model)
    points = args.r1_points
    samples = []
    for i in range(points):
        r1 = cap * i / (points - 1) if points > 1 else 0.0
        outer = outer_bound_max_r2(model, r1)
        if label is CaseLabel.CASE3:
            inner = inner_bound_max_r2(model, r1)
        else:
            inner = outer  # achievable region coincides with the bound
        samples.append({"R1": r1, "outer_R2": outer, "inner_R2": inner})
    if args.format == "json":
        text = json.dumps(
            {"case": label.value, "B": cap, "samples": samples}, indent=2
        ) + "\n"
    else:
        lines = ["case,R1,outer_R2,inner_R2"]
        for s in samples:
            lines.append(
                f"{label.value},{s['R1']:.12g},{s['outer_R2']:.12g},{s['inner_R2']:.12g}"
            )
        text = "\n".join(lines) + "\n"
    outputs = _emit(text, args.out)
    _write_manifest(args.out, "region", _public_args(args), None, outputs, started)
    return 0


def _mix_params(args) -> Optional[MixParams]:
    if args.alg == "alg2":
        return MixParams(g=args.g, s=args.s, u=args.u)
    if args.g or args.s or args.u:
        raise CliError("--g/--s/--u require --alg alg2", EXIT_CONFIG)
    return None


def _cmd_simulate(args) -> int:
    started = time.time()
    model = _load_model(args.model)
    params = _mix_params(args)
    seed = _resolve_seed(args)
    config = SimConfig(model, args.k1, args.k2, seed=seed, deadline=args.n)
    trace_records = []
    trace_cb = trace_records.append if args.trace else None
    result = run_loop(config, make_policy(args.alg, params), trace=trace_cb)
    outputs = []
    if args.trace:
        with open(args.trace, "w") as fh:
            for rec in trace_records:
                fh.write(json.dumps(rec) + "\n")
        outputs.append(args.trace)
    text = json.dumps(result.to_dict(), indent=2) + "\n"
    outputs += _emit(text, args.out)
    _write_manifest(args.out, "simulate", _public_args(args), seed, outputs, started)
    return 0


def _cmd_sweep(args) -> int:
    started = time.time()
    model = _load_model(args.model)
    params = _mix_params(args)
    seed = _resolve_seed(args)
    rates = RatePair(args.r1, args.r2)
    n_list = [int(v) for v in args.n_list.split(",")]
    seeds = [seed + i for i in range(args.seeds)]
    rows = convergence_sweep(
        model, rates, n_list, seeds, algorithm=args.alg, params=params
    )
    if args.format == "json":
        text = json.dumps(rows, indent=2) + "\n"
    else:
        lines = ["n,mean_T_over_n,stderr,t_hat,seeds"]
        for r in rows:
            lines.append(
                f"{r['n']},{r['mean_T_over_n']:.9g},{r['stderr']:.6g},"
                f"{r['t_hat']:.12g},{r['seeds']}"
            )
        text = "\n".join(lines) + "\n"
    outputs = _emit(text, args.out)
    _write_manifest(args.out, "sweep", _public_args(args), seed, outputs, started)
    return 0


def _grid_from_args(args) -> GridSpec:
    kwargs = {}
    if args.grid != "default":
        try:
            with open(args.grid) as fh:
                kwargs = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise CliError(f"cannot read grid {args.grid}: {exc}", EXIT_CONFIG) from exc
        if "link_probs" in kwargs:
            kwargs["link_probs"] = tuple(str(p) for p in kwargs["link_probs"])
        if "r1_fracs" in kwargs:
            kwargs["r1_fracs"] = tuple(float(f) for f in kwargs["r1_fracs"])
    if args.r1_steps:
        kwargs["r1_step_rule"] = {"frac": "fraction", "absolute": "absolute"}[
            args.r1_steps
        ]
    try:
        return GridSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad grid spec: {exc}", EXIT_CONFIG) from exc


def _cmd_deviation(args) -> int:
    started = time.time()
    grid = _grid_from_args(args)
    study = deviation_study(grid, jobs=args.jobs)
    outputs = []
    if args.out:
        with open(args.out, "w") as fh:
            write_deviation_csv(study.records, fh)
        outputs.append(args.out)
    summary_text = json.dumps(study.summary, indent=2) + "\n"
    if args.summary:
        Path(args.summary).write_text(summary_text)
        outputs.append(args.summary)
    else:
        sys.stdout.write(summary_text)
    _write_manifest(
        args.out or args.summary, "deviation", _public_args(args), None, outputs,
        started,
    )
    return 0


def _public_args(args) -> dict:
    skip = {"func"}
    return {k: v for k, v in vars(args).items() if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccrsim",
        description="Cooperative relaying over erasure channels: "
        "simulate, bound, and sweep.",
    )
    parser.add_argument("--config", help="JSON file of defaults; flags win")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("classify", help="case label and primary-rate cap")
    p.add_argument("--model", required=True)
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("region", help="outer/inner rate boundaries on an R1 grid")
    p.add_argument("--model", required=True)
    p.add_argument("--r1-points", type=int, default=21)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.set_defaults(func=_cmd_region)

    p = sub.add_parser("simulate", help="one run, full result JSON")
    p.add_argument("--model", required=True)
    p.add_argument("--alg", choices=("alg1", "alg2"), default="alg1")
    p.add_argument("--k1", type=int, required=True)
    p.add_argument("--k2", type=int, required=True)
    p.add_argument("--g", type=float, default=0.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--u", type=float, default=0.0)
    p.add_argument("--n", type=int, help="slot deadline; omitted = run to completion")
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", help="write per-slot JSON-lines trace here")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="empirical T/n vs the completion-time law")
    p.add_argument("--model", required=True)
    p.add_argument("--alg", choices=("alg1", "alg2"), default="alg1")
    p.add_argument("--r1", type=float, required=True)
    p.add_argument("--r2", type=float, required=True)
    p.add_argument("--g", type=float, default=0.0)
    p.add_argument("--s", type=float, default=0.0)
    p.add_argument("--u", type=float, default=0.0)
    p.add_argument("--n-list", default="1000,10000,100000")
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("deviation", help="outer/inner gap study over the grid")
    p.add_argument("--grid", default="default", help="'default' or a JSON GridSpec")
    p.add_argument("--r1-steps", choices=("frac", "absolute"))
    p.add_argument("--out", help="CSV of all cells")
    p.add_argument("--summary", help="summary JSON path (default: stdout)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=_cmd_deviation)
    return parser


def _apply_config_defaults(argv: list[str]) -> list[str]:
    """Fold --config file values in as flags; explicit flags win.

    Config keys map to subcommand flags (``r1_points`` -> ``--r1-points``),
    values must be scalars.  Injected flags go last, which is safe because
    any flag already present in argv is skipped.
    """
    if "--config" not in argv:
        return argv
    idx = argv.index("--config")
    if idx + 1 >= len(argv):
        raise CliError("--config needs a path", EXIT_CONFIG)
    path = argv[idx + 1]
    try:
        with open(path) as fh:
            defaults = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError(f"cannot read config {path}: {exc}", EXIT_CONFIG) from exc
    if not isinstance(defaults, dict):
        raise CliError("config file must hold a JSON object", EXIT_CONFIG)
    argv = argv[:idx] + argv[idx + 2 :]
    injected: list[str] = []
    for key, value in defaults.items():
        flag = "--" + str(key).replace("_", "-")
        if flag in argv:
            continue
        injected += [flag, str(value)]
    return argv + injected


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _apply_config_defaults(argv)
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ModelError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PreconditionError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (DecodeError, AssertionError) as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return 0


if __name__ == "__main__":
    sys.exit(main())
