"""Command line entry point.

    rspmetric run --experiment tau-stats --n 100 --trials 5000 --param k=2,10,50,100
    rspmetric run --config exp.json --workers 4 --out results.json --format json
    rspmetric dump --n 6 --seed 1
    rspmetric dump --n 50 --seed 1 --clusters 0.1

Exit status: 0 on success, 1 if a bound check failed, 2 on a config error.
"""
from __future__ import annotations

import argparse
import json
import sys

from .clustering import build_clusters
from .errors import ConfigError, InvalidParameterError
from .experiments import (
    BOUND_EXPERIMENTS, EXPERIMENTS, FORMATS, ExperimentConfig, render, run_experiment,
    verify_bounds,
)
from .metric import Distribution, all_pairs_shortest_paths, dump_instance, generate_weights

EXIT_OK, EXIT_BOUND_FAILED, EXIT_CONFIG = 0, 1, 2


def parse_value(text: str):
    """JSON literal if it parses, comma list if it has commas, else the string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    if "," in text:
        return [parse_value(t.strip()) for t in text.split(",") if t.strip()]
    return text


def _parse_params(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, val = item.partition("=")
        if not sep or not key:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        out[key.strip()] = parse_value(val.strip())
    return out


def build_config(args) -> ExperimentConfig:
    raw: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read config {args.config}: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        out = raw.pop("output", None)
        if isinstance(out, dict):
            raw["output"], raw["format"] = out.get("path"), out.get("format", raw.get("format"))
        elif out is not None:
            raw["output"] = out
    for key in ("experiment", "trials", "seed", "workers", "format"):
        val = getattr(args, key)
        if val is not None:
            raw[key] = val
    if args.n is not None:
        raw["n"] = args.n
    if args.out is not None:
        raw["output"] = args.out
    params = dict(raw.get("params") or {})
    params.update(_parse_params(args.param))
    raw["params"] = params
    if raw.get("experiment") is None:
        raise ConfigError("no experiment given (use --experiment or a config file)")
    if raw.get("n") is None:
        raise ConfigError("no n given (use --n or a config file)")
    return ExperimentConfig.from_dict(raw)


def cmd_run(args) -> int:
    cfg = build_config(args)
    result = run_experiment(cfg)
    report = verify_bounds(cfg, result) if cfg.experiment in BOUND_EXPERIMENTS else None
    text = render(result, cfg.format, report)
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    for row in result.summary:
        ref = f"  ref {row['reference']:.6g}" if "reference" in row else ""
        se = "nan" if row["se"] is None else f"{row['se']:.3g}"
        print(f"{row['param_tuple']}  {row['statistic']}: mean {row['mean']:.6g} "
              f"(se {se}, n={row['count']}){ref}", file=sys.stderr)
    if report is not None:
        for r in report.rows:
            if not r["passed"]:
                print(f"FAIL {r['param_tuple']} {r['point']}: empirical {r['empirical']:.6g} "
                      f"bound {r['bound']} band {r['band']:.3g}", file=sys.stderr)
        print("bounds: " + ("pass" if report.passed else "FAIL"), file=sys.stderr)
        if not report.passed:
            return EXIT_BOUND_FAILED
    return EXIT_OK


def cmd_dump(args) -> int:
    try:
        g = generate_weights(args.n, args.dist, args.seed)
    except (InvalidParameterError, ValueError) as e:
        raise ConfigError(str(e)) from None
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        if args.clusters is None:
            dump_instance(g, out)
        else:
            if args.clusters < 0:
                raise ConfigError("cluster radius must be >= 0")
            out.write(build_clusters(all_pairs_shortest_paths(g), args.clusters).to_json() + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rspmetric", description=__doc__.split("\n\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a seeded experiment")
    run.add_argument("--config", help="JSON file with experiment, n, trials, seed, params, output")
    run.add_argument("--experiment", choices=EXPERIMENTS)
    run.add_argument("--n", type=int, nargs="+", help="one or more vertex counts")
    run.add_argument("--trials", type=int)
    run.add_argument("--seed", type=int, help="master seed")
    run.add_argument("--param", action="append", metavar="KEY=VALUE",
                     help="experiment parameter, repeatable; lists as a,b,c")
    run.add_argument("--out", help="output path (default stdout)")
    run.add_argument("--format", choices=FORMATS)
    run.add_argument("--workers", type=int, help="worker processes for trials")
    run.set_defaults(func=cmd_run)

    dump = sub.add_parser("dump", help="write one instance (or its clustering)")
    dump.add_argument("--n", type=int, required=True)
    dump.add_argument("--seed", type=int, default=0)
    dump.add_argument("--dist", choices=[d.value for d in Distribution], default="exp1")
    dump.add_argument("--clusters", type=float, metavar="DELTA",
                      help="emit the clustering at this radius as JSON instead of the weights")
    dump.add_argument("--out")
    dump.set_defaults(func=cmd_dump)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
