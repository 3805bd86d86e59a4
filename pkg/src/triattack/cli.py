"""Command-line entry point: single-image attack and batch benchmark.

Exit codes: 0 success, 1 attack/bench runtime failure, 2 usage error.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from .attack import AttackConfig, run
from .bench import (
    DEFAULT_THRESHOLDS,
    TERM_INIT_FAILURE,
    load_dataset,
    load_image,
    run_bench,
    save_png,
    write_results,
)
from .errors import TriattackError
from .oracle import HalfspaceOracle, RemoteOracle, SphereOracle
from .taf import read_taf1, write_taf1


class UsageError(Exception):
    """Bad command line or config file; maps to exit code 2."""


# (flag, AttackConfig field, type, CLI default, help). beta-min's default is
# pi/16 written as a shell-friendly decimal (5 places).
_CONFIG_FLAGS = [
    ("--max-queries", "max_queries", int, 1000, "query budget per sample"),
    ("--iters-per-subspace", "iters_per_subspace", int, 2, "angle bisection steps per sampled plane"),
    ("--line-dim", "line_dim", int, 3, "non-zero coefficients in each sampled direction"),
    ("--gamma", "gamma", float, 0.01, "alpha increase on success"),
    ("--lambda", "lam", float, 0.05, "alpha decrease factor on failure (times gamma)"),
    ("--tau", "tau", float, 0.1, "alpha stays within pi/2 +/- tau"),
    ("--freq-ratio", "freq_ratio", float, 0.1, "low-frequency block side ratio"),
    ("--beta-min", "beta_min", float, 0.19635, "lower bound for the angle beta (pi/16)"),
    ("--alpha-init", "alpha_init", float, math.pi / 2, "starting alpha"),
    ("--init-max-resamples", "init_max_resamples", int, 100, "random draws allowed during initialization"),
    ("--init-bisect-tol", "init_bisect_tol", float, 1e-3, "initialization bisection tolerance (RMSE)"),
    ("--boundary-bisect", "boundary_bisect_iters", int, 0, "boundary bisection steps per round (ablation)"),
    ("--early-stop-rmse", "early_stop_rmse", float, None, "stop once the best RMSE reaches this value"),
]

_FIELD_BY_KEY = {flag.lstrip("-").replace("-", "_"): field for flag, field, *_ in _CONFIG_FLAGS}
_FIELD_BY_KEY["input_space"] = "input_space"


def _add_config_flags(parser):
    for flag, field, typ, default, help_text in _CONFIG_FLAGS:
        shown = "none" if default is None else f"{default:g}" if isinstance(default, float) else str(default)
        parser.add_argument(
            flag,
            dest=field,
            type=typ,
            default=argparse.SUPPRESS,
            help=f"{help_text} (default: {shown})",
        )
    # Ablation switch: run the geometry on raw pixels instead of DCT
    # coefficients. Hidden; used for the input-space comparison.
    parser.add_argument(
        "--input-space",
        dest="input_space",
        action="store_true",
        default=argparse.SUPPRESS,
        help=argparse.SUPPRESS,
    )
    parser.add_argument("--config", default=None, help="JSON file with config values; flags override it")
    parser.add_argument("--seed", type=int, default=0, help="random seed (default: 0)")
    parser.add_argument(
        "--oracle-format",
        choices=("taf1", "png"),
        default="taf1",
        help="payload format for remote oracles (default: taf1)",
    )


def _resolve_config(ns):
    """Defaults, then config-file values, then explicit flags. Returns the
    AttackConfig and a JSON-friendly echo of the effective values."""
    effective = {field: default for _, field, _, default, _ in _CONFIG_FLAGS}
    effective["input_space"] = False
    if ns.config:
        try:
            with open(ns.config) as fh:
                file_values = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config file {ns.config}: {exc}") from exc
        if not isinstance(file_values, dict):
            raise UsageError(f"config file {ns.config} must hold a JSON object")
        for key, value in file_values.items():
            field = _FIELD_BY_KEY.get(str(key).replace("-", "_"))
            if field is None:
                raise UsageError(f"unknown config key {key!r} in {ns.config}")
            effective[field] = value
    for field in list(effective):
        if hasattr(ns, field):
            effective[field] = getattr(ns, field)
    try:
        cfg = AttackConfig(**effective)
    except (TypeError, TriattackError) as exc:
        raise UsageError(f"bad configuration: {exc}") from exc
    return cfg, effective


def parse_oracle_spec(spec, fmt="taf1"):
    """Turn an oracle spec string into an oracle factory.

    Forms: "halfspace:<taf1 path>:<b>", "sphere:<taf1 path>:<r>",
    "http:<url>". A factory (not an instance) so the bench driver can give
    every run its own connection.
    """
    scheme, sep, rest = spec.partition(":")
    if not sep or not rest:
        raise UsageError(f"malformed oracle spec {spec!r}")
    if scheme == "http":
        if not (rest.startswith("http://") or rest.startswith("https://")):
            raise UsageError(f"remote oracle spec needs an http(s) URL, got {rest!r}")
        return lambda: RemoteOracle(rest, fmt=fmt)
    if scheme in ("halfspace", "sphere"):
        path, sep2, value = rest.rpartition(":")
        if not sep2:
            raise UsageError(f"{scheme} spec needs <path>:<number>, got {rest!r}")
        try:
            number = float(value)
        except ValueError as exc:
            raise UsageError(f"bad number {value!r} in oracle spec {spec!r}") from exc
        try:
            tensor = read_taf1(path)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load oracle tensor {path!r}: {exc}") from exc
        if scheme == "halfspace":
            return lambda: HalfspaceOracle(tensor, number)
        if number <= 0:
            raise UsageError(f"sphere radius must be positive, got {number}")
        return lambda: SphereOracle(tensor, number)
    raise UsageError(f"unknown oracle scheme {scheme!r}")


def write_trace_csv(path, trace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["query_index", "phase", "candidate_rmse", "best_rmse", "alpha", "outcome"])
        for rec in trace:
            writer.writerow(
                [
                    rec.query_index,
                    rec.phase,
                    repr(float(rec.candidate_rmse)),
                    repr(float(rec.best_rmse)),
                    repr(float(rec.alpha)),
                    rec.outcome,
                ]
            )


def _cmd_attack(ns):
    cfg, echo = _resolve_config(ns)
    factory = parse_oracle_spec(ns.oracle, ns.oracle_format)
    image = load_image(ns.image)
    result = run(image, ns.label, factory(), cfg, np.random.default_rng(ns.seed))

    os.makedirs(ns.out, exist_ok=True)
    outputs = {"trace": os.path.join(ns.out, "trace.csv"), "report": os.path.join(ns.out, "report.json")}
    write_trace_csv(outputs["trace"], result.trace)
    if result.best_adv is not None:
        outputs["adv_taf1"] = os.path.join(ns.out, "adv.taf1")
        outputs["adv_png"] = os.path.join(ns.out, "adv.png")
        write_taf1(outputs["adv_taf1"], result.best_adv)
        save_png(outputs["adv_png"], result.best_adv)
    report = {
        "image": ns.image,
        "label": ns.label,
        "oracle": ns.oracle,
        "seed": ns.seed,
        "config": echo,
        "termination": result.termination,
        "queries_used": result.queries_used,
        "final_rmse": None if math.isinf(result.final_rmse) else result.final_rmse,
        "outputs": outputs,
    }
    with open(outputs["report"], "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(
        f"termination={result.termination} queries={result.queries_used} "
        f"final_rmse={result.final_rmse:.6g}"
    )
    return 1 if result.termination == TERM_INIT_FAILURE else 0


def _parse_thresholds(text):
    try:
        thresholds = tuple(float(tok) for tok in text.split(",") if tok)
    except ValueError as exc:
        raise UsageError(f"bad threshold list {text!r}") from exc
    if not thresholds:
        raise UsageError("threshold list is empty")
    return thresholds


def _cmd_bench(ns):
    cfg, echo = _resolve_config(ns)
    thresholds = _parse_thresholds(ns.thresholds)
    factory = parse_oracle_spec(ns.oracle, ns.oracle_format)
    samples = load_dataset(ns.dataset, ns.labels)
    rows = run_bench(samples, factory, cfg, seed=ns.seed, workers=ns.workers, thresholds=thresholds)
    echo = dict(echo, seed=ns.seed, oracle=ns.oracle, thresholds=list(thresholds))
    csv_path, json_path = write_results(rows, ns.out, thresholds, config=echo)
    with open(json_path) as fh:
        summary = json.load(fh)
    print(f"samples={len(rows)} asr={summary['asr']} results={csv_path}")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="triattack",
        description="Hard-label adversarial attack via triangle geometry in a low-frequency DCT subspace.",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    attack = sub.add_parser("attack", help="attack a single image")
    attack.add_argument("--image", required=True, help="benign image (PNG or taf1)")
    attack.add_argument("--label", required=True, type=int, help="true label of the image")
    attack.add_argument("--oracle", required=True, help="halfspace:<w.taf1>:<b> | sphere:<c.taf1>:<r> | http:<url>")
    attack.add_argument("--out", default="triattack-out", help="output directory (default: triattack-out)")
    _add_config_flags(attack)
    attack.set_defaults(func=_cmd_attack)

    bench = sub.add_parser("bench", help="attack a dataset and aggregate metrics")
    bench.add_argument("--dataset", required=True, help="directory of PNG/taf1 images")
    bench.add_argument("--labels", required=True, help='labels CSV with header "filename,label"')
    bench.add_argument("--oracle", required=True, help="oracle spec (see attack)")
    bench.add_argument(
        "--thresholds",
        default=",".join(f"{t:g}" for t in DEFAULT_THRESHOLDS),
        help="comma-separated RMSE thresholds (default: 0.1,0.05,0.01)",
    )
    bench.add_argument("--workers", type=int, default=1, help="concurrent attacks (default: 1)")
    bench.add_argument("--out", default="triattack-bench", help="output directory (default: triattack-bench)")
    _add_config_flags(bench)
    bench.set_defaults(func=_cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return ns.func(ns)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (TriattackError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
