"""Command-line front end: ``rainbow-qae price|validate|resources``.

Exit codes: 0 success, 2 configuration error, 3 numerical validation failure.
The MC baseline uses ``RAINBOW_QAE_THREADS`` worker threads (default 1);
results do not depend on the thread count.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import io
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import BUNDLED, ConfigError, RunConfig, load_config
from .payoff import PayoffMethod
from .pricing import ConfigurationError, derive_params, price_option
from .resources import infidelity_bound, resource_table, table_to_csv
from .validation import run_checks

log = logging.getLogger("rainbow_qae")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
THREADS_ENV = "RAINBOW_QAE_THREADS"


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV}={raw!r} is not an integer") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be >= 1")
    return n


def _jsonable(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, PayoffMethod):
        return obj.value
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _clean(value):
    # JSON has no NaN or infinity; map them to null
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def _envelope(command: str, run: RunConfig | None, result) -> dict:
    return {
        "command": command,
        "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "config": run.resolved() if run is not None else None,
        "result": result,
    }


def _flatten(d: dict, prefix: str = "") -> dict:
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        elif isinstance(v, (list, tuple)) and all(not isinstance(i, (dict, list)) for i in v):
            out[key] = ";".join(repr(i) if isinstance(i, float) else str(i) for i in v)
        elif not isinstance(v, (list, tuple)):
            out[key] = repr(v) if isinstance(v, float) else v
    return out


def _render(doc: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_clean(doc), indent=2, sort_keys=True, default=_jsonable) + "\n"
    flat = _flatten(json.loads(json.dumps(_clean(doc), default=_jsonable)))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(flat.keys())
    writer.writerow(flat.values())
    return buf.getvalue()


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
        log.info("wrote %s", out)
    else:
        sys.stdout.write(text)


def _load(args) -> RunConfig:
    run = load_config(args.config)
    method = PayoffMethod(args.method) if getattr(args, "method", None) else None
    try:
        return run.replace(
            method=method,
            epsilon=getattr(args, "epsilon", None),
            alpha=getattr(args, "alpha", None),
            seed=getattr(args, "seed", None),
            shots=getattr(args, "shots", None),
            max_power=getattr(args, "max_power", None),
            mc_paths=getattr(args, "mc_paths", None),
        )
    except ConfigurationError as exc:
        raise ConfigError(f"command line: {exc}") from None


def cmd_price(args) -> int:
    run = _load(args)
    report = price_option(run.market, run.pricing, mc_workers=_threads())
    result = report.to_dict()
    elapsed = result.pop("elapsed_seconds")
    fmt = args.format or run.output.format
    _emit(_render(_envelope("price", run, result), fmt), args.out or run.output.report)
    if run.output.telemetry:
        rows = report.rounds_log
        buf = io.StringIO()
        writer = csv.DictWriter(buf, ["k", "shots", "ones", "lower", "upper"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        Path(run.output.telemetry).write_text(buf.getvalue())
    lo, hi = report.price_interval
    print(
        f"price {report.price:.4f} CI [{lo:.4f}, {hi:.4f}]  oracle {report.oracle_price:.4f}"
        f"  MC {report.mc_price:.4f} +- {report.mc_stderr:.4f}  ({elapsed:.1f}s)",
        file=sys.stderr,
    )
    return EXIT_OK


def cmd_validate(args) -> int:
    run = _load(args)
    params = derive_params(run.market, run.pricing)
    checks = run_checks(params, run.pricing, angle_error=args.inject_angle_error)
    for c in checks:
        print(c.line(), file=sys.stderr)
    passed = all(c.passed for c in checks)
    if args.out or args.format:
        result = {"passed": passed, "checks": [c.__dict__ for c in checks]}
        _emit(_render(_envelope("validate", run, result), args.format or "json"), args.out)
    return EXIT_OK if passed else EXIT_VALIDATION


def _k_values(args) -> list[int]:
    if args.k is not None:
        return [args.k]
    if args.k_min < 1 or args.k_max < args.k_min:
        raise ConfigError(f"invalid k range {args.k_min}..{args.k_max}")
    return list(range(args.k_min, args.k_max + 1))


def cmd_resources(args) -> int:
    if args.k is not None and args.k < 1:
        raise ConfigError(f"--k must be >= 1, got {args.k}")
    for eps in args.eps_payoff:
        if not 0 < eps < 1:
            raise ConfigError(f"--eps-payoff must lie in (0, 1), got {eps}")
    methods = [PayoffMethod(args.method)] if args.method else list(PayoffMethod)
    reports = resource_table(_k_values(args), args.eps_payoff, methods, engineering=args.engineering)
    fmt = args.format or "csv"
    if fmt == "csv":
        text = table_to_csv(reports)
    else:
        result = {"t_depth": [r.as_row() for r in reports]}
        run = None
        if args.config:
            run = _load(args)
            params = derive_params(run.market, run.pricing)
            eps = args.epsilon if args.epsilon is not None else run.pricing.epsilon
            result["infidelity"] = []
            for m in methods:
                b = infidelity_bound(m, eps, params.s_max, params=params)
                result["infidelity"].append(
                    {"method": m.value, "epsilon": eps, "s_max": params.s_max,
                     "bound": b.bound, "baseline": b.baseline, "note": b.note}
                )
        text = _render(_envelope("resources", run, result), "json")
    _emit(text, args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rainbow-qae", description="Quantum amplitude-estimation pricing of best-of call options."
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required,
                       help=f"YAML run file or bundled name ({', '.join(BUNDLED)})")
        p.add_argument("--method", choices=[m.value for m in PayoffMethod])
        p.add_argument("--epsilon", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--seed", type=int)
        p.add_argument("--shots", type=int)
        p.add_argument("--out", help="write the report here instead of stdout")
        p.add_argument("--format", choices=["json", "csv"])

    price = sub.add_parser("price", help="run IQAE and report the price with baselines")
    common(price)
    price.add_argument("--max-power", type=int, help="cap on the Grover power")
    price.add_argument("--mc-paths", type=int, help="Monte Carlo paths for the baseline")
    price.set_defaults(func=cmd_price)

    validate = sub.add_parser("validate", help="check circuits against the classical oracle")
    common(validate)
    validate.add_argument("--inject-angle-error", type=float, default=0.0,
                          help="perturb one loading rotation (fault-injection test hook)")
    validate.set_defaults(func=cmd_validate)

    res = sub.add_parser("resources", help="T-depth table of the payoff blocks")
    common(res, config_required=False)
    res.add_argument("--k", type=int, help="single register size")
    res.add_argument("--k-min", type=int, default=1)
    res.add_argument("--k-max", type=int, default=16)
    res.add_argument("--eps-payoff", type=float, nargs="+", default=[0.01])
    res.add_argument("--engineering", action="store_true", help="round each block up to an integer")
    res.set_defaults(func=cmd_resources)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ConfigurationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
