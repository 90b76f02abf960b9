"""Command-line entry point: preflight, simulate, analyse, export.

Exit codes: 0 success, 2 configuration error, 3 preflight violation,
4 divergence.
"""
from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import config as cfgmod
from . import report, scenarios
from .errors import ConfigError, Diverged, NlpAdaptError, NotTerminated, PreflightFailed
from .scenarios import wheel

EXIT_OK, EXIT_CONFIG, EXIT_PREFLIGHT, EXIT_DIVERGED = 0, 2, 3, 4

PRESETS = {
    "abs-fixed-slip": ("abs", "x3_star", ["adaptive", "0.10", "0.12", "0.14", "0.16", "0.18", "0.20"]),
}


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlpadapt", description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", help="one of: " + ", ".join(scenarios.REGISTRY))
    ap.add_argument("--config", help="INI file with [run], [params] and [pe] sections")
    ap.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    ap.add_argument("--out", default="out", help="output directory")
    ap.add_argument("--sweep", metavar="AXIS=V1,V2,...")
    ap.add_argument("--preset", choices=sorted(PRESETS))
    ap.add_argument("--h", type=float)
    ap.add_argument("--tf", type=float)
    ap.add_argument("--jobs", type=int, default=1, help="parallel sweep rows")
    ap.add_argument("--skip-preflight", action="store_true")
    return ap


def resolve(args) -> cfgmod.RunSpec:
    spec = cfgmod.load(args.config) if args.config else cfgmod.RunSpec()
    if args.preset:
        spec.scenario = PRESETS[args.preset][0]
    if args.scenario:
        spec.scenario = args.scenario
    for item in args.overrides:
        cfgmod.apply_override(spec, item)
    if args.h is not None:
        spec.h = args.h
    if args.tf is not None:
        spec.tf = args.tf
    for name, v in (("h", spec.h), ("tf", spec.tf)):
        if v is not None and not v > 0:
            raise ConfigError(f"{name} must be positive", key=name)
    if spec.scenario not in scenarios.REGISTRY:
        raise ConfigError(f"unknown scenario {spec.scenario!r}", key="scenario")
    return spec


def execute(spec: cfgmod.RunSpec, skip_preflight=False):
    """Preflight, simulation and analysis for one configuration.

    Returns ``(scenario, cfg, checks, trace, analysis, braking)``.
    """
    sc = scenarios.get(spec.scenario)
    cfg = cfgmod.build_config(sc.config_cls, spec.params)
    try:
        checks = [] if skip_preflight else sc.preflight(cfg)
    except ValueError as exc:
        raise ConfigError(f"invalid {sc.config_cls.__name__}: {exc}") from None
    failed = [c.name for c in checks if not c.passed]
    if failed:
        raise PreflightFailed("preflight failed: " + ", ".join(failed))
    try:
        sc.build(cfg)
    except ValueError as exc:
        raise ConfigError(f"invalid {sc.config_cls.__name__}: {exc}") from None
    trace = sc.run(cfg, h=spec.h, tf=spec.tf)
    analysis = report.analyze(trace, spec.pe_L, spec.pe_stride, single_parameter=not sc.wheel, pe_delta=spec.pe_delta)
    braking = None
    if sc.wheel:
        try:
            braking = wheel.braking_distance(trace)
        except NotTerminated as exc:
            analysis.notes.append(f"braking distance unavailable: {exc}")
    return sc, cfg, checks, trace, analysis, braking


def _single(spec, out, skip_preflight) -> int:
    sc, cfg, checks, trace, analysis, braking = execute(spec, skip_preflight)
    os.makedirs(out, exist_ok=True)
    pe = analysis.pe.series if analysis.pe is not None else None
    report.export_csv(trace, os.path.join(out, "trace.csv"), pe)
    text = report.summary_text(sc.name, cfg, spec.overrides, checks, trace, analysis, braking)
    with open(os.path.join(out, "summary.txt"), "w", encoding="ascii") as fh:
        fh.write(text)
    sys.stdout.write(text)
    return EXIT_OK


def _row(job):
    spec, axis, value, skip_preflight = job
    try:
        sub = cfgmod.RunSpec(**{**spec.__dict__, "params": dict(spec.params), "overrides": list(spec.overrides)})
        cfgmod.apply_override(sub, f"{axis}={value}")
        sc, cfg, checks, trace, analysis, braking = execute(sub, skip_preflight)
        metric = braking if braking is not None else analysis.terminal_error
        return [value, trace.status, f"{metric:.10g}", ""]
    except Diverged as exc:
        return [value, "diverged", "", str(exc)]
    except NlpAdaptError as exc:
        return [value, "error", "", f"{type(exc).__name__}: {exc}"]


def _sweep(spec, axis, values, out, jobs, skip_preflight) -> int:
    if axis.rpartition(".")[2] not in ("h", "tf"):
        cls = scenarios.get(spec.scenario).config_cls
        cfgmod.coerce_param(cls, axis.rpartition(".")[2], values[0] if values else "0")
    elif "." not in axis:
        axis = f"run.{axis}"
    metric = "braking_distance" if scenarios.get(spec.scenario).wheel else "terminal_error"
    work = [(spec, axis, v, skip_preflight) for v in values]
    if jobs > 1 and len(work) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_row, work))
    else:
        rows = [_row(w) for w in work]
    os.makedirs(out, exist_ok=True)
    header = [axis.rpartition(".")[2], "status", metric, "error"]
    with open(os.path.join(out, "sweep.csv"), "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    sys.stdout.write(f"scenario: {spec.scenario}\n")
    sys.stdout.write("\t".join(header) + "\n")
    for r in rows:
        sys.stdout.write("\t".join(str(c) for c in r) + "\n")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        spec = resolve(args)
        if args.preset:
            _, axis, values = PRESETS[args.preset]
            return _sweep(spec, axis, values, args.out, args.jobs, args.skip_preflight)
        if args.sweep:
            if "=" not in args.sweep:
                raise ConfigError(f"sweep {args.sweep!r} is not axis=v1,v2,...", key=args.sweep)
            axis, raw = args.sweep.split("=", 1)
            values = [v.strip() for v in raw.split(",") if v.strip()]
            return _sweep(spec, axis.strip(), values, args.out, args.jobs, args.skip_preflight)
        return _single(spec, args.out, args.skip_preflight)
    except ConfigError as exc:
        where = f" (line {exc.line})" if exc.line else ""
        key = f" [key: {exc.key}]" if exc.key else ""
        print(f"config error{where}{key}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PreflightFailed as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_PREFLIGHT
    except Diverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except NlpAdaptError as exc:
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
