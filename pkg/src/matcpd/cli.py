"""Command-line interface: ``matcpd {detect,segment,simulate,bench-size,bench-power,bench-estimate}``."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import bench
from .bootstrap import BootstrapConfig, MultiplierScheme
from .core import ADAPTIVE_NORMS, parse_norm
from .errors import ConfigError, MatcpdError
from .inference import adaptive_test, low_cost_adaptive_test, mode_specific_test
from .io import ingest, write_curves_csv, write_long_csv
from .report import dumps, make_report
from .segmentation import binary_segmentation, estimate_changepoint
from .simulate import SHIFT_SCENARIOS, CovarianceSpec, ScenarioSpec, generate_series, scenario_shift


SEED_ENV = "MATCPD_SEED"


EXIT_CODES = {"config": 2, "schema": 3, "parse": 3, "invalid-data": 3, "boundary": 4, "numerical": 5, "logic": 6}

# magnitude grids for 20x20, N=250, u=125, Cov4 with MAD rescaling


POWER_GRIDS = {
    "10-1mode": (0.0, 0.15, 0.25, 0.35, 0.45, 0.6),
    "40-1mode": (0.0, 0.1, 0.15, 0.2, 0.25, 0.35),
    "40-2modes": (0.0, 0.1, 0.15, 0.2, 0.25, 0.35),
    "36-block": (0.0, 0.15, 0.25, 0.3, 0.4, 0.5),
    "10-random": (0.0, 0.2, 0.35, 0.45, 0.55, 0.7),
    "40-random": (0.0, 0.15, 0.25, 0.3, 0.4, 0.5),
}


def resolve_seed(arg: int | None) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env, 0)
    except ValueError:
        raise ConfigError(f"{SEED_ENV}={env!r} is not an integer") from None


def resolve_nu(value: str, n_obs: int) -> int:
    if value == "auto":
        return max(1, int(0.2 * n_obs))
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"--nu must be an integer or 'auto', got {value!r}") from None


def _scheme(args) -> MultiplierScheme:
    if not args.dependent:
        return MultiplierScheme()
    bw = args.bandwidth if args.bandwidth == "auto" else float(args.bandwidth)
    return MultiplierScheme("dependent", bandwidth=bw)


def _norms(text: str):
    if text == "all":
        return ADAPTIVE_NORMS
    try:
        norms = tuple(parse_norm(t) for t in text.split(",") if t.strip())
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    if not norms:
        raise ConfigError("--norms is empty")
    return norms


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.split(",") if v.strip())


def _common_config(args) -> dict:
    return {
        "B": args.B,
        "alpha": args.alpha,
        "gamma": args.gamma,
        # thread count changes wall clock only, so it is not echoed
        "scheme": _scheme(args).to_dict(),
    }


def _write_text(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _curves_path(args) -> Path | None:
    if args.curves:
        return Path(args.curves)
    if args.out:
        out = Path(args.out)
        return out.with_name(out.stem + "_curves.csv")
    return None


def cmd_detect(args, seed: int) -> tuple[dict, dict]:
    x, zero = ingest(args.data, mad=not args.no_mad_scale)
    nu = resolve_nu(args.nu, x.N)
    norms = _norms(args.norms)
    cfg = BootstrapConfig(args.B, _scheme(args), seed)
    config = {
        "data": str(args.data),
        "mad_scale": not args.no_mad_scale,
        "nu": nu,
        "norms": [s.label for s in norms],
        "calibration": "low-cost" if args.low_cost else "parallel",
        **_common_config(args),
    }
    if len(norms) == 1:
        res = mode_specific_test(x, norms[0], nu, args.alpha, cfg, gamma=args.gamma, threads=args.threads)
        singles = (res,)
    else:
        run = low_cost_adaptive_test if args.low_cost else adaptive_test
        res = run(x, nu, args.alpha, cfg, norms=norms, gamma=args.gamma, threads=args.threads)
        singles = res.per_norm
    estimate = estimate_changepoint(res) if res.reject else None
    curves_path = _curves_path(args)
    if curves_path is not None:
        write_curves_csv({r.spec.label: r.curve for r in singles}, singles[0].curve_start, curves_path)
    result = {
        "N": x.N,
        "p1": x.p1,
        "p2": x.p2,
        "zero_scale_components": int(zero.sum()),
        "test": res.summary(),
        "verdict": "reject" if res.reject else "fail-to-reject",
        "estimated_epoch": None if estimate is None else estimate.epoch,
        "curves_csv": None if curves_path is None else str(curves_path),
    }
    return config, result


def cmd_segment(args, seed: int) -> tuple[dict, dict]:
    x, zero = ingest(args.data, mad=not args.no_mad_scale)
    nu = resolve_nu(args.nu, x.N)
    norms = _norms(args.norms)
    cfg = BootstrapConfig(args.B, _scheme(args), seed)
    config = {
        "data": str(args.data),
        "mad_scale": not args.no_mad_scale,
        "nu": nu,
        "norms": [s.label for s in norms],
        "threshold": args.threshold,
        **_common_config(args),
    }
    seg = binary_segmentation(
        x, nu, args.alpha, cfg, norms=norms, gamma=args.gamma, threshold=args.threshold, threads=args.threads
    )
    result = {
        "N": x.N,
        "p1": x.p1,
        "p2": x.p2,
        "zero_scale_components": int(zero.sum()),
        "change_points": list(seg.change_points),
        "segment_means": seg.segment_means,
        "nodes": [r.summary() for r in seg.per_node],
    }
    return config, result


def _scenario_from_args(args, seed: int) -> ScenarioSpec:
    if args.config:
        try:
            d = json.loads(Path(args.config).read_text(encoding="utf-8"))
            d.setdefault("seed", seed)
            return ScenarioSpec.from_dict(d)
        except (json.JSONDecodeError, TypeError, KeyError, AttributeError) as exc:
            raise ConfigError(f"invalid scenario config {args.config}: {exc}") from None
    cps = ()
    if args.scenario and args.magnitude != 0.0:
        shift = scenario_shift(args.scenario, args.magnitude, args.shift_seed)
        us = args.u if args.u else [args.N // 2]
        cps = tuple((u, shift) for u in us)
    cov = CovarianceSpec(args.cov)
    return ScenarioSpec(args.N, args.p1, args.p2, cps, cov, args.noise, args.ar_rho, seed)


def cmd_simulate(args, seed: int) -> tuple[dict, dict]:
    if not args.data_out:
        raise ConfigError("simulate needs --data-out for the generated CSV")
    spec = _scenario_from_args(args, seed)
    x = generate_series(spec)
    write_long_csv(x, args.data_out)
    return {"scenario": spec.to_dict()}, {
        "data_csv": str(args.data_out),
        "N": x.N,
        "p1": x.p1,
        "p2": x.p2,
        "true_changepoints": list(spec.true_changepoints),
    }


def _apply_scale(args) -> None:
    if args.full_scale:
        args.reps = bench.FULL_SCALE["reps"]
        args.B = bench.FULL_SCALE["B"]


def _write_grid(rows: list[dict], path: str | None, keys: list[str]) -> None:
    if not path:
        return
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        fh.write(",".join([*keys, "method", "rate", "se", "reps"]) + "\n")
        for row in rows:
            vals = [str(row[k]) for k in keys] + [row["method"], repr(row["rate"]), repr(row["se"]), str(row["reps"])]
            fh.write(",".join(vals) + "\n")


def cmd_bench_size(args, seed: int) -> tuple[dict, dict]:
    _apply_scale(args)
    cells = []
    for n_obs in args.N:
        for cov in args.cov:
            nu = None if args.nu == "auto" else int(args.nu)
            cells.append(bench.SizeCell(n_obs, args.p1, args.p2, CovarianceSpec(cov), args.noise, args.ar_rho, nu))
    out = bench.bench_size(
        cells, args.reps, args.B, args.alpha, seed,
        scheme=_scheme(args), gamma=args.gamma, mad=not args.no_mad_scale, threads=args.threads,
    )
    flat = [{**{k: v for k, v in r.items() if k != "cell"}, **r["cell"], "covariance": r["cell"]["covariance"]["kind"]} for r in out["table"]]
    _write_grid(flat, args.grid_csv, ["N", "p1", "p2", "covariance", "nu"])
    config = {"cells": [c.to_dict() for c in cells], "reps": args.reps, "mad_scale": not args.no_mad_scale, **_common_config(args)}
    return config, {"table": out["table"]}


def cmd_bench_power(args, seed: int) -> tuple[dict, dict]:
    _apply_scale(args)
    scenarios = args.scenarios.split(",") if args.scenarios != "all" else list(SHIFT_SCENARIOS)
    for s in scenarios:
        if s not in SHIFT_SCENARIOS:
            raise ConfigError(f"unknown scenario {s!r}; choose from {sorted(SHIFT_SCENARIOS)}")
    grids = {s: _floats(args.magnitudes) if args.magnitudes else POWER_GRIDS[s] for s in scenarios}
    nu = None if args.nu == "auto" else int(args.nu)
    out = bench.bench_power(
        scenarios, grids, args.reps, args.B, args.alpha, seed,
        N=args.N, p1=args.p1, p2=args.p2, u=args.u, covariance=CovarianceSpec(args.cov),
        nu=nu, gamma=args.gamma, mad=not args.no_mad_scale, threads=args.threads,
    )
    _write_grid(out["table"], args.grid_csv, ["scenario", "magnitude"])
    config = {
        "scenarios": scenarios,
        "magnitudes": {s: list(g) for s, g in grids.items()},
        "N": args.N,
        "p1": args.p1,
        "p2": args.p2,
        "u": args.N // 2 if args.u is None else args.u,
        "covariance": CovarianceSpec(args.cov).to_dict(),
        "nu": bench.default_nu(args.N) if nu is None else nu,
        "reps": args.reps,
        "mad_scale": not args.no_mad_scale,
        **_common_config(args),
    }
    return config, {"table": out["table"]}


def cmd_bench_estimate(args, seed: int) -> tuple[dict, dict]:
    _apply_scale(args)
    scenario = None if args.scenario == "none" else args.scenario
    nu = 40 if args.nu == "auto" else int(args.nu)
    out = bench.bench_estimate(
        scenario, args.magnitude, args.reps, args.B, args.alpha, seed,
        N=args.N, p1=args.p1, p2=args.p2, n_changes=args.n_changes, nu=nu,
        covariance=CovarianceSpec(args.cov), gamma=args.gamma, mad=not args.no_mad_scale, threads=args.threads,
    )
    config = {
        "scenario": args.scenario,
        "magnitude": args.magnitude,
        "N": args.N,
        "p1": args.p1,
        "p2": args.p2,
        "n_changes": args.n_changes,
        "nu": nu,
        "covariance": CovarianceSpec(args.cov).to_dict(),
        "reps": args.reps,
        "mad_scale": not args.no_mad_scale,
        **_common_config(args),
    }
    result = {"table": out["table"], "counts": out["counts"], "ari": out["ari"]}
    return config, result


def _add_common(p: argparse.ArgumentParser, B: int = 400) -> None:
    p.add_argument("--nu", default="auto", help="boundary removal parameter or 'auto' (default: auto)")
    p.add_argument("--B", type=int, default=B, help=f"bootstrap replicates (default: {B})")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--gamma", type=float, default=0.5, help="CUSUM scaling exponent (default: 0.5)")
    p.add_argument("--dependent", action="store_true", help="dependent multipliers (quadratic spectral kernel)")
    p.add_argument("--bandwidth", default="auto", help="kernel bandwidth: 'auto' or a positive number")
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None, help=f"master seed (fallback: ${SEED_ENV}, then 0)")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--no-mad-scale", action="store_true", help="skip per-component MAD rescaling")
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="matcpd", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("detect", "test for a single mean change"), ("segment", "binary segmentation")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("data", help="long CSV with header t,i,j,x")
        _add_common(p)
        p.add_argument("--norms", default="all", help="comma list of mode1,mode2,dot,max (default: all)")
        if name == "detect":
            p.add_argument("--low-cost", action="store_true", help="leave-one-out calibration of the adaptive test")
            p.add_argument("--curves", default=None, help="CUSUM curve CSV (default: next to --out)")
        else:
            p.add_argument("--threshold", type=int, default=1, help="cluster distance for argmax aggregation")

    p = sub.add_parser("simulate", help="generate a matrix series as long CSV")
    p.add_argument("--config", default=None, help="JSON scenario file (overrides the flags below)")
    p.add_argument("--N", type=int, default=250)
    p.add_argument("--p1", type=int, default=5)
    p.add_argument("--p2", type=int, default=10)
    p.add_argument("--scenario", choices=sorted(SHIFT_SCENARIOS), default=None)
    p.add_argument("--magnitude", type=float, default=0.0)
    p.add_argument("--u", type=int, action="append", help="change point (repeatable; default N/2)")
    p.add_argument("--shift-seed", type=int, default=0)
    p.add_argument("--cov", default="cov1")
    p.add_argument("--noise", choices=("iid", "ar1"), default="iid")
    p.add_argument("--ar-rho", type=float, default=0.0)
    p.add_argument("--seed", type=lambda s: int(s, 0), default=None)
    p.add_argument("--data-out", default=None, help="CSV path for the generated series")
    p.add_argument("--out", default=None, help="JSON report path (default: stdout)")

    for name in ("bench-size", "bench-power", "bench-estimate"):
        p = sub.add_parser(name, help=f"Monte Carlo {name[6:]} study")
        _add_common(p, B=bench.DESK_SCALE["B"])
        p.add_argument("--reps", type=int, default=bench.DESK_SCALE["reps"] if name == "bench-size" else 300 if name == "bench-power" else 200)
        p.add_argument("--full-scale", action="store_true", help="R=1000, B=400")
        p.add_argument("--p1", type=int, default=5 if name == "bench-size" else 20)
        p.add_argument("--p2", type=int, default=10 if name == "bench-size" else 20)
        if name == "bench-size":
            p.add_argument("--N", type=int, nargs="+", default=[250])
            p.add_argument("--cov", nargs="+", default=["cov1", "cov4"])
            p.add_argument("--noise", choices=("iid", "ar1"), default="iid")
            p.add_argument("--ar-rho", type=float, default=0.0)
        else:
            p.add_argument("--N", type=int, default=250)
        if name == "bench-power":
            p.add_argument("--cov", default="cov4")
            p.add_argument("--scenarios", default="all")
            p.add_argument("--magnitudes", default=None, help="comma list applied to every scenario")
            p.add_argument("--u", type=int, default=None)
        if name == "bench-estimate":
            p.add_argument("--cov", default="cov1")
            p.add_argument("--scenario", default="40-1mode", help="shift scenario or 'none'")
            p.add_argument("--magnitude", type=float, default=1.0)
            p.add_argument("--n-changes", type=int, default=3)
        if name != "bench-estimate":
            p.add_argument("--grid-csv", default=None, help="CSV of the rate table")
    return parser


COMMANDS = {
    "detect": cmd_detect,
    "segment": cmd_segment,
    "simulate": cmd_simulate,
    "bench-size": cmd_bench_size,
    "bench-power": cmd_bench_power,
    "bench-estimate": cmd_bench_estimate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        seed = resolve_seed(args.seed)
        if getattr(args, "threads", 1) < 1:
            raise ConfigError("--threads must be >= 1")
        config, result = COMMANDS[args.command](args, seed)
    except MatcpdError as exc:
        sys.stderr.write(json.dumps({"error": exc.code, "message": str(exc)}) + "\n")
        return EXIT_CODES.get(exc.code, 1)
    except (OSError, ValueError) as exc:
        sys.stderr.write(json.dumps({"error": "io" if isinstance(exc, OSError) else "config", "message": str(exc)}) + "\n")
        return 1 if isinstance(exc, OSError) else 2
    report = make_report(args.command, config, result, seed, time.perf_counter() - t0)
    _write_text(dumps(report), args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
