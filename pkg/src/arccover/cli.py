"""Command-line front end.

Subcommands: cover, snapshot, pi, dimension, shepp-series, calibrate, karamata.
Exit codes: 0 success, 2 validation failure, 3 acceptance-gate failure under --assert.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .circle import CONVERGING, DIVERGING, dimension_estimate, pi_hat, shepp_series
from .experiments import (
    DEFAULT_BASE_SEED,
    ExperimentConfig,
    PRESETS,
    preset_config,
    run_experiment,
    vacancy_frequency,
)
from .seeding import derive_seed
from .tails import cf_estimate, karamata_ratio, parse_tail, rv_limit_probe
from .torus import pair_vacancy_exact, vacancy_probability_exact

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_GATE = 3


def _read_config_file(path: str) -> dict:
    """key = value lines; '#' starts a comment; lists are comma-separated."""
    out: dict[str, str] = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line (need key = value): {raw!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v.strip()) for v in text.split(",") if v.strip())


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(v.strip()) for v in text.split(",") if v.strip())


def _merge_config(args: argparse.Namespace) -> dict:
    merged: dict = {}
    if getattr(args, "config", None):
        raw = _read_config_file(args.config)
        if "phase" in raw:
            merged["phase"] = raw["phase"]
        if "tail" in raw:
            merged["tail"] = raw["tail"]
        if "n" in raw:
            merged["n_list"] = _int_list(raw["n"])
        if "replicates" in raw:
            merged["replicates"] = int(raw["replicates"])
        if "seed" in raw:
            merged["base_seed"] = int(raw["seed"])
        if "alpha" in raw:
            merged["alpha_list"] = _float_list(raw["alpha"])
        if "out" in raw:
            merged["output_path"] = raw["out"]
    if getattr(args, "phase", None):
        merged["phase"] = args.phase
    if getattr(args, "tail", None):
        merged["tail"] = args.tail
    if getattr(args, "n", None):
        merged["n_list"] = tuple(args.n)
    if getattr(args, "replicates", None):
        merged["replicates"] = args.replicates
    if getattr(args, "seed", None) is not None:
        merged["base_seed"] = args.seed
    if getattr(args, "alpha", None):
        merged["alpha_list"] = tuple(args.alpha)
    if getattr(args, "out", None):
        merged["output_path"] = args.out
    return merged


def _gate_cover(summary: dict) -> list[str]:
    """Phase KS gates evaluated at the largest n (trend against the smallest)."""
    failures = []
    phase = summary["phase"]
    groups = summary["groups"]
    by_n = sorted(groups.items(), key=lambda kv: int(kv[0].rsplit("n=", 1)[1]))
    if phase in ("gumbel", "calibration"):
        d = by_n[-1][1]["ks"]["D"]
        if d > 0.05:
            failures.append(f"KS {d:.4f} > 0.05 at {by_n[-1][0]}")
        if len(by_n) > 1 and d > by_n[0][1]["ks"]["D"]:
            failures.append("KS did not improve with n")
    elif phase == "exponential":
        d = by_n[-1][1]["ks"]["D"]
        if d > 0.15:
            failures.append(f"KS {d:.4f} > 0.15 at {by_n[-1][0]}")
        if len(by_n) > 1 and d >= by_n[0][1]["ks"]["D"]:
            failures.append("KS did not improve with n")
    elif phase == "preexp":
        for key, group in groups.items():
            for alpha, chk in group.get("bounds", {}).items():
                if not chk["within_003"]:
                    failures.append(f"{key}: ECDF({alpha}) = {chk['ecdf']:.4f} outside "
                                    f"[{chk['lower']:.4f} - 0.03, {chk['upper']:.4f} + 0.03]")
    return failures


def _cmd_cover(args) -> int:
    if args.preset:
        config = preset_config(args.preset, base_seed=args.seed, output_path=args.out)
    else:
        config = ExperimentConfig(**_merge_config(args))
    paths, summary = run_experiment(config, workers=args.workers)
    print(f"wrote {paths['csv']} {paths['summary']}")
    if args.assert_gates:
        failures = _gate_cover(summary)
        for f in failures:
            print(f"GATE FAIL: {f}")
        if failures:
            return EXIT_GATE
        print("gates passed")
    return EXIT_OK


def _cmd_snapshot(args) -> int:
    tail = parse_tail(args.tail)
    n = args.n[0]
    mu = tail.mean()
    if args.time is not None:
        t = args.time
    elif args.alpha:
        if mu is None:
            print("alpha-scaled snapshot time needs a finite-mean family; pass --time", file=sys.stderr)
            return EXIT_VALIDATION
        t = args.alpha[0] * n * math.log(n) / mu
    else:
        print("need --time or --alpha", file=sys.stderr)
        return EXIT_VALIDATION
    sites = (0, n // 2)
    freq, joint = vacancy_frequency(tail, n, t, sites, args.replicates, args.seed)
    exact0 = vacancy_probability_exact(tail, n, t)
    exact_pair = pair_vacancy_exact(tail, n, t, n // 2)
    result = {
        "n": n,
        "t": t,
        "replicates": args.replicates,
        "site0_frequency": freq[0],
        "site0_exact": exact0,
        "pair_frequency": joint,
        "pair_exact": exact_pair,
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    print(text)
    if args.assert_gates:
        sd0 = math.sqrt(exact0 * (1 - exact0) / args.replicates)
        sdp = math.sqrt(exact_pair * (1 - exact_pair) / args.replicates)
        if abs(freq[0] - exact0) > 4 * sd0 or abs(joint - exact_pair) > 4 * sdp:
            print("GATE FAIL: vacancy frequency outside 4 sigma of the exact formula")
            return EXIT_GATE
        print("gates passed")
    return EXIT_OK


def _cmd_pi(args) -> int:
    if args.preset:
        config = preset_config("shepp_pi", base_seed=args.seed, output_path=args.out)
    else:
        merged = _merge_config(args)
        merged.setdefault("phase", "shepp_pi")
        config = ExperimentConfig(**merged)
    paths, summary = run_experiment(config, workers=args.workers)
    print(f"wrote {paths['csv']} {paths['summary']}")
    for key, group in sorted(summary["groups"].items()):
        print(f"{key}: pi_hat = {group['pi_hat']:.4f} +- {group['halfwidth_95']:.4f}")
    return EXIT_OK


def _cmd_dimension(args) -> int:
    alpha = args.alpha[0] if args.alpha else 0.5
    n = args.n[0]
    try:
        mean_exp, accepted = dimension_estimate(alpha, n, args.replicates, args.seed)
    except RuntimeError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_VALIDATION
    result = {"alpha": alpha, "n": n, "conditional_mean_exponent": mean_exp, "accepted": accepted}
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        Path(args.out).write_text(text + "\n")
    print(text)
    if args.assert_gates and abs(mean_exp - (1.0 - alpha)) > 0.1:
        print(f"GATE FAIL: exponent {mean_exp:.4f} not within 0.1 of {1 - alpha:g}")
        return EXIT_GATE
    return EXIT_OK


def _parse_length_sequence(spec: str):
    if spec == "zero":
        return lambda n: 0.0
    name, sep, arg = spec.partition(":")
    if name == "c_over_n" and sep:
        c = float(arg)
        return lambda n: min(c / n, 1.0)
    if name == "const" and sep:
        v = float(arg)
        return lambda n: v
    raise ValueError(f"unknown length sequence {spec!r} (use zero, c_over_n:<c>, const:<v>)")


def _cmd_shepp_series(args) -> int:
    fn = _parse_length_sequence(args.sequence)
    partial, cls = shepp_series(fn, args.N)
    print(f"sequence={args.sequence} N={args.N} S_N={partial[-1]:.6g} classification={cls}")
    if args.expect and args.expect != cls:
        print(f"GATE FAIL: expected {args.expect}, classified {cls}")
        return EXIT_GATE
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    merged = dict(phase="calibration", n_list=(args.K,), replicates=args.replicates,
                  base_seed=args.seed, output_path=args.out or "results/calibration")
    config = ExperimentConfig(**merged)
    paths, summary = run_experiment(config, workers=args.workers)
    group = summary["groups"][f"coupon|n={args.K}"]
    print(f"wrote {paths['csv']}; KS vs Gumbel = {group['ks']['D']:.4f}")
    if args.assert_gates and group["ks"]["D"] > 0.05:
        print("GATE FAIL: calibration KS above 0.05")
        return EXIT_GATE
    return EXIT_OK


def _cmd_karamata(args) -> int:
    tail = parse_tail(args.tail)
    x = args.x
    rows = {
        "tail": args.tail,
        "x": x,
        "karamata_ratio": karamata_ratio(tail, x),
        "cf_estimate": cf_estimate(tail, x),
        "rv_probe_t2": rv_limit_probe(tail, 2.0, x),
    }
    print(json.dumps(rows, indent=2, sort_keys=True))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arccover", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, tail_required=False):
        p.add_argument("--config", help="key = value config file")
        p.add_argument("--phase", choices=("gumbel", "compact", "bstar", "preexp", "exponential"))
        p.add_argument("--tail", required=tail_required, help="const:<c> geom:<q> logpow:<b> pow:<p> slowlog")
        p.add_argument("--n", type=int, action="append", help="torus size (repeatable)")
        p.add_argument("--replicates", type=int, default=None)
        p.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED)
        p.add_argument("--alpha", type=float, action="append")
        p.add_argument("--out", help="output path stem")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--assert", dest="assert_gates", action="store_true",
                       help="exit 3 when the phase gate fails")

    p_cover = sub.add_parser("cover", help="cover-time experiment for one phase")
    common(p_cover)
    p_cover.add_argument("--preset", choices=sorted(PRESETS), help="named preset grid")
    p_cover.set_defaults(fn=_cmd_cover)

    p_snap = sub.add_parser("snapshot", help="timed vacancy snapshot vs exact formulas")
    common(p_snap, tail_required=True)
    p_snap.add_argument("--time", type=float, help="absolute Poisson time t")
    p_snap.set_defaults(fn=_cmd_snapshot, replicates=200)

    p_pi = sub.add_parser("pi", help="Monte Carlo covering probability pi_hat")
    common(p_pi)
    p_pi.add_argument("--preset", action="store_true", help="use the shepp_pi preset")
    p_pi.set_defaults(fn=_cmd_pi)

    p_dim = sub.add_parser("dimension", help="conditional vacancy exponent ln Z / ln n")
    common(p_dim)
    p_dim.set_defaults(fn=_cmd_dimension, replicates=1000)

    p_ss = sub.add_parser("shepp-series", help="series divergence diagnostic")
    p_ss.add_argument("--sequence", required=True, help="zero | c_over_n:<c> | const:<v>")
    p_ss.add_argument("--N", type=int, default=10**6)
    p_ss.add_argument("--expect", choices=(DIVERGING, CONVERGING, "inconclusive"))
    p_ss.set_defaults(fn=_cmd_shepp_series)

    p_cal = sub.add_parser("calibrate", help="coupon-collector Gumbel calibration")
    p_cal.add_argument("--K", type=int, default=10000)
    p_cal.add_argument("--replicates", type=int, default=2000)
    p_cal.add_argument("--seed", type=int, default=DEFAULT_BASE_SEED)
    p_cal.add_argument("--out")
    p_cal.add_argument("--workers", type=int, default=1)
    p_cal.add_argument("--assert", dest="assert_gates", action="store_true")
    p_cal.set_defaults(fn=_cmd_calibrate)

    p_kar = sub.add_parser("karamata", help="regular-variation diagnostics table")
    p_kar.add_argument("--tail", required=True)
    p_kar.add_argument("--x", type=int, default=10**6)
    p_kar.set_defaults(fn=_cmd_karamata)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, IndexError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
