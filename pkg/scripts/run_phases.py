#!/usr/bin/env python3
"""Run every named preset and print a one-line digest per group.

Usage: python scripts/run_phases.py [--workers N] [--seed S] [--outdir DIR] [preset ...]
"""
import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from arccover.experiments import PRESETS, preset_config, run_experiment


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("presets", nargs="*", default=[], help="subset of presets (default: all)")
    parser.add_argument("--workers", type=int, default=2)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--outdir", default="results")
    args = parser.parse_args()

    names = args.presets or sorted(PRESETS)
    for name in names:
        t0 = time.time()
        cfg = preset_config(name, base_seed=args.seed, output_path=f"{args.outdir}/{name}")
        paths, summary = run_experiment(cfg, workers=args.workers)
        print(f"{name}: wrote {paths['csv']} [{time.time() - t0:.0f}s]")
        for key, group in sorted(summary["groups"].items()):
            bits = [f"count={group.get('count')}"]
            if "mean" in group:
                bits.append(f"mean={group['mean']:.4f}")
            if "ks" in group:
                bits.append(f"KS={group['ks']['D']:.4f}")
            if "pi_hat" in group:
                bits.append(f"pi_hat={group['pi_hat']:.4f}+-{group['halfwidth_95']:.4f}")
            if "conditional_mean_exponent" in group:
                bits.append(f"exponent={group['conditional_mean_exponent']:.4f} accepted={group['accepted']}")
            print(f"  {key}: " + " ".join(bits))
    return 0


if __name__ == "__main__":
    sys.exit(main())
