#!/usr/bin/env python3
"""Monte Carlo vacancy frequencies against the exact formulas, on the standard grid.

Usage: python scripts/vacancy_check.py [--replicates M] [--seed S]
"""
import argparse
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from arccover.experiments import vacancy_frequency
from arccover.tails import TailFunction
from arccover.torus import pair_vacancy_exact, vacancy_probability_exact


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--replicates", type=int, default=20000)
    parser.add_argument("--seed", type=int, default=20250808)
    args = parser.parse_args()

    tail = TailFunction.constant(1)
    print(f"{'n':>6} {'t/(n ln n)':>10} {'single mc':>10} {'single exact':>12} {'pair mc':>10} {'pair exact':>10}")
    for n in (100, 1000):
        for factor in (0.5, 1.0, 2.0):
            t = factor * n * math.log(n)
            freq, joint = vacancy_frequency(tail, n, t, (0, n // 2), args.replicates, args.seed + n)
            p1 = vacancy_probability_exact(tail, n, t)
            p2 = pair_vacancy_exact(tail, n, t, n // 2)
            print(f"{n:>6} {factor:>10.1f} {freq[0]:>10.2e} {p1:>12.2e} {joint:>10.2e} {p2:>10.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
