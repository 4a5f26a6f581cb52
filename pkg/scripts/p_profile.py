"""Measured (1, p) domination constant and its value divided by p/(p-1) as p decreases.

    python3 scripts/p_profile.py --kernel hilbert --m 10
"""

import argparse

import numpy as np

from sparsedom.inputs import pair_family
from sparsedom.kernels import preset_family
from sparsedom.verify import p_profile


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kernel", default="hilbert")
    ap.add_argument("--m", type=int, default=10)
    ap.add_argument("--pairs", type=int, default=20)
    ap.add_argument("--ps", type=float, nargs="+", default=[4.0, 2.0, 1.5, 1.25])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    K = preset_family(args.kernel, args.m)
    n = 1 << args.m
    pairs = [(a.sample(n), b.sample(n)) for a, b in pair_family(np.random.default_rng(args.seed), K.dim, args.pairs)]
    prof = p_profile(K, pairs, tuple(args.ps))
    print("p,constant,normalized")
    for p, (c, r) in prof.items():
        print(f"{p},{c!r},{r!r}")


if __name__ == "__main__":
    main()
