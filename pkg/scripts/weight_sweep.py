"""Power-weight sweep: weighted operator ratio against [w]_{A_t} raised to the corollary exponent.

    python3 scripts/weight_sweep.py --kernel hilbert --m 12 --t 2
"""

import argparse
import math
import sys

from sparsedom.inputs import smooth_bump, spike
from sparsedom.kernels import preset_family
from sparsedom.weights import sharpness_profile, weight_sweep


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kernel", default="hilbert")
    ap.add_argument("--m", type=int, default=12)
    ap.add_argument("--t", type=float, default=2.0)
    ap.add_argument("--q", type=float, default=math.inf)
    ap.add_argument("--input", choices=["spike", "bump"], default="spike")
    args = ap.parse_args()

    K = preset_family(args.kernel, args.m)
    n = 1 << args.m
    f = spike(n, K.dim) if args.input == "spike" else smooth_bump(n, K.dim)
    sw = weight_sweep(K, f, args.t, args.q)
    sys.stdout.write(sw.to_csv(f"{args.kernel} m={args.m} t={args.t} q={args.q}"))
    print(f"# fitted C {sw.constant:.4f}, violations {sw.violations}", file=sys.stderr)
    for a, ratio, opt in sharpness_profile(sw):
        print(f"# a={a:+.1f} ratio={ratio:.4f} ap^max(1,1/(t-1))={opt:.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
