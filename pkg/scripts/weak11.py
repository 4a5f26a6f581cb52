"""Weak (1,1) diagnostic sup_lam lam |{|Tf| > lam}| / ||f||_1 for spike inputs across grid sizes.

    python3 scripts/weak11.py --kernel hilbert --sizes 8 10 12
"""

import argparse

from sparsedom.inputs import spike
from sparsedom.kernels import preset_family
from sparsedom.verify import weak11_profile


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--kernel", default="hilbert")
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 12])
    ap.add_argument("--levels", action="store_true", help="print every threshold, not only the maximum")
    args = ap.parse_args()

    vals = []
    print("m,lambda,count,value")
    for m in args.sizes:
        K = preset_family(args.kernel, m)
        rep = weak11_profile(K, spike(1 << m, K.dim))
        rows = rep.levels if args.levels else [max(rep.levels, key=lambda r: r[2])]
        for lam, count, v in rows:
            print(f"{m},{lam!r},{count},{v!r}")
        vals.append(rep.value)
    print(f"# spread {max(vals) / min(vals):.4f}")


if __name__ == "__main__":
    main()
