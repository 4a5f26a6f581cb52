"""Decay of the per-gap forms K^j in the scale gap j, and the large-part sums of lacunary Omega.

    python3 scripts/decay.py br --m 8 --trials 20
    python3 scripts/decay.py rough --seeds 5
"""

import argparse

import numpy as np

from sparsedom.kernels import lacunary_omega, large_part_sum, preset_family
from sparsedom.suites import central_cube
from sparsedom.verify import decay_diagnostics, fit_slope, random_bad, random_local, random_stopping


def br_profile(m, trials, seed):
    K = preset_family("br-critical", m)
    rng = np.random.default_rng(seed)
    top = central_cube(m, 2)
    totals = {}
    for _ in range(trials):
        coll = random_stopping(rng, top, 1 << m)
        rep = decay_diagnostics(K, coll, random_bad(rng, coll), random_local(rng, coll), "br")
        for j, v in rep.profile.items():
            totals.setdefault(j, []).append(abs(v))
    mean = {j: float(np.mean(v)) for j, v in sorted(totals.items())}
    print("j,mean_abs,trials")
    for j, v in mean.items():
        print(f"{j},{v!r},{len(totals[j])}")
    print(f"# slope {fit_slope(mean):.4f}")


def rough_large_parts(seeds, deltas):
    print("seed,delta,large_sum,ol_norm,ratio")
    for seed in range(seeds):
        om = lacunary_omega(seed=seed)
        ol = om.orlicz_lorentz()
        for dl in deltas:
            total, _ = large_part_sum(om, dl)
            print(f"{seed},{dl},{total!r},{ol!r},{dl * total / ol!r}")


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("mode", choices=["br", "rough"])
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--seed", type=int, default=10)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--deltas", type=float, nargs="+", default=[0.1, 0.25, 0.5])
    args = ap.parse_args()
    if args.mode == "br":
        br_profile(args.m, args.trials, args.seed)
    else:
        rough_large_parts(args.seeds, args.deltas)


if __name__ == "__main__":
    main()
