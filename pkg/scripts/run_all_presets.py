"""Run every verification suite on every shipped preset and summarize.

    python3 scripts/run_all_presets.py --out runs
"""

import argparse
import sys
import time
from dataclasses import replace
from pathlib import Path

from sparsedom.config import load_config, preset_names
from sparsedom.suites import run_suite


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="runs")
    ap.add_argument("--suite", default="all")
    args = ap.parse_args()

    failed = False
    for name in preset_names():
        cfg = load_config(name)
        out = Path(args.out) / name
        cfg = replace(cfg, out=str(out))
        h = cfg.hash()
        t0 = time.perf_counter()
        for res in run_suite(cfg, args.suite):
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{res.name}.json").write_text(res.to_json(h))
            (out / f"{res.name}.csv").write_text(res.to_csv(h))
            failed |= not res.hard_ok
            print(f"{name:14s} {res.name:11s} rows={len(res.rows):4d} {'ok' if res.hard_ok else 'FAILED'}")
        print(f"{name:14s} done in {time.perf_counter() - t0:.1f} s")
    sys.exit(1 if failed else 0)


if __name__ == "__main__":
    main()
