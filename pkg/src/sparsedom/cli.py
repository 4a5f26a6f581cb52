"""Command-line entry point.

    sparsedom sparsify --config dini-hilbert --seed 3 --out runs/a --trace
    sparsedom verify --config br-critical --suite decay

Exit codes: 0 success, 1 a hard invariant failed, 2 invalid configuration,
3 the sparsifier aborted after its retries.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, dump_config, load_config, preset_names
from .grid import GridFunction
from .sparsifier import SparsifierAbort, sparsify, verify_sparsity
from .suites import SUITES, run_suite, trial_rngs

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2
EXIT_ABORT = 3


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)


def _dump(obj: dict, config_hash: str) -> str:
    doc = {"config_hash": config_hash}
    doc.update(obj)
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def cmd_sparsify(cfg: RunConfig, trace: bool = False) -> int:
    h = cfg.hash()
    out = Path(cfg.out)
    (rng,) = trial_rngs(cfg.seed, "sparsify", 1)
    f1, f2 = cfg.inputs(rng)
    K = cfg.family()
    try:
        S, cert = sparsify(K, f1, f2, cfg.p1, cfg.p2, cfg.lam, cfg.retries)
    except SparsifierAbort as exc:
        print(f"sparsifier aborted at level {exc.level} (lambda = {exc.lam}): {exc}", file=sys.stderr)
        _write(out / "abort.json", _dump({"level": exc.level, "lambda": exc.lam, "message": str(exc)}, h))
        return EXIT_ABORT
    audit = verify_sparsity(S)
    _write(out / "config.ini", dump_config(cfg))
    _write(out / "collection.json", _dump(S.to_json(), h))
    _write(out / "certificate.json", _dump(cert.to_json(), h))
    _write(out / "sparsity.json", _dump({"disjoint": audit.disjoint, "inside": audit.inside, "eta": audit.eta, "certified_eta": audit.certified_eta, "ok": audit.ok}, h))
    GridFunction(f1).save(out / "f1.bin")
    GridFunction(f2).save(out / "f2.bin")
    if trace:
        cert.write_trace(out / "trace")
    ok = audit.ok and cert.passed()
    print(
        f"{cfg.name}: N={cfg.n} d={cfg.dim} cubes={sum(len(g) for g in S.generations)} "
        f"generations={len(S.generations)} eta={S.eta:.4f} lambda={cert.lam:g} retries={cert.retries} "
        f"{'certified' if ok else 'FAILED'} -> {out}"
    )
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_verify(cfg: RunConfig, suite: str) -> int:
    h = cfg.hash()
    out = Path(cfg.out)
    _write(out / "config.ini", dump_config(cfg))
    code = EXIT_OK
    for res in run_suite(cfg, suite):
        _write(out / f"{res.name}.json", res.to_json(h))
        _write(out / f"{res.name}.csv", res.to_csv(h))
        status = "ok" if res.hard_ok else "HARD INVARIANT FAILED"
        print(f"{cfg.name} {res.name}: {len(res.rows)} rows, {status}")
        for msg in res.failures:
            print(f"  {msg}", file=sys.stderr)
        if not res.hard_ok:
            code = EXIT_INVARIANT
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sparsedom", description="Sparse domination experiments on dyadic grids.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help=f"INI file or preset ({', '.join(preset_names())})")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument("--lambda", dest="lam", type=float, help="override the stopping threshold")
        p.add_argument("--out", help="output directory")

    p = sub.add_parser("sparsify", help="build a sparse collection and its certificate")
    common(p)
    p.add_argument("--trace", action="store_true", help="write exceptional sets as PBM bitmaps")
    p = sub.add_parser("verify", help="run verification suites")
    common(p)
    p.add_argument("--suite", default="all", choices=SUITES + ("all",))
    p.add_argument("--trace", action="store_true", help="accepted for symmetry; verify writes no bitmaps")
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        over = {}
        if args.seed is not None:
            over["seed"] = args.seed
        if args.lam is not None:
            over["lam"] = args.lam
        if args.out is not None:
            over["out"] = args.out
        cfg = replace(cfg, **over).validate()
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "sparsify":
        return cmd_sparsify(cfg, args.trace)
    return cmd_verify(cfg, args.suite)


if __name__ == "__main__":
    sys.exit(main())
