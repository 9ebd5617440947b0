"""Command line: verify-axioms, run, replay.

Exit codes: 0 ok, 1 config error, 2 axiom violation, 3 statistical flag,
4 replay mismatch.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .axioms import verify_axioms
from .config import ConfigError, ExperimentConfig, RunManifest, digest
from .distance_formula import interval_decomposition
from .experiments import _csv, scaling_experiment, second_moment_experiment, tail_experiment
from .systole import LogGrowthProfiles, rivin_scaling
from .walk import map_trials
from .words import random_reduced_array

EXIT_OK, EXIT_CONFIG, EXIT_AXIOM, EXIT_FLAG, EXIT_REPLAY = 0, 1, 2, 3, 4


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_default) + "\n"


def _default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serializable: {type(x)}")


def _distance_formula_reports(cfg: ExperimentConfig, system, workers: int) -> tuple[dict[str, str], list[str]]:
    words = int(cfg.param("words"))
    max_len = int(cfg.param("max_length"))
    K_ = cfg.param("K")
    K_ = system.K if K_ is None else int(K_)

    def one(i: int):
        rng = np.random.Generator(np.random.Philox(key=np.array([cfg.seed, i], dtype=np.uint64)))
        length = int(rng.integers(1, max_len + 1))
        arr = random_reduced_array(length, system.rank, rng)
        r = interval_decomposition(arr, system, K_)
        return [i, r.length, r.large_cosets, r.total, r.bound, r.max_overlap, len(r.interval_violations),
                len(r.claim_violations), int(r.overlap_ok), int(r.sum_ok),
                "" if r.cyclic_sum_ok is None else int(r.cyclic_sum_ok), int(r.ok)]

    rows = map_trials(one, words, workers)
    cols = ["word", "length", "large_cosets", "total", "bound", "max_overlap", "interval_violations",
            "claim_violations", "overlap_ok", "sum_ok", "cyclic_sum_ok", "ok"]
    failures = sum(1 for r in rows if not r[-1])
    summary = {
        "config_hash": cfg.hash, "words": words, "max_length": max_len, "K": K_,
        "C": 5 * system.s * system.L, "failures": failures,
        "interval_violations": sum(r[6] for r in rows), "claim_violations": sum(r[7] for r in rows),
        "overlap_failures": sum(1 for r in rows if not r[8]), "sum_failures": sum(1 for r in rows if not r[9]),
        "cyclic_sum_failures": sum(1 for r in rows if r[10] == 0),
        "max_overlap": max((r[5] for r in rows), default=0),
    }
    flags = [f"{failures} words violate the distance-formula checks"] if failures else []
    h = cfg.hash
    return {f"distance-formula-{h}.csv": _csv(cols, rows), f"distance-formula-{h}.json": _json(summary)}, flags


def produce_reports(cfg: ExperimentConfig, workers: int) -> tuple[dict[str, str], list[str]]:
    """Report bodies keyed by file name, plus statistical flags."""
    system = cfg.system.build()
    measure = cfg.build_measure()
    h = cfg.hash
    kind = cfg.kind
    if kind == "tail":
        Z = system.coset(cfg.param("coset"))
        rep = tail_experiment(system, measure, Z, int(cfg.param("n")), int(cfg.param("trials")),
                              cfg.param("R_grid"), cfg.param("t_grid"), cfg.seed, workers)
        body = dict(rep.to_json(), config_hash=h)
        return {f"tail-{h}.csv": rep.to_csv(), f"tail-{h}.json": _json(body)}, rep.flags
    if kind == "scaling":
        rep = scaling_experiment(system, measure, cfg.param("n_list"), int(cfg.param("trials")),
                                 float(cfg.param("C")), cfg.seed, workers)
        files = {f"scaling-{h}-n{n}.csv": rep.csv_for(n) for n in rep.n_list}
        files[f"scaling-{h}.json"] = _json(dict(rep.to_json(), config_hash=h))
        flags = [f"degenerate window at n={n}" for n in rep.degenerate]
        return files, flags
    if kind == "second-moment":
        rep = second_moment_experiment(system, measure, int(cfg.param("n")), int(cfg.param("trials")),
                                       float(cfg.param("eps1")), cfg.param("eps2"), cfg.seed, workers)
        return {f"second-moment-{h}.csv": rep.to_csv(),
                f"second-moment-{h}.json": _json(dict(rep.to_json(), config_hash=h))}, rep.flags
    if kind == "distance-formula":
        return _distance_formula_reports(cfg, system, workers)
    if kind == "systole":
        gen = LogGrowthProfiles(float(cfg.param("c")), float(cfg.param("noise")), int(cfg.param("complements")),
                                float(cfg.param("K2")), float(cfg.param("K3")))
        rep = rivin_scaling(cfg.param("n_list"), gen, float(cfg.param("D1")), int(cfg.param("trials")), cfg.seed,
                            float(cfg.param("delta")), float(cfg.param("M_threshold")))
        flags = [] if rep.concentrated else ["length estimates leave the concentration band"]
        return {f"systole-{h}.csv": rep.to_csv(),
                f"systole-{h}.json": _json(dict(rep.to_json(), config_hash=h))}, flags
    raise ConfigError(f"unknown kind {kind!r}")


def _write(path: Path, body: str):
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(body)
    os.replace(tmp, path)


def _load(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out_dir = args.out
    cfg.__post_init__()
    return cfg


def cmd_verify_axioms(args) -> int:
    cfg = _load(args)
    system = cfg.system.build()
    cert = verify_axioms(system, cfg.system.radius)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out / f"axioms-{cfg.hash}.json", _json(dict(cert.to_json(), config_hash=cfg.hash)))
    print(f"L={cert.L_emp} B={cert.B_emp} s={cert.s_emp} radius={cert.radius} "
          f"{'PASS' if cert.passed else 'FAIL'}")
    for v in cert.violations:
        print(f"  violation {v}")
    return EXIT_OK if cert.passed else EXIT_AXIOM


def cmd_run(args) -> int:
    cfg = _load(args)
    system = cfg.system.build()
    cert = verify_axioms(system, cfg.system.radius)
    if not cert.passed:
        print(f"declared constants not certified on radius {cert.radius}:")
        for v in cert.violations:
            print(f"  violation {v}")
        return EXIT_AXIOM
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    files, flags = produce_reports(cfg, cfg.workers)
    wall = time.perf_counter() - t0
    for name, body in files.items():
        _write(out / name, body)
    code = EXIT_FLAG if flags else EXIT_OK
    for f in flags:
        print(f"flag: {f}")
    manifest = RunManifest(
        config_hash=cfg.hash,
        config=cfg.to_json(),
        timestamp=_dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        tool_version=__version__,
        reports={name: digest(body) for name, body in files.items()},
        wall_clock=round(wall, 3),
        workers=cfg.workers,
        exit_code=code,
    )
    path = out / f"manifest-{cfg.hash}.json"
    _write(path, manifest.dumps())           # last: marks the run complete
    print(f"wrote {len(files)} reports and {path}")
    return code


def cmd_replay(args) -> int:
    path = Path(args.manifest)
    try:
        manifest = RunManifest.load(path)
        cfg = ExperimentConfig.from_json(manifest.config)
    except (OSError, ValueError, TypeError, KeyError) as exc:
        print(f"cannot load manifest: {exc}")
        return EXIT_CONFIG
    base = path.parent
    missing = [name for name in manifest.reports if not (base / name).exists()]
    if missing:
        print(f"missing report files: {missing}")
        return EXIT_CONFIG
    workers = args.workers if args.workers is not None else manifest.workers
    files, _ = produce_reports(cfg, workers)
    if set(files) != set(manifest.reports):
        print("report set differs from manifest")
        return EXIT_REPLAY
    bad = [name for name, body in files.items() if (base / name).read_text() != body]
    for name in bad:
        print(f"mismatch: {name}")
    if bad:
        return EXIT_REPLAY
    print(f"replayed {len(files)} reports with {workers} workers: identical")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="projwalk", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn in (("verify-axioms", cmd_verify_axioms), ("run", cmd_run)):
        s = sub.add_parser(name)
        s.add_argument("--config", required=True)
        s.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
        s.add_argument("--workers", type=int, default=None)
        s.add_argument("--out", default=None, help="output directory (overrides the config)")
        s.set_defaults(func=fn)
    s = sub.add_parser("replay")
    s.add_argument("manifest")
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
