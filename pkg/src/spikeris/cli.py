"""Command line entry point: ``spikeris <command> [--config F] [--seed S] [--desk-scale] [--out DIR]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import checks, experiment
from .config import load_config

log = logging.getLogger("spikeris")


def _config(args):
    cfg = load_config(args.config, desk_scale=args.desk_scale, seed=args.seed)
    if args.out is not None:
        cfg = cfg.with_(out_dir=args.out)
    return cfg


def cmd_train(args) -> int:
    cfg = _config(args)
    for N in cfg.n_list:
        experiment.train_models(cfg, N)
        print(f"trained N={N} M={cfg.M} -> {Path(cfg.out_dir) / 'checkpoints'}")
    return 0


def cmd_rate_sweep(args) -> int:
    cfg = _config(args)
    result = experiment.run_rate_sweep(cfg)
    path = experiment.emit_csv(result, Path(cfg.out_dir) / "rate_sweep.csv")
    experiment.save_designs(result, Path(cfg.out_dir) / "rate_sweep_designs.npz")
    for (method, N), value in sorted(result.objective.items()):
        print(f"{method:>7s} N={N:<3d} mean objective {value:.6g}")
    print(f"wrote {path}")
    return 0


def cmd_energy_sweep(args) -> int:
    cfg = _config(args)
    result = experiment.run_energy_sweep(cfg)
    path = experiment.emit_csv(result, Path(cfg.out_dir) / "energy_sweep.csv")
    for N in cfg.n_list:
        ann = result.energy[("ann", N)].energy_uj
        snn = result.energy[("snn", N)].energy_uj
        print(f"N={N:<3d} ANN {ann:.4g} uJ  SNN {snn:.4g} uJ  ratio {ann / snn:.3g}")
    print(f"wrote {path}")
    return 0


def cmd_oracle_check(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    failures = 0
    for N in (1, 2, 3):
        for M in (1, 2):
            for _ in range(5):
                r = checks.oracle_check(rng, N, M)
                failures += not r.ok
                gap = "" if r.gap is None else f" gap={r.gap:.2e}"
                print(f"N={N} M={M} grid={r.grid_value:.6g} best_random={r.best_random:.6g}{gap} {'ok' if r.ok else 'FAIL'}")
    return 1 if failures else 0


def cmd_gradcheck(args) -> int:
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    results = [checks.snn_gradcheck(rng, reset="subtract"), checks.snn_gradcheck(rng, reset="zero"), checks.ann_gradcheck(rng)]
    for r in results:
        print(f"{r.name}: {r.n_weights} weights, rel err {r.rel_error:.2e} (< {r.tolerance:g}) {'ok' if r.ok else 'FAIL'}")
    return 0 if all(r.ok for r in results) else 1


COMMANDS = {
    "train": cmd_train,
    "rate-sweep": cmd_rate_sweep,
    "energy-sweep": cmd_energy_sweep,
    "oracle-check": cmd_oracle_check,
    "gradcheck": cmd_gradcheck,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spikeris", description=__doc__)
    parser.add_argument("command", choices=sorted(COMMANDS))
    parser.add_argument("--config", help="flat 'section.key = value' config file")
    parser.add_argument("--seed", type=int, help="master seed (u64)")
    parser.add_argument("--desk-scale", action="store_true", help="small workstation-sized run")
    parser.add_argument("--out", help="output directory (overrides experiment.out_dir)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](args)
    except Exception as exc:  # one-line diagnostic for any failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
