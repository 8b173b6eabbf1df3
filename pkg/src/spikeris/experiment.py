"""Training orchestration and the rate / energy sweeps."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .baselines import ann_forward, ann_train, oracle_m1_phases, random_phases
from .channel import ChannelBatch, make_rng, sample_dataset
from .checkpoint import load_ann, load_snn, save_ann, save_snn
from .config import ExperimentConfig
from .energy import EnergyReport, ann_report, snn_report
from .ris_objective import RisPhaseVector, achievable_rate, mrt_snr_batch, p2_objective
from .snn_core import snn_layer_sizes
from .trainer import evaluate_snn, prepare_features, train

log = logging.getLogger(__name__)

CSV_HEADER = ["method", "N", "M", "snr_db", "mean_rate", "energy_pj"]


class MissingCheckpoint(FileNotFoundError):
    pass


@dataclass
class SweepResult:
    """Rows ``(method, N, M, snr_db, mean_rate, energy_pj)``; unused cells are None.

    ``objective`` maps ``(method, N)`` to the test-set mean phase objective,
    ``phases`` and ``channels`` keep the evaluated designs per N.
    """

    rows: list[tuple] = field(default_factory=list)
    objective: dict[tuple[str, int], float] = field(default_factory=dict)
    energy: dict[tuple[str, int], EnergyReport] = field(default_factory=dict)
    phases: dict[tuple[str, int], RisPhaseVector] = field(default_factory=dict)
    channels: dict[int, ChannelBatch] = field(default_factory=dict)

    def rate(self, method: str, N: int, snr_db: float) -> float:
        for m, n, _, s, r, _ in self.rows:
            if m == method and n == N and s == snr_db:
                return r
        raise KeyError((method, N, snr_db))

    def sorted_rows(self) -> list[tuple]:
        return sorted(self.rows, key=lambda r: (r[0], r[1], r[3]))


def checkpoint_path(out_dir, kind: str, N: int, M: int) -> Path:
    return Path(out_dir) / "checkpoints" / f"{kind}_N{N}_M{M}.ckpt"


def train_dataset(cfg: ExperimentConfig, N: int) -> ChannelBatch:
    s = cfg.seed * 1009 + N
    return sample_dataset(make_rng(s, "geometry"), make_rng(s, "channels"), cfg.geometry, cfg.M, N, cfg.train.train_samples)


def test_dataset(cfg: ExperimentConfig, N: int) -> ChannelBatch:
    s = cfg.seed * 1009 + N
    return sample_dataset(make_rng(s, "test_geometry"), make_rng(s, "test_channels"), cfg.geometry, cfg.M, N, cfg.test_samples)


def _write_history(path: Path, history) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "batch", "loss"])
        w.writerows((e, b, f"{loss:.9g}") for e, b, loss in history)


def train_models(cfg: ExperimentConfig, N: int, kinds=("snn", "ann")):
    """Train and checkpoint the requested networks for one RIS size."""
    out = Path(cfg.out_dir)
    (out / "checkpoints").mkdir(parents=True, exist_ok=True)
    data = train_dataset(cfg, N)
    tcfg = cfg.train.with_(seed=cfg.seed * 1009 + N)
    nets = {}
    if "snn" in kinds:
        log.info("training SNN N=%d M=%d on %d samples", N, cfg.M, len(data))
        state = train(tcfg, data)
        save_snn(checkpoint_path(out, "snn", N, cfg.M), state.net, N, cfg.M, tcfg.T)
        _write_history(out / f"loss_snn_N{N}_M{cfg.M}.csv", state.history)
        nets["snn"] = state.net
    if "ann" in kinds:
        log.info("training ANN N=%d M=%d", N, cfg.M)
        state = ann_train(tcfg, data)
        save_ann(checkpoint_path(out, "ann", N, cfg.M), state.net, N, cfg.M)
        _write_history(out / f"loss_ann_N{N}_M{cfg.M}.csv", state.history)
        nets["ann"] = state.net
    return nets


def _load_or_train(cfg: ExperimentConfig, N: int, kind: str):
    path = checkpoint_path(cfg.out_dir, kind, N, cfg.M)
    if not path.exists():
        if not cfg.train_missing:
            raise MissingCheckpoint(f"no {kind} checkpoint for N={N}, M={cfg.M} at {path}")
        return train_models(cfg, N, kinds=(kind,))[kind]
    return (load_snn if kind == "snn" else load_ann)(path)[0]


def design_phases(cfg: ExperimentConfig, N: int, test: ChannelBatch, methods) -> tuple[dict, np.ndarray | None]:
    """Phase designs per method on the test set, plus SNN spike counts."""
    out, counts = {}, None
    tcfg = cfg.train
    if "snn" in methods:
        net = _load_or_train(cfg, N, "snn")
        out["snn"], counts = evaluate_snn(net, test, tcfg, make_rng(cfg.seed * 1009 + N, "eval_encoder"))
    if "ann" in methods:
        net = _load_or_train(cfg, N, "ann")
        out["ann"] = ann_forward(net, prepare_features(test, tcfg))
    if "random" in methods:
        out["random"] = random_phases(make_rng(cfg.seed * 1009 + N, "baseline"), N, len(test))
    if "oracle" in methods and cfg.M == 1:
        out["oracle"] = oracle_m1_phases(test)
    return out, counts


def mean_rate(test: ChannelBatch, phases: RisPhaseVector, snr_db: float) -> float:
    """Average log2(1 + SNR) with MRT at the BS; sigma^2 = 1, so p_max is the transmit SNR."""
    p_max = 10.0 ** (snr_db / 10.0)
    return float(np.mean(achievable_rate(mrt_snr_batch(test.q, phases.u, test.h, p_max))))


def run_rate_sweep(cfg: ExperimentConfig, methods=("snn", "ann", "random", "oracle")) -> SweepResult:
    result = SweepResult()
    for N in cfg.n_list:
        test = test_dataset(cfg, N)
        designs, _ = design_phases(cfg, N, test, methods)
        result.channels[N] = test
        for method, ph in designs.items():
            result.phases[(method, N)] = ph
            result.objective[(method, N)] = float(np.mean(p2_objective(test.q, ph.u, test.h)))
            for snr in sorted(cfg.snr_db):
                result.rows.append((method, N, cfg.M, float(snr), mean_rate(test, ph, snr), None))
    return result


def run_energy_sweep(cfg: ExperimentConfig, snr_db: float = 0.0) -> SweepResult:
    """ANN closed-form energy and SNN energy from spikes measured on the test set."""
    result = SweepResult()
    T = cfg.train.T
    for N in cfg.n_list:
        test = test_dataset(cfg, N)
        designs, counts = design_phases(cfg, N, test, ("snn", "ann"))
        sizes = snn_layer_sizes(N, cfg.M)
        mean_counts = counts.mean(axis=0)
        reports = {
            "ann": ann_report(sizes, cfg.energy, N=N, M=cfg.M),
            "snn": snn_report(sizes, mean_counts, T, cfg.energy, True, N=N, M=cfg.M),
            "snn_no_decay": snn_report(sizes, mean_counts, T, cfg.energy, False, N=N, M=cfg.M),
        }
        result.channels[N] = test
        for method, rep in reports.items():
            ph = designs["ann" if method == "ann" else "snn"]
            result.energy[(method, N)] = rep
            result.phases[(method, N)] = ph
            result.rows.append((method, N, cfg.M, float(snr_db), mean_rate(test, ph, snr_db), rep.energy_pj))
    return result


def _cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return f"{x:.9g}"
    return str(x)


def emit_csv(result: SweepResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in result.sorted_rows():
            w.writerow([_cell(x) for x in row])
    return path


def save_designs(result: SweepResult, path) -> Path:
    """Store evaluated phases and test channels so rates can be recomputed offline."""
    arrays = {}
    for (method, N), ph in result.phases.items():
        arrays[f"theta_{method}_N{N}"] = ph.theta
    for N, ch in result.channels.items():
        arrays[f"q_N{N}"] = ch.q
        arrays[f"h_N{N}"] = ch.h
    np.savez(path, **arrays)
    return Path(path)
