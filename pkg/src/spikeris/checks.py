"""Numerical self-checks behind the ``gradcheck`` and ``oracle-check`` commands."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .baselines import (
    AnnNetwork,
    ann_backward,
    _ann_activations,
    init_ann,
    oracle_exhaustive,
    oracle_m1,
    random_phases,
)
from .channel import GeometryConfig, build_features, feature_length, normalize_features, sample_dataset
from .ris_objective import RisPhaseVector, p2_objective
from .snn_core import LifParams, SnnNetwork, decode_mean_rate, encode_rate, network_forward
from .trainer import backward_bptt, compute_loss, init_weights, loss_grad_fraction


def relative_error(a, b) -> float:
    a, b = np.concatenate([np.ravel(x) for x in a]), np.concatenate([np.ravel(x) for x in b])
    scale = max(np.linalg.norm(a), np.linalg.norm(b))
    return float(np.linalg.norm(a - b) / scale) if scale > 0 else 0.0


def central_differences(f, params: list[np.ndarray], eps: float) -> list[np.ndarray]:
    """Central-difference gradient of scalar ``f(params)``, one entry at a time."""
    out = []
    for i, p in enumerate(params):
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            hi = [q.copy() for q in params]
            lo = [q.copy() for q in params]
            hi[i][idx] += eps
            lo[i][idx] -= eps
            g[idx] = (f(hi) - f(lo)) / (2.0 * eps)
        out.append(g)
    return out


@dataclass
class GradCheck:
    name: str
    n_weights: int
    rel_error: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.rel_error < self.tolerance


def snn_gradcheck(rng: np.random.Generator, N: int = 2, M: int = 1, hidden=(4, 3), T: int = 5,
                  K: int = 3, reset: str = "subtract", weight_scale: float = 3.0, tolerance: float = 1e-4) -> GradCheck:
    """BPTT against central differences with the arctangent step in the forward pass."""
    data = sample_dataset(rng, rng, GeometryConfig(), M, N, K)
    sizes = [feature_length(N, M), *hidden, N]
    params = LifParams(beta=0.9, omega_thr=1.0, reset=reset)
    base = init_weights(rng, sizes, params)
    weights = [w * weight_scale for w in base.weights]
    spikes = encode_rate(normalize_features(build_features(data), N, M, "block", 2.0), T, rng)

    def loss(ws):
        out, _ = network_forward(SnnNetwork.from_weights(ws, params), spikes, smooth=True)
        return compute_loss(data, decode_mean_rate(out))

    net = SnnNetwork.from_weights(weights, params)
    out, trace = network_forward(net, spikes, smooth=True)
    analytic = backward_bptt(net, trace, loss_grad_fraction(data, decode_mean_rate(out))).grads
    numeric = central_differences(loss, weights, 1e-6)
    return GradCheck(f"snn[{reset}] sizes={sizes} T={T}", sum(w.size for w in weights), relative_error(analytic, numeric), tolerance)


def ann_gradcheck(rng: np.random.Generator, N: int = 2, M: int = 1, hidden=(5, 4), K: int = 4,
                  tolerance: float = 1e-6) -> GradCheck:
    data = sample_dataset(rng, rng, GeometryConfig(), M, N, K)
    sizes = [feature_length(N, M), *hidden, N]
    net = init_ann(rng, sizes)
    net.biases = [rng.normal(0, 0.3, b.shape) for b in net.biases]
    v = normalize_features(build_features(data), N, M, "block", 2.0)
    n_w = len(net.weights)

    def loss(ps):
        trial = AnnNetwork(ps[:n_w], ps[n_w:])
        return compute_loss(data, RisPhaseVector.from_fraction(_ann_activations(trial, v)[-1]))

    acts = _ann_activations(net, v)
    analytic = ann_backward(net, acts, loss_grad_fraction(data, RisPhaseVector.from_fraction(acts[-1])))
    numeric = central_differences(loss, net.params, 1e-6)
    return GradCheck(f"ann sizes={sizes}", sum(p.size for p in net.params), relative_error(analytic, numeric), tolerance)


@dataclass
class OracleCheck:
    N: int
    M: int
    grid_value: float
    closed_form: float | None
    best_random: float
    best_continuous: float

    @property
    def gap(self) -> float | None:
        if self.closed_form is None:
            return None
        return (self.closed_form - self.grid_value) / self.closed_form

    @property
    def ok(self) -> bool:
        bound = self.grid_value >= self.best_random * (1.0 - 1e-12)
        if self.closed_form is None:
            return bound
        return bound and 0.0 <= self.gap <= 0.01


def oracle_check(rng: np.random.Generator, N: int, M: int, levels: int = 64, draws: int = 1000) -> OracleCheck:
    """Grid search against the closed form (M = 1) and against random draws.

    ``best_random`` draws phases uniformly from the same grid, so the grid
    optimum must dominate it; ``best_continuous`` draws from [0, 2pi) and is
    informational only (it can edge past the grid by the quantization gap).
    """
    data = sample_dataset(rng, rng, GeometryConfig(), M, N, 1)
    q, h = data.q[0], data.h[0]
    _, grid_value = oracle_exhaustive(q, h, levels)
    closed = oracle_m1(q, h)[1] if M == 1 else None
    on_grid = RisPhaseVector(2.0 * np.pi * rng.integers(0, levels, size=(draws, N)) / levels)
    rand = p2_objective(q[None], on_grid.u, h[None])
    cont = p2_objective(q[None], random_phases(rng, N, draws).u, h[None])
    return OracleCheck(N, M, grid_value, closed, float(np.max(rand)), float(np.max(cont)))
