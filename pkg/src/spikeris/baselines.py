"""Reference phase designs: an MLP trained on the same loss, random phases,
the M=1 closed form and exhaustive grid search."""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelBatch, make_rng
from .ris_objective import RisPhaseVector, p2_objective
from .snn_core import sigmoid, snn_layer_sizes
from .trainer import Adam, TrainConfig, TrainingDiverged, compute_loss, loss_grad_fraction, prepare_features

log = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 10**7


@dataclass
class AnnNetwork:
    """Fully connected ReLU stack with a logistic output layer.

    ``weights[l]`` is ``(n_out, n_in)``; ``biases[l]`` is ``(n_out,)``.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    @property
    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases


@dataclass
class AnnTrainState:
    net: AnnNetwork
    opt: Adam
    history: list[tuple[int, int, float]] = field(default_factory=list)


def init_ann(rng: np.random.Generator, sizes) -> AnnNetwork:
    weights, biases = [], []
    for n_in, n_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
        biases.append(np.zeros(n_out))
    return AnnNetwork(weights, biases)


def _ann_activations(net: AnnNetwork, v: np.ndarray) -> list[np.ndarray]:
    acts = [np.atleast_2d(v)]
    last = len(net.weights) - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = acts[-1] @ w.T + b
        acts.append(sigmoid(z) if l == last else np.maximum(z, 0.0))
    return acts


def ann_forward(net: AnnNetwork, v: np.ndarray) -> RisPhaseVector:
    out = _ann_activations(net, v)[-1]
    return RisPhaseVector.from_fraction(out if np.ndim(v) == 2 else out[0])


def ann_backward(net: AnnNetwork, acts: list[np.ndarray], upstream: np.ndarray) -> list[np.ndarray]:
    """Weight then bias gradients given dL/d(output fraction)."""
    gw, gb = [None] * len(net.weights), [None] * len(net.weights)
    out = acts[-1]
    g = upstream * out * (1.0 - out)
    for l in range(len(net.weights) - 1, -1, -1):
        gw[l] = g.T @ acts[l]
        gb[l] = g.sum(axis=0)
        if l > 0:
            g = (g @ net.weights[l]) * (acts[l] > 0)
    return gw + gb


def ann_loss_and_grad(net: AnnNetwork, channels: ChannelBatch, features: np.ndarray):
    acts = _ann_activations(net, features)
    phases = RisPhaseVector.from_fraction(acts[-1])
    loss = compute_loss(channels, phases)
    return loss, ann_backward(net, acts, loss_grad_fraction(channels, phases))


def ann_train(cfg: TrainConfig, dataset: ChannelBatch, state: AnnTrainState | None = None) -> AnnTrainState:
    """Backprop + Adam on the same unsupervised loss and data as the SNN."""
    if state is None:
        net = init_ann(make_rng(cfg.seed, "baseline"), snn_layer_sizes(dataset.N, dataset.M))
        state = AnnTrainState(net, Adam(net.params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps))
    features = prepare_features(dataset, cfg)
    shuffle_rng = make_rng(cfg.seed + 1, "shuffle")
    K = len(dataset)
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(K)
        for b, start in enumerate(range(0, K, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            loss, grads = ann_loss_and_grad(state.net, dataset[idx], features[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(f"ANN loss became {loss} in epoch {epoch}, batch {b}")
            state.opt.update(state.net.params, grads)
            state.history.append((epoch, b, loss))
        log.info("ann epoch %d done", epoch)
    return state


def random_phases(rng: np.random.Generator, N: int, K: int | None = None) -> RisPhaseVector:
    shape = N if K is None else (K, N)
    return RisPhaseVector(rng.uniform(0.0, 2.0 * np.pi, size=shape))


def oracle_m1(q: np.ndarray, h) -> tuple[RisPhaseVector, float]:
    """Closed-form optimum for one BS antenna: rotate every reflected term onto ``h``.

    For ``h = 0`` the common reference phase is 0.
    """
    q = np.atleast_2d(np.asarray(q))
    if q.shape[0] != 1:
        raise ValueError(f"closed form needs M = 1, got Q of shape {q.shape}")
    h = complex(np.ravel(h)[0])
    qn = q[0]
    ref = np.angle(h) if h != 0 else 0.0
    theta = np.mod(ref - np.angle(qn), 2.0 * np.pi)
    return RisPhaseVector(theta), 0.5 * (abs(h) + np.sum(np.abs(qn))) ** 2


def oracle_m1_batch(channels: ChannelBatch) -> np.ndarray:
    """Optimal objective value per sample for M = 1 batches."""
    if channels.M != 1:
        raise ValueError("closed form needs M = 1")
    return 0.5 * (np.abs(channels.h[:, 0]) + np.abs(channels.q[:, 0, :]).sum(axis=1)) ** 2


def oracle_m1_phases(channels: ChannelBatch) -> RisPhaseVector:
    if channels.M != 1:
        raise ValueError("closed form needs M = 1")
    return RisPhaseVector(np.stack([oracle_m1(channels.q[k], channels.h[k])[0].theta for k in range(len(channels))]))


def oracle_exhaustive(q: np.ndarray, h: np.ndarray, levels: int) -> tuple[RisPhaseVector, float]:
    """Best phase vector on the grid ``2 pi k / levels`` by full enumeration."""
    q = np.atleast_2d(np.asarray(q))
    N = q.shape[1]
    if levels < 1:
        raise ValueError("levels must be positive")
    if levels**N > EXHAUSTIVE_LIMIT:
        raise ValueError(f"search space {levels}^{N} exceeds {EXHAUSTIVE_LIMIT}")
    grid = 2.0 * np.pi * np.arange(levels) / levels
    best_val, best = -np.inf, None
    # chunk over the first element's phase to bound memory
    rest = np.array(list(itertools.product(range(levels), repeat=N - 1)), dtype=int).reshape(levels ** (N - 1), N - 1)
    for k0 in range(levels):
        idx = np.concatenate([np.full((len(rest), 1), k0), rest], axis=1)
        vals = p2_objective(q[None], np.exp(1j * grid[idx]), np.asarray(h)[None])
        i = int(np.argmax(vals))
        if vals[i] > best_val:
            best_val, best = float(vals[i]), grid[idx[i]]
    return RisPhaseVector(best), best_val
