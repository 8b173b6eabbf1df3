"""Unsupervised SNN training: phase-objective loss, BPTT with a surrogate step, Adam."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .channel import ChannelBatch, build_features, make_rng, normalize_features
from .ris_objective import RisPhaseVector, realify
from .snn_core import (
    ForwardTrace,
    LifParams,
    SnnNetwork,
    decode_mean_rate,
    encode_rate,
    network_forward,
    snn_layer_sizes,
    surrogate_grad,
)

log = logging.getLogger(__name__)


class TrainingDiverged(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-5
    adam_beta1: float = 0.9
    adam_beta2: float = 0.99
    adam_eps: float = 1e-8
    batch_size: int = 100
    epochs: int = 30
    T: int = 25
    lif_beta: float = 0.99
    omega_thr: float = 1.0
    reset: str = "subtract"
    train_samples: int = 100_000
    seed: int = 0
    feature_norm: str = "block"
    feature_scale: float = 3.0
    printed_sigmoid: bool = False

    def __post_init__(self):
        for name in ("learning_rate", "adam_eps", "batch_size", "T", "lif_beta", "omega_thr"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.epochs < 0 or self.train_samples < 0:
            raise ValueError("epochs and train_samples must be nonnegative")

    @property
    def lif_params(self) -> LifParams:
        return LifParams(beta=self.lif_beta, omega_thr=self.omega_thr, reset=self.reset)

    def with_(self, **kw) -> "TrainConfig":
        return replace(self, **kw)


@dataclass
class BatchGrad:
    grads: list[np.ndarray]

    def is_zero(self) -> bool:
        return all(not np.any(g) for g in self.grads)


class Adam:
    """Adam with bias correction over a list of arrays, updated in place."""

    def __init__(self, params: list[np.ndarray], lr: float, beta1: float = 0.9, beta2: float = 0.99, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.step = 0

    def update(self, params: list[np.ndarray], grads: list[np.ndarray]) -> None:
        if len(grads) != len(params):
            raise ValueError("gradient/parameter count mismatch")
        self.step += 1
        bc1 = 1.0 - self.beta1**self.step
        bc2 = 1.0 - self.beta2**self.step
        for p, g, m, v in zip(params, grads, self.m, self.v):
            if g.shape != p.shape:
                raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * (g * g)
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainState:
    net: SnnNetwork
    opt: Adam
    history: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def step(self) -> int:
        return self.opt.step

    @property
    def m(self) -> list[np.ndarray]:
        return self.opt.m

    @property
    def v(self) -> list[np.ndarray]:
        return self.opt.v


def new_state(net: SnnNetwork, cfg: TrainConfig) -> TrainState:
    return TrainState(net, Adam(net.weights, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps))


def init_weights(rng: np.random.Generator, net_shape, params: LifParams = LifParams()) -> SnnNetwork:
    """Uniform fan-in scaled weights, ``U[-1/sqrt(n_in), 1/sqrt(n_in)]`` per layer."""
    weights = []
    for n_in, n_out in zip(net_shape[:-1], net_shape[1:]):
        bound = 1.0 / np.sqrt(n_in)
        weights.append(rng.uniform(-bound, bound, size=(n_out, n_in)))
    return SnnNetwork.from_weights(weights, params)


def adam_update(state: TrainState, grad: BatchGrad) -> TrainState:
    state.opt.update(state.net.weights, grad.grads)
    return state


def _pairs_to_batch(batch) -> tuple[ChannelBatch, RisPhaseVector]:
    chans, phases = zip(*batch)
    return ChannelBatch.stack(list(chans)), RisPhaseVector(np.stack([p.theta for p in phases]))


def compute_loss(channels, phases: RisPhaseVector | None = None) -> float:
    """Batch loss ``-(1/2K) sum_k ||Qt_k ut_k + ht_k||^2`` in the real block form.

    Accepts ``(ChannelBatch, RisPhaseVector)`` or a list of
    ``(ChannelRealization, RisPhaseVector)`` pairs.
    """
    if phases is None:
        channels, phases = _pairs_to_batch(channels)
    if len(channels) == 0:
        raise ValueError("empty batch")
    r = realify(channels.q, phases.u, channels.h).residual()
    return float(-0.5 * np.mean(np.sum(r**2, axis=-1)))


def loss_grad_fraction(channels: ChannelBatch, phases: RisPhaseVector) -> np.ndarray:
    """dL / d(theta / 2pi) for every sample and element, shape (K, N)."""
    comp = realify(channels.q, phases.u, channels.h)
    r = comp.residual()
    K, N = phases.theta.shape
    g_ut = -np.einsum("kij,ki->kj", comp.q_tilde, r) / K
    th = phases.theta
    g_theta = -g_ut[:, :N] * np.sin(th) + g_ut[:, N:] * np.cos(th)
    return 2.0 * np.pi * g_theta


def backward_bptt(net: SnnNetwork, trace: ForwardTrace | None, upstream: np.ndarray) -> BatchGrad:
    """Gradient of the loss w.r.t. every weight, through time and layers.

    Args:
        net: the network that produced ``trace``.
        trace: retained forward trace.
        upstream: dL/d(mean output rate), shape (K, N).

    The forward Heaviside is differentiated with :func:`surrogate_grad`; in a
    smoothed trace that is the exact derivative.  The reset path (the
    membrane's dependence on the previous spike) is differentiated as well.
    """
    if trace is None or not trace.spikes:
        raise ValueError("backward pass needs the forward trace")
    p = net.params
    beta, thr = p.beta, p.omega_thr
    T = trace.inputs.shape[0]
    grads: list[np.ndarray] = [None] * len(net.layers)
    g_spk = np.broadcast_to(upstream / T, (T,) + upstream.shape)
    for l in range(len(net.layers) - 1, -1, -1):
        mem, spk = trace.membranes[l], trace.spikes[l]
        sg = surrogate_grad(mem - thr)
        g_mem = np.empty_like(mem)
        g_next = np.zeros(mem.shape[1:])
        for t in range(T - 1, -1, -1):
            if p.reset == "subtract":
                gs = g_spk[t] - beta * thr * g_next
                g_next = gs * sg[t] + beta * g_next
            else:
                gs = g_spk[t] - beta * mem[t] * g_next
                g_next = gs * sg[t] + beta * (1.0 - spk[t]) * g_next
            g_mem[t] = g_next
        x = trace.layer_input(l)
        grads[l] = g_mem.reshape(-1, g_mem.shape[-1]).T @ x.reshape(-1, x.shape[-1])
        if l > 0:
            g_spk = g_mem @ net.layers[l].weights
    return BatchGrad(grads)


def snn_phases(net: SnnNetwork, features: np.ndarray, cfg: TrainConfig, rng: np.random.Generator, smooth: bool = False):
    """Encode, run and decode a feature batch. Returns ``(phases, trace)``."""
    spikes = encode_rate(features, cfg.T, rng, cfg.printed_sigmoid)
    out, trace = network_forward(net, spikes, smooth=smooth)
    return decode_mean_rate(out), trace


def prepare_features(dataset: ChannelBatch, cfg: TrainConfig) -> np.ndarray:
    return normalize_features(build_features(dataset), dataset.N, dataset.M, cfg.feature_norm, cfg.feature_scale)


def train_step(state: TrainState, channels: ChannelBatch, features: np.ndarray, cfg: TrainConfig, rng) -> float:
    phases, trace = snn_phases(state.net, features, cfg, rng)
    loss = compute_loss(channels, phases)
    if not np.isfinite(loss):
        raise TrainingDiverged(f"non-finite loss {loss} at step {state.step}")
    grad = backward_bptt(state.net, trace, loss_grad_fraction(channels, phases))
    adam_update(state, grad)
    return loss


def train(cfg: TrainConfig, dataset: ChannelBatch, state: TrainState | None = None, callback=None) -> TrainState:
    """Epoch loop over ``dataset``; batch losses land in ``state.history``.

    Deterministic for a fixed ``cfg.seed``: weight init, encoder noise and
    shuffling each use their own stream.
    """
    N, M = dataset.N, dataset.M
    if state is None:
        net = init_weights(make_rng(cfg.seed, "init"), snn_layer_sizes(N, M), cfg.lif_params)
        state = new_state(net, cfg)
    features = prepare_features(dataset, cfg)
    enc_rng = make_rng(cfg.seed, "encoder")
    shuffle_rng = make_rng(cfg.seed, "shuffle")
    K = len(dataset)
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(K)
        for b, start in enumerate(range(0, K, cfg.batch_size)):
            idx = order[start : start + cfg.batch_size]
            loss = train_step(state, dataset[idx], features[idx], cfg, enc_rng)
            state.history.append((epoch, b, loss))
        log.info("epoch %d: mean batch loss %.6g", epoch, np.mean([h[2] for h in state.history if h[0] == epoch]))
        if callback is not None:
            callback(epoch, state)
    return state


def spike_counts(trace: ForwardTrace) -> np.ndarray:
    """Spikes summed over the window, per sample: input train then each layer, shape (K, L+1)."""
    cols = [trace.inputs.sum(axis=(0, 2))] + [s.sum(axis=(0, 2)) for s in trace.spikes]
    return np.stack(cols, axis=1)


def evaluate_snn(net: SnnNetwork, dataset: ChannelBatch, cfg: TrainConfig, rng, batch: int = 500):
    """Decoded phases and per-layer spike counts (see :func:`spike_counts`) for a dataset."""
    features = prepare_features(dataset, cfg)
    thetas, counts = [], []
    for start in range(0, len(dataset), batch):
        ph, tr = snn_phases(net, features[start : start + batch], cfg, rng)
        thetas.append(ph.theta)
        counts.append(spike_counts(tr))
    return RisPhaseVector(np.concatenate(thetas)), np.concatenate(counts)
