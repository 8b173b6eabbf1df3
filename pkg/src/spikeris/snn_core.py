"""Rate encoder, LIF layers, the multi-layer forward pass and the decoder.

Membrane update per layer and timestep (subtraction reset)::

    omega[t] = beta * omega[t-1] + I[t] - beta * omega_thr * s[t-1]
    s[t]     = H(omega[t] - omega_thr)        # H(0) = 1

where ``I[t] = W @ x[t]`` is driven by the layer's input spikes at the same
timestep, so a spike can travel through the whole stack within one step.
``s[t-1]`` is exactly the spike :func:`lif_step` reports for the membrane it
is handed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .ris_objective import RisPhaseVector


def sigmoid(x, printed: bool = False):
    """Logistic map onto (0, 1).

    ``printed=True`` uses the decreasing form ``1 / (1 + exp(x))``.
    """
    x = np.asarray(x, dtype=float)
    z = x if printed else -x
    # split by sign to keep exp() from overflowing
    out = np.empty_like(x)
    pos = z >= 0
    ez = np.exp(-z[pos])
    out[pos] = ez / (1.0 + ez)
    out[~pos] = 1.0 / (1.0 + np.exp(z[~pos]))
    return out


def heaviside(x):
    return (np.asarray(x) >= 0).astype(float)


def smooth_heaviside(x):
    """Arctangent step whose derivative is exactly :func:`surrogate_grad`.

    Spans only (1/2 - 1/(2pi), 1/2 + 1/(2pi)); it exists so gradient checks
    can differentiate a forward pass that matches the backward pass.
    """
    return np.arctan(np.pi * np.asarray(x, dtype=float)) / np.pi**2 + 0.5


def surrogate_grad(x):
    """Backward-pass stand-in for dH/dx: ``1 / (pi + pi^3 x^2)``, x = omega - omega_thr."""
    x = np.asarray(x, dtype=float)
    g = 1.0 / (np.pi + x**2 * np.pi**3)
    return float(g) if g.ndim == 0 else g


@dataclass(frozen=True)
class LifParams:
    beta: float = 0.99
    omega_thr: float = 1.0
    omega_reset: float = 0.0
    reset: str = "subtract"

    def __post_init__(self):
        if not 0.0 < self.beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {self.beta}")
        if self.omega_thr <= 0:
            raise ValueError(f"omega_thr must be positive, got {self.omega_thr}")
        if self.omega_reset != 0.0:
            raise ValueError("only omega_reset = 0 is supported")
        if self.reset not in ("subtract", "zero"):
            raise ValueError(f"reset must be 'subtract' or 'zero', got {self.reset!r}")


@dataclass
class LifLayer:
    weights: np.ndarray
    params: LifParams = LifParams()
    membrane: np.ndarray = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float)
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("non-finite weights")
        if self.membrane is None:
            self.reset_state()

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    def reset_state(self, batch: int | None = None) -> None:
        shape = (self.n_out,) if batch is None else (batch, self.n_out)
        self.membrane = np.zeros(shape)


@dataclass
class SpikeTrain:
    """Binary spikes, timestep-major: ``(T, L)`` or batched ``(T, K, L)``."""

    spikes: np.ndarray

    @property
    def T(self) -> int:
        return self.spikes.shape[0]

    @property
    def width(self) -> int:
        return self.spikes.shape[-1]


@dataclass
class SnnNetwork:
    layers: list[LifLayer]

    def __post_init__(self):
        for a, b in zip(self.layers, self.layers[1:]):
            if a.n_out != b.n_in:
                raise ValueError(f"layer widths do not chain: {a.n_out} -> {b.n_in}")

    @classmethod
    def from_weights(cls, weights, params: LifParams = LifParams()) -> "SnnNetwork":
        return cls([LifLayer(np.array(w, dtype=float), params) for w in weights])

    @property
    def params(self) -> LifParams:
        return self.layers[0].params

    @property
    def input_width(self) -> int:
        return self.layers[0].n_in

    @property
    def layer_sizes(self) -> list[int]:
        return [self.input_width] + [layer.n_out for layer in self.layers]

    @property
    def weights(self) -> list[np.ndarray]:
        return [layer.weights for layer in self.layers]


def snn_layer_sizes(N: int, M: int) -> list[int]:
    """Input width followed by the five LIF layer widths 32N, 16N, 8N, 4N, N."""
    return [2 * (N * M + M), 32 * N, 16 * N, 8 * N, 4 * N, N]


@dataclass
class ForwardTrace:
    """Everything the backward pass needs, per layer, shaped ``(T, K, n)``."""

    inputs: np.ndarray
    membranes: list[np.ndarray] = field(default_factory=list)
    spikes: list[np.ndarray] = field(default_factory=list)
    smooth: bool = False

    def layer_input(self, l: int) -> np.ndarray:
        return self.inputs if l == 0 else self.spikes[l - 1]


def encode_rate(v, T: int, rng: np.random.Generator, printed_sigmoid: bool = False) -> SpikeTrain:
    """Bernoulli rate code: each entry fires with probability sigmoid(v_l) per step.

    ``v`` of shape ``(L,)`` gives a ``(T, L)`` train; ``(K, L)`` gives ``(T, K, L)``.
    """
    if T < 1:
        raise ValueError(f"window length must be >= 1, got {T}")
    p = sigmoid(v, printed=printed_sigmoid)
    return SpikeTrain((rng.random((T,) + p.shape) < p).astype(float))


def lif_step(layer: LifLayer, in_spikes) -> tuple[np.ndarray, np.ndarray]:
    """Advance ``layer`` one step.

    Returns the spike decision ``H(omega - omega_thr)`` for the membrane on
    entry, and the updated membrane (also stored on the layer).
    """
    p = layer.params
    omega = layer.membrane
    current = np.asarray(in_spikes, dtype=float) @ layer.weights.T
    spike = heaviside(omega - p.omega_thr)
    if p.reset == "subtract":
        new = p.beta * omega + current - p.beta * p.omega_thr * spike
    else:
        new = p.beta * omega * (1.0 - spike) + current
    layer.membrane = new
    return spike, new


def _run_layer(currents: np.ndarray, params: LifParams, smooth: bool) -> tuple[np.ndarray, np.ndarray]:
    fire = smooth_heaviside if smooth else heaviside
    beta, thr = params.beta, params.omega_thr
    mem = np.zeros_like(currents)
    out = np.zeros_like(currents)
    omega = np.zeros(currents.shape[1:])
    s_prev = np.zeros_like(omega)
    for t in range(currents.shape[0]):
        if params.reset == "subtract":
            omega = beta * omega + currents[t] - beta * thr * s_prev
        else:
            omega = beta * omega * (1.0 - s_prev) + currents[t]
        s_prev = fire(omega - thr)
        mem[t] = omega
        out[t] = s_prev
    return mem, out


def network_forward(net: SnnNetwork, inputs: SpikeTrain, smooth: bool = False) -> tuple[SpikeTrain, ForwardTrace]:
    """Run the window through every layer from zeroed membranes.

    ``smooth=True`` replaces the Heaviside with :func:`smooth_heaviside` in the
    forward pass; used for gradient checking only.
    """
    x = np.asarray(inputs.spikes, dtype=float)
    if x.shape[-1] != net.input_width:
        raise ValueError(f"input width {x.shape[-1]} does not match network fan-in {net.input_width}")
    squeeze = x.ndim == 2
    if squeeze:
        x = x[:, None, :]
    trace = ForwardTrace(inputs=x, smooth=smooth)
    for layer in net.layers:
        currents = x @ layer.weights.T
        mem, x = _run_layer(currents, layer.params, smooth)
        trace.membranes.append(mem)
        trace.spikes.append(x)
        layer.membrane = mem[-1, 0] if squeeze else mem[-1]
    out = x[:, 0, :] if squeeze else x
    return SpikeTrain(out), trace


def mean_rate(out: SpikeTrain) -> np.ndarray:
    return np.mean(out.spikes, axis=0)


def decode_mean_rate(out: SpikeTrain) -> RisPhaseVector:
    """Mean firing rate per output neuron mapped linearly onto [0, 2pi]."""
    return RisPhaseVector.from_fraction(mean_rate(out))
