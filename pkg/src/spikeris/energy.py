"""Operation counts and energy for dense (MAC) and spike-driven (AC) inference.

Only network layers are counted; encoding and decoding are excluded for both.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .snn_core import ForwardTrace


@dataclass(frozen=True)
class OpCount:
    multiplications: int = 0
    additions: int = 0

    def __post_init__(self):
        if self.multiplications < 0 or self.additions < 0:
            raise ValueError("operation counts must be nonnegative")

    def __add__(self, other: "OpCount") -> "OpCount":
        return OpCount(self.multiplications + other.multiplications, self.additions + other.additions)


@dataclass(frozen=True)
class EnergyTable:
    """Per-operation energy in pJ (32-bit float, 45 nm, 0.9 V)."""

    e_mult_pj: float = 3.7
    e_add_pj: float = 0.9

    def __post_init__(self):
        if self.e_mult_pj <= 0 or self.e_add_pj <= 0:
            raise ValueError("energy costs must be positive")


@dataclass
class EnergyReport:
    ops: OpCount
    energy_pj: float
    context: dict = field(default_factory=dict)

    @property
    def energy_uj(self) -> float:
        return self.energy_pj * 1e-6


def _full_shape(shape, input_width=None) -> list[int]:
    shape = [int(s) for s in shape]
    return shape if input_width is None else [int(input_width)] + shape


def count_ann_ops(shape, input_width: int | None = None) -> OpCount:
    """One multiply and one add per weight (MAC); activations not counted.

    ``shape`` lists layer widths; pass ``input_width`` if it is not the first entry.
    """
    sizes = _full_shape(shape, input_width)
    macs = sum(a * b for a, b in zip(sizes[:-1], sizes[1:]))
    return OpCount(macs, macs)


def count_snn_ops(net_shape, spikes, T: int | None = None, include_decay: bool = True) -> OpCount:
    """Accumulates triggered by spikes plus per-neuron state updates.

    Args:
        net_shape: full widths ``[input, layer1, ..., layerL]``.
        spikes: a :class:`ForwardTrace` of one sample, or the spikes entering
            each layer summed over the window (length ``L``; a trailing entry
            for the output layer is ignored).  Fractional means are rounded.
        T: window length; taken from the trace when one is given.
        include_decay: count one ``beta * omega`` multiply per neuron per step.

    Each input spike into a layer with ``n_out`` neurons costs ``n_out``
    additions; every neuron adds its current and subtracts its reset once per
    step (2 additions).
    """
    sizes = _full_shape(net_shape)
    if isinstance(spikes, ForwardTrace):
        T = spikes.inputs.shape[0]
        into = [spikes.layer_input(l).sum() for l in range(len(sizes) - 1)]
    else:
        if T is None:
            raise ValueError("window length T required with precomputed spike counts")
        into = list(np.asarray(spikes, dtype=float)[: len(sizes) - 1])
    synaptic = sum(float(c) * n_out for c, n_out in zip(into, sizes[1:]))
    neurons = sum(sizes[1:])
    additions = int(round(synaptic)) + 2 * neurons * T
    mults = neurons * T if include_decay else 0
    return OpCount(mults, additions)


def energy_from_ops(ops: OpCount, table: EnergyTable = EnergyTable()) -> float:
    return ops.multiplications * table.e_mult_pj + ops.additions * table.e_add_pj


def ann_report(shape, table: EnergyTable = EnergyTable(), **context) -> EnergyReport:
    ops = count_ann_ops(shape)
    return EnergyReport(ops, energy_from_ops(ops, table), dict(context))


def snn_report(net_shape, mean_counts, T: int, table: EnergyTable = EnergyTable(), include_decay: bool = True, **context) -> EnergyReport:
    """Report for the average sample, given spike counts averaged over a test set."""
    ops = count_snn_ops(net_shape, mean_counts, T, include_decay)
    ctx = {"mean_spike_counts": [float(c) for c in mean_counts], "T": T, "include_decay": include_decay}
    ctx.update(context)
    return EnergyReport(ops, energy_from_ops(ops, table), ctx)
