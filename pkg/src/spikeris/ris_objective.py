"""Received SNR, MRT beamforming and the phase-only objective.

The effective channel is ``a = Q @ u + h`` and the received signal uses the
plain transpose ``a.T @ w`` (no conjugate), so the MRT beamformer is
``w = sqrt(p_max) * conj(a) / ||a||``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BeamformerW:
    w: np.ndarray
    p_max: float

    def __post_init__(self):
        power = float(np.sum(np.abs(self.w) ** 2))
        if power > self.p_max + 1e-9:
            raise ValueError(f"beamformer power {power} exceeds budget {self.p_max}")


@dataclass
class RisPhaseVector:
    """Unit-modulus reflection coefficients built from phases in [0, 2pi].

    ``theta`` may carry a leading batch axis.
    """

    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)

    @property
    def u(self) -> np.ndarray:
        return np.cos(self.theta) + 1j * np.sin(self.theta)

    @classmethod
    def from_fraction(cls, frac) -> "RisPhaseVector":
        return cls(2.0 * np.pi * np.asarray(frac, dtype=float))

    def __len__(self) -> int:
        return self.theta.shape[-1]


@dataclass
class RealComposite:
    q_tilde: np.ndarray
    u_tilde: np.ndarray
    h_tilde: np.ndarray

    def residual(self) -> np.ndarray:
        return np.einsum("...ij,...j->...i", self.q_tilde, self.u_tilde) + self.h_tilde


def _as_u(u) -> np.ndarray:
    return u.u if isinstance(u, RisPhaseVector) else np.asarray(u)


def effective_channel(q: np.ndarray, u, h: np.ndarray) -> np.ndarray:
    """``Q @ u + h``, batched over any leading axes."""
    return np.einsum("...mn,...n->...m", q, _as_u(u)) + h


def mrt_beamformer(q: np.ndarray, u, h: np.ndarray, p_max: float) -> BeamformerW:
    a = effective_channel(q, u, h)
    norm = np.linalg.norm(a)
    if norm == 0:
        raise ValueError("degenerate channel: Q u + h is zero, MRT undefined")
    return BeamformerW(np.sqrt(p_max) * np.conj(a) / norm, p_max)


def received_snr(ch, u, w, sigma2: float = 1.0) -> float:
    """Linear SNR ``|(Q u + h)^T w|^2 / sigma2`` for one realization."""
    if sigma2 <= 0:
        raise ValueError("noise power must be positive")
    w = w.w if isinstance(w, BeamformerW) else np.asarray(w)
    a = effective_channel(ch.q_cascade, u, ch.h)
    return float(np.abs(a @ w) ** 2 / sigma2)


def mrt_snr_batch(q: np.ndarray, u, h: np.ndarray, p_max: float, sigma2: float = 1.0) -> np.ndarray:
    """SNR under MRT for stacked realizations, i.e. ``p_max ||Q u + h||^2 / sigma2``.

    The beamformer is built explicitly and applied through the transpose
    product so the value is the SNR formula evaluated, not the closed form.
    """
    a = effective_channel(q, u, h)
    norm = np.linalg.norm(a, axis=-1, keepdims=True)
    w = np.sqrt(p_max) * np.conj(a) / np.where(norm > 0, norm, 1.0)
    return np.abs(np.sum(a * w, axis=-1)) ** 2 / sigma2


def achievable_rate(gamma):
    gamma = np.asarray(gamma, dtype=float)
    if np.any(gamma < 0):
        raise ValueError("SNR must be nonnegative")
    r = np.log2(1.0 + gamma)
    return float(r) if r.ndim == 0 else r


def p2_objective(q: np.ndarray, u, h: np.ndarray):
    """``0.5 * ||Q u + h||^2``; batched over leading axes."""
    a = effective_channel(q, u, h)
    val = 0.5 * np.sum(np.abs(a) ** 2, axis=-1)
    return float(val) if np.ndim(val) == 0 else val


def realify(q: np.ndarray, u, h: np.ndarray) -> RealComposite:
    """Real block form: ``[[Re Q, -Im Q], [Im Q, Re Q]]``, ``[Re u; Im u]``, ``[Re h; Im h]``."""
    q = np.asarray(q)
    u = _as_u(u)
    h = np.asarray(h)
    top = np.concatenate([q.real, -q.imag], axis=-1)
    bottom = np.concatenate([q.imag, q.real], axis=-1)
    return RealComposite(
        np.concatenate([top, bottom], axis=-2),
        np.concatenate([u.real, u.imag], axis=-1),
        np.concatenate([h.real, h.imag], axis=-1),
    )
