"""Geometry, Rayleigh channel draws, the cascade matrix and network features.

Links: BS-UE (``h``, length M), RIS-UE (``f``, length N) and BS-RIS
(``G``, M x N).  The reflected channel ``G @ diag(u) @ f`` is rewritten as
``Q @ u`` with ``Q[:, n] = f[n] * G[:, n]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

STREAMS = ("geometry", "channels", "encoder", "init", "test_geometry", "test_channels", "eval_encoder", "baseline", "shuffle")


def make_rng(seed: int, stream: str) -> np.random.Generator:
    """Independent generator for one named stream derived from a master seed."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), STREAMS.index(stream)]))


@dataclass(frozen=True)
class GeometryConfig:
    d_br: float = 8.0
    d0_range: tuple[float, float] = (0.0, 8.0)
    d1_range: tuple[float, float] = (1.0, 6.0)
    d_ref: float = 1.0
    alt_planar: bool = False


@dataclass(frozen=True)
class SystemGeometry:
    d_br: float
    d0: float
    d1: float
    d_ref: float = 1.0
    alt_planar: bool = False

    def __post_init__(self):
        if self.d_br <= 0:
            raise ValueError(f"d_br must be positive, got {self.d_br}")
        if not 0.0 <= self.d0 <= self.d_br:
            raise ValueError(f"d0={self.d0} outside [0, d_br={self.d_br}]")
        if self.d1 < 0:
            raise ValueError(f"d1 must be nonnegative, got {self.d1}")

    @property
    def d_bu_raw(self) -> float:
        return float(np.hypot(self.d0, self.d1))

    @property
    def d_ru_raw(self) -> float:
        if self.alt_planar:
            return float(np.hypot(self.d_br - self.d0, self.d1))
        return float(np.sqrt(max(self.d_br**2 - self.d0**2, 0.0)))

    @property
    def d_bu(self) -> float:
        return max(self.d_bu_raw, self.d_ref)

    @property
    def d_ru(self) -> float:
        return max(self.d_ru_raw, self.d_ref)


@dataclass
class ChannelRealization:
    h: np.ndarray
    f: np.ndarray
    G: np.ndarray
    q_cascade: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.q_cascade is None:
            self.q_cascade = build_q(self.G, self.f)

    @property
    def M(self) -> int:
        return self.G.shape[0]

    @property
    def N(self) -> int:
        return self.G.shape[1]


@dataclass
class ChannelBatch:
    """K stacked realizations: ``h`` (K, M), ``f`` (K, N), ``G`` and ``q`` (K, M, N)."""

    h: np.ndarray
    f: np.ndarray
    G: np.ndarray
    q: np.ndarray

    def __len__(self) -> int:
        return self.h.shape[0]

    @property
    def M(self) -> int:
        return self.G.shape[1]

    @property
    def N(self) -> int:
        return self.G.shape[2]

    def __getitem__(self, idx) -> "ChannelBatch":
        if isinstance(idx, (int, np.integer)):
            idx = [idx]
        return ChannelBatch(self.h[idx], self.f[idx], self.G[idx], self.q[idx])

    def realization(self, k: int) -> ChannelRealization:
        return ChannelRealization(self.h[k], self.f[k], self.G[k], self.q[k])

    @classmethod
    def stack(cls, realizations: list[ChannelRealization]) -> "ChannelBatch":
        return cls(
            np.stack([r.h for r in realizations]),
            np.stack([r.f for r in realizations]),
            np.stack([r.G for r in realizations]),
            np.stack([r.q_cascade for r in realizations]),
        )


def path_loss_linear(d, d_ref: float = 1.0):
    """Linear power gain of the 20.4 log10(d/d_ref) dB path loss.

    Raises:
        ValueError: if any distance is below ``d_ref`` (clamp first).
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < d_ref):
        raise ValueError(f"distance below reference d_ref={d_ref}: {d.min()}")
    out = (d / d_ref) ** -2.04
    return float(out) if out.ndim == 0 else out


def sample_geometry(rng: np.random.Generator, cfg: GeometryConfig = GeometryConfig()) -> SystemGeometry:
    d0 = rng.uniform(*cfg.d0_range)
    d1 = rng.uniform(*cfg.d1_range)
    return SystemGeometry(cfg.d_br, float(min(d0, cfg.d_br)), float(d1), cfg.d_ref, cfg.alt_planar)


def _crandn(rng: np.random.Generator, shape) -> np.ndarray:
    # unit-variance circularly symmetric complex Gaussian
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def sample_channels(rng: np.random.Generator, geometry: SystemGeometry, M: int, N: int) -> ChannelRealization:
    if M < 1 or N < 1:
        raise ValueError(f"need M >= 1 and N >= 1, got M={M}, N={N}")
    d_ref = geometry.d_ref
    h = _crandn(rng, M) * np.sqrt(path_loss_linear(geometry.d_bu, d_ref))
    f = _crandn(rng, N) * np.sqrt(path_loss_linear(geometry.d_ru, d_ref))
    G = _crandn(rng, (M, N)) * np.sqrt(path_loss_linear(max(geometry.d_br, d_ref), d_ref))
    return ChannelRealization(h, f, G)


def build_q(G: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Cascade matrix with column n equal to ``f[n] * G[:, n]``.

    Works on a single pair (M x N, N) or stacked pairs (K x M x N, K x N).
    """
    G = np.asarray(G)
    f = np.asarray(f)
    if G.ndim < 2 or G.shape[-1] != f.shape[-1] or G.shape[:-2] != f.shape[:-1]:
        raise ValueError(f"dimension mismatch: G {G.shape} vs f {f.shape}")
    return G * f[..., None, :]


def sample_dataset(
    geometry_rng: np.random.Generator,
    channel_rng: np.random.Generator,
    cfg: GeometryConfig,
    M: int,
    N: int,
    K: int,
) -> ChannelBatch:
    """K independent (geometry, channel) draws, stacked."""
    draws = [sample_channels(channel_rng, sample_geometry(geometry_rng, cfg), M, N) for _ in range(K)]
    if not draws:
        z = np.zeros((0, M, N), complex)
        return ChannelBatch(np.zeros((0, M), complex), np.zeros((0, N), complex), z, z.copy())
    return ChannelBatch.stack(draws)


def feature_length(N: int, M: int) -> int:
    return 2 * (N * M + M)


def build_features(ch) -> np.ndarray:
    """Real feature vector ``[Re vec Q, Im vec Q, Re h, Im h]``.

    ``vec`` is column-major.  Accepts a :class:`ChannelRealization`
    (returns shape ``(2(NM+M),)``) or a :class:`ChannelBatch` (returns
    ``(K, 2(NM+M))``).
    """
    if isinstance(ch, ChannelRealization):
        q = ch.q_cascade.reshape(-1, order="F")
        return np.concatenate([q.real, q.imag, ch.h.real, ch.h.imag])
    K = len(ch)
    # column-major vec of each M x N slice == row-major flatten of its transpose
    q = np.swapaxes(ch.q, 1, 2).reshape(K, -1)
    return np.concatenate([q.real, q.imag, ch.h.real, ch.h.imag], axis=1)


def normalize_features(v: np.ndarray, N: int, M: int, mode: str = "block", scale: float = 1.0) -> np.ndarray:
    """Per-sample rescaling applied before rate encoding.

    ``"none"`` multiplies ``v`` by ``scale`` only.  ``"block"`` divides the
    cascade block and the direct-link block by their own per-sample RMS, so
    both reach the encoder with RMS ``scale`` regardless of path loss.
    """
    if mode == "none":
        return scale * np.asarray(v, dtype=float)
    if mode != "block":
        raise ValueError(f"unknown feature normalization {mode!r}")
    v = np.atleast_2d(np.asarray(v, dtype=float))
    nq = 2 * N * M
    out = np.empty_like(v)
    for sl in (slice(0, nq), slice(nq, None)):
        blk = v[:, sl]
        rms = np.sqrt(np.mean(blk**2, axis=1, keepdims=True))
        out[:, sl] = scale * np.divide(blk, rms, out=np.zeros_like(blk), where=rms > 0)
    return out
