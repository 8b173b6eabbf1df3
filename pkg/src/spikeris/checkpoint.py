"""Checkpoint container: text header, raw little-endian float64 blocks, checksum line.

Layout::

    spikeris-checkpoint
    format_version: 1
    arch: snn
    <key>: <value>            # N, M, T, beta, omega_thr, layer_sizes, ...
    blocks: 256x18,128x256,...
    end_header
    <row-major <f8 bytes of every block, in order>
    checksum: sha256 <hex digest of all preceding bytes>
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np

from .baselines import AnnNetwork
from .snn_core import LifParams, SnnNetwork

MAGIC = b"spikeris-checkpoint\n"
FORMAT_VERSION = 1


class CheckpointError(ValueError):
    pass


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(str(v) for v in value)
    return str(value)


def write_container(path, arch: str, meta: dict, blocks: list[np.ndarray]) -> None:
    lines = [f"format_version: {FORMAT_VERSION}", f"arch: {arch}"]
    lines += [f"{k}: {_fmt(v)}" for k, v in meta.items()]
    lines.append("blocks: " + ",".join("x".join(str(d) for d in b.shape) for b in blocks))
    lines.append("end_header")
    body = MAGIC + ("\n".join(lines) + "\n").encode("utf-8")
    body += b"".join(np.ascontiguousarray(b, dtype="<f8").tobytes() for b in blocks)
    digest = hashlib.sha256(body).hexdigest()
    Path(path).write_bytes(body + f"\nchecksum: sha256 {digest}\n".encode("ascii"))


def read_container(path) -> tuple[str, dict, list[np.ndarray]]:
    raw = Path(path).read_bytes()
    if not raw.startswith(MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint file")
    cut = raw.rfind(b"\nchecksum: ")
    if cut < 0:
        raise CheckpointError(f"{path}: missing checksum line")
    body, tail = raw[:cut], raw[cut + 1 :].decode("ascii").split()
    if len(tail) != 3 or tail[1] != "sha256" or hashlib.sha256(body).hexdigest() != tail[2]:
        raise CheckpointError(f"{path}: checksum mismatch")
    marker = b"end_header\n"
    end = body.find(marker)
    if end < 0:
        raise CheckpointError(f"{path}: header not terminated")
    header = body[len(MAGIC) : end].decode("utf-8").splitlines()
    meta = dict(line.split(": ", 1) for line in header)
    if int(meta.pop("format_version")) != FORMAT_VERSION:
        raise CheckpointError(f"{path}: unsupported format version")
    arch = meta.pop("arch")
    shapes = [tuple(int(d) for d in s.split("x")) for s in meta.pop("blocks").split(",")]
    data = body[end + len(marker) :]
    blocks, offset = [], 0
    for shape in shapes:
        n = int(np.prod(shape)) * 8
        if offset + n > len(data):
            raise CheckpointError(f"{path}: truncated weight data")
        blocks.append(np.frombuffer(data[offset : offset + n], dtype="<f8").reshape(shape).astype(float))
        offset += n
    if offset != len(data):
        raise CheckpointError(f"{path}: trailing bytes after weight blocks")
    return arch, meta, blocks


def save_snn(path, net: SnnNetwork, N: int, M: int, T: int, init: str = "uniform_fan_in") -> None:
    p = net.params
    meta = {
        "N": N, "M": M, "T": T, "beta": float(p.beta), "omega_thr": float(p.omega_thr),
        "reset": p.reset, "init": init, "layer_sizes": net.layer_sizes,
    }
    write_container(path, "snn", meta, net.weights)


def load_snn(path) -> tuple[SnnNetwork, dict]:
    arch, meta, blocks = read_container(path)
    if arch != "snn":
        raise CheckpointError(f"{path}: expected an snn checkpoint, found {arch!r}")
    params = LifParams(beta=float(meta["beta"]), omega_thr=float(meta["omega_thr"]), reset=meta["reset"])
    net = SnnNetwork.from_weights(blocks, params)
    if net.layer_sizes != [int(s) for s in meta["layer_sizes"].split(",")]:
        raise CheckpointError(f"{path}: layer sizes do not match weight blocks")
    return net, meta


def save_ann(path, net: AnnNetwork, N: int, M: int) -> None:
    meta = {"N": N, "M": M, "layer_sizes": net.layer_sizes, "hidden": "relu", "output": "logistic"}
    write_container(path, "ann", meta, net.weights + [b[None, :] for b in net.biases])


def load_ann(path) -> tuple[AnnNetwork, dict]:
    arch, meta, blocks = read_container(path)
    if arch != "ann":
        raise CheckpointError(f"{path}: expected an ann checkpoint, found {arch!r}")
    L = len(blocks) // 2
    return AnnNetwork(blocks[:L], [b[0] for b in blocks[L:]]), meta
