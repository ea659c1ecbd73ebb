"""Versioned binary checkpoints for flat-parameter networks.

Layout (little-endian): ``b"NNCK"``, u32 version, u32 kind length, kind
(utf-8), u32 arch length, arch entries (u32), u64 parameter count, the
parameters (f64), then u8 flag; when set, u64 Adam step, f64 lr, beta1,
beta2, eps and the two moment vectors (f64).
"""

from __future__ import annotations

import struct

import numpy as np

from ..dynamics import A_MAX, OMEGA_DOT_MAX
from .adam import Adam
from .mlp import Mlp
from .policy import FfPolicyNet, PolicyNet

MAGIC = b"NNCK"
VERSION = 1


class CheckpointError(ValueError):
    pass


def save_checkpoint(path, net, adam: Adam | None = None) -> None:
    kind = net.kind.encode()
    arch = tuple(int(a) for a in net.arch)
    parts = [MAGIC, struct.pack("<II", VERSION, len(kind)), kind,
             struct.pack(f"<I{len(arch)}I", len(arch), *arch),
             struct.pack("<Q", net.size), net.theta.astype("<f8").tobytes()]
    if adam is None:
        parts.append(b"\x00")
    else:
        parts += [b"\x01", struct.pack("<Q4d", adam.t, adam.lr, adam.beta1, adam.beta2, adam.eps),
                  adam.m.astype("<f8").tobytes(), adam.v.astype("<f8").tobytes()]
    with open(path, "wb") as fh:
        fh.write(b"".join(parts))


def build_net(kind: str, arch):
    if kind == "ppo-lstm":
        n_obs, d1, d2, hidden = arch
        return PolicyNet(n_obs, (d1, d2), hidden)
    if kind == "ppo":
        n_obs, d1, d2 = arch
        return FfPolicyNet(n_obs, (d1, d2))
    if kind == "td3-actor":
        return Mlp(arch, "relu", "tanh", (A_MAX, OMEGA_DOT_MAX), kind=kind)
    if kind == "td3-critic":
        return Mlp(arch, "relu", "linear", kind=kind)
    raise CheckpointError(f"unknown network kind {kind!r}")


def load_checkpoint(path):
    """Returns ``(net, adam_or_None)``."""
    data = open(path, "rb").read()
    off = 0

    def take(fmt):
        nonlocal off
        size = struct.calcsize(fmt)
        if off + size > len(data):
            raise CheckpointError(f"truncated checkpoint at byte {off}")
        vals = struct.unpack_from(fmt, data, off)
        off += size
        return vals

    def take_f64(n):
        nonlocal off
        if off + 8 * n > len(data):
            raise CheckpointError(f"truncated checkpoint at byte {off}")
        arr = np.frombuffer(data, "<f8", n, off).astype(np.float64)
        off += 8 * n
        return arr

    if data[:4] != MAGIC:
        raise CheckpointError("bad magic")
    off = 4
    version, klen = take("<II")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    kind = take(f"<{klen}s")[0].decode()
    (n_arch,) = take("<I")
    arch = take(f"<{n_arch}I")
    net = build_net(kind, arch)
    (n,) = take("<Q")
    if n != net.size:
        raise CheckpointError(f"parameter count {n} does not match {kind} architecture {arch}")
    net.set_theta(take_f64(n))
    (flag,) = take("<B")
    adam = None
    if flag:
        t, lr, b1, b2, eps = take("<Q4d")
        adam = Adam(n, lr, b1, b2, eps, t, take_f64(n), take_f64(n))
    if off != len(data):
        raise CheckpointError(f"trailing bytes after offset {off}")
    return net, adam
