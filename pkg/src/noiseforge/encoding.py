"""Scheduled circuits as fixed-size multi-channel images.

Channel layout (C = 8):
    0..3  one-hot gate type: u1, u2, u3, cx (cx marks both its pixels)
    4..6  theta, phi, lam, each reduced into [0, 2pi) and divided by 2pi;
          a gate only writes the angle channels its kind defines
    7     cx role: +1 at the control pixel, -1 at the target pixel

Rows are qubits, columns are schedule steps; columns past the circuit's
duration stay zero (right padding).  Circuits longer than the image width are
rejected rather than truncated.
"""
from __future__ import annotations

import math
import struct

import numpy as np

from .circuit import Circuit
from .gates import NATIVE_KINDS, TAU
from .transpile import ScheduledCircuit, schedule_asap

N_CHANNELS = 8
DEFAULT_WIDTH = 64
_TYPE_CHANNEL = {"u1": 0, "u2": 1, "u3": 2, "cx": 3}
_MAGIC = b"DQIM"


class WidthOverflowError(ValueError):
    """Schedule longer than the image width."""


def canonical_order(c: Circuit) -> Circuit:
    """Deterministic topological order: sort by (earliest step, lowest qubit).

    Gates sharing a step never share a qubit, so the key is total and any
    listing of the same dependency structure canonicalizes identically.
    """
    sc = schedule_asap(c)
    ordered = sorted(sc.placed, key=lambda pg: (pg.step, min(pg.gate.qubits)))
    return c.with_gates(pg.gate for pg in ordered)


def _norm_angle(x: float) -> float:
    r = math.fmod(x, TAU)
    if r < 0.0:
        r += TAU
    return r / TAU


def encode_image(sc: ScheduledCircuit, width: int = DEFAULT_WIDTH) -> np.ndarray:
    """Encode a scheduled circuit as a (8, qubit_count, width) float tensor."""
    if sc.duration > width:
        raise WidthOverflowError(
            f"schedule duration {sc.duration} exceeds image width {width}"
        )
    img = np.zeros((N_CHANNELS, sc.qubit_count, width))
    for pg in sc.placed:
        g = pg.gate
        if g.kind not in NATIVE_KINDS:
            raise ValueError(f"cannot encode non-native gate {g.kind!r}; lower first")
        col = pg.step
        if g.kind == "cx":
            ctrl, tgt = g.qubits
            img[3, ctrl, col] = 1.0
            img[3, tgt, col] = 1.0
            img[7, ctrl, col] = 1.0
            img[7, tgt, col] = -1.0
            continue
        q = g.qubits[0]
        img[_TYPE_CHANNEL[g.kind], q, col] = 1.0
        if g.kind == "u1":
            img[6, q, col] = _norm_angle(g.params[0])
        elif g.kind == "u2":
            img[5, q, col] = _norm_angle(g.params[0])
            img[6, q, col] = _norm_angle(g.params[1])
        else:
            img[4, q, col] = _norm_angle(g.params[0])
            img[5, q, col] = _norm_angle(g.params[1])
            img[6, q, col] = _norm_angle(g.params[2])
    return img


def encode_circuit(c: Circuit, width: int = DEFAULT_WIDTH) -> np.ndarray:
    return encode_image(schedule_asap(canonical_order(c)), width)


def dump_image(img: np.ndarray, path) -> None:
    """Binary dump: magic DQIM, u32 LE dims (C, H, W), float32 LE entries."""
    c, h, w = img.shape
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<III", c, h, w))
        fh.write(img.astype("<f4").tobytes(order="C"))


def load_image(path) -> np.ndarray:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        c, h, w = struct.unpack("<III", fh.read(12))
        payload = fh.read(4 * c * h * w)
        if len(payload) != 4 * c * h * w:
            raise ValueError("truncated image file")
        return np.frombuffer(payload, dtype="<f4").reshape(c, h, w).astype(float)
