"""Density-matrix simulation of scheduled circuits on a DeviceModel.

Per time step, in fixed order: active gates (single-qubit thetas over-rotated
by the per-qubit device angle), idle coherent Z drift, coherent ZZ crosstalk,
idle amplitude damping and pure dephasing, then depolarizing noise on the
gates that just ran.  Readout flips act on the final distribution.

Relaxation parameters per step of duration t:
    gamma   = 1 - exp(-t / T1)                 (amplitude damping)
    lam_phi = 1 - exp(-t / T_phi),  1/T_phi = 1/T2 - 1/(2 T1)
The dephasing channel is a phase flip with probability lam_phi / 2, so the
off-diagonal factor is exactly exp(-t / T_phi).
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .circuit import Circuit, circuit_unitary
from .device import DeviceModel
from .gates import (
    ID2,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    embed_unitary,
    gate_unitary,
    u3_matrix,
)
from .transpile import ScheduledCircuit

_TOL = 1e-9


# ---------------------------------------------------------------------------
# Kraus channel factories (each family satisfies sum K^dag K = I exactly)
# ---------------------------------------------------------------------------


def amplitude_damping_kraus(gamma: float) -> list[np.ndarray]:
    k0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]], dtype=complex)
    k1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]], dtype=complex)
    return [k0, k1]


def dephasing_kraus(lam_phi: float) -> list[np.ndarray]:
    p = lam_phi / 2.0
    return [math.sqrt(1.0 - p) * ID2, math.sqrt(p) * PAULI_Z]


def depolarizing_1q_kraus(p: float) -> list[np.ndarray]:
    return [
        math.sqrt(1.0 - 0.75 * p) * ID2,
        math.sqrt(p / 4.0) * PAULI_X,
        math.sqrt(p / 4.0) * PAULI_Y,
        math.sqrt(p / 4.0) * PAULI_Z,
    ]


def depolarizing_2q_kraus(p: float) -> list[np.ndarray]:
    paulis = [ID2, PAULI_X, PAULI_Y, PAULI_Z]
    ops = []
    for i, a in enumerate(paulis):
        for j, b in enumerate(paulis):
            w = 1.0 - 15.0 * p / 16.0 if i == j == 0 else p / 16.0
            ops.append(math.sqrt(w) * np.kron(a, b))
    return ops


def _apply_kraus(rho: np.ndarray, ops, qubits, n: int) -> np.ndarray:
    out = np.zeros_like(rho)
    for k in ops:
        kf = embed_unitary(k, qubits, n)
        out += kf @ rho @ kf.conj().T
    return out


def _apply_embedded_kraus(rho: np.ndarray, stacks) -> np.ndarray:
    k_stack, kdag_stack = stacks
    return np.matmul(np.matmul(k_stack, rho), kdag_stack).sum(axis=0)


def _stack_ops(embedded):
    k_stack = np.stack(embedded)
    return k_stack, np.conj(k_stack).transpose(0, 2, 1).copy()


@lru_cache(maxsize=None)
def _embedded_cx(qubits: tuple, n: int) -> np.ndarray:
    from .gates import CX_MATRIX

    return embed_unitary(CX_MATRIX, qubits, n)


@lru_cache(maxsize=None)
def _idle_channel_ops(dev: DeviceModel, q: int, t: float, n: int):
    """Embedded Kraus operators for one idle qubit-step (damping, dephasing)."""
    channels = []
    t1 = dev.t1_us[q]
    t2 = dev.t2_us[q]
    if t1 is not None:
        gamma = 1.0 - math.exp(-t / t1)
        if gamma > 0.0:
            channels.append(amplitude_damping_kraus(gamma))
    if t2 is not None:
        inv_tphi = 1.0 / t2 - (0.0 if t1 is None else 0.5 / t1)
        lam_phi = 1.0 - math.exp(-t * inv_tphi)
        if lam_phi > 0.0:
            channels.append(dephasing_kraus(lam_phi))
    return tuple(
        _stack_ops([embed_unitary(k, (q,), n) for k in ops]) for ops in channels
    )


@lru_cache(maxsize=None)
def _depol_ops(dev: DeviceModel, qubits: tuple, n: int):
    if len(qubits) == 2:
        ops = depolarizing_2q_kraus(dev.p_depol_2q)
    else:
        ops = depolarizing_1q_kraus(dev.p_depol_1q)
    return _stack_ops([embed_unitary(k, qubits, n) for k in ops])


@lru_cache(maxsize=None)
def _cached_idle_diagonal(dev: DeviceModel, idle: tuple, t: float, n: int):
    angles = np.zeros(2**n)
    idle_set = set(idle)
    any_term = False
    for q in idle:
        delta = dev.drift_rad_per_us[q]
        if delta == 0.0:
            continue
        any_term = True
        half = 0.5 * delta * t
        bits = _bit_column(q, n)
        angles = angles + np.where(bits == 0, -half, half)
    for (a, b), zeta in zip(dev.coupling.edges, dev.crosstalk_rad_per_us):
        if zeta == 0.0:
            continue
        if not dev.crosstalk_always_on and not (a in idle_set and b in idle_set):
            continue
        any_term = True
        half = 0.5 * zeta * t
        parity = _bit_column(a, n) ^ _bit_column(b, n)
        angles = angles + np.where(parity == 0, -half, half)
    if not any_term:
        return None
    phase = np.exp(-1j * angles)
    return np.outer(phase, phase.conj())


# ---------------------------------------------------------------------------
# distributions
# ---------------------------------------------------------------------------


def distribution_from_density(rho: np.ndarray) -> np.ndarray:
    p = np.real(np.diag(rho)).copy()
    p[p < 0] = 0.0
    return p / p.sum()


def apply_readout_flips(dist: np.ndarray, dev: DeviceModel) -> np.ndarray:
    n = dev.qubit_count
    p = dist.reshape([2] * n)
    for q in range(n):
        p10 = dev.readout_p1_given_0[q]
        p01 = dev.readout_p0_given_1[q]
        m = np.array([[1.0 - p10, p01], [p10, 1.0 - p01]])
        p = np.moveaxis(np.tensordot(m, p, axes=([1], [q])), 0, q)
    return p.reshape(-1)


def expected_hamming_weight(dist: np.ndarray) -> float:
    """Mean number of 1 bits under the distribution."""
    _require_normalized(dist)
    n = _qubits_of(dist)
    weights = np.array([bin(x).count("1") for x in range(len(dist))], dtype=float)
    return float(np.dot(dist, weights)) if n else 0.0


def tvd_singleton(dist: np.ndarray) -> float:
    """Total variation distance from the all-zeros singleton: 1 - p(0...0)."""
    _require_normalized(dist)
    return float(1.0 - dist[0])


def distribution_as_dict(dist: np.ndarray) -> dict[str, float]:
    n = _qubits_of(dist)
    return {format(x, f"0{n}b"): float(p) for x, p in enumerate(dist)}


def _qubits_of(dist: np.ndarray) -> int:
    n = int(round(math.log2(len(dist))))
    if 2**n != len(dist):
        raise ValueError("distribution length must be a power of two")
    return n


def _require_normalized(dist: np.ndarray) -> None:
    s = float(np.sum(dist))
    if abs(s - 1.0) > _TOL or np.any(np.asarray(dist) < -_TOL):
        raise ValueError(f"distribution not normalized (sum {s})")


# ---------------------------------------------------------------------------
# the simulator
# ---------------------------------------------------------------------------


def _check_density(rho: np.ndarray) -> None:
    if abs(np.trace(rho).real - 1.0) > _TOL or abs(np.trace(rho).imag) > _TOL:
        raise AssertionError("density matrix trace drifted from 1")
    if np.abs(rho - rho.conj().T).max() > _TOL:
        raise AssertionError("density matrix lost hermiticity")
    if np.linalg.eigvalsh(rho).min() < -_TOL:
        raise AssertionError("density matrix lost positivity")


def _step_duration(dev: DeviceModel, gates) -> float:
    return dev.t_2q_us if any(g.is_two_qubit for g in gates) else dev.t_1q_us


def _executed_unitary(gate, dev: DeviceModel) -> np.ndarray:
    """Gate matrix as the hardware runs it: theta picks up the per-qubit
    over-rotation for single-qubit gates."""
    if gate.is_two_qubit:
        return gate_unitary(gate)
    eps = dev.overrotation_rad[gate.qubits[0]]
    if eps == 0.0:
        return gate_unitary(gate)
    if gate.kind == "u1":
        theta, phi, lam = 0.0, 0.0, gate.params[0]
    elif gate.kind == "u2":
        theta, phi, lam = math.pi / 2.0, gate.params[0], gate.params[1]
    elif gate.kind == "u3":
        theta, phi, lam = gate.params
    else:
        raise ValueError(f"cannot execute non-native gate {gate.kind!r}")
    return u3_matrix(theta + eps, phi, lam)


def simulate(
    sc: ScheduledCircuit,
    dev: DeviceModel,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
    validate: bool = False,
) -> np.ndarray:
    """Output distribution of a scheduled circuit on a device.

    Exact mode (shots=None) returns the true post-readout distribution;
    shots mode returns empirical frequencies of ``shots`` samples.
    """
    n = sc.qubit_count
    if n != dev.qubit_count:
        raise ValueError("circuit and device qubit counts differ")
    if shots is not None:
        if shots < 1:
            raise ValueError("shots must be >= 1")
        if rng is None:
            raise ValueError("shots mode needs an rng")
    for pg in sc.placed:
        if pg.gate.is_two_qubit and not dev.coupling.has_edge(*pg.gate.qubits):
            raise ValueError(f"cx {pg.gate.qubits} not on a coupling edge")

    by_step: dict[int, list] = {}
    for pg in sc.placed:
        by_step.setdefault(pg.step, []).append(pg.gate)

    dim = 2**n
    rho = np.zeros((dim, dim), dtype=complex)
    rho[0, 0] = 1.0

    for step in range(sc.duration):
        gates = by_step.get(step, [])
        busy = {q for g in gates for q in g.qubits}
        idle = tuple(q for q in range(n) if q not in busy)
        t = _step_duration(dev, gates)

        # coherent part: gates, then idle drift, then crosstalk
        for g in sorted(gates, key=lambda g: g.qubits):
            if g.kind == "cx":
                u = _embedded_cx(g.qubits, n)
            else:
                u = embed_unitary(_executed_unitary(g, dev), g.qubits, n)
            rho = u @ rho @ u.conj().T
        phase = _cached_idle_diagonal(dev, idle, t, n)
        if phase is not None:
            rho = rho * phase

        # idle relaxation
        for q in idle:
            for ops in _idle_channel_ops(dev, q, t, n):
                rho = _apply_embedded_kraus(rho, ops)

        # gate depolarizing
        for g in sorted(gates, key=lambda g: g.qubits):
            if g.is_two_qubit:
                if dev.p_depol_2q > 0.0:
                    rho = _apply_embedded_kraus(rho, _depol_ops(dev, g.qubits, n))
            elif dev.p_depol_1q > 0.0:
                rho = _apply_embedded_kraus(rho, _depol_ops(dev, g.qubits, n))

        if validate:
            _check_density(rho)

    dist = apply_readout_flips(distribution_from_density(rho), dev)
    dist = dist / dist.sum()
    if shots is None:
        return dist
    counts = rng.multinomial(shots, dist)
    return counts / float(shots)


def _bit_column(q: int, n: int) -> np.ndarray:
    idx = np.arange(2**n)
    return (idx >> (n - 1 - q)) & 1


def statevector_reference(c: Circuit) -> np.ndarray:
    """Exact noiseless output distribution via the full-circuit unitary."""
    u = circuit_unitary(c)
    amps = u[:, 0]
    return np.abs(amps) ** 2
