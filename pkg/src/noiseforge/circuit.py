"""Circuit IR, full-circuit unitaries, inverses, random generators, file formats."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gates import (
    Gate,
    NATIVE_KINDS,
    embed_unitary,
    gate_inverse,
    gate_unitary,
    reduce_angle,
    u3_matrix,
    zyz_decompose,
)

MAX_ORACLE_QUBITS = 10

ANGLE_GRID = tuple(k * math.pi / 6.0 for k in range(12))
CYCLE_GATE_KINDS = ("sqrtx", "sqrtw", "sqrtz")


@dataclass(frozen=True)
class Circuit:
    qubit_count: int
    gates: tuple[Gate, ...]
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.qubit_count < 1:
            raise ValueError("qubit_count must be positive")
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if any(q >= self.qubit_count for q in g.qubits):
                raise ValueError(f"gate {g} out of range for {self.qubit_count} qubits")

    def with_gates(self, gates) -> "Circuit":
        return Circuit(self.qubit_count, tuple(gates), dict(self.metadata))


def circuit_unitary(c: Circuit) -> np.ndarray:
    """Full unitary of the circuit, gates applied in list order (left-multiplied)."""
    if c.qubit_count > MAX_ORACLE_QUBITS:
        raise ValueError(
            f"refusing to build a 2^{c.qubit_count} unitary "
            f"(limit {MAX_ORACLE_QUBITS} qubits)"
        )
    u = np.eye(2**c.qubit_count, dtype=complex)
    for g in c.gates:
        u = embed_unitary(gate_unitary(g), g.qubits, c.qubit_count) @ u
    return u


def inverse_circuit(c: Circuit) -> Circuit:
    """Reverse the gate order and invert each gate."""
    return c.with_gates(gate_inverse(g) for g in reversed(c.gates))


def concat(a: Circuit, b: Circuit) -> Circuit:
    if a.qubit_count != b.qubit_count:
        raise ValueError("qubit counts differ")
    return Circuit(a.qubit_count, a.gates + b.gates, dict(a.metadata))


def random_identity_sequence(length: int, rng: np.random.Generator, qubit: int = 0):
    """A run of ``length`` u3 gates whose ordered product is the identity.

    The first length-1 gates draw every angle uniformly from the 12-point
    grid {k pi/6}; the final gate is the exact inverse of their product
    (its angles are not snapped to the grid).
    """
    if length < 1:
        raise ValueError("length must be >= 1")
    gates = []
    prod = np.eye(2, dtype=complex)
    for _ in range(length - 1):
        theta, phi, lam = (ANGLE_GRID[i] for i in rng.integers(0, 12, size=3))
        gates.append(Gate("u3", (qubit,), (theta, phi, lam), inserted=True))
        prod = u3_matrix(theta, phi, lam) @ prod
    theta, phi, lam, _ = zyz_decompose(prod.conj().T)
    gates.append(Gate("u3", (qubit,), (theta, phi, lam), inserted=True))
    return gates


def random_u_circuit(n: int, cycles: int, rng: np.random.Generator) -> Circuit:
    """Random layered circuit: per cycle a single-qubit gate on every qubit
    (uniform over sqrtx/sqrtw/sqrtz) followed by one cx on a uniformly random
    ordered pair of distinct qubits."""
    if n < 2:
        raise ValueError("need at least 2 qubits")
    if cycles < 1:
        raise ValueError("need at least 1 cycle")
    gates = []
    for _ in range(cycles):
        for q in range(n):
            gates.append(Gate(CYCLE_GATE_KINDS[rng.integers(0, 3)], (q,)))
        a = int(rng.integers(0, n))
        b = int(rng.integers(0, n - 1))
        if b >= a:
            b += 1
        gates.append(Gate("cx", (a, b)))
    return Circuit(n, tuple(gates))


def uu_dagger(c: Circuit) -> Circuit:
    """The echo circuit c followed by its inverse (ideal output: all zeros)."""
    return concat(c, inverse_circuit(c))


# ---------------------------------------------------------------------------
# text format
#
#   # comment
#   qubits 5
#   u3 q0 1.5707963267948966 0.0 3.141592653589793
#   cx q1 q2
#   sqrtw q3
#   u3 q2 0.1 0.2 0.3 !ins
#
# Angles are reduced to (-pi, pi] on write and printed with repr precision,
# so a parsed file re-serializes byte-identically.
# ---------------------------------------------------------------------------


def circuit_to_text(c: Circuit) -> str:
    lines = []
    for key in sorted(c.metadata):
        lines.append(f"# meta {key} {c.metadata[key]}")
    lines.append(f"qubits {c.qubit_count}")
    for g in c.gates:
        parts = [g.kind]
        parts.extend(f"q{q}" for q in g.qubits)
        parts.extend(repr(reduce_angle(p)) for p in g.params)
        if g.inserted:
            parts.append("!ins")
        lines.append(" ".join(parts))
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> Circuit:
    qubit_count = None
    gates = []
    metadata = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            fields = line[1:].split()
            if len(fields) >= 3 and fields[0] == "meta":
                metadata[fields[1]] = " ".join(fields[2:])
            continue
        tokens = line.split()
        if tokens[0] == "qubits":
            qubit_count = int(tokens[1])
            continue
        if qubit_count is None:
            raise ValueError(f"line {lineno}: gate before 'qubits' header")
        kind = tokens[0]
        inserted = tokens[-1] == "!ins"
        if inserted:
            tokens = tokens[:-1]
        qubits = tuple(int(t[1:]) for t in tokens[1:] if t.startswith("q"))
        params = tuple(float(t) for t in tokens[1 + len(qubits):])
        gates.append(Gate(kind, qubits, params, inserted))
    if qubit_count is None:
        raise ValueError("missing 'qubits' header")
    return Circuit(qubit_count, tuple(gates), metadata)


def save_circuit(c: Circuit, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(circuit_to_text(c))


def load_circuit(path) -> Circuit:
    with open(path, "r", encoding="ascii") as fh:
        return circuit_from_text(fh.read())


def circuit_to_qasm(c: Circuit) -> str:
    """OpenQASM 2.0 text for circuits already in the native u1/u2/u3/cx basis."""
    lines = [
        "OPENQASM 2.0;",
        'include "qelib1.inc";',
        f"qreg q[{c.qubit_count}];",
        f"creg c[{c.qubit_count}];",
    ]
    for g in c.gates:
        if g.kind not in NATIVE_KINDS:
            raise ValueError(f"cannot export non-native gate {g.kind!r}")
        if g.kind == "cx":
            lines.append(f"cx q[{g.qubits[0]}],q[{g.qubits[1]}];")
        else:
            args = ",".join(repr(reduce_angle(p)) for p in g.params)
            lines.append(f"{g.kind}({args}) q[{g.qubits[0]}];")
    lines.append("measure q -> c;")
    return "\n".join(lines) + "\n"
