"""Lowering to the native basis, routing, light optimization, scheduling, gaps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import Circuit
from .coupling import CouplingMap
from .gates import Gate, NATIVE_KINDS, gate_unitary, u3_matrix, zyz_decompose


@dataclass(frozen=True)
class PlacedGate:
    gate: Gate
    step: int

    def __post_init__(self):
        if self.step < 0:
            raise ValueError("negative step")


@dataclass(frozen=True)
class ScheduledCircuit:
    """Gates placed on an integer time grid; every gate occupies one step."""

    qubit_count: int
    placed: tuple[PlacedGate, ...]
    duration: int

    def __post_init__(self):
        object.__setattr__(self, "placed", tuple(self.placed))
        busy = set()
        top = 0
        for pg in self.placed:
            for q in pg.gate.qubits:
                if q >= self.qubit_count:
                    raise ValueError("gate qubit out of range")
                if (q, pg.step) in busy:
                    raise ValueError(f"overlap on qubit {q} at step {pg.step}")
                busy.add((q, pg.step))
            top = max(top, pg.step + 1)
        if self.duration < top:
            raise ValueError("duration smaller than last gate step")

    def occupancy(self) -> dict[int, set[int]]:
        """step -> set of busy qubits."""
        occ: dict[int, set[int]] = {}
        for pg in self.placed:
            occ.setdefault(pg.step, set()).update(pg.gate.qubits)
        return occ

    def gates_at(self, step: int) -> list[Gate]:
        return [pg.gate for pg in self.placed if pg.step == step]

    def to_circuit(self, metadata=None) -> Circuit:
        """Flatten by (step, lowest qubit) into a dependency-respecting gate list."""
        ordered = sorted(self.placed, key=lambda pg: (pg.step, min(pg.gate.qubits)))
        return Circuit(self.qubit_count, tuple(pg.gate for pg in ordered), metadata or {})


@dataclass(frozen=True)
class Gap:
    """Maximal idle interval strictly between a qubit's first and last gate."""

    qubit: int
    start: int
    length: int

    def __post_init__(self):
        if self.length < 1:
            raise ValueError("gap length must be >= 1")

    @property
    def steps(self) -> range:
        return range(self.start, self.start + self.length)


def decompose_to_native(c: Circuit) -> Circuit:
    """Rewrite into the u1/u2/u3/cx basis, preserving the unitary up to phase."""
    out = []
    for g in c.gates:
        if g.kind in NATIVE_KINDS:
            out.append(g)
        elif g.kind == "swap":
            a, b = g.qubits
            out.extend([Gate("cx", (a, b)), Gate("cx", (b, a)), Gate("cx", (a, b))])
        else:
            theta, phi, lam, _ = zyz_decompose(gate_unitary(g))
            out.append(Gate("u3", g.qubits, (theta, phi, lam), g.inserted))
    return c.with_gates(out)


def route(c: Circuit, cmap: CouplingMap):
    """Greedy shortest-path routing: swap chains (lowered to 3 cx) bring the
    control next to the target.  Returns (routed circuit, final permutation)
    with perm[logical] = physical wire after all swaps."""
    if c.qubit_count != cmap.qubit_count:
        raise ValueError("circuit and coupling map qubit counts differ")
    for g in c.gates:
        if g.kind not in NATIVE_KINDS:
            raise ValueError("route expects a native-basis circuit")
    log2phys = list(range(c.qubit_count))
    out = []

    def emit_swap(p: int, q: int) -> None:
        out.extend([Gate("cx", (p, q)), Gate("cx", (q, p)), Gate("cx", (p, q))])
        la = log2phys.index(p)
        lb = log2phys.index(q)
        log2phys[la], log2phys[lb] = log2phys[lb], log2phys[la]

    for g in c.gates:
        if not g.is_two_qubit:
            out.append(Gate(g.kind, (log2phys[g.qubits[0]],), g.params, g.inserted))
            continue
        pa, pb = log2phys[g.qubits[0]], log2phys[g.qubits[1]]
        if not cmap.has_edge(pa, pb):
            path = cmap.shortest_path(pa, pb)
            for i in range(len(path) - 2):
                emit_swap(path[i], path[i + 1])
            pa = log2phys[g.qubits[0]]
            pb = log2phys[g.qubits[1]]
        out.append(Gate("cx", (pa, pb)))
    return c.with_gates(out), tuple(log2phys)


def permutation_matrix(perm, n: int) -> np.ndarray:
    """Basis permutation sending the bit of logical qubit q to wire perm[q]."""
    dim = 2**n
    mat = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        bits = [(x >> (n - 1 - q)) & 1 for q in range(n)]
        y = 0
        for q in range(n):
            y |= bits[q] << (n - 1 - perm[q])
        mat[y, x] = 1.0
    return mat


def merge_single_qubit_runs(c: Circuit) -> Circuit:
    """Collapse maximal runs of consecutive non-inserted 1q gates on a qubit
    into a single u3.  Inserted gates both survive and break runs."""
    open_run: dict[int, list[int]] = {}  # qubit -> gate indices of the growing run
    merged_into: dict[int, list[int]] = {}

    for i, g in enumerate(c.gates):
        if g.is_two_qubit or g.inserted:
            for q in g.qubits:
                open_run.pop(q, None)
            continue
        q = g.qubits[0]
        run = open_run.setdefault(q, [])
        run.append(i)
        if len(run) == 2:
            merged_into[run[0]] = run

    drop = set()
    replace: dict[int, Gate] = {}
    for first, run in merged_into.items():
        prod = np.eye(2, dtype=complex)
        for i in run:
            prod = gate_unitary(c.gates[i]) @ prod
        theta, phi, lam, _ = zyz_decompose(prod)
        replace[first] = Gate("u3", c.gates[first].qubits, (theta, phi, lam))
        drop.update(run[1:])

    out = []
    for i, g in enumerate(c.gates):
        if i in drop:
            continue
        out.append(replace.get(i, g))
    return c.with_gates(out)


def schedule_asap(c: Circuit) -> ScheduledCircuit:
    """Earliest-start scheduling with unit-step gates."""
    next_free = [0] * c.qubit_count
    placed = []
    duration = 0
    for g in c.gates:
        start = max(next_free[q] for q in g.qubits)
        placed.append(PlacedGate(g, start))
        for q in g.qubits:
            next_free[q] = start + 1
        duration = max(duration, start + 1)
    return ScheduledCircuit(c.qubit_count, tuple(placed), duration)


def find_gaps(sc: ScheduledCircuit) -> list[Gap]:
    """Maximal idle intervals strictly inside each qubit's active window."""
    steps_by_qubit: dict[int, list[int]] = {}
    for pg in sc.placed:
        for q in pg.gate.qubits:
            steps_by_qubit.setdefault(q, []).append(pg.step)
    gaps = []
    for q in sorted(steps_by_qubit):
        steps = sorted(steps_by_qubit[q])
        for a, b in zip(steps, steps[1:]):
            if b - a > 1:
                gaps.append(Gap(q, a + 1, b - a - 1))
    return gaps


def transpile(c: Circuit, cmap: CouplingMap):
    """decompose -> route -> merge -> schedule.  Returns (schedule, final_perm)."""
    native = decompose_to_native(c)
    routed, perm = route(native, cmap)
    merged = merge_single_qubit_runs(routed)
    return schedule_asap(merged), perm
