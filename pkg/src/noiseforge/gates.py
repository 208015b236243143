"""Gate IR and exact matrix algebra for the supported gate set.

The general single-qubit rotation is

    u3(theta, phi, lam) = [[cos(theta/2),              -e^{i lam} sin(theta/2)],
                           [e^{i phi} sin(theta/2),     e^{i(lam+phi)} cos(theta/2)]]

with u1(lam) = u3(0, 0, lam) and u2(phi, lam) = u3(pi/2, phi, lam).
Square-root gates are principal roots: eigenphases halved from (-pi, pi].
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

TAU = 2.0 * math.pi

#: number of angle parameters per gate kind
PARAM_COUNTS = {
    "u1": 1,
    "u2": 2,
    "u3": 3,
    "cx": 0,
    "sqrtx": 0,
    "sqrtw": 0,
    "sqrtz": 0,
    "x": 0,
    "y": 0,
    "swap": 0,
}

TWO_QUBIT_KINDS = frozenset({"cx", "swap"})
NATIVE_KINDS = frozenset({"u1", "u2", "u3", "cx"})

ID2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
W_MATRIX = (PAULI_X + PAULI_Y) / math.sqrt(2)

CX_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP_MATRIX = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


@dataclass(frozen=True)
class Gate:
    """A single gate application: kind, target qubits, angle parameters.

    ``inserted`` marks gates added by the gap compiler; they must survive
    later optimization passes untouched.
    """

    kind: str
    qubits: tuple[int, ...]
    params: tuple[float, ...] = ()
    inserted: bool = False

    def __post_init__(self):
        if self.kind not in PARAM_COUNTS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want = PARAM_COUNTS[self.kind]
        if len(self.params) != want:
            raise ValueError(
                f"{self.kind} takes {want} params, got {len(self.params)}"
            )
        nq = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.qubits) != nq:
            raise ValueError(f"{self.kind} acts on {nq} qubits, got {self.qubits}")
        if nq == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError("two-qubit gate qubits must be distinct")

    @property
    def is_two_qubit(self) -> bool:
        return self.kind in TWO_QUBIT_KINDS


# readable constructors (tests and generators use these heavily)
def u1(lam, q, inserted=False):
    return Gate("u1", (q,), (float(lam),), inserted)


def u2(phi, lam, q, inserted=False):
    return Gate("u2", (q,), (float(phi), float(lam)), inserted)


def u3(theta, phi, lam, q, inserted=False):
    return Gate("u3", (q,), (float(theta), float(phi), float(lam)), inserted)


def cx(control, target):
    return Gate("cx", (control, target))


def swap(a, b):
    return Gate("swap", (a, b))


def u3_matrix(theta: float, phi: float, lam: float) -> np.ndarray:
    """Exact 2x2 matrix of the parametrized single-qubit rotation."""
    c = math.cos(theta / 2.0)
    s = math.sin(theta / 2.0)
    return np.array(
        [
            [c, -cmath.exp(1j * lam) * s],
            [cmath.exp(1j * phi) * s, cmath.exp(1j * (lam + phi)) * c],
        ],
        dtype=complex,
    )


def _sqrt_involution(m: np.ndarray) -> np.ndarray:
    # For an involution (m @ m = I) the principal root has the closed form
    # ((1+i) I + (1-i) m) / 2: eigenvalue +1 -> 1, eigenvalue -1 -> i.
    return ((1 + 1j) * ID2 + (1 - 1j) * m) / 2.0


SQRTX_MATRIX = _sqrt_involution(PAULI_X)
SQRTW_MATRIX = _sqrt_involution(W_MATRIX)
SQRTZ_MATRIX = _sqrt_involution(PAULI_Z)

_FIXED_MATRICES = {
    "cx": CX_MATRIX,
    "swap": SWAP_MATRIX,
    "x": PAULI_X,
    "y": PAULI_Y,
    "sqrtx": SQRTX_MATRIX,
    "sqrtw": SQRTW_MATRIX,
    "sqrtz": SQRTZ_MATRIX,
}


def gate_unitary(g: Gate) -> np.ndarray:
    """Ideal matrix of a gate (2x2, or 4x4 with the first qubit as the high bit)."""
    if g.kind == "u3":
        return u3_matrix(*g.params)
    if g.kind == "u2":
        return u3_matrix(math.pi / 2.0, *g.params)
    if g.kind == "u1":
        return u3_matrix(0.0, 0.0, g.params[0])
    return _FIXED_MATRICES[g.kind].copy()


def reduce_angle(x: float) -> float:
    """Reduce an angle to the canonical interval (-pi, pi]."""
    r = math.remainder(x, TAU)
    if r <= -math.pi:
        r += TAU
    return r


def unitarity_defect(u: np.ndarray) -> float:
    """Max absolute entry of U U^dag - I."""
    d = u.shape[0]
    return float(np.abs(u @ u.conj().T - np.eye(d)).max())


def require_unitary(u: np.ndarray, tol: float = 1e-9) -> None:
    defect = unitarity_defect(u)
    if defect > tol:
        raise ValueError(f"matrix is not unitary (defect {defect:.3e} > {tol:.1e})")


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Max-entry distance between a and b after aligning global phase.

    The phase is fixed on the largest-magnitude entry of ``a``.
    """
    if a.shape != b.shape:
        raise ValueError("shape mismatch")
    idx = np.unravel_index(np.argmax(np.abs(a)), a.shape)
    ref = a[idx]
    if abs(ref) == 0.0:
        return float(np.abs(a - b).max())
    ph = b[idx] / ref
    mag = abs(ph)
    if mag < 1e-12:
        return float(np.abs(a - b).max())
    ph /= mag
    return float(np.abs(a * ph - b).max())


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    return phase_distance(a, b) <= tol


def zyz_decompose(u: np.ndarray, tol: float = 1e-9):
    """Angles (theta, phi, lam, global_phase) with e^{i phase} u3(theta,phi,lam) = u.

    theta lies in [0, pi]; phi and lam in (-pi, pi].  At the degenerate poles
    (theta = 0 or pi) lam is fixed to 0 and the whole diagonal phase goes
    into phi.
    """
    if u.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    require_unitary(u, tol)

    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    su = u * det ** (-0.5)  # special unitary representative
    a = abs(su[0, 0])
    b = abs(su[1, 0])

    if b < 1e-12:  # theta ~ 0: diagonal, u = e^{i alpha} diag(1, e^{i phi})
        theta = 0.0
        lam = 0.0
        phi = reduce_angle(cmath.phase(u[1, 1]) - cmath.phase(u[0, 0]))
    elif a < 1e-12:  # theta ~ pi: antidiagonal
        theta = math.pi
        lam = 0.0
        phi = reduce_angle(cmath.phase(u[1, 0]) - cmath.phase(-u[0, 1]))
    else:
        theta = 2.0 * math.atan2(b, a)
        phi_plus_lam = 2.0 * cmath.phase(su[1, 1])
        phi_minus_lam = 2.0 * cmath.phase(su[1, 0])
        phi = reduce_angle(0.5 * (phi_plus_lam + phi_minus_lam))
        lam = reduce_angle(0.5 * (phi_plus_lam - phi_minus_lam))

    rebuilt = u3_matrix(theta, phi, lam)
    idx = np.unravel_index(np.argmax(np.abs(rebuilt)), (2, 2))
    phase = cmath.phase(u[idx] / rebuilt[idx])
    return theta, phi, lam, phase


def gate_inverse(g: Gate) -> Gate:
    """Inverse gate, expressed in the same IR.

    u3(t,p,l)^-1 = u3(-t,-l,-p); u1 inverts its angle; cx/swap/x/y are
    self-inverse; the square roots are rewritten as a u3 via zyz.
    """
    if g.kind == "u1":
        return Gate("u1", g.qubits, (-g.params[0],), g.inserted)
    if g.kind == "u2":
        t, p, l = math.pi / 2.0, g.params[0], g.params[1]
        return Gate("u3", g.qubits, (-t, -l, -p), g.inserted)
    if g.kind == "u3":
        t, p, l = g.params
        return Gate("u3", g.qubits, (-t, -l, -p), g.inserted)
    if g.kind in ("cx", "swap", "x", "y"):
        return g
    theta, phi, lam, _ = zyz_decompose(gate_unitary(g).conj().T)
    return Gate("u3", g.qubits, (theta, phi, lam), g.inserted)


def _kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product without np.kron's shape-juggling overhead."""
    ra, ca = a.shape
    rb, cb = b.shape
    return (a[:, None, :, None] * b[None, :, None, :]).reshape(ra * rb, ca * cb)


def embed_unitary(u: np.ndarray, qubits: tuple[int, ...], n: int) -> np.ndarray:
    """Embed a k-qubit unitary acting on ``qubits`` into the full 2^n space.

    Qubit 0 is the most significant bit of the basis index; ``qubits`` gives
    the order of the gate's own factors (e.g. control first for cx).
    """
    k = len(qubits)
    if u.shape != (2**k, 2**k):
        raise ValueError("matrix size does not match qubit count")
    if len(set(qubits)) != k or any(q < 0 or q >= n for q in qubits):
        raise ValueError("invalid qubit indices")
    if k == 1 or list(qubits) == list(range(qubits[0], qubits[0] + k)):
        # factors already in tensor order: I_left (x) u (x) I_right
        left = 2 ** qubits[0]
        right = 2 ** (n - qubits[0] - k)
        full = _kron(np.eye(left, dtype=complex), u) if left > 1 else u
        return _kron(full, np.eye(right, dtype=complex)) if right > 1 else full
    others = [q for q in range(n) if q not in qubits]
    order = list(qubits) + others  # qubit carried by each kron factor
    full = _kron(u, np.eye(2 ** (n - k), dtype=complex))
    t = full.reshape([2] * (2 * n))
    # move factor axes so that axis j corresponds to qubit j
    pos = [0] * n
    for axis, q in enumerate(order):
        pos[q] = axis
    t = t.transpose(pos + [n + p for p in pos])
    return np.ascontiguousarray(t.reshape(2**n, 2**n))
