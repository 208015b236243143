"""Shared test utilities: oracles and constructed circuit families."""
import numpy as np

from noiseforge.circuit import Circuit, uu_dagger
from noiseforge.gates import Gate, cx, gate_unitary, u3


def haar_unitary(rng, dim=2):
    """Haar-random unitary via QR of a complex Gaussian matrix."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def embed_unitary_naive(u, qubits, n):
    """Index-by-index embedding; the independent oracle for the fast version."""
    k = len(qubits)
    full = np.zeros((2**n, 2**n), dtype=complex)
    for col in range(2**n):
        bits = [(col >> (n - 1 - q)) & 1 for q in range(n)]
        sub_in = 0
        for i, q in enumerate(qubits):
            sub_in |= bits[q] << (k - 1 - i)
        for sub_out in range(2**k):
            amp = u[sub_out, sub_in]
            if amp == 0:
                continue
            out_bits = list(bits)
            for i, q in enumerate(qubits):
                out_bits[q] = (sub_out >> (k - 1 - i)) & 1
            row = 0
            for q, b in enumerate(out_bits):
                row |= b << (n - 1 - q)
            full[row, col] += amp
    return full


def sequence_product(gates):
    """Ordered matrix product of single-qubit gates (first gate applied first)."""
    prod = np.eye(2, dtype=complex)
    for g in gates:
        prod = gate_unitary(g) @ prod
    return prod


GRID = [k * np.pi / 6.0 for k in range(12)]


def dd_probe_circuit(rng, gap_len=4):
    """A UU^dag circuit whose transpiled schedule has exactly one gap, of
    length ``gap_len``, on a leaf qubit of the t-shape map.

    One leaf idles while a repeated cx chain runs; a closing cx pins the
    leaf's second gate behind the chain, creating the interior gap.  A cx on
    the edge disjoint from the closing one keeps the chain qubits busy during
    the echo's midpoint so no other interior holes appear.
    """
    spectator = int(rng.choice([0, 2, 4]))
    partner = {0: 1, 2: 1, 4: 3}[spectator]
    mid_edge = (0, 1) if spectator == 4 else (3, 4)
    kinds = ["sqrtx", "sqrtw", "sqrtz"]
    layer = [Gate(kinds[rng.integers(0, 3)], (q,)) for q in range(5)]
    chain = [cx(1, 3) for _ in range(gap_len)]
    u_part = Circuit(
        5, tuple(layer + chain + [cx(spectator, partner), cx(*mid_edge)])
    )
    return uu_dagger(u_part)
