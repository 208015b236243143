import math

import numpy as np
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from noiseforge.gates import (
    CX_MATRIX,
    Gate,
    PAULI_X,
    PAULI_Y,
    PAULI_Z,
    SQRTW_MATRIX,
    SQRTX_MATRIX,
    SQRTZ_MATRIX,
    SWAP_MATRIX,
    W_MATRIX,
    embed_unitary,
    equal_up_to_phase,
    gate_inverse,
    gate_unitary,
    phase_distance,
    reduce_angle,
    u3,
    u3_matrix,
    unitarity_defect,
    zyz_decompose,
)
from helpers import embed_unitary_naive, haar_unitary

angles = st.floats(min_value=-12.0, max_value=12.0, allow_nan=False)


def test_u3_of_zero_is_identity():
    assert np.allclose(u3_matrix(0, 0, 0), np.eye(2), atol=0)


def test_u3_reduces_to_phase_gate():
    lam = 1.3
    expect = np.diag([1.0, np.exp(1j * lam)])
    assert np.abs(u3_matrix(0, 0, lam) - expect).max() < 1e-15


def test_u3_pi_0_pi_is_pauli_x():
    # evaluated entrywise: cos(pi/2)=0, sin(pi/2)=1, phases e^{i pi}=-1
    assert np.abs(u3_matrix(math.pi, 0, math.pi) - PAULI_X).max() < 1e-15


@given(angles, angles, angles)
@settings(max_examples=200)
def test_u3_always_unitary(theta, phi, lam):
    assert unitarity_defect(u3_matrix(theta, phi, lam)) < 1e-12


def test_sqrt_gates_square_to_their_base():
    for root, base in [
        (SQRTX_MATRIX, PAULI_X),
        (SQRTW_MATRIX, W_MATRIX),
        (SQRTZ_MATRIX, PAULI_Z),
    ]:
        assert np.abs(root @ root - base).max() < 1e-12


def test_sqrtz_exact_value():
    assert np.abs(SQRTZ_MATRIX - np.diag([1.0, 1.0j])).max() < 1e-15


def test_sqrt_gates_are_principal():
    # eigenvalue arguments must lie in (-pi/2, pi/2]
    for root in (SQRTX_MATRIX, SQRTW_MATRIX, SQRTZ_MATRIX):
        args = np.angle(np.linalg.eigvals(root))
        assert np.all(args > -math.pi / 2 - 1e-12)
        assert np.all(args <= math.pi / 2 + 1e-12)


def test_w_matrix_definition():
    assert np.abs(W_MATRIX - (PAULI_X + PAULI_Y) / math.sqrt(2)).max() < 1e-15


def test_gate_validation():
    with pytest.raises(ValueError):
        Gate("u3", (0,), (1.0,))  # wrong param count
    with pytest.raises(ValueError):
        Gate("cx", (1, 1))  # duplicate qubits
    with pytest.raises(ValueError):
        Gate("hadamard", (0,))  # unknown kind
    with pytest.raises(ValueError):
        Gate("u1", (0, 1), (0.5,))  # wrong qubit count


def test_reduce_angle_interval():
    for x in (-math.pi, math.pi, 3 * math.pi, -7.5, 0.0, 2 * math.pi):
        r = reduce_angle(x)
        assert -math.pi < r <= math.pi
        assert abs((math.cos(r) - math.cos(x)) + 1j * (math.sin(r) - math.sin(x))) < 1e-12


class TestZyz:
    def test_identity(self):
        assert zyz_decompose(np.eye(2, dtype=complex)) == (0.0, 0.0, 0.0, 0.0)

    def test_pauli_x_reconstructs(self):
        theta, phi, lam, alpha = zyz_decompose(PAULI_X)
        assert theta == pytest.approx(math.pi)
        assert lam == 0.0  # pole tie-break: full phase in phi
        rebuilt = np.exp(1j * alpha) * u3_matrix(theta, phi, lam)
        assert np.abs(rebuilt - PAULI_X).max() < 1e-12

    def test_u3_round_trip(self):
        u = u3_matrix(0.7, 1.1, -2.0)
        theta, phi, lam, alpha = zyz_decompose(u)
        assert np.abs(np.exp(1j * alpha) * u3_matrix(theta, phi, lam) - u).max() < 1e-9

    def test_haar_round_trips(self):
        rng = np.random.default_rng(7)
        for _ in range(500):
            u = haar_unitary(rng)
            theta, phi, lam, alpha = zyz_decompose(u)
            assert 0.0 <= theta <= math.pi
            assert -math.pi < phi <= math.pi
            assert -math.pi < lam <= math.pi
            rebuilt = np.exp(1j * alpha) * u3_matrix(theta, phi, lam)
            assert np.abs(rebuilt - u).max() < 1e-9

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            zyz_decompose(np.array([[1.0, 0.0], [1.0, 1.0]], dtype=complex))


def test_gate_inverse_is_inverse():
    rng = np.random.default_rng(3)
    gates = [
        u3(0.4, -1.2, 2.2, 0),
        Gate("u1", (0,), (0.9,)),
        Gate("u2", (0,), (0.3, -0.8)),
        Gate("sqrtx", (0,)),
        Gate("sqrtw", (0,)),
        Gate("sqrtz", (0,)),
        Gate("x", (0,)),
        Gate("y", (0,)),
    ]
    for g in gates:
        inv = gate_inverse(g)
        prod = gate_unitary(inv) @ gate_unitary(g)
        assert equal_up_to_phase(np.eye(2), prod, 1e-9), g.kind
    for g in (Gate("cx", (0, 1)), Gate("swap", (0, 1))):
        inv = gate_inverse(g)
        assert np.abs(gate_unitary(inv) @ gate_unitary(g) - np.eye(4)).max() < 1e-12


def test_u2_inverse_rule():
    # u2(phi, lam)^-1 = u3(-pi/2, -lam, -phi)
    inv = gate_inverse(Gate("u2", (0,), (0.3, -0.8)))
    assert inv.kind == "u3"
    assert inv.params == (-math.pi / 2.0, 0.8, -0.3)


def test_phase_distance_alignment():
    u = u3_matrix(0.3, 0.4, 0.5)
    assert phase_distance(u, np.exp(1j * 1.234) * u) < 1e-12
    assert phase_distance(u, u3_matrix(0.31, 0.4, 0.5)) > 1e-4


@pytest.mark.parametrize("qubits,n", [((0,), 1), ((0,), 3), ((2,), 3), ((0, 1), 2),
                                      ((1, 0), 2), ((0, 2), 3), ((2, 0), 3), ((1, 3), 4)])
def test_embed_matches_naive_oracle(qubits, n):
    rng = np.random.default_rng(hash((qubits, n)) % 2**32)
    u = haar_unitary(rng, 2 ** len(qubits))
    fast = embed_unitary(u, qubits, n)
    slow = embed_unitary_naive(u, qubits, n)
    assert np.abs(fast - slow).max() < 1e-12


def test_cx_and_swap_matrices():
    assert np.array_equal(gate_unitary(Gate("cx", (0, 1))), CX_MATRIX)
    assert np.array_equal(gate_unitary(Gate("swap", (0, 1))), SWAP_MATRIX)
    # control=1/target=0 embedding equals swapped-basis cx
    emb = embed_unitary(CX_MATRIX, (1, 0), 2)
    expect = SWAP_MATRIX @ CX_MATRIX @ SWAP_MATRIX
    assert np.abs(emb - expect).max() < 1e-12
