import math

import numpy as np
import pytest

from noiseforge.circuit import Circuit, random_u_circuit, uu_dagger
from noiseforge.coupling import builtin_coupling
from noiseforge.encoding import (
    WidthOverflowError,
    canonical_order,
    dump_image,
    encode_circuit,
    encode_image,
    load_image,
)
from noiseforge.gates import Gate, cx, u1, u2, u3
from noiseforge.transpile import schedule_asap, transpile


class TestCanonicalOrder:
    def test_independent_gates_sorted_by_qubit(self):
        c = Circuit(2, (u1(0.1, 1), u1(0.2, 0)))
        out = canonical_order(c)
        assert [g.qubits[0] for g in out.gates] == [0, 1]

    def test_serial_chain_preserved(self):
        c = Circuit(1, (u1(0.1, 0), u1(0.2, 0), u1(0.3, 0)))
        assert canonical_order(c).gates == c.gates

    def test_dag_preserving_shuffles_canonicalize_identically(self):
        rng = np.random.default_rng(17)
        cmap = builtin_coupling("t-shape")
        sc, _ = transpile(uu_dagger(random_u_circuit(5, 3, rng)), cmap)
        c = sc.to_circuit()
        reference = canonical_order(c)
        for _ in range(20):
            # random valid topological reordering: repeatedly pick any ready gate
            remaining = list(c.gates)
            ready_order = []
            busy_tail = {}
            # dependency = previous gate on any shared qubit
            deps = []
            last = {}
            for i, g in enumerate(remaining):
                deps.append({last[q] for q in g.qubits if q in last})
                for q in g.qubits:
                    last[q] = i
            done = set()
            pending = list(range(len(remaining)))
            while pending:
                ready = [i for i in pending if deps[i] <= done]
                pick = int(rng.choice(ready))
                ready_order.append(remaining[pick])
                done.add(pick)
                pending.remove(pick)
            shuffled = Circuit(c.qubit_count, tuple(ready_order))
            assert canonical_order(shuffled).gates == reference.gates


class TestEncodeImage:
    def test_empty_circuit_all_zero(self):
        sc = schedule_asap(Circuit(5, ()))
        img = encode_image(sc, 16)
        assert img.shape == (8, 5, 16)
        assert not img.any()

    def test_u3_pixel_and_angle_normalization(self):
        sc = schedule_asap(Circuit(5, (u3(math.pi, 0.0, 0.0, 0),)))
        img = encode_image(sc, 16)
        assert img[2, 0, 0] == 1.0  # u3 type channel
        assert img[4, 0, 0] == pytest.approx(0.5)  # theta = pi -> 0.5
        assert img[5, 0, 0] == 0.0 and img[6, 0, 0] == 0.0
        img[2, 0, 0] = img[4, 0, 0] = 0.0
        assert not img.any()

    def test_cx_pixels_and_roles(self):
        c = Circuit(5, (u1(0.1, 0), u1(0.1, 1), cx(0, 1)))
        sc = schedule_asap(c)
        img = encode_image(sc, 16)
        assert img[3, 0, 1] == 1.0 and img[3, 1, 1] == 1.0
        assert img[7, 0, 1] == 1.0 and img[7, 1, 1] == -1.0

    def test_u1_u2_channels(self):
        sc = schedule_asap(Circuit(5, (u1(math.pi / 2, 0), u2(math.pi, -math.pi / 2, 1))))
        img = encode_image(sc, 8)
        assert img[0, 0, 0] == 1.0 and img[6, 0, 0] == pytest.approx(0.25)
        assert img[1, 1, 0] == 1.0
        assert img[5, 1, 0] == pytest.approx(0.5)
        assert img[6, 1, 0] == pytest.approx(0.75)  # -pi/2 wraps to 3pi/2

    def test_negative_angle_wraps(self):
        sc = schedule_asap(Circuit(1, (u1(-math.pi / 2, 0),)))
        img = encode_image(sc, 4)
        assert img[6, 0, 0] == pytest.approx(0.75)

    def test_width_overflow_rejected(self):
        c = Circuit(1, tuple(u1(0.1, 0) for _ in range(10)))
        with pytest.raises(WidthOverflowError):
            encode_image(schedule_asap(c), 8)

    def test_non_native_rejected(self):
        sc = schedule_asap(Circuit(1, (Gate("sqrtx", (0,)),)))
        with pytest.raises(ValueError):
            encode_image(sc, 8)

    def test_entries_bounded(self):
        rng = np.random.default_rng(23)
        cmap = builtin_coupling("t-shape")
        sc, _ = transpile(uu_dagger(random_u_circuit(5, 4, rng)), cmap)
        img = encode_image(sc, 64)
        assert img.min() >= -1.0 and img.max() <= 1.0

    def test_injectivity_on_perturbations(self):
        base = Circuit(5, (u3(0.1, 0.2, 0.3, 0), cx(0, 1)))
        img0 = encode_circuit(base, 16)
        variants = [
            Circuit(5, (u3(0.11, 0.2, 0.3, 0), cx(0, 1))),  # angle change
            Circuit(5, (u2(0.2, 0.3, 0), cx(0, 1))),  # kind change
            Circuit(5, (u3(0.1, 0.2, 0.3, 2), cx(0, 1))),  # placement change
            Circuit(5, (u3(0.1, 0.2, 0.3, 0), cx(1, 0))),  # cx orientation
        ]
        for v in variants:
            assert not np.array_equal(encode_circuit(v, 16), img0)

    def test_shuffle_then_canonical_encodes_bitwise_equal(self):
        rng = np.random.default_rng(29)
        cmap = builtin_coupling("t-shape")
        sc, _ = transpile(uu_dagger(random_u_circuit(5, 3, rng)), cmap)
        c = sc.to_circuit()
        a = encode_circuit(c, 64)
        # reverse within-step listing is a valid same-DAG relisting
        reordered = Circuit(c.qubit_count, tuple(reversed(canonical_order(c).gates[::-1])))
        b = encode_circuit(reordered, 64)
        assert np.array_equal(a, b)


class TestImageDump:
    def test_round_trip(self, tmp_path):
        rng = np.random.default_rng(31)
        cmap = builtin_coupling("t-shape")
        sc, _ = transpile(uu_dagger(random_u_circuit(5, 3, rng)), cmap)
        img = encode_image(sc, 64)
        path = tmp_path / "img.dqim"
        dump_image(img, path)
        again = load_image(path)
        assert again.shape == img.shape
        assert np.abs(again - img).max() < 1e-6  # float32 payload

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "bad.dqim"
        path.write_bytes(b"NOPE" + b"\x00" * 16)
        with pytest.raises(ValueError):
            load_image(path)

    def test_truncated_rejected(self, tmp_path):
        path = tmp_path / "trunc.dqim"
        img = np.zeros((8, 5, 4))
        dump_image(img, path)
        data = path.read_bytes()
        path.write_bytes(data[:-8])
        with pytest.raises(ValueError):
            load_image(path)
