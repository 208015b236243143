import json

import numpy as np
import pytest

from noiseforge.circuit import load_circuit
from noiseforge.device import noiseless_device, preset_device
from noiseforge.gapfill import CompileConfig
from noiseforge.nn import NetConfig, Network
from noiseforge.pipeline import (
    bootstrap_ci,
    evaluate_prediction,
    evaluate_improvement,
    evaluate_xyxy,
    gen_dataset,
    improvement_percent,
    load_images,
    load_manifest,
    make_pairs,
    r_squared,
    save_scatter_csv,
)
from noiseforge.transpile import find_gaps, schedule_asap
from helpers import dd_probe_circuit


@pytest.fixture(scope="module")
def tiny_dataset(tmp_path_factory):
    out = tmp_path_factory.mktemp("data")
    dev = preset_device("alpha")
    manifest = gen_dataset(
        dev, out, base_count=6, variants=4, splits=(2, 2, 2), seed=21
    )
    return dev, out, manifest


class TestGenDataset:
    def test_record_counts_and_files(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        assert len(manifest.records) == 6 * 4
        for rec in manifest.records:
            assert (out / rec.file).exists()

    def test_split_hygiene(self, tiny_dataset):
        _, _, manifest = tiny_dataset
        seen = {}
        for split, ids in manifest.splits.items():
            for b in ids:
                assert b not in seen, f"base {b} in {split} and {seen[b]}"
                seen[b] = split
        assert len(seen) == manifest.base_count

    def test_labels_bounded(self, tiny_dataset):
        _, _, manifest = tiny_dataset
        for rec in manifest.records:
            assert 0.0 <= rec.label <= 5.0

    def test_deterministic_regeneration(self, tiny_dataset, tmp_path):
        dev, _, manifest = tiny_dataset
        again = gen_dataset(
            dev, tmp_path, base_count=6, variants=4, splits=(2, 2, 2), seed=21
        )
        assert [r.label for r in again.records] == [r.label for r in manifest.records]

    def test_zero_noise_device_gives_zero_labels(self, tmp_path):
        manifest = gen_dataset(
            noiseless_device(), tmp_path, base_count=3, variants=3, splits=(1, 1, 1), seed=5
        )
        for rec in manifest.records:
            assert rec.label == pytest.approx(0.0, abs=1e-9)

    def test_manifest_round_trip(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        again = load_manifest(out / "manifest.json")
        assert again == manifest

    def test_variant_zero_is_unfilled(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        for rec in manifest.records:
            circ = load_circuit(out / rec.file)
            has_inserted = any(g.inserted for g in circ.gates)
            if rec.variant_id == 0:
                assert not has_inserted
            else:
                sc = schedule_asap(circ)
                assert not find_gaps(sc) or has_inserted

    def test_bad_splits_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            gen_dataset(preset_device("alpha"), tmp_path, base_count=6, variants=3,
                        splits=(2, 2, 1), seed=1)


class TestMakePairs:
    def test_two_variant_group_all_pairs(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        images = load_images(manifest, out)
        pairs = make_pairs(manifest, images, "train", pairs_per_group=0)
        groups = {p.group for p in pairs}
        assert len(pairs) == 2 * 4 * 3  # 2 bases x ordered pairs of 4 variants
        assert len(groups) == 2

    def test_labels_antisymmetric(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        images = load_images(manifest, out)
        pairs = make_pairs(manifest, images, "train", pairs_per_group=0)
        table = {}
        for p in pairs:
            key = (p.group, p.image_a.tobytes(), p.image_b.tobytes())
            table[key] = p.delta
        for (g, a, b), delta in table.items():
            assert table[(g, b, a)] == pytest.approx(-delta)

    def test_pairs_never_cross_groups(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        images = load_images(manifest, out)
        by_rec = {}
        for rec in manifest.records:
            by_rec[images[rec.record_id].tobytes()] = rec.base_id
        pairs = make_pairs(
            manifest, images, "train", pairs_per_group=5, rng=np.random.default_rng(1)
        )
        for p in pairs:
            assert by_rec[p.image_a.tobytes()] == by_rec[p.image_b.tobytes()] == p.group

    def test_sampling_needs_rng(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        images = load_images(manifest, out)
        with pytest.raises(ValueError):
            make_pairs(manifest, images, "train", pairs_per_group=3)


class TestBootstrap:
    def test_constant_samples_give_point_interval(self):
        lo, hi = bootstrap_ci([2.5, 2.5, 2.5], rng=np.random.default_rng(0))
        assert lo == hi == 2.5

    def test_binary_samples_bracket_mean(self):
        rng = np.random.default_rng(1)
        samples = [0.0, 1.0] * 200
        lo, hi = bootstrap_ci(samples, resamples=2000, rng=rng)
        assert lo < 0.5 < hi
        assert hi - lo < 0.2

    def test_seeded_determinism(self):
        samples = list(np.random.default_rng(2).normal(size=30))
        a = bootstrap_ci(samples, rng=np.random.default_rng(7))
        b = bootstrap_ci(samples, rng=np.random.default_rng(7))
        assert a == b

    def test_requires_two_samples(self):
        with pytest.raises(ValueError):
            bootstrap_ci([1.0])


class TestMetricsHelpers:
    def test_improvement_scale_invariance(self):
        a = improvement_percent(2.0, 1.5)
        b = improvement_percent(20.0, 15.0)
        assert a == pytest.approx(b) == pytest.approx(25.0)

    def test_r_squared_perfect_and_mean(self):
        y = [1.0, 2.0, 3.0, 4.0]
        assert r_squared(y, y) == pytest.approx(1.0)
        assert r_squared(y, [2.5] * 4) == pytest.approx(0.0)

    def test_r_squared_degenerate(self):
        assert r_squared([1.0, 1.0, 1.0], [1.0, 2.0, 1.0]) is None


class TestEvaluation:
    def test_prediction_report_structure(self, tiny_dataset):
        _, out, manifest = tiny_dataset
        net = Network(NetConfig(), seed=1)
        pred = evaluate_prediction(net, manifest, out)
        assert len(pred["scatter"]) == 2 * 4
        assert pred["r2"] is None or pred["r2"] <= 1.0

    def test_scatter_csv_format(self, tiny_dataset, tmp_path):
        _, out, manifest = tiny_dataset
        net = Network(NetConfig(), seed=2)
        pred = evaluate_prediction(net, manifest, out)
        path = tmp_path / "scatter.csv"
        save_scatter_csv(pred["scatter"], path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "circuit_id,true_noise,predicted_noise"
        assert len(lines) == 1 + len(pred["scatter"])

    def test_improvement_rows_and_cells(self, tiny_dataset):
        dev, out, manifest = tiny_dataset
        net = Network(NetConfig(), seed=3)
        report = evaluate_improvement(
            {"alpha": net},
            {"alpha": dev},
            manifest,
            out,
            CompileConfig(candidates=4, seed=9),
            resamples=200,
        )
        assert set(report["rows"]) == {"model:alpha", "fill:random", "fill:xyxy"}
        cell = report["rows"]["model:alpha"]["alpha"]
        assert cell["ci95"][0] <= cell["mean"] <= cell["ci95"][1]

    def test_xyxy_requires_eligible_circuits(self, tiny_dataset):
        dev, out, manifest = tiny_dataset
        net = Network(NetConfig(), seed=4)
        # random bases essentially never have all-multiple-of-4 gaps
        bases = [
            load_circuit(out / rec.file)
            for rec in manifest.split_records("test")
            if rec.variant_id == 0
        ]
        result = evaluate_xyxy(net, dev, bases, CompileConfig(candidates=2, seed=1))
        assert result["eligible"] + result["skipped"] == len(bases)
        if result["eligible"] == 0:
            assert result["excess_percent"] is None

    def test_xyxy_on_constructed_probes(self, tiny_dataset):
        dev, _, _ = tiny_dataset
        net = Network(NetConfig(), seed=5)
        rng = np.random.default_rng(3)
        probes = [dd_probe_circuit(rng, 4) for _ in range(3)]
        result = evaluate_xyxy(
            net, dev, probes, CompileConfig(candidates=4, seed=2), resamples=200
        )
        assert result["eligible"] == 3
        assert result["excess_percent"] is not None
        assert result["ci95"][0] <= result["excess_percent"] <= result["ci95"][1]
