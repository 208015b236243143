"""Dataset generation, training-pair assembly, and the evaluation suite:
prediction quality, noise-improvement tables with bootstrap intervals, and
the dynamical-decoupling baseline comparison."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .circuit import (
    Circuit,
    circuit_to_text,
    load_circuit,
    random_u_circuit,
    save_circuit,
    uu_dagger,
)
from .device import DeviceModel, device_to_dict
from .encoding import DEFAULT_WIDTH, canonical_order, encode_image
from .gapfill import CompileConfig, compile_circuit, fill_gaps_random, fill_gaps_xyxy
from .nn import Network, forward
from .simulator import expected_hamming_weight, simulate
from .training import TrainingPair
from .transpile import find_gaps, schedule_asap, transpile

log = logging.getLogger("noiseforge")

DESK_BASES = 200
DESK_SPLITS = (160, 20, 20)
PAPER_BASES = 1000
PAPER_SPLITS = (800, 100, 100)
DEFAULT_VARIANTS = 16


def worker_count() -> int:
    """Worker cap from NOISEFORGE_THREADS (default: sequential)."""
    try:
        return max(1, int(os.environ.get("NOISEFORGE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class DatasetRecord:
    record_id: str
    base_id: int
    variant_id: int
    file: str
    label: float


@dataclass(frozen=True)
class DatasetManifest:
    device_name: str
    device_hash: str
    base_count: int
    variants: int
    splits: dict  # split name -> sorted base ids
    label_mode: str
    seed: int
    width: int
    records: tuple

    def split_records(self, split: str):
        ids = set(self.splits[split])
        return [r for r in self.records if r.base_id in ids]


def device_hash(dev: DeviceModel) -> str:
    payload = json.dumps(device_to_dict(dev), sort_keys=True).encode()
    return hashlib.sha256(payload).hexdigest()[:12]


def save_manifest(manifest: DatasetManifest, path) -> None:
    d = asdict(manifest)
    d["records"] = [asdict(r) for r in manifest.records]
    with open(path, "w", encoding="ascii") as fh:
        json.dump(d, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> DatasetManifest:
    with open(path, "r", encoding="ascii") as fh:
        d = json.load(fh)
    d["records"] = tuple(DatasetRecord(**r) for r in d["records"])
    d["splits"] = {k: list(v) for k, v in d["splits"].items()}
    return DatasetManifest(**d)


def _label_schedule(args):
    sc, dev, shots, shot_seed = args
    if shots is None:
        dist = simulate(sc, dev)
    else:
        dist = simulate(sc, dev, shots=shots, rng=np.random.default_rng(shot_seed))
    return expected_hamming_weight(dist)


def _label_all(tasks):
    workers = worker_count()
    if workers == 1 or len(tasks) < 4:
        return [_label_schedule(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_label_schedule, tasks, chunksize=8))


def gen_dataset(
    device: DeviceModel,
    out_dir,
    base_count: int = DESK_BASES,
    variants: int = DEFAULT_VARIANTS,
    splits: tuple[int, int, int] = DESK_SPLITS,
    seed: int = 0,
    shots: int | None = None,
    qubits: int = 5,
    cycles: int = 5,
    width: int = DEFAULT_WIDTH,
) -> DatasetManifest:
    """Generate labelled equivalent-circuit groups.

    Per base: a random layered circuit, echoed into UU^dag, transpiled onto
    the device's coupling map, then ``variants`` schedules (the unfilled base
    plus variants-1 random gap fillings), each simulated for its noise label.
    Bases whose schedule overflows the encoding width are regenerated from a
    fresh seed.  Split sizes count bases and must sum to base_count.
    """
    if base_count < 3:
        raise ValueError("need at least one base per split")
    if sum(splits) != base_count:
        raise ValueError("splits must sum to base_count")
    out = Path(out_dir)
    (out / "circuits").mkdir(parents=True, exist_ok=True)

    schedules = []  # (base_id, variant_id, schedule)
    for b in range(base_count):
        for attempt in range(64):
            rng = np.random.default_rng([seed, b, attempt])
            base = uu_dagger(random_u_circuit(qubits, cycles, rng))
            sc, _perm = transpile(base, device.coupling)
            if sc.duration <= width:
                break
            log.info("base %d attempt %d overflowed width (%d), retrying",
                     b, attempt, sc.duration)
        else:
            raise RuntimeError(f"could not fit base {b} into width {width}")
        schedules.append((b, 0, sc))
        for v in range(1, variants):
            fill_rng = np.random.default_rng([seed, b, attempt, 100 + v])
            schedules.append((b, v, fill_gaps_random(sc, fill_rng)))

    tasks = [
        (sc, device, shots, [seed, b, v, 777])
        for b, v, sc in schedules
    ]
    labels = _label_all(tasks)

    records = []
    for (b, v, sc), label in zip(schedules, labels):
        rid = f"b{b:04d}_v{v:02d}"
        rel = f"circuits/{rid}.txt"
        circ = sc.to_circuit(
            metadata={"base": str(b), "variant": str(v), "seed": str(seed)}
        )
        save_circuit(canonical_order(circ), out / rel)
        records.append(DatasetRecord(rid, b, v, rel, float(label)))

    ids = list(range(base_count))
    split_map = {
        "train": ids[: splits[0]],
        "val": ids[splits[0] : splits[0] + splits[1]],
        "test": ids[splits[0] + splits[1] :],
    }
    manifest = DatasetManifest(
        device_name=device.name,
        device_hash=device_hash(device),
        base_count=base_count,
        variants=variants,
        splits=split_map,
        label_mode="exact" if shots is None else f"shots:{shots}",
        seed=seed,
        width=width,
        records=tuple(records),
    )
    save_manifest(manifest, out / "manifest.json")
    return manifest


def load_images(manifest: DatasetManifest, data_dir, split: str | None = None):
    """record_id -> encoded image for one split (or all records)."""
    data = Path(data_dir)
    records = manifest.records if split is None else manifest.split_records(split)
    images = {}
    for rec in records:
        sc = schedule_asap(load_circuit(data / rec.file))
        images[rec.record_id] = encode_image(sc, manifest.width)
    return images


def make_pairs(
    manifest: DatasetManifest,
    images: dict,
    split: str,
    pairs_per_group: int = 20,
    rng: np.random.Generator | None = None,
) -> list[TrainingPair]:
    """Sample ordered within-group pairs with noise-difference labels.

    pairs_per_group <= 0 requests every ordered pair of the group.
    """
    records = manifest.split_records(split)
    if not records:
        raise ValueError(f"split {split!r} is empty")
    by_base: dict[int, list[DatasetRecord]] = {}
    for r in records:
        by_base.setdefault(r.base_id, []).append(r)
    pairs = []
    for base_id in sorted(by_base):
        group = sorted(by_base[base_id], key=lambda r: r.variant_id)
        pool = [(i, j) for i in range(len(group)) for j in range(len(group)) if i != j]
        if 0 < pairs_per_group < len(pool):
            if rng is None:
                raise ValueError("sampled pairs need an rng")
            chosen = rng.choice(len(pool), size=pairs_per_group, replace=False)
            pool = [pool[int(k)] for k in chosen]
        for i, j in pool:
            a, b = group[i], group[j]
            pairs.append(
                TrainingPair(
                    images[a.record_id],
                    images[b.record_id],
                    a.label - b.label,
                    base_id,
                )
            )
    return pairs


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------


def bootstrap_ci(
    samples,
    resamples: int = 10000,
    level: float = 0.95,
    rng: np.random.Generator | None = None,
) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size < 2:
        raise ValueError("need at least 2 samples")
    if rng is None:
        rng = np.random.default_rng(0)
    idx = rng.integers(0, x.size, size=(resamples, x.size))
    means = x[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def r_squared(true_vals, pred_vals):
    t = np.asarray(true_vals, dtype=float)
    p = np.asarray(pred_vals, dtype=float)
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot < 1e-18:
        return None  # degenerate: constant labels
    ss_res = float(np.sum((t - p) ** 2))
    return 1.0 - ss_res / ss_tot


def evaluate_prediction(net: Network, manifest: DatasetManifest, data_dir):
    """Affine-calibrated per-circuit prediction quality on the test split.

    The raw twin-network score is only defined up to an affine map (training
    sees differences only), so scale and offset are fitted on the validation
    split; R^2 is then computed on the untouched test split.
    """
    val_imgs = load_images(manifest, data_dir, "val")
    test_imgs = load_images(manifest, data_dir, "test")

    def scores_of(recs, imgs):
        x = np.stack([imgs[r.record_id] for r in recs])
        return np.atleast_1d(forward(net, x))

    val_recs = manifest.split_records("val")
    test_recs = manifest.split_records("test")
    val_scores = scores_of(val_recs, val_imgs)
    val_labels = np.array([r.label for r in val_recs])
    design = np.stack([val_scores, np.ones_like(val_scores)], axis=1)
    (scale, offset), *_ = np.linalg.lstsq(design, val_labels, rcond=None)

    test_scores = scores_of(test_recs, test_imgs)
    predicted = scale * test_scores + offset
    true_vals = np.array([r.label for r in test_recs])
    scatter = [
        (r.record_id, float(t), float(p))
        for r, t, p in zip(test_recs, true_vals, predicted)
    ]
    return {
        "r2": r_squared(true_vals, predicted),
        "scale": float(scale),
        "offset": float(offset),
        "scatter": scatter,
    }


def save_scatter_csv(scatter, path) -> None:
    with open(path, "w", newline="", encoding="ascii") as fh:
        writer = csv.writer(fh)
        writer.writerow(["circuit_id", "true_noise", "predicted_noise"])
        writer.writerows(scatter)


def improvement_percent(noise_base: float, noise_other: float) -> float:
    return (noise_base - noise_other) / noise_base * 100.0


@dataclass
class EvalCell:
    mean: float
    ci_lo: float
    ci_hi: float
    n: int

    def as_dict(self):
        return {"mean": self.mean, "ci95": [self.ci_lo, self.ci_hi], "n": self.n}


def _cell(values, rng, resamples=10000) -> EvalCell:
    lo, hi = bootstrap_ci(values, resamples=resamples, rng=rng)
    return EvalCell(float(np.mean(values)), lo, hi, len(values))


def _base_schedules(manifest: DatasetManifest, data_dir, split: str = "test"):
    data = Path(data_dir)
    out = []
    for rec in manifest.split_records(split):
        if rec.variant_id == 0:
            out.append((rec.base_id, schedule_asap(load_circuit(data / rec.file))))
    return out


def evaluate_improvement(
    nets: dict[str, Network],
    devices: dict[str, DeviceModel],
    manifest: DatasetManifest,
    data_dir,
    cfg: CompileConfig,
    resamples: int = 10000,
    rng_seed: int = 0,
):
    """Percent noise improvement over the gapped baseline, per (model, device).

    Rows: one per trained model (evaluated on every device), plus random-fill
    and XYXY-fill baselines.  Bases whose baseline noise is ~0 are excluded.
    """
    bases = _base_schedules(manifest, data_dir)
    rng = np.random.default_rng(rng_seed)

    winners = {}
    for model_name, net in nets.items():
        for base_id, sc in bases:
            circ = sc.to_circuit()
            winner, _report = compile_circuit(
                circ, net, devices[model_name].coupling,
                CompileConfig(cfg.candidates, cfg.width, seed=cfg.seed + base_id),
            )
            winners[(model_name, base_id)] = winner

    rows: dict[str, dict[str, EvalCell]] = {}
    excluded = 0
    fills = {}
    for base_id, sc in bases:
        fills[("random", base_id)] = fill_gaps_random(
            sc, np.random.default_rng([rng_seed, base_id, 1])
        )
        fills[("xyxy", base_id)] = fill_gaps_xyxy(sc)

    for eval_name, eval_dev in devices.items():
        base_noise = {}
        for base_id, sc in bases:
            noise = expected_hamming_weight(simulate(sc, eval_dev))
            if noise < 1e-9:
                log.info("excluding base %d on %s: zero baseline noise",
                         base_id, eval_name)
                excluded += 1
                continue
            base_noise[base_id] = noise

        def improvements(schedule_of):
            vals = []
            for base_id, _sc in bases:
                if base_id not in base_noise:
                    continue
                filled = schedule_of(base_id)
                noise = expected_hamming_weight(simulate(filled, eval_dev))
                vals.append(improvement_percent(base_noise[base_id], noise))
            return vals

        for model_name in nets:
            vals = improvements(lambda b: winners[(model_name, b)])
            rows.setdefault(f"model:{model_name}", {})[eval_name] = _cell(
                vals, rng, resamples
            )
        for fill_name in ("random", "xyxy"):
            vals = improvements(lambda b: fills[(fill_name, b)])
            rows.setdefault(f"fill:{fill_name}", {})[eval_name] = _cell(
                vals, rng, resamples
            )

    return {
        "rows": {
            row: {dev: cell.as_dict() for dev, cell in cells.items()}
            for row, cells in rows.items()
        },
        "excluded_bases": excluded,
        "candidates": cfg.candidates,
    }


def evaluate_xyxy(
    net: Network,
    device: DeviceModel,
    base_circuits,
    cfg: CompileConfig,
    resamples: int = 10000,
    rng_seed: int = 0,
):
    """Mean percent excess noise of XYXY filling over the compiled circuits,
    on circuits whose gaps are all multiples of 4 (others are skipped)."""
    eligible = []
    skipped = 0
    for circ in base_circuits:
        sc, _perm = transpile(circ, device.coupling)
        gaps = find_gaps(sc)
        if gaps and all(g.length % 4 == 0 for g in gaps):
            eligible.append(sc)
        else:
            skipped += 1
    if not eligible:
        return {"eligible": 0, "skipped": skipped, "excess_percent": None}

    excess = []
    for i, sc in enumerate(eligible):
        winner, _report = compile_circuit(
            sc.to_circuit(), net, device.coupling,
            CompileConfig(cfg.candidates, cfg.width, seed=cfg.seed + i),
        )
        noise_dl = expected_hamming_weight(simulate(winner, device))
        noise_xyxy = expected_hamming_weight(simulate(fill_gaps_xyxy(sc), device))
        excess.append((noise_xyxy - noise_dl) / noise_dl * 100.0)

    rng = np.random.default_rng(rng_seed)
    lo, hi = bootstrap_ci(excess, resamples=resamples, rng=rng)
    return {
        "eligible": len(eligible),
        "skipped": skipped,
        "excess_percent": float(np.mean(excess)),
        "ci95": [lo, hi],
    }
