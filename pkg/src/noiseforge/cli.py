"""Command-line interface: device generation, dataset generation, training,
compilation, and evaluation."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .circuit import load_circuit, save_circuit
from .coupling import resolve_coupling
from .device import load_device, preset_device, random_device, save_device
from .encoding import DEFAULT_WIDTH
from .gapfill import CompileConfig, compile_circuit
from .nn import NetConfig, Network, load_weights, save_weights
from .pipeline import (
    DESK_BASES,
    DESK_SPLITS,
    DEFAULT_VARIANTS,
    evaluate_improvement,
    evaluate_prediction,
    evaluate_xyxy,
    gen_dataset,
    load_images,
    load_manifest,
    make_pairs,
    save_scatter_csv,
)
from .training import TrainConfig, train


def _cmd_gen_device(args):
    if args.preset:
        dev = preset_device(args.preset)
    else:
        coupling = resolve_coupling(args.coupling)
        dev = random_device(args.seed, args.name, coupling)
    save_device(dev, args.out)
    print(f"wrote device '{dev.name}' to {args.out}")


def _cmd_gen_data(args):
    dev = load_device(args.device)
    splits = tuple(int(s) for s in args.splits.split(","))
    if len(splits) != 3:
        raise SystemExit("--splits wants train,val,test base counts")
    manifest = gen_dataset(
        dev,
        args.out,
        base_count=args.bases,
        variants=args.variants,
        splits=splits,
        seed=args.seed,
        shots=args.shots,
        width=args.width,
    )
    print(
        f"dataset: {manifest.base_count} bases x {manifest.variants} variants "
        f"on '{manifest.device_name}' -> {args.out}"
    )


def _cmd_train(args):
    manifest = load_manifest(Path(args.data) / "manifest.json")
    images = load_images(manifest, args.data)
    rng = np.random.default_rng([args.seed, 1])
    train_pairs = make_pairs(manifest, images, "train", args.pairs_per_group, rng)
    val_pairs = make_pairs(manifest, images, "val", args.pairs_per_group, rng)
    net = Network(
        NetConfig(width=manifest.width),
        seed=args.seed,
    )
    cfg = TrainConfig(
        learning_rate=args.lr,
        batch_size=args.batch,
        max_epochs=args.epochs,
        patience=args.patience,
        seed=args.seed,
    )
    net, history = train(net, train_pairs, val_pairs, cfg)
    save_weights(net, args.out)
    best = min(h["val_mse"] for h in history)
    print(f"trained {len(history)} epochs, best val MSE {best:.6f} -> {args.out}")
    if args.history:
        with open(args.history, "w", encoding="ascii") as fh:
            json.dump(history, fh, indent=1)
            fh.write("\n")


def _cmd_compile(args):
    circ = load_circuit(getattr(args, "in"))
    net = load_weights(args.model)
    cmap = resolve_coupling(args.coupling)
    cfg = CompileConfig(candidates=args.candidates, width=args.width, seed=args.seed)
    winner, report = compile_circuit(circ, net, cmap, cfg)
    save_circuit(winner.to_circuit(metadata=dict(circ.metadata)), args.out)
    print(
        f"compiled: {report['gap_count']} gaps, "
        f"{report['inserted_gates']} inserted gates -> {args.out}"
    )
    if args.report:
        with open(args.report, "w", encoding="ascii") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
            fh.write("\n")


def _cmd_evaluate(args):
    manifest = load_manifest(Path(args.data) / "manifest.json")
    nets = {}
    devices = {}
    for spec in args.model:
        name, path = spec.split("=", 1)
        nets[name] = load_weights(path)
    for spec in args.device:
        name, path = spec.split("=", 1)
        devices[name] = load_device(path)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = CompileConfig(candidates=args.candidates, width=manifest.width,
                        seed=args.seed)

    result = {"dataset": str(args.data), "device_hash": manifest.device_hash}
    first_net = next(iter(nets.values()))
    pred = evaluate_prediction(first_net, manifest, args.data)
    save_scatter_csv(pred["scatter"], out / "scatter.csv")
    result["prediction"] = {"r2": pred["r2"], "scale": pred["scale"],
                            "offset": pred["offset"]}
    result["improvement"] = evaluate_improvement(
        nets, devices, manifest, args.data, cfg, rng_seed=args.seed
    )
    base_circuits = [
        load_circuit(Path(args.data) / rec.file)
        for rec in manifest.split_records("test")
        if rec.variant_id == 0
    ]
    first_dev = next(iter(devices.values()))
    result["xyxy"] = evaluate_xyxy(first_net, first_dev, base_circuits, cfg,
                                   rng_seed=args.seed)
    with open(out / "eval.json", "w", encoding="ascii") as fh:
        json.dump(result, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"evaluation -> {out / 'eval.json'}")


def _cmd_report(args):
    with open(args.eval, "r", encoding="ascii") as fh:
        result = json.load(fh)
    pred = result.get("prediction", {})
    print(f"prediction R^2: {pred.get('r2')}")
    imp = result.get("improvement", {})
    rows = imp.get("rows", {})
    devices = sorted({d for cells in rows.values() for d in cells})
    header = "row".ljust(16) + "".join(d.rjust(24) for d in devices)
    print(header)
    for row in sorted(rows):
        line = row.ljust(16)
        for d in devices:
            cell = rows[row].get(d)
            if cell:
                line += f"{cell['mean']:7.2f}% [{cell['ci95'][0]:6.2f},{cell['ci95'][1]:6.2f}]".rjust(24)
            else:
                line += "-".rjust(24)
        print(line)
    xy = result.get("xyxy", {})
    if xy.get("excess_percent") is not None:
        print(
            f"xyxy excess noise vs compiled: {xy['excess_percent']:.2f}% "
            f"(95% CI [{xy['ci95'][0]:.2f}, {xy['ci95'][1]:.2f}]), "
            f"eligible {xy['eligible']}, skipped {xy['skipped']}"
        )
    else:
        print(f"xyxy comparison: no eligible circuits (skipped {xy.get('skipped')})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="noiseforge",
        description="noise-aware circuit compilation with a learned noise model",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-device", help="write a synthetic device config")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--name", default="device")
    p.add_argument("--coupling", default="t-shape")
    p.add_argument("--preset", choices=["alpha", "beta"],
                   help="use a calibrated preset instead of sampling")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_gen_device)

    p = sub.add_parser("gen-data", help="generate a labelled circuit dataset")
    p.add_argument("--device", required=True)
    p.add_argument("--bases", type=int, default=DESK_BASES)
    p.add_argument("--variants", type=int, default=DEFAULT_VARIANTS)
    p.add_argument("--splits", default=",".join(str(s) for s in DESK_SPLITS))
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--shots", type=int, default=None,
                   help="label from sampled shots instead of the exact distribution")
    p.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_gen_data)

    p = sub.add_parser("train", help="train the noise predictor on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--pairs-per-group", type=int, default=20)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch", type=int, default=32)
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--patience", type=int, default=10)
    p.add_argument("--history", help="also dump per-epoch losses to this JSON")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("compile", help="compile one circuit file")
    p.add_argument("--in", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--coupling", default="t-shape")
    p.add_argument("--candidates", type=int, default=1000)
    p.add_argument("--width", type=int, default=DEFAULT_WIDTH)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--report")
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_compile)

    p = sub.add_parser("evaluate", help="run the evaluation suite on a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--model", action="append", required=True,
                   metavar="NAME=WEIGHTS", help="repeatable")
    p.add_argument("--device", action="append", required=True,
                   metavar="NAME=JSON", help="repeatable")
    p.add_argument("--candidates", type=int, default=1000)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("-o", "--out", required=True)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="pretty-print an evaluation JSON")
    p.add_argument("--eval", required=True)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    args.func(args)
    return 0


if __name__ == "__main__":
    sys.exit(main())
