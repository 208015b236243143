"""Synthetic noisy-device descriptions.

A DeviceModel fixes, per qubit: relaxation times T1/T2 (us), a coherent idle
Z-drift rate (rad/us), an over-rotation added to the theta angle of every
executed single-qubit gate (rad), and asymmetric readout flip probabilities.
Per coupled edge it fixes a coherent ZZ crosstalk rate (rad/us), applied while
both qubits idle (default) or on every step (always_on).  Gate errors are
depolarizing channels with per-gate-class probabilities.  Step durations are
t_1q for all-single-qubit steps and t_2q for steps containing a cx.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

import numpy as np

from .coupling import CouplingMap, builtin_coupling

#: sampling ranges for randomized device generation (desk-scale defaults)
DEFAULT_RANGES = {
    "t1_us": (40.0, 80.0),
    "t2_us": (30.0, 90.0),  # clipped to 2*T1
    "drift_rad_per_us": (0.02, 0.12),
    "crosstalk_rad_per_us": (0.005, 0.03),
    "p_depol_1q": (0.0005, 0.002),
    "p_depol_2q": (0.01, 0.03),
    "overrotation_rad": (0.0, 0.02),
    "readout_flip": (0.01, 0.04),
}

DEFAULT_T_1Q_US = 0.05
DEFAULT_T_2Q_US = 0.3


@dataclass(frozen=True)
class DeviceModel:
    name: str
    coupling: CouplingMap
    t1_us: tuple  # per qubit; None = no amplitude damping
    t2_us: tuple  # per qubit; None = no pure dephasing beyond T1
    drift_rad_per_us: tuple  # per qubit
    crosstalk_rad_per_us: tuple  # per coupling edge, aligned with coupling.edges
    crosstalk_always_on: bool
    p_depol_1q: float
    p_depol_2q: float
    overrotation_rad: tuple  # per qubit
    readout_p1_given_0: tuple
    readout_p0_given_1: tuple
    t_1q_us: float = DEFAULT_T_1Q_US
    t_2q_us: float = DEFAULT_T_2Q_US
    seed: int | None = None

    def __post_init__(self):
        n = self.coupling.qubit_count
        for name in (
            "t1_us",
            "t2_us",
            "drift_rad_per_us",
            "overrotation_rad",
            "readout_p1_given_0",
            "readout_p0_given_1",
        ):
            vals = tuple(getattr(self, name))
            object.__setattr__(self, name, vals)
            if len(vals) != n:
                raise ValueError(f"{name} must list all {n} qubits")
        object.__setattr__(
            self, "crosstalk_rad_per_us", tuple(self.crosstalk_rad_per_us)
        )
        if len(self.crosstalk_rad_per_us) != len(self.coupling.edges):
            raise ValueError("one crosstalk rate per coupling edge required")
        for t1, t2 in zip(self.t1_us, self.t2_us):
            if (t1 is not None and t1 <= 0) or (t2 is not None and t2 <= 0):
                raise ValueError("T1/T2 must be positive")
            if t1 is not None and t2 is not None and t2 > 2.0 * t1 + 1e-12:
                raise ValueError("T2 must not exceed 2*T1")
            if t1 is not None and t2 is None:
                raise ValueError("T2 required whenever T1 is finite")
        for p in (self.p_depol_1q, self.p_depol_2q):
            if not 0.0 <= p <= 1.0:
                raise ValueError("depolarizing probability out of [0,1]")
        for probs in (self.readout_p1_given_0, self.readout_p0_given_1):
            if any(not 0.0 <= p <= 1.0 for p in probs):
                raise ValueError("readout probability out of [0,1]")
        if self.t_1q_us <= 0 or self.t_2q_us <= 0:
            raise ValueError("step durations must be positive")

    @property
    def qubit_count(self) -> int:
        return self.coupling.qubit_count

    def edge_rate(self, a: int, b: int) -> float:
        key = (min(a, b), max(a, b))
        return self.crosstalk_rad_per_us[self.coupling.edges.index(key)]

    def is_noiseless(self) -> bool:
        return (
            all(t is None for t in self.t1_us)
            and all(t is None for t in self.t2_us)
            and not any(self.drift_rad_per_us)
            and not any(self.crosstalk_rad_per_us)
            and self.p_depol_1q == 0.0
            and self.p_depol_2q == 0.0
            and not any(self.overrotation_rad)
            and not any(self.readout_p1_given_0)
            and not any(self.readout_p0_given_1)
        )


def noiseless_device(coupling: CouplingMap | None = None, name: str = "ideal") -> DeviceModel:
    cmap = coupling or builtin_coupling("t-shape")
    n = cmap.qubit_count
    return DeviceModel(
        name=name,
        coupling=cmap,
        t1_us=(None,) * n,
        t2_us=(None,) * n,
        drift_rad_per_us=(0.0,) * n,
        crosstalk_rad_per_us=(0.0,) * len(cmap.edges),
        crosstalk_always_on=False,
        p_depol_1q=0.0,
        p_depol_2q=0.0,
        overrotation_rad=(0.0,) * n,
        readout_p1_given_0=(0.0,) * n,
        readout_p0_given_1=(0.0,) * n,
    )


def random_device(
    seed: int,
    name: str,
    coupling: CouplingMap | None = None,
    ranges: dict | None = None,
) -> DeviceModel:
    """Sample a device from per-parameter ranges; reproducible from the seed."""
    cmap = coupling or builtin_coupling("t-shape")
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    r = dict(DEFAULT_RANGES)
    r.update(ranges or {})
    n = cmap.qubit_count

    def draw(lo_hi, size):
        lo, hi = lo_hi
        return tuple(float(x) for x in rng.uniform(lo, hi, size=size))

    t1 = draw(r["t1_us"], n)
    t2 = tuple(min(x, 2.0 * a) for x, a in zip(draw(r["t2_us"], n), t1))
    return DeviceModel(
        name=name,
        coupling=cmap,
        t1_us=t1,
        t2_us=t2,
        drift_rad_per_us=draw(r["drift_rad_per_us"], n),
        crosstalk_rad_per_us=draw(r["crosstalk_rad_per_us"], len(cmap.edges)),
        crosstalk_always_on=False,
        p_depol_1q=float(rng.uniform(*r["p_depol_1q"])),
        p_depol_2q=float(rng.uniform(*r["p_depol_2q"])),
        overrotation_rad=draw(r["overrotation_rad"], n),
        readout_p1_given_0=draw(r["readout_flip"], n),
        readout_p0_given_1=draw(r["readout_flip"], n),
        seed=seed,
    )


def make_device(spec: dict, rng_seed: int | None = None) -> DeviceModel:
    """Build a device from a config dict: either fully explicit fields or a
    ``ranges`` block plus a seed for randomized sampling."""
    spec = dict(spec)
    if "coupling" in spec and isinstance(spec["coupling"], dict):
        cdata = spec["coupling"]
        cmap = CouplingMap(
            cdata["qubits"],
            tuple(tuple(e) for e in cdata["edges"]),
            cdata.get("name", ""),
        )
    else:
        cmap = builtin_coupling(spec.get("coupling", "t-shape"))
    if "t1_us" not in spec:  # randomized spec: ranges (optional) + seed
        seed = spec.get("seed", rng_seed)
        if seed is None:
            raise ValueError("randomized device spec requires a seed")
        return random_device(
            int(seed), spec.get("name", f"random-{seed}"), cmap, spec.get("ranges")
        )
    return DeviceModel(
        name=spec.get("name", "custom"),
        coupling=cmap,
        t1_us=tuple(spec["t1_us"]),
        t2_us=tuple(spec["t2_us"]),
        drift_rad_per_us=tuple(spec["drift_rad_per_us"]),
        crosstalk_rad_per_us=tuple(spec["crosstalk_rad_per_us"]),
        crosstalk_always_on=bool(spec.get("crosstalk_always_on", False)),
        p_depol_1q=float(spec["p_depol_1q"]),
        p_depol_2q=float(spec["p_depol_2q"]),
        overrotation_rad=tuple(spec["overrotation_rad"]),
        readout_p1_given_0=tuple(spec["readout_p1_given_0"]),
        readout_p0_given_1=tuple(spec["readout_p0_given_1"]),
        t_1q_us=float(spec.get("t_1q_us", DEFAULT_T_1Q_US)),
        t_2q_us=float(spec.get("t_2q_us", DEFAULT_T_2Q_US)),
        seed=spec.get("seed"),
    )


def device_to_dict(dev: DeviceModel) -> dict:
    d = asdict(dev)
    d["coupling"] = {
        "name": dev.coupling.name,
        "qubits": dev.coupling.qubit_count,
        "edges": [list(e) for e in dev.coupling.edges],
    }
    return d


def save_device(dev: DeviceModel, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        json.dump(device_to_dict(dev), fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_device(path) -> DeviceModel:
    with open(path, "r", encoding="ascii") as fh:
        return make_device(json.load(fh))


# Calibrated synthetic devices used by the experiment suite.  Idle drift makes
# unfilled gaps expensive on both devices, but the error that distinguishes one
# filler sequence from another differs in kind: alpha's dominant coherent error
# is per-qubit over-rotation of executed gates, beta's is always-on ZZ
# crosstalk.  Sequences that suppress one mechanism are unremarkable for the
# other, so a noise model learned on one device does not transfer to the other.
_PRESETS = {
    "alpha": {
        "name": "alpha",
        "coupling": "t-shape",
        "t1_us": [55.0, 70.0, 48.0, 62.0, 52.0],
        "t2_us": [60.0, 80.0, 55.0, 70.0, 58.0],
        "drift_rad_per_us": [1.2, 0.3, 0.9, 0.4, 1.5],
        "crosstalk_rad_per_us": [0.05, 0.04, 0.03, 0.05],
        "crosstalk_always_on": False,
        "p_depol_1q": 0.004,
        "p_depol_2q": 0.006,
        "overrotation_rad": [0.32, 0.06, 0.28, 0.06, 0.36],
        "readout_p1_given_0": [0.01, 0.012, 0.011, 0.01, 0.012],
        "readout_p0_given_1": [0.015, 0.014, 0.016, 0.015, 0.014],
        "t_1q_us": 0.05,
        "t_2q_us": 0.3,
    },
    "beta": {
        "name": "beta",
        "coupling": "t-shape",
        "t1_us": [60.0, 52.0, 66.0, 50.0, 58.0],
        "t2_us": [66.0, 58.0, 75.0, 55.0, 64.0],
        "drift_rad_per_us": [0.4, 1.4, 0.3, 1.1, 0.5],
        "crosstalk_rad_per_us": [0.9, 0.7, 0.6, 0.8],
        "crosstalk_always_on": True,
        "p_depol_1q": 0.004,
        "p_depol_2q": 0.006,
        "overrotation_rad": [0.05, 0.05, 0.05, 0.05, 0.05],
        "readout_p1_given_0": [0.011, 0.01, 0.012, 0.011, 0.01],
        "readout_p0_given_1": [0.014, 0.016, 0.015, 0.014, 0.016],
        "t_1q_us": 0.05,
        "t_2q_us": 0.3,
    },
}


def preset_device(name: str) -> DeviceModel:
    if name not in _PRESETS:
        raise KeyError(f"unknown device preset {name!r} (have {sorted(_PRESETS)})")
    return make_device(_PRESETS[name])
