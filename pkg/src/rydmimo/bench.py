"""Seeded Monte Carlo benchmark harness.

Reproduces the NMSE-versus-SNR and NMSE-versus-pilot-length studies: a grid
of (P, SNR) points, many independent trials per point, every trial seeded by
a stable hash of (base_seed, grid point, trial index) so grids can be
extended without disturbing existing points and any worker count produces
identical results.
"""

from __future__ import annotations

import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from .channel import synth_channel_1d, synth_channel_2d, synth_reference
from .crlb import complex_crb_trace, real_crb_trace
from .estimators import (DivergenceError, EstimatorConfig, estimate_gd_1d,
                         estimate_gs_1d, estimate_pgd_2d)
from .measurement import measure_exact, measure_linearized, sigma_from_snr
from .scene import DEFAULT_REF_SYMBOL_AMP, PROFILES, draw_scene, \
    half_wavelength_geometry

ESTIMATORS = ("gd", "pgd", "gs")
MODELS = ("exact", "linearized")

SWEEP_SCHEMA = "rydmimo-sweep/1"
MANIFEST_SCHEMA = "rydmimo-manifest/1"
TABLE_COLUMNS = ("estimator", "snr_db", "P", "mean_nmse", "stderr",
                 "crlb_floor", "trials")


@dataclass
class ExperimentSpec:
    kind: str = "1d"
    dims: Tuple[int, ...] = (8,)
    K: int = 3
    L: int = 5
    pilot_lengths: List[int] = field(default_factory=lambda: [10, 30])
    snr_db: List[float] = field(default_factory=lambda: [0.0, 5.0, 10.0, 15.0, 20.0])
    trials: int = 500
    estimators: List[str] = field(default_factory=lambda: ["gd"])
    model: str = "exact"
    profile: str = "default"
    base_seed: int = 1234
    ref_symbol_amp: float = DEFAULT_REF_SYMBOL_AMP

    def validate(self) -> None:
        if self.kind not in ("1d", "2d"):
            raise ValueError(f"unknown array kind {self.kind!r}")
        if len(self.dims) != (1 if self.kind == "1d" else 2):
            raise ValueError("dims do not match array kind")
        if self.model not in MODELS:
            raise ValueError(f"unknown measurement model {self.model!r}")
        if self.profile not in PROFILES:
            raise ValueError(f"unknown profile {self.profile!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.pilot_lengths or not self.snr_db:
            raise ValueError("grids must be non-empty")
        for est in self.estimators:
            if est not in ESTIMATORS:
                raise ValueError(f"unknown estimator {est!r}")
            if est == "gs" and self.kind != "1d":
                raise ValueError("baseline is 1D-only")
            if est == "gs" and self.model != "exact":
                raise ValueError("gs baseline runs on exact-model measurements")
            if est == "pgd" and self.kind != "2d":
                raise ValueError("pgd estimator is 2D-only")
        if self.kind == "2d" and self.L > min(self.dims):
            raise ValueError("rank budget L exceeds min(I1, I2)")

    def grid_points(self) -> List[Tuple[int, float]]:
        return [(P, snr) for P in self.pilot_lengths for snr in self.snr_db]


def spec_to_dict(spec: ExperimentSpec) -> dict:
    return {
        "schema": SWEEP_SCHEMA,
        "kind": spec.kind,
        "dims": list(spec.dims),
        "K": spec.K,
        "L": spec.L,
        "pilot_lengths": list(spec.pilot_lengths),
        "snr_db": [float(s) for s in spec.snr_db],
        "trials": spec.trials,
        "estimators": list(spec.estimators),
        "model": spec.model,
        "profile": spec.profile,
        "base_seed": spec.base_seed,
        "ref_symbol_amp": float(spec.ref_symbol_amp),
    }


def spec_from_dict(d: dict) -> ExperimentSpec:
    if d.get("schema") != SWEEP_SCHEMA:
        raise ValueError(f"unsupported sweep schema {d.get('schema')!r}")
    known = {"schema", "kind", "dims", "K", "L", "pilot_lengths", "snr_db",
             "trials", "estimators", "model", "profile", "base_seed",
             "ref_symbol_amp"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: v for k, v in d.items() if k != "schema"}
    if "dims" in kwargs:
        kwargs["dims"] = tuple(kwargs["dims"])
    spec = ExperimentSpec(**kwargs)
    spec.validate()
    return spec


def nmse(G_hat, G_truth) -> float:
    """|| G - G_hat ||_F^2 / || G ||_F^2 for one trial."""
    a = G_hat.coefficients if hasattr(G_hat, "coefficients") else np.asarray(G_hat)
    b = G_truth.coefficients if hasattr(G_truth, "coefficients") else np.asarray(G_truth)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    denom = float(np.linalg.norm(b) ** 2)
    if denom == 0.0:
        raise ValueError("zero-power truth channel")
    return float(np.linalg.norm(a - b) ** 2) / denom


def trial_seed(base_seed: int, grid_point: Tuple[int, float],
               trial_index: int, kind: str) -> int:
    """Stable 64-bit per-trial seed."""
    P, snr = grid_point
    key = f"{base_seed}|{kind}|P={P}|snr={float(snr)!r}|t={trial_index}"
    digest = hashlib.sha256(key.encode()).hexdigest()
    return int(digest[:16], 16)


def _estimator_config(name: str, spec: ExperimentSpec) -> EstimatorConfig:
    if name == "pgd":
        return EstimatorConfig(rank_budget=spec.L)
    if name == "gd" and spec.kind == "2d":
        # vacuous projection: plain gradient descent on the unfolded problem
        return EstimatorConfig(rank_budget=min(spec.dims))
    return EstimatorConfig()


def run_trial(spec: ExperimentSpec, grid_point: Tuple[int, float],
              trial_index: int) -> dict:
    """One seeded trial: scene, channel, measurement, every estimator."""
    spec.validate()
    P, snr = grid_point
    seed = trial_seed(spec.base_seed, grid_point, trial_index, spec.kind)
    scene_ss, noise_ss = np.random.SeedSequence(seed).spawn(2)
    t0 = time.perf_counter()

    geometry = half_wavelength_geometry(spec.kind, spec.dims)
    scene = draw_scene(scene_ss, spec.K, spec.L, geometry, spec.profile,
                       P=P, ref_symbol_amp=spec.ref_symbol_amp)
    if spec.kind == "1d":
        G = synth_channel_1d(scene)
    else:
        G = synth_channel_2d(scene)
    B, Z2, _absB = synth_reference(scene)
    sigma = sigma_from_snr(G, scene.pilots, snr)
    measure = measure_exact if spec.model == "exact" else measure_linearized
    M = measure(G, scene.pilots, B, sigma, noise_ss)

    n_cells = geometry.n_cells
    Zp = Z2 if spec.kind == "2d" else Z2.T     # P x cells
    gpow = float(np.linalg.norm(G.coefficients) ** 2)
    floor_complex = complex_crb_trace(scene.pilots, n_cells, sigma) / gpow
    trace_real, identifiable = real_crb_trace(scene.pilots, Zp, sigma)
    floor_real = trace_real / gpow if identifiable else float("nan")

    record = {
        "P": P,
        "snr_db": float(snr),
        "trial": trial_index,
        "seed": seed,
        "sigma": sigma,
        "crlb_floor": floor_complex,
        "crlb_floor_real": floor_real,
        "estimators": {},
    }
    for name in spec.estimators:
        cfg = _estimator_config(name, spec)
        entry: dict = {}
        try:
            if name == "gd" and spec.kind == "1d":
                rep = estimate_gd_1d(M, cfg)
            elif name in ("gd", "pgd"):
                rep = estimate_pgd_2d(M, cfg)
            else:
                rep = estimate_gs_1d(M, cfg)
            entry["nmse"] = nmse(rep.estimate, G)
            entry["iterations"] = rep.iterations
            entry["converged"] = bool(rep.converged)
            entry["diverged"] = False
        except DivergenceError as exc:
            entry["nmse"] = float("nan")
            entry["iterations"] = 0
            entry["converged"] = False
            entry["diverged"] = True
            entry["error"] = str(exc)
        record["estimators"][name] = entry
    record["wall_s"] = time.perf_counter() - t0
    return record


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    points: List[dict]
    records: List[dict]
    total_wall_s: float


def _sweep_task(args) -> dict:
    spec_dict, grid_point, trial_index = args
    spec = spec_from_dict(spec_dict)
    return run_trial(spec, tuple(grid_point), trial_index)


def run_sweep(spec: ExperimentSpec, workers: int = 1,
              progress: bool = False) -> ExperimentResult:
    """Full grid x trials with deterministic aggregation.

    Trials are independent; any worker count yields identical results
    because records are aggregated in (point, trial) order regardless of
    completion order.
    """
    spec.validate()
    points = spec.grid_points()
    tasks = [(spec_to_dict(spec), gp, t) for gp in points
             for t in range(spec.trials)]
    t0 = time.perf_counter()
    if workers <= 1:
        records = []
        for i, task in enumerate(tasks):
            records.append(_sweep_task(task))
            if progress and (i + 1) % spec.trials == 0:
                gp = points[i // spec.trials]
                print(f"  point P={gp[0]} snr={gp[1]:g}: done "
                      f"({i + 1}/{len(tasks)} trials)", flush=True)
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(tasks) // (workers * 8))
            records = list(pool.map(_sweep_task, tasks, chunksize=chunk))
    total_wall = time.perf_counter() - t0

    point_results = []
    for j, (P, snr) in enumerate(points):
        recs = records[j * spec.trials:(j + 1) * spec.trials]
        agg: dict = {
            "P": P,
            "snr_db": float(snr),
            "trials": spec.trials,
            "crlb_floor": float(np.mean([r["crlb_floor"] for r in recs])),
            "crlb_floor_real": float(np.mean([r["crlb_floor_real"] for r in recs])),
            "wall_s": float(sum(r["wall_s"] for r in recs)),
            "estimators": {},
        }
        for name in spec.estimators:
            vals = np.array([r["estimators"][name]["nmse"] for r in recs])
            ok = ~np.isnan(vals)
            used = vals[ok]
            iters = np.array([r["estimators"][name]["iterations"]
                              for r in recs])[ok]
            agg["estimators"][name] = {
                "mean_nmse": float(np.mean(used)) if used.size else float("nan"),
                "stderr": (float(np.std(used, ddof=1) / np.sqrt(used.size))
                           if used.size > 1 else 0.0),
                "mean_iterations": float(np.mean(iters)) if iters.size else 0.0,
                "trials_used": int(used.size),
                "diverged": int(np.sum(~ok)),
            }
        point_results.append(agg)
    return ExperimentResult(spec=spec, points=point_results, records=records,
                            total_wall_s=total_wall)


def write_table(result: ExperimentResult, path) -> None:
    """Delimited results table, one row per (estimator, grid point).

    Row order and float formatting are fixed, so identical experiments
    produce byte-identical files.
    """
    rows = []
    for point in result.points:
        for name, agg in point["estimators"].items():
            rows.append((name, point["snr_db"], point["P"],
                         agg["mean_nmse"], agg["stderr"],
                         point["crlb_floor"], agg["trials_used"]))
    rows.sort(key=lambda r: (r[0], r[2], r[1]))
    with open(path, "w", newline="\n") as f:
        f.write(",".join(TABLE_COLUMNS) + "\n")
        for name, snr, P, mean_nmse, stderr, floor, trials in rows:
            f.write(f"{name},{float(snr)!r},{P},{float(mean_nmse)!r},"
                    f"{float(stderr)!r},{float(floor)!r},{trials}\n")


def write_manifest(result: ExperimentResult, path,
                   include_records: bool = True) -> None:
    doc = {
        "schema": MANIFEST_SCHEMA,
        "spec": spec_to_dict(result.spec),
        "total_wall_s": result.total_wall_s,
        "points": result.points,
    }
    if include_records:
        doc["records"] = result.records
    with open(path, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")


def load_table(path) -> List[dict]:
    """Parse a results table back into dict rows (floats parsed)."""
    out = []
    with open(path) as f:
        header = f.readline().strip().split(",")
        for line in f:
            vals = line.strip().split(",")
            row = dict(zip(header, vals))
            row["snr_db"] = float(row["snr_db"])
            row["P"] = int(row["P"])
            row["mean_nmse"] = float(row["mean_nmse"])
            row["stderr"] = float(row["stderr"])
            row["crlb_floor"] = float(row["crlb_floor"])
            row["trials"] = int(row["trials"])
            out.append(row)
    return out
