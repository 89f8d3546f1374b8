"""Command line front end.

Subcommands:
  synth      draw a scene and its ground-truth channel
  simulate   synth plus magnitude measurements (npz and csv)
  estimate   run one estimator against saved measurements
  crlb       bound floors for saved measurements
  sweep      Monte Carlo grid, writes results table and manifest

Exit codes: 0 success (estimate: converged), 1 unexpected failure or
divergence, 2 bad config or unsupported capability, 3 estimate stopped at
the iteration cap without meeting the tolerance.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np
import yaml

from ._backend import BACKEND
from .bench import (ExperimentSpec, nmse, run_sweep, spec_from_dict,
                    spec_to_dict, write_manifest, write_table)
from .channel import ChannelSet, synth_channel_1d, synth_channel_2d, \
    synth_reference
from .crlb import crlb_report
from .estimators import (DivergenceError, EstimatorConfig, INIT_KINDS,
                         STEP_RULES, estimate_gd_1d, estimate_gs_1d,
                         estimate_pgd_2d)
from .measurement import MeasurementSet, export_measurements, measure_exact, \
    measure_linearized, sigma_from_snr
from .scene import (PROFILES, DEFAULT_REF_SYMBOL_AMP, draw_scene,
                    half_wavelength_geometry, scene_to_dict)

DEFAULT_BASE_SEED = 20260816

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CONFIG = 2
EXIT_MAXITERS = 3

SYNTH_SCHEMA = "rydmimo-synth/1"
CHANNEL_SCHEMA = "rydmimo-channel/1"
MEASUREMENT_SCHEMA = "rydmimo-measurements/1"
REPORT_SCHEMA = "rydmimo-report/1"
CRLB_SCHEMA = "rydmimo-crlb/1"

_SYNTH_KEYS = {"schema", "kind", "dims", "K", "L", "P", "snr_db", "model",
               "profile", "ref_symbol_amp", "seed"}
_SYNTH_DEFAULTS = {"kind": "1d", "dims": (8,), "K": 3, "L": 5, "P": 30,
                   "snr_db": 10.0, "model": "exact", "profile": "default",
                   "ref_symbol_amp": DEFAULT_REF_SYMBOL_AMP,
                   "seed": DEFAULT_BASE_SEED}


def _presets() -> dict:
    """Named experiment grids for the standard figures."""
    common = dict(K=3, L=5, profile="default", model="exact",
                  base_seed=DEFAULT_BASE_SEED)
    return {
        "fig3": ExperimentSpec(kind="1d", dims=(8,),
                               pilot_lengths=[10, 30],
                               snr_db=[0.0, 5.0, 10.0, 15.0, 20.0],
                               trials=200, estimators=["gd", "gs"], **common),
        "fig3-small": ExperimentSpec(kind="1d", dims=(8,),
                                     pilot_lengths=[10, 30],
                                     snr_db=[0.0, 5.0, 10.0, 15.0, 20.0],
                                     trials=50, estimators=["gd", "gs"],
                                     **common),
        "fig4": ExperimentSpec(kind="2d", dims=(8, 8),
                               pilot_lengths=[10, 30],
                               snr_db=[0.0, 5.0, 10.0, 15.0, 20.0],
                               trials=200, estimators=["gd", "pgd"], **common),
        "fig5": ExperimentSpec(kind="2d", dims=(8, 8),
                               pilot_lengths=[5, 10, 15, 20, 25, 30],
                               snr_db=[5.0], trials=200, estimators=["pgd"],
                               **common),
    }


def _load_yaml(path, expected_schema: str, known_keys: set) -> dict:
    with open(path) as f:
        doc = yaml.safe_load(f)
    if not isinstance(doc, dict):
        raise ValueError("config must be a mapping")
    if doc.get("schema") != expected_schema:
        raise ValueError(f"unsupported config schema {doc.get('schema')!r} "
                         f"(expected {expected_schema!r})")
    unknown = set(doc) - known_keys
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)} "
                         f"(accepted: {sorted(known_keys)})")
    return doc


def _parse_dims(text: str):
    try:
        dims = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise ValueError(f"bad --dims value {text!r}")
    if not dims:
        raise ValueError("empty --dims")
    return dims


def _scene_params(args) -> dict:
    params = dict(_SYNTH_DEFAULTS)
    if args.config:
        doc = _load_yaml(args.config, SYNTH_SCHEMA, _SYNTH_KEYS)
        params.update({k: v for k, v in doc.items() if k != "schema"})
    for key in ("kind", "K", "L", "P", "profile", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            params[key] = val
    if getattr(args, "dims", None) is not None:
        params["dims"] = _parse_dims(args.dims)
    if getattr(args, "ref_amp", None) is not None:
        params["ref_symbol_amp"] = args.ref_amp
    if getattr(args, "snr_db", None) is not None:
        params["snr_db"] = args.snr_db
    if getattr(args, "model", None) is not None:
        params["model"] = args.model
    params["dims"] = tuple(int(d) for d in params["dims"])
    return params


def _synth_from_params(params):
    geometry = half_wavelength_geometry(params["kind"], params["dims"])
    scene = draw_scene(int(params["seed"]), int(params["K"]),
                       int(params["L"]), geometry,
                       distribution_profile=params["profile"],
                       P=int(params["P"]),
                       ref_symbol_amp=float(params["ref_symbol_amp"]))
    if params["kind"] == "1d":
        G = synth_channel_1d(scene)
    else:
        G = synth_channel_2d(scene)
    return scene, G


def _save_channel(G: ChannelSet, path) -> None:
    np.savez(path, schema=CHANNEL_SCHEMA, kind=G.kind,
             coefficients=G.coefficients,
             rank_budget=-1 if G.rank_budget is None else int(G.rank_budget))


def _load_channel(path) -> ChannelSet:
    with np.load(path, allow_pickle=False) as d:
        if str(d["schema"]) != CHANNEL_SCHEMA:
            raise ValueError(f"not a channel file: schema {d['schema']!r}")
        budget = int(d["rank_budget"])
        return ChannelSet(kind=str(d["kind"]),
                          coefficients=np.array(d["coefficients"]),
                          rank_budget=None if budget < 0 else budget)


def _save_measurements(M: MeasurementSet, path) -> None:
    np.savez(path, schema=MEASUREMENT_SCHEMA, kind=M.kind, model=M.model,
             dims=np.asarray(M.dims, dtype=np.int64), y=M.Y, z=M.Z,
             abs_b=M.absB, s=M.S, sigma=float(M.sigma))


def _load_measurements(path) -> MeasurementSet:
    with np.load(path, allow_pickle=False) as d:
        if str(d["schema"]) != MEASUREMENT_SCHEMA:
            raise ValueError(f"not a measurement file: schema {d['schema']!r}")
        return MeasurementSet(Y=np.array(d["y"]), Z=np.array(d["z"]),
                              absB=np.array(d["abs_b"]), S=np.array(d["s"]),
                              sigma=float(d["sigma"]), kind=str(d["kind"]),
                              dims=tuple(int(x) for x in d["dims"]),
                              model=str(d["model"]))


def _print_slice_ranks(G: ChannelSet) -> None:
    for k in range(G.coefficients.shape[2]):
        r = np.linalg.matrix_rank(G.coefficients[:, :, k])
        print(f"  slice {k}: rank {r}"
              + (f" (budget {G.rank_budget})" if G.rank_budget else ""))


def cmd_synth(args) -> int:
    params = _scene_params(args)
    scene, G = _synth_from_params(params)
    os.makedirs(args.out, exist_ok=True)
    scene_path = os.path.join(args.out, "scene.yaml")
    chan_path = os.path.join(args.out, "channel.npz")
    with open(scene_path, "w") as f:
        yaml.safe_dump(scene_to_dict(scene), f, sort_keys=False)
    _save_channel(G, chan_path)
    print(f"scene: {scene_path}")
    print(f"channel: {chan_path} kind={G.kind} "
          f"shape={G.coefficients.shape} seed={params['seed']}")
    if G.kind == "2d":
        _print_slice_ranks(G)
    return EXIT_OK


def cmd_simulate(args) -> int:
    params = _scene_params(args)
    scene, G = _synth_from_params(params)
    B, _Z, _absB = synth_reference(scene)
    sigma = sigma_from_snr(G, scene.pilots, float(params["snr_db"]))
    measure = measure_exact if params["model"] == "exact" else measure_linearized
    noise_seed = np.random.SeedSequence(int(params["seed"])).spawn(2)[1]
    M = measure(G, scene.pilots, B, sigma, noise_seed)

    os.makedirs(args.out, exist_ok=True)
    with open(os.path.join(args.out, "scene.yaml"), "w") as f:
        yaml.safe_dump(scene_to_dict(scene), f, sort_keys=False)
    _save_channel(G, os.path.join(args.out, "channel.npz"))
    meas_path = os.path.join(args.out, "measurements.npz")
    _save_measurements(M, meas_path)
    csv_path = os.path.join(args.out, "measurements.csv")
    export_measurements(M, csv_path)
    print(f"measurements: {meas_path} model={params['model']} "
          f"snr_db={params['snr_db']} sigma={sigma:.6g}")
    print(f"csv export: {csv_path}")
    return EXIT_OK


def _estimator_cfg_from_args(args, M: MeasurementSet) -> EstimatorConfig:
    cfg = EstimatorConfig(
        step_rule=args.step_rule,
        step_value=args.step,
        max_iters=args.max_iters,
        tol=args.tol,
        rank_budget=args.rank_budget,
        init=args.init,
        init_seed=args.init_seed,
    )
    if args.estimator == "gd" and M.kind == "2d" and cfg.rank_budget is None:
        # vacuous projection: plain gradient descent on the unfolding
        cfg = dataclasses.replace(cfg, rank_budget=min(M.dims[:2]))
    return cfg


def cmd_estimate(args) -> int:
    M = _load_measurements(args.measurements)
    cfg = _estimator_cfg_from_args(args, M)
    if args.estimator == "gd" and M.kind == "1d":
        report = estimate_gd_1d(M, cfg)
    elif args.estimator in ("gd", "pgd"):
        report = estimate_pgd_2d(M, cfg)
    else:
        report = estimate_gs_1d(M, cfg)

    err = None
    if args.truth:
        truth = _load_channel(args.truth)
        err = nmse(report.estimate, truth)

    est = report.estimate.coefficients
    doc = {
        "schema": REPORT_SCHEMA,
        "estimator": args.estimator,
        "backend": report.backend,
        "iterations": report.iterations,
        "converged": report.converged,
        "final_loss": report.final_loss,
        "nmse": err,
        "kind": M.kind,
        "shape": list(est.shape),
        "estimate_re": est.real.reshape(-1).tolist(),
        "estimate_im": est.imag.reshape(-1).tolist(),
    }
    with open(args.out, "w") as f:
        json.dump(doc, f, indent=1, sort_keys=True)
        f.write("\n")

    print(f"estimator: {args.estimator} (backend {report.backend})")
    state = "converged" if report.converged else "hit max_iters"
    print(f"iterations: {report.iterations} ({state})")
    print(f"final loss: {report.final_loss:.6g}")
    if err is not None:
        print(f"nmse: {err:.6g}")
    print(f"report: {args.out}")
    return EXIT_OK if report.converged else EXIT_MAXITERS


def cmd_crlb(args) -> int:
    M = _load_measurements(args.measurements)
    truth = _load_channel(args.truth) if args.truth else None
    result, info = crlb_report(M, truth)
    print(f"trace complex-parameter bound: {info['trace_complex']:.6g}")
    print(f"trace real-parameter bound: {info['trace_real']:.6g}")
    print(f"complex/real trace ratio: {info['trace_ratio_complex_over_real']:.4f}")
    print(f"real-parameter identifiable: {info['real_identifiable']}")
    if truth is not None:
        print(f"nmse floor (complex form): {info['floor_complex']:.6g}")
        print(f"nmse floor (real form): {info['floor_real']:.6g}")
    if args.out:
        doc = {"schema": CRLB_SCHEMA}
        doc.update(info)
        if truth is None:
            # without a reference channel the floors are undefined; NaN
            # would not survive a strict JSON round-trip
            doc.pop("floor_complex", None)
            doc.pop("floor_real", None)
        with open(args.out, "w") as f:
            json.dump(doc, f, indent=1, sort_keys=True)
            f.write("\n")
        print(f"report: {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.preset and args.config:
        raise ValueError("--preset and --config are mutually exclusive")
    if args.preset:
        spec = _presets()[args.preset]
    elif args.config:
        with open(args.config) as f:
            doc = yaml.safe_load(f)
        spec = spec_from_dict(doc)
    else:
        raise ValueError("sweep needs --preset or --config")

    overrides = {}
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.estimators:
        overrides["estimators"] = [e.strip() for e in args.estimators.split(",")
                                   if e.strip()]
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        spec = dataclasses.replace(spec, **overrides)
    spec.validate()

    result = run_sweep(spec, workers=args.workers, progress=args.verbose)
    os.makedirs(args.out, exist_ok=True)
    table_path = os.path.join(args.out, "results.csv")
    manifest_path = os.path.join(args.out, "manifest.json")
    write_table(result, table_path)
    write_manifest(result, manifest_path)

    n_div = sum(agg["diverged"] for point in result.points
                for agg in point["estimators"].values())
    print(f"sweep: {len(result.points)} grid points x {spec.trials} trials, "
          f"{result.total_wall_s:.1f}s, backend {BACKEND}")
    if n_div:
        print(f"diverged trials (excluded from means): {n_div}")
    print(f"table: {table_path}")
    print(f"manifest: {manifest_path}")
    return EXIT_OK


def _add_scene_args(sp, with_noise: bool) -> None:
    sp.add_argument("--config", help="YAML scene config (rydmimo-synth/1)")
    sp.add_argument("--kind", choices=["1d", "2d"])
    sp.add_argument("--dims", help="cells per axis, e.g. 8 or 8,8")
    sp.add_argument("--users", type=int, dest="K", help="number of users K")
    sp.add_argument("--paths", type=int, dest="L", help="paths per user L")
    sp.add_argument("--pilots", type=int, dest="P", help="pilot length P")
    sp.add_argument("--profile", choices=list(PROFILES))
    sp.add_argument("--ref-amp", type=float, dest="ref_amp",
                    help="constant reference symbol amplitude")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--out", default=".", help="output directory")
    if with_noise:
        sp.add_argument("--snr-db", type=float, dest="snr_db")
        sp.add_argument("--model", choices=["exact", "linearized"])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="rydmimo",
        description="Magnitude-only channel estimation toolkit for Rydberg "
                    "atomic receiver arrays.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("synth", help="draw a scene and its channel")
    _add_scene_args(sp, with_noise=False)

    sp = sub.add_parser("simulate", help="synth plus magnitude measurements")
    _add_scene_args(sp, with_noise=True)

    sp = sub.add_parser("estimate", help="run an estimator on measurements")
    sp.add_argument("--measurements", required=True)
    sp.add_argument("--estimator", required=True, choices=["gd", "pgd", "gs"])
    sp.add_argument("--truth", help="channel.npz for NMSE reporting")
    sp.add_argument("--step-rule", choices=list(STEP_RULES),
                    default="lipschitz")
    sp.add_argument("--step", type=float, help="step size for --step-rule fixed")
    sp.add_argument("--tol", type=float, default=1e-10)
    sp.add_argument("--max-iters", type=int, default=5000)
    sp.add_argument("--init", choices=list(INIT_KINDS), default="zeros")
    sp.add_argument("--init-seed", type=int)
    sp.add_argument("--rank-budget", type=int,
                    help="per-slice rank bound L (pgd)")
    sp.add_argument("--out", default="report.json")

    sp = sub.add_parser("crlb", help="bound floors for measurements")
    sp.add_argument("--measurements", required=True)
    sp.add_argument("--truth", help="channel.npz for NMSE floors")
    sp.add_argument("--out", help="optional JSON report path")

    sp = sub.add_parser("sweep", help="Monte Carlo grid")
    sp.add_argument("--preset", choices=sorted(_presets()))
    sp.add_argument("--config", help="YAML sweep config (rydmimo-sweep/1)")
    sp.add_argument("--seed", type=int, help="override base seed")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--estimators",
                    help="comma-separated subset, e.g. gd,gs")
    sp.add_argument("--trials", type=int, help="override trials per point")
    sp.add_argument("--out", default=".", help="output directory")

    return p


_COMMANDS = {
    "synth": cmd_synth,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "crlb": cmd_crlb,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, KeyError, FileNotFoundError,
            np.linalg.LinAlgError, yaml.YAMLError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:                      # noqa: BLE001
        print(f"unexpected error: {exc!r}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
