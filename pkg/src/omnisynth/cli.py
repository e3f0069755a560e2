"""Command-line entry points.

Six console scripts cover the pipeline end to end:

* ``zeta``       -- accumulation factors: single values, beamwidth/ASI
                    sweeps, and configuration tables
* ``channel``    -- clustered multipath channel generation
* ``sound``      -- synthesize the measured power tensor from a channel
* ``synthesize`` -- extract omni-equivalent parameters from a tensor
* ``montecarlo`` -- estimation-error sweeps (results CSV)
* ``plcompare``  -- paired path-loss experiment (difference CSV)

All commands exit nonzero on guard violations (bad grids, tensor size,
aliasing, malformed configs).  ``OMNISYNTH_SEED`` overrides the master
seed of the Monte-Carlo commands, which keeps CI runs pinnable without
editing config files.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import beams
from .accumulation import (AxisGrid, GridCompatibilityError, zeta_2d,
                           zeta_axis_averaged, zeta_axis_discrete, zeta_total)
from .channelgen import (SVParams, generate, load_realization,
                         randomize_phases, save_realization)
from .harness import (ExperimentConfig, derive_seed, run_error_sweep,
                      run_pl_pairing, write_pl_csv, write_sweep_csv)
from .sounder import (PowerTensor, SounderConfig, load_tensor, save_tensor,
                      synthesize_coherent, synthesize_incoherent)
from .synthesis import synthesize_result
from .utils import to_db

_SEED_ENV = "OMNISYNTH_SEED"


def _fail(message):
    print(f"error: {message}", file=sys.stderr)
    return 2


def _guarded(fn):
    def runner(argv=None):
        try:
            return fn(argv)
        except (ValueError, ArithmeticError, OSError, KeyError) as exc:
            return _fail(exc)
    return runner


def _load_json(path):
    with open(path) as fh:
        return json.load(fh)


def _cli_pattern(kind, hpbw_theta, hpbw_phi, pattern_file):
    if kind == "isotropic":
        return beams.Isotropic()
    if kind == "vonmises":
        if hpbw_theta is None or hpbw_phi is None:
            raise ValueError("vonmises beam requires --hpbw-theta and --hpbw-phi")
        return beams.make_vonmises(hpbw_theta, hpbw_phi)
    if kind == "pattern-file":
        if pattern_file is None:
            raise ValueError("pattern-file beam requires --pattern-file")
        return beams.import_pattern(pattern_file)
    raise ValueError(f"unknown beam kind {kind!r}")


def _parse_mode(mode):
    """CLI mode string -> (mode, offset_deg)."""
    if mode == "ongrid":
        return "ongrid", 0.0
    if mode == "avg":
        return "averaged", 0.0
    if mode.startswith("offset="):
        return "offset", float(mode.split("=", 1)[1])
    raise ValueError(f"mode must be ongrid, avg, or offset=D; got {mode!r}")


def _axis_grid_for_span(span_deg, asi_deg):
    if span_deg == 360.0:
        return AxisGrid.full_circle(asi_deg)
    if span_deg == 180.0:
        return AxisGrid.coelevation(asi_deg)
    raise ValueError("span must be 360 (azimuth) or 180 (co-elevation)")


def _zeta_compute(args):
    pattern = _cli_pattern(args.beam, args.hpbw_theta, args.hpbw_phi,
                           args.pattern_file)
    grid = _axis_grid_for_span(args.span, args.asi)
    axis = "phi" if args.span == 360.0 else "theta"
    cut = beams.axis_cut(pattern, axis)
    mode, offset = _parse_mode(args.mode)
    if mode == "averaged":
        value = zeta_axis_averaged(cut, grid)
    else:
        value = zeta_axis_discrete(cut, grid, offset)
    payload = {"zeta_linear": value, "zeta_db": float(to_db(value))}
    text = json.dumps(payload, indent=1)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _zeta_sweep(args):
    """ASI/HPBW sweep rows at every integer point count in the ratio range."""
    span = args.span
    points = []
    n_min = max(1, int(np.ceil(span / (args.ratio_max * args.hpbw) - 1e-9)))
    n_max = int(np.floor(span / (args.ratio_min * args.hpbw) + 1e-9))
    for n in range(n_min, n_max + 1):
        asi = span / n
        ratio = asi / args.hpbw
        if ratio < args.ratio_min - 1e-9 or ratio > args.ratio_max + 1e-9:
            continue
        points.append((ratio, asi, n))
    if not points:
        raise ValueError("no integer-point grids in the requested ratio range")
    points.sort()

    if span == 360.0:
        pattern = beams.make_vonmises(180.0, args.hpbw)
        axis = "phi"
    else:
        pattern = beams.make_vonmises(args.hpbw, 360.0)
        axis = "theta"
    cut = beams.axis_cut(pattern, axis)

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["asi_over_hpbw", "zeta_ongrid", "zeta_avg"])
        for ratio, asi, n in points:
            grid = AxisGrid(n, asi, span)
            writer.writerow([
                f"{ratio:.10g}",
                repr(zeta_axis_discrete(cut, grid)),
                repr(zeta_axis_averaged(cut, grid)),
            ])
    return 0


def _table_pattern(spec):
    if spec.get("type") == "horn_fixture":
        return beams.horn_like_fixture()
    if spec.get("type") == "pattern_file":
        return beams.import_pattern(spec["path"])
    return beams.pattern_from_dict(spec)


def _zeta_table(args):
    """Table of composed correction factors over named configurations."""
    spec = _load_json(args.config)
    rows = []
    for entry in spec["configurations"]:
        tx = _table_pattern(entry["tx_beam"])
        rx = _table_pattern(entry["rx_beam"])
        asi_az = entry.get("asi_az_deg")
        asi_coel = entry.get("asi_coel_deg")
        grids = {}
        from .accumulation import SCAN_CONFIGURATIONS
        for domain in SCAN_CONFIGURATIONS[entry["config"]]:
            if domain.endswith("phi"):
                grids[f"{domain}_grid"] = AxisGrid.full_circle(asi_az)
            else:
                grids[f"{domain}_grid"] = AxisGrid.coelevation(asi_coel)
        totals = {}
        for mode in ("ongrid", "averaged"):
            totals[mode] = zeta_total(entry["config"], tx, rx,
                                      mode=mode, **grids).total
        rows.append((entry["name"], entry["config"], totals))
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["name", "config", "zeta_ongrid_linear",
                         "zeta_ongrid_db", "zeta_avg_linear", "zeta_avg_db"])
        for name, config, totals in rows:
            writer.writerow([
                name, config,
                repr(totals["ongrid"]), repr(float(to_db(totals["ongrid"]))),
                repr(totals["averaged"]), repr(float(to_db(totals["averaged"]))),
            ])
    return 0


@_guarded
def zeta_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="zeta", description="Beam-accumulation correction factors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compute", help="single 1-D accumulation factor")
    p.add_argument("--beam", required=True,
                   choices=["vonmises", "pattern-file", "isotropic"])
    p.add_argument("--hpbw-theta", type=float)
    p.add_argument("--hpbw-phi", type=float)
    p.add_argument("--pattern-file")
    p.add_argument("--asi", type=float, required=True,
                   help="angular sampling interval in degrees")
    p.add_argument("--span", type=float, default=360.0,
                   help="360 for azimuth, 180 for co-elevation")
    p.add_argument("--mode", default="ongrid",
                   help="ongrid, avg, or offset=D (degrees)")
    p.add_argument("--out")

    p = sub.add_parser("sweep", help="ASI/HPBW ratio sweep CSV")
    p.add_argument("--hpbw", type=float, required=True)
    p.add_argument("--span", type=float, default=360.0)
    p.add_argument("--ratio-min", type=float, default=0.2)
    p.add_argument("--ratio-max", type=float, default=3.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("table", help="correction table over configurations")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    if args.command == "compute":
        return _zeta_compute(args)
    if args.command == "sweep":
        return _zeta_sweep(args)
    return _zeta_table(args)


@_guarded
def channel_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="channel", description="Clustered multipath channel generator.")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("generate", help="draw one realization to JSON")
    p.add_argument("--params", required=True, help="SV parameter JSON")
    p.add_argument("--seed", type=int, default=None,
                   help="override the seed in the parameter file")
    p.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    spec = _load_json(args.params)
    if args.seed is not None:
        spec["seed"] = args.seed
    params = SVParams.from_dict(spec)
    realization = generate(params)
    save_realization(realization, args.out)
    print(f"wrote {len(realization)} MPCs to {args.out}")
    return 0


@_guarded
def sound_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="sound",
        description="Synthesize the scanned power tensor from a channel.")
    parser.add_argument("--mpcs", required=True)
    parser.add_argument("--config", required=True, help="sounder JSON")
    parser.add_argument("--mode", required=True,
                        choices=["coherent", "incoherent"])
    parser.add_argument("--trials", type=int, default=1,
                        help="phase-randomized trials to average (coherent)")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for phase trials and noise")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    realization = load_realization(args.mpcs)
    config = SounderConfig.from_dict(_load_json(args.config))
    if args.mode == "incoherent":
        tensor = synthesize_incoherent(realization, config)
    elif args.trials <= 1:
        rng = np.random.default_rng(derive_seed(args.seed, 0))
        tensor = synthesize_coherent(realization, config, rng=rng)
    else:
        acc = np.zeros(config.dims)
        for t in range(args.trials):
            trial = randomize_phases(realization, derive_seed(args.seed, 1, t))
            rng = np.random.default_rng(derive_seed(args.seed, 0, t))
            acc += synthesize_coherent(trial, config, rng=rng).values
        tensor = PowerTensor(values=acc / args.trials, config=config)
    save_tensor(tensor, args.out)
    print(f"wrote {tensor.values.size}-cell tensor to {args.out}")
    return 0


@_guarded
def synthesize_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="synthesize",
        description="Extract omni-equivalent parameters from a power tensor.")
    parser.add_argument("--power", required=True, help=".mdp tensor file")
    parser.add_argument("--zeta-mode", default="avg", choices=["ongrid", "avg"])
    parser.add_argument("--config-label", default="dd",
                        choices=["h2h", "o2h", "dd", "omni"])
    parser.add_argument("--threshold-db", type=float, default=None,
                        help="optional noise floor relative to the peak")
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)

    tensor = load_tensor(args.power)
    cfg = tensor.config
    label_to_config = {
        "omni": "omni_wideband",
        "o2h": "aoa_azimuth",
        "h2h": "dd_azimuth",
        "dd": "double_directional",
    }
    mode = "averaged" if args.zeta_mode == "avg" else "ongrid"
    correction = zeta_total(
        label_to_config[args.config_label], cfg.tx_beam, cfg.rx_beam,
        tx_theta_grid=cfg.tx_theta_grid, tx_phi_grid=cfg.tx_phi_grid,
        rx_theta_grid=cfg.rx_theta_grid, rx_phi_grid=cfg.rx_phi_grid,
        mode=mode,
    )
    result = synthesize_result(tensor, correction, args.config_label,
                               threshold_db=args.threshold_db)
    with open(args.out, "w") as fh:
        json.dump(result.to_dict(), fh, indent=1)
    print(f"P_hat = {result.channel_power:.6g} "
          f"(PL {result.path_loss_db:.3f} dB, "
          f"DS {result.rms_delay_spread_ns:.3f} ns) -> {args.out}")
    return 0


def _experiment_config(path):
    spec = _load_json(path)
    env_seed = os.environ.get(_SEED_ENV)
    if env_seed is not None:
        spec["seed"] = int(env_seed)
    return ExperimentConfig.from_dict(spec)


@_guarded
def montecarlo_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="montecarlo",
        description="Estimation-error sweep over beamwidths.")
    parser.add_argument("--config", required=True, help="experiment JSON")
    parser.add_argument("--out", required=True)
    parser.add_argument("--full-scale", action="store_true",
                        help="1000 realizations x 100 trials")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    config = _experiment_config(args.config)
    if config.scan_configuration == "h2h_vs_o2h":
        raise ValueError("use plcompare for the h2h_vs_o2h configuration")
    if args.full_scale:
        config = config.full_scale()
    rows = run_error_sweep(config, workers=args.workers)
    write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} sweep rows to {args.out}")
    return 0


@_guarded
def plcompare_main(argv=None):
    parser = argparse.ArgumentParser(
        prog="plcompare",
        description="Paired path-loss synthesis experiment.")
    parser.add_argument("--config", required=True, help="experiment JSON")
    parser.add_argument("--out", required=True)
    parser.add_argument("--full-scale", action="store_true")
    parser.add_argument("--workers", type=int, default=1)
    args = parser.parse_args(argv)

    config = _experiment_config(args.config)
    if args.full_scale:
        config = config.full_scale()
    rows = run_pl_pairing(config, workers=args.workers)
    write_pl_csv(rows, args.out)
    diffs = np.array([row.diff_db for row in rows])
    print(f"wrote {len(rows)} rows to {args.out}; "
          f"mean diff {diffs.mean():+.4f} dB")
    return 0
