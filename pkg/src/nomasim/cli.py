"""Command-line experiment runner.

    nomasim run --config exp.toml [--seed N] [--workers N] [--out DIR]
    nomasim preset fig2_style|fig3_style [--seed N] [--workers N] [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 runtime or I/O error.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import replace

from .config import PRESETS, ConfigError, ExperimentConfig, load_config, preset
from .downlink import BroadbandProfile, SensorProfile, plan_downlink
from .outage import SweepSpec, snr_sweep
from .report import (CONNECTIVITY_HEADER, DOWNLINK_HEADER, OUTAGE_HEADER, AxesSpec, CsvTable,
                     render_svg, write_atomic)
from .rng import RngStream
from .semigf import AcbPolicy, GfPopulation, MultiOrbConfig, PowerPool, connectivity_variants

log = logging.getLogger("nomasim")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def outage_table(cfg: ExperimentConfig, workers: int) -> CsvTable:
    body = cfg.body
    spec = SweepSpec(tuple(body.snr_db), body.trials_per_point, tuple(body.rates), tuple(body.policies),
                     tuple(body.fading), cfg.seed, tuple(body.power_scale))
    curve = snr_sweep(spec, workers)
    table = CsvTable(OUTAGE_HEADER)
    for pol, user, snr, est in curve.rows():
        table.add(cfg.name, pol.value, user, snr, est.p_hat, est.ci_low, est.ci_high, est.trials)
    return table


def connectivity_table(cfg: ExperimentConfig, workers: int) -> CsvTable:
    body = cfg.body
    table = CsvTable(CONNECTIVITY_HEADER)
    results = []
    for j, k in enumerate(body.k_pgfu):
        pop = GfPopulation(k, body.rho, (body.gf_power_min, body.gf_power_max), body.fading, body.gf_rate)
        pool = PowerPool(tuple(body.pool_levels)) if body.pool_levels else None
        acb = AcbPolicy(body.acb_q) if body.acb_q is not None else None
        multi = MultiOrbConfig.homogeneous(body.orbs, pop, body.gb_rate, body.gb_power, pool=pool, acb=acb)
        results.append((k, connectivity_variants(multi, body.variants, body.slots, RngStream(cfg.seed, j), workers)))
    for variant in body.variants:
        for k, res in results:
            est = res[variant]
            table.add(variant, k, body.rho, est.mean_served, est.ci_low, est.ci_high, est.slots)
    return table


def downlink_table(cfg: ExperimentConfig) -> CsvTable:
    body = cfg.body
    sensors = [SensorProfile(s.payload_bits, s.blocklength, s.error_prob, s.gain) for s in body.sensors]
    broadbands = [BroadbandProfile(b.rate, b.gain) for b in body.broadbands]
    plan = plan_downlink(sensors, broadbands, body.power_budget)
    admitted = {id(c) for c in plan.admitted}
    table = CsvTable(DOWNLINK_HEADER)
    for n, c in enumerate(plan.clusters):
        status = "admitted" if id(c) in admitted else ("rejected" if c.feasible else "infeasible")
        table.add(n, status, c.sensor, c.broadband, c.sensor_gain, c.broadband_gain, c.eps_sensor,
                  c.eps_broadband, c.p_sensor, c.p_broadband, c.required_total)
    for i in plan.unpaired_sensors:
        table.add(None, "unpaired_sensor", i, None, sensors[i].channel_gain, None, None, None, None, None, None)
    for j in plan.unpaired_broadbands:
        table.add(None, "unpaired_broadband", None, j, None, broadbands[j].channel_gain, None, None, None, None, None)
    return table


def run_scenario(cfg: ExperimentConfig, out_dir: str | None = None, workers: int | None = None) -> list[str]:
    """Run the configured scenario and write its CSV (and SVG) files; returns the paths."""
    out_dir = out_dir or cfg.output_dir
    workers = workers or cfg.workers
    written = []

    def emit(name, text):
        path = os.path.join(out_dir, name)
        write_atomic(path, text)
        written.append(path)

    stem = cfg.name
    if cfg.scenario == "outage_sweep":
        table = outage_table(cfg, workers)
        emit(f"{stem}_outage.csv", table.to_csv())
        if cfg.body.svg:
            axes = AxesSpec("snr_db", "p_hat", ("policy", "user"), log_y=True,
                            title="Outage probability", x_label="transmit SNR (dB)", y_label="outage probability")
            emit(f"{stem}_outage.svg", render_svg(table, axes))
    elif cfg.scenario == "semigf_connectivity":
        table = connectivity_table(cfg, workers)
        emit(f"{stem}_connectivity.csv", table.to_csv())
        if cfg.body.svg:
            axes = AxesSpec("k_pgfu", "mean_served", ("variant",), title="Semi-GF connectivity",
                            x_label="potential GF users K", y_label="served users per slot")
            emit(f"{stem}_connectivity.svg", render_svg(table, axes))
    else:
        emit(f"{stem}_plan.csv", downlink_table(cfg).to_csv())
    return written


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nomasim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--seed", type=int, help="override the configured master seed")
        sp.add_argument("--workers", type=int, help="worker threads (results do not depend on it)")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("-v", "--verbose", action="store_true")

    run = sub.add_parser("run", help="run an experiment config file")
    run.add_argument("--config", required=True)
    common(run)
    pre = sub.add_parser("preset", help="run a built-in experiment")
    pre.add_argument("name", choices=sorted(PRESETS))
    common(pre)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config) if args.command == "run" else preset(args.name)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed: must satisfy 0 <= seed < 2^64")
            cfg = replace(cfg, seed=args.seed)
        if args.workers is not None and args.workers < 1:
            raise ConfigError("--workers: must satisfy workers >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: cannot read config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        paths = run_scenario(cfg, args.out, args.workers)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in paths:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
