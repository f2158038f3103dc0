"""Command line interface of the simulator.

Usage: ``simcli <experiment> [--config FILE] [--seed N] [--out DIR] [--delta F] [--trials N] [--svg]``.
"""

import argparse
import dataclasses
import logging
from collections.abc import Sequence

import numpy as np

from hstce.config import RunConfig, SystemParams, default_snr_grid, read_run_config
from hstce.controller import KINDS, POSITION_SNR_DB, ExperimentController, ExperimentSpec
from hstce.pilots import load_pattern
from hstce.store.result_export import export

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"

_HELP = {
    "design-pilot": "design pilot patterns and report their coherence",
    "mse-sweep": "channel estimation error versus SNR",
    "ber-sweep": "bit error rate versus SNR for one and R receive antennas",
    "position-sweep": "channel estimation error versus train position",
    "ici-compare": "interference on the pilots with and without the receive permutation",
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML configuration document")
    common.add_argument("--seed", type=int, help="master seed (overrides sim.seed)")
    common.add_argument("--out", default="results", help="output directory (default: %(default)s)")
    common.add_argument("--delta", type=float, help="average coherence threshold (overrides sim.delta)")
    common.add_argument("--trials", type=int, help="trials per point (overrides sim.trials)")
    common.add_argument("--workers", type=int, help="worker threads (overrides sim.workers)")
    common.add_argument("--pattern", help="stored pilot pattern replacing the alg1 design")
    common.add_argument("--svg", action="store_true", help="also write results.svg")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="log debug messages")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")

    parser = argparse.ArgumentParser(
        prog="simcli", description="Pilot-aided channel estimation for high-speed-train SIMO-OFDM links."
    )
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="experiment")
    for kind in KINDS:
        sub = subparsers.add_parser(kind, parents=[common], help=_HELP[kind])
        if kind == "position-sweep":
            sub.add_argument("--from", dest="start", type=float, help="first position in m (default: 0)")
            sub.add_argument("--to", dest="stop", type=float, help="last position in m (default: 2D)")
            sub.add_argument("--step", type=float, help="position step in m (default: 100)")
    return parser


def _position_grid(
    start: float | None, stop: float | None, step: float | None, params: SystemParams
) -> tuple[float, ...]:
    start = 0.0 if start is None else start
    stop = 2 * params.D if stop is None else stop
    step = 100.0 if step is None else step
    if step <= 0 or stop < start:
        raise ValueError(f"Invalid position grid: from {start} to {stop} in steps of {step}.")
    grid = [float(a) for a in np.arange(start, stop, step)]
    if not grid or grid[-1] < stop:
        grid.append(float(stop))
    return tuple(grid)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Read the configuration document and apply the command line overrides."""
    config = read_run_config(args.config)
    overrides = {
        name: getattr(args, name)
        for name in ("seed", "delta", "trials", "workers")
        if getattr(args, name) is not None
    }
    if args.command == "position-sweep":
        if config.sim.snr_db == tuple(default_snr_grid()):
            overrides["snr_db"] = POSITION_SNR_DB
        if any(getattr(args, name) is not None for name in ("start", "stop", "step")):
            overrides["positions_m"] = _position_grid(args.start, args.stop, args.step, config.params)
    return RunConfig(config.params, dataclasses.replace(config.sim, **overrides))


def main(argv: Sequence[str] | None = None) -> None:
    """Entry point of ``simcli``. Exits with status 2 on invalid input."""
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format=LOG_FORMAT)

    try:
        config = resolve_config(args)
        pattern = load_pattern(args.pattern, config.params) if args.pattern else None
        spec = ExperimentSpec.from_config(args.command, config, pattern)
        if pattern is not None and "alg1" not in spec.designs:
            logger.warning("Ignoring %s: the alg1 design is not evaluated", args.pattern)
        params = config.params
        logger.info("K=%d P=%d L=%d S=%d Q=%d R=%d f_max=%.1f Hz", params.K, params.P, params.L, params.S,
                    params.Q, params.R, params.f_max)

        controller = ExperimentController(params, spec)
        store = controller.run()
        trace = controller.design_trace if args.command == "design-pilot" else None
        export(args.out, store, config, args.command, controller.report_pattern(), trace, args.svg)
    except (ValueError, OSError) as e:
        parser.exit(2, f"simcli: error: {e}\n")


if __name__ == "__main__":
    main()
