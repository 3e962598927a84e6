#!/usr/bin/env python3
"""
Ring Lab command line

Runs a scenario file through one of the lab pipelines and writes CSV
artifacts, gnuplot scripts and a run manifest into the output directory.
"""

import argparse
import asyncio
import json
import logging
import os
import sys
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from . import __version__
from .artifacts import ArtifactWriter, RunManifest
from .diagnostics import quantile_trend, step_fit_frame
from .dynamics import run_model_a
from .errors import ConfigParseError, ConfigValidationError, RingLabError, UsageError
from .fuller import FullerSynthesis, calibrate_fuller_constant, simulate_fuller
from .gravity import EdgeKernel, edge_asymptotics_fit, graded_grid, net_radial_profile
from .kinetic import run_kinetic, run_periodic_box
from .models import DEFAULT_SEED, SEED_MAX, ScenarioConfig, config_hash, has_errors, load_config, validate_config

logger = logging.getLogger("ringlab")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4
SEED_ENV = "RINGLAB_SEED"


@dataclass(frozen=True)
class Subcommand:
    name: str
    description: str
    artifacts: List[str]


SUBCOMMANDS: List[Subcommand] = [
    Subcommand("force-profile", "Tabulate the net radial force of Saturn and the ring",
               ["force_profile.csv"]),
    Subcommand("edge-fit", "Fit the logarithmic force divergence next to a ring edge",
               ["edge_fit.csv", "edge_fit_summary.csv"]),
    Subcommand("librations", "Locate libration circles and classify their stability",
               ["librations.csv"]),
    Subcommand("simulate", "Run collision-free Model A dynamics with a self-consistent ring field",
               ["diagnostics.csv", "density_NNNN.csv", "step_fit.csv"]),
    Subcommand("kinetic", "Run Model B with DSMC collisions and transport residual checks",
               ["moments_NNNN.csv", "collisions.csv", "residuals.csv", "edge_flux.csv"]),
    Subcommand("equilibrium", "Check that an elastic periodic box keeps a steady temperature",
               ["box_temperature.csv", "box_trend.csv"]),
    Subcommand("fuller", "Simulate the chattering Fuller synthesis",
               ["fuller_switches.csv", "fuller_summary.csv"]),
]


def subcommand_names() -> List[str]:
    return [s.name for s in SUBCOMMANDS]


def resolve_seed(flag: Optional[int], config: ScenarioConfig) -> int:
    """--seed beats RINGLAB_SEED beats the config seed beats the default."""
    if flag is not None:
        seed = flag
    elif os.getenv(SEED_ENV):
        try:
            seed = int(os.getenv(SEED_ENV))
        except ValueError as e:
            raise UsageError(f"{SEED_ENV} is not an integer: {os.getenv(SEED_ENV)!r}") from e
    elif config.seed is not None:
        seed = config.seed
    else:
        seed = DEFAULT_SEED
    if not 0 <= seed <= SEED_MAX:
        raise UsageError(f"seed {seed} is not a 64-bit unsigned integer")
    return seed


def _profile(config: ScenarioConfig, executor: Optional[Executor]):
    settings = config.profile
    grid = settings.radii() if settings.grid is not None else graded_grid(
        config.model, settings.r_min, settings.r_max, settings.points)
    return net_radial_profile(config.model, grid, settings.quad_tolerance, settings.refine_tol, executor)


async def handle_subcommand(name: str, config: ScenarioConfig, seed: int, executor: Optional[Executor],
                            writer: ArtifactWriter) -> Dict[str, Any]:
    """Run one pipeline and stage its artifacts; returns the manifest summary."""
    if name == "force-profile":
        profile = await asyncio.to_thread(_profile, config, executor)
        writer.write_csv("force_profile.csv", profile.to_frame())
        summary = {"points": int(profile.radii.size), "roots": len(profile.roots)}
    elif name == "librations":
        profile = await asyncio.to_thread(_profile, config, executor)
        writer.write_csv("librations.csv", profile.libration_frame(), plot=False)
        summary = {c.stability.value: c.radius for c in profile.roots}
    elif name == "edge-fit":
        settings = config.edge_fit
        fit = await asyncio.to_thread(edge_asymptotics_fit, config.model.density, settings.edge,
                                      settings.epsilons, EdgeKernel(settings.kernel), config.profile.quad_tolerance)
        writer.write_csv("edge_fit.csv", fit.to_frame(), logscale_x=True)
        writer.write_csv("edge_fit_summary.csv", fit.summary_frame(), plot=False)
        summary = {"slope": fit.slope, "r_squared": fit.r_squared}
    elif name == "simulate":
        diag = await asyncio.to_thread(run_model_a, config, seed, executor)
        writer.write_csv("diagnostics.csv", diag.to_frame(), y=["R1", "R2"])
        for i in range(len(diag.histograms)):
            writer.write_csv(f"density_{i:04d}.csv", diag.histogram_frame(i))
        writer.write_csv("step_fit.csv", step_fit_frame(diag.times, diag.histograms), y=["contrast"])
        width = config.model.width
        inner = quantile_trend(diag.radii, 0.01, width, seed=seed)
        outer = quantile_trend(diag.radii, 0.99, width, seed=seed)
        summary = {
            "inner_envelope": inner.direction,
            "inner_significant": inner.significant,
            "outer_envelope": outer.direction,
            "outer_significant": outer.significant,
            "n_fallen": diag.n_fallen[-1],
            "n_escaped": diag.n_escaped[-1],
        }
    elif name == "kinetic":
        result = await asyncio.to_thread(run_kinetic, config, seed, executor)
        for i, snapshot in enumerate(result.snapshots):
            writer.write_csv(f"moments_{i:04d}.csv", snapshot.to_frame(), y=["rho", "T"])
        writer.write_csv("collisions.csv", result.collision_log, y=["collisions", "zeta_hat"])
        writer.write_csv("residuals.csv", result.residual_frame(), plot=False)
        writer.write_csv("edge_flux.csv", result.edge_flux, y=["net_inward"])
        summary = {"residuals": result.residuals.as_dict(), "collisions": result.stats.collisions}
    elif name == "equilibrium":
        result = await asyncio.to_thread(run_periodic_box, config, seed, executor)
        writer.write_csv("box_temperature.csv", result.to_frame(), y=["T"])
        writer.write_csv("box_trend.csv", result.trend.summary_frame(), plot=False)
        summary = {"slope": result.trend.slope, "standard_error": result.trend.standard_error,
                   "significant": result.trend.significant}
    elif name == "fuller":
        settings = config.fuller
        coefficient = settings.switch_coefficient
        if coefficient is None:
            coefficient = await asyncio.to_thread(calibrate_fuller_constant, settings.tolerance)
        synthesis = FullerSynthesis(coefficient, event_tolerance=settings.event_tolerance)
        traj = await asyncio.to_thread(simulate_fuller, settings.x0, settings.y0, synthesis,
                                       settings.stop_radius, settings.time_budget)
        writer.write_csv("fuller_switches.csv", traj.switch_frame(), x="k", y=["interval"])
        writer.write_csv("fuller_summary.csv", traj.summary_frame(), plot=False)
        summary = {"C": coefficient, "cost": traj.cost, "switches": traj.switches,
                   "termination": traj.termination.value}
    else:
        raise UsageError(f"unknown subcommand '{name}'; choose one of {', '.join(subcommand_names())}")
    return summary


async def run_scenario(config_path: str, subcommand: str, seed: Optional[int] = None, out: Optional[str] = None,
                       threads: int = 1) -> RunManifest:
    """Parse, validate and run a scenario; artifacts appear only if everything succeeds."""
    if subcommand not in subcommand_names():
        raise UsageError(f"unknown subcommand '{subcommand}'; choose one of {', '.join(subcommand_names())}")
    config = load_config(config_path)
    issues = validate_config(config)
    for issue in issues:
        if issue.severity == "warning":
            logger.warning(f"{issue.path}: {issue.message}")
    if has_errors(issues):
        raise ConfigValidationError(issues)

    seed = resolve_seed(seed, config)
    manifest = RunManifest(scenario=config.name, config_hash=config_hash(config), seed=seed,
                           version=__version__, subcommand=subcommand)
    out_dir = out or config.output.directory
    executor = ThreadPoolExecutor(max_workers=threads) if threads > 1 else None
    try:
        with ArtifactWriter(out_dir, manifest) as writer:
            manifest.summary = await handle_subcommand(subcommand, config, seed, executor, writer)
    finally:
        if executor is not None:
            executor.shutdown()
    logger.info(f"Finished '{subcommand}' for scenario '{config.name}' (seed {seed})")
    return manifest


def error_payload(error: Exception) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"error": type(error).__name__, "message": str(error)}
    if isinstance(error, ConfigParseError):
        payload["key"] = error.key
        payload["suggestion"] = error.suggestion
    if isinstance(error, ConfigValidationError):
        payload["issues"] = [i.model_dump() for i in error.issues]
    radius = getattr(error, "radius", None)
    if radius is not None:
        payload["radius"] = radius
    return payload


def exit_code_for(error: Exception) -> int:
    if isinstance(error, (UsageError, ConfigParseError)):
        return EXIT_USAGE
    if isinstance(error, ConfigValidationError):
        return EXIT_VALIDATION
    return EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringlab", description="Planetary ring dynamics lab")
    parser.add_argument("subcommand", help=f"one of: list, {', '.join(subcommand_names())}")
    parser.add_argument("--config", help="scenario JSON file")
    parser.add_argument("--seed", type=int, help="64-bit unsigned RNG seed")
    parser.add_argument("--out", help="output directory (defaults to the scenario's output.directory)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads")
    parser.add_argument("--quiet", action="store_true", help="only log warnings and errors")
    return parser


async def run_cli(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO)

    if args.subcommand == "list":
        for sub in SUBCOMMANDS:
            print(f"{sub.name:14s} {sub.description} -> {', '.join(sub.artifacts)}")
        return EXIT_OK

    try:
        if not args.config:
            raise UsageError("--config is required")
        if args.threads < 1:
            raise UsageError("--threads must be at least 1")
        manifest = await run_scenario(args.config, args.subcommand, args.seed, args.out, args.threads)
    except (RingLabError, ArithmeticError, ValueError) as e:
        logger.error(f"{args.subcommand} failed: {e}")
        print(json.dumps(error_payload(e), sort_keys=True, default=str), file=sys.stderr)
        return exit_code_for(e)
    print(manifest.to_json())
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    return asyncio.run(run_cli(argv))


if __name__ == "__main__":
    sys.exit(main())
