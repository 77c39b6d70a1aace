#!/usr/bin/env python3
"""
Suslov Lab - command line

Structure-preserving integration of the Suslov problem on SO(3): trajectory
runs, method comparisons, one-step consistency studies and plotting scripts.
Run with --server to expose the same operations as MCP tools over stdio.
"""
import argparse
import asyncio
import logging
import sys
from pathlib import Path

from rich.console import Console
from rich.logging import RichHandler

# Add suslov_lab to path
sys.path.insert(0, str(Path(__file__).parent))

from suslov_lab.config import build_config
from suslov_lab.errors import ConfigError, FitError, NonConvergence, SuslovError
from suslov_lab.lab.consistency import estimate_order
from suslov_lab.lab.manifest import ManifestManager
from suslov_lab.lab.reporter import Reporter, fits_path
from suslov_lab.lab.runner import TrajectoryRunner, compare_runs

logger = logging.getLogger("suslov_lab")

EXIT_OK = 0
EXIT_SLOPE_MISS = 1
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_FIT = 4

console = Console()
reporter = Reporter(console)


def setup_logging(level: str):
    logging.basicConfig(
        level=level.upper(),
        format="%(message)s",
        datefmt="[%X]",
        handlers=[RichHandler(console=Console(stderr=True), rich_tracebacks=True)],
        force=True,
    )


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (defaults to suslov_lab/config.json)")
    common.add_argument("--log-level", help="DEBUG, INFO, WARNING or ERROR")

    parser = argparse.ArgumentParser(prog="suslov-lab", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--server", action="store_true", help="run as MCP tool server over stdio")
    sub = parser.add_subparsers(dest="command")

    run = sub.add_parser("run", parents=[common], help="integrate one method and write the trajectory CSV")
    run.add_argument("--method", help="midpoint, variational, variational-consistent or rk4")
    run.add_argument("--eps", type=float, help="time step")
    run.add_argument("--t-final", type=float, help="final time")
    run.add_argument("--out", help="CSV path")
    run.add_argument("--plots", action="store_true", default=None, help="also write the plotting script")

    compare = sub.add_parser("compare", parents=[common], help="run two methods on the same grid")
    compare.add_argument("--method", help="first method")
    compare.add_argument("--method-b", default="variational", help="second method")
    compare.add_argument("--config-b", help="config file for the second run (defaults to --config)")
    compare.add_argument("--eps", type=float, help="shared time step")
    compare.add_argument("--t-final", type=float, help="shared final time")
    compare.add_argument("--out", default="comparison.csv", help="merged CSV path")
    compare.add_argument("--plots", action="store_true", default=None, help="also write the plotting script")

    study = sub.add_parser("consistency", parents=[common], help="one-step error slopes of a scheme")
    study.add_argument("--method", help="midpoint, variational or variational-consistent")
    study.add_argument("--eps-min", type=float, help="log10 of the smallest step")
    study.add_argument("--eps-max", type=float, help="log10 of the largest step")
    study.add_argument("--eps-count", type=int, help="number of steps in the grid")
    study.add_argument("--workers", type=int, help="worker processes for the sweep")
    study.add_argument("--out", default="consistency.csv", help="samples CSV path; fitted slopes go to <stem>_fits.csv and the report to <stem>.json")
    study.add_argument("--assert", dest="assert_slopes", action="store_true", help="exit 1 when a slope misses")

    plots = sub.add_parser("plot-scripts", parents=[common], help="write matplotlib scripts for existing CSVs")
    plots.add_argument("csv", nargs="+", help="trajectory or comparison CSV files")
    plots.add_argument("--out-dir", help="where to put the scripts (defaults to next to each CSV)")
    plots.add_argument("--labels", nargs=2, default=("a", "b"), help="legend labels for comparison CSVs")

    manifests = sub.add_parser("manifests", parents=[common], help="list the run manifests in a directory")
    manifests.add_argument("directory", nargs="?", default=".", help="where to look for *.manifest.json")
    manifests.add_argument("--latest", action="store_true", help="print only the newest manifest in full")
    return parser


def cmd_run(args) -> int:
    config = build_config(args.config, method=args.method, eps=args.eps, t_final=args.t_final,
                          output=args.out, emit_plots=args.plots)
    runner = TrajectoryRunner(config)
    reporter.write_trajectory_csv(runner.rows(), config.output)
    summary = runner.summary
    summary.output = config.output
    reporter.show(reporter.summary_table(summary))

    outputs = [config.output]
    if config.emit_plots:
        outputs.extend(str(p) for p in reporter.emit_plot_scripts(config.output))
    ManifestManager().create_manifest("run", config.model_dump(mode="json"), outputs, summary.model_dump(mode="json"))
    return EXIT_OK


def cmd_compare(args) -> int:
    first = build_config(args.config, method=args.method, eps=args.eps, t_final=args.t_final)
    second = build_config(args.config_b or args.config, method=args.method_b, eps=args.eps, t_final=args.t_final)
    rows_a, rows_b, summary = compare_runs(first, second)
    reporter.write_comparison_csv(rows_a, rows_b, args.out)
    summary.output = args.out
    reporter.show(reporter.comparison_table(summary))
    console.print(f"lower max energy error: [bold]{summary.lower_energy_error()}[/bold]")

    outputs = [args.out]
    if args.plots or first.emit_plots:
        outputs.extend(str(p) for p in reporter.emit_plot_scripts(args.out, labels=(first.method, second.method)))
    ManifestManager().create_manifest(
        "compare",
        {"first": first.model_dump(mode="json"), "second": second.model_dump(mode="json")},
        outputs,
        summary.model_dump(mode="json"),
    )
    return EXIT_OK


def cmd_consistency(args) -> int:
    config = build_config(args.config, method=args.method, eps_min=args.eps_min, eps_max=args.eps_max,
                          eps_count=args.eps_count, workers=args.workers)
    if config.method == "rk4":
        raise ConfigError("a consistency study needs an implicit scheme, not rk4")
    report = estimate_order(
        config.method, config.inertia_tensor, config.omega0_array, config.eps_grid(), workers=config.workers
    )
    samples_path = reporter.write_samples_csv(report, args.out)
    slopes_path = reporter.write_fits_csv(report, fits_path(args.out))
    report_path = reporter.write_report_json(report, Path(args.out).with_suffix(".json"))
    reporter.show(reporter.consistency_table(report))
    ManifestManager().create_manifest(
        "consistency",
        config.model_dump(mode="json"),
        [samples_path, slopes_path, report_path],
        {"misses": report.misses()},
    )

    misses = report.misses()
    if misses:
        logger.warning("outside tolerance: %s", ", ".join(misses))
        if args.assert_slopes:
            return EXIT_SLOPE_MISS
    return EXIT_OK


def cmd_plot_scripts(args) -> int:
    for csv_path in args.csv:
        for script in reporter.emit_plot_scripts(csv_path, args.out_dir, labels=tuple(args.labels)):
            console.print(f"wrote {script}")
    return EXIT_OK


def cmd_manifests(args) -> int:
    manager = ManifestManager()
    if args.latest:
        path = manager.get_latest_manifest(args.directory)
        if path is None:
            logger.error("no run manifests in %s", args.directory)
            return EXIT_CONFIG
        console.print(f"[bold]{path}[/bold]")
        console.print_json(manager.load_manifest(path).model_dump_json())
        return EXIT_OK
    reporter.show(reporter.manifests_table(manager.list_manifests(args.directory)))
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "consistency": cmd_consistency,
    "plot-scripts": cmd_plot_scripts,
    "manifests": cmd_manifests,
}


async def server_mode():
    """Run as MCP server over stdio"""
    from mcp.server.stdio import stdio_server
    from mcp_agent.server.app_server import create_mcp_server_for_app

    from suslov_lab.server import app

    logger.info("starting Suslov Lab MCP server on stdio")
    mcp_server = create_mcp_server_for_app(app)

    async with stdio_server() as (read_stream, write_stream):
        await mcp_server.run(
            read_stream,
            write_stream,
            mcp_server.create_initialization_options()
        )


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    log_level = getattr(args, "log_level", None)
    setup_logging(log_level or "INFO")

    if args.server:
        asyncio.run(server_mode())
        return EXIT_OK
    if args.command is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        if log_level is None:
            level = build_config(args.config).log_level if args.command != "plot-scripts" else "INFO"
            logging.getLogger().setLevel(level.upper())
        return COMMANDS[args.command](args)
    except ConfigError as e:
        logger.error("configuration error: %s", e)
        return EXIT_CONFIG
    except NonConvergence as e:
        if e.step_index is None:
            logger.error("solver failed: %s", e)
        else:
            logger.error("solver failed at step %s: %s", e.step_index, e)
        return EXIT_SOLVER
    except FitError as e:
        logger.error("slope fit failed: %s", e)
        return EXIT_FIT
    except SuslovError as e:
        logger.error("invalid input: %s", e)
        return EXIT_CONFIG
    except OSError as e:
        logger.error("i/o error: %s", e)
        return EXIT_CONFIG


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\n\nInterrupted by user. Exiting...")
        sys.exit(130)
