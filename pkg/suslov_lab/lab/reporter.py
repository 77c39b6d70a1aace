"""CSV output, console tables and plotting scripts for runs and studies"""
import csv
import json
import logging
from pathlib import Path
from typing import Iterable

from rich.console import Console
from rich.table import Table

from suslov_lab.errors import ReportError
from suslov_lab.models.reports import ComparisonSummary, ConsistencyReport, ErrorSample, RunSummary, TrajectoryRow

logger = logging.getLogger(__name__)

FLOAT_FORMAT = ".17g"
COMPARISON_PREFIXES = ("a_", "b_")
FIT_COLUMNS = ("quantity", "kind", "value", "expected", "residual", "status")


def _fmt(value: float) -> str:
    return format(value, FLOAT_FORMAT)


def _sci(value: float) -> str:
    return f"{value:.3e}"


def _writer(f):
    return csv.writer(f, lineterminator="\n")


def _prepare(path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def comparison_columns() -> list[str]:
    columns = ["t"]
    for prefix in COMPARISON_PREFIXES:
        columns.extend(prefix + name for name in TrajectoryRow.COLUMNS[1:])
    return columns


def fits_path(samples_path: str | Path) -> Path:
    """<stem>_fits.csv next to the samples CSV"""
    samples_path = Path(samples_path)
    return samples_path.with_name(f"{samples_path.stem}_fits.csv")


_RUN_SCRIPT = '''"""Six panels for the trajectory in {csv_name}"""
import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt({csv_path!r}, delimiter=",", names=True)
t = data["t"]

fig, axes = plt.subplots(3, 2, figsize=(10, 10))
axes = axes.ravel()
axes[0].plot(t, data["omega1"])
axes[0].set_title("(a) omega1")
axes[1].plot(t, data["omega2"])
axes[1].set_title("(b) omega2")
axes[2].plot(t, data["lambda"])
axes[2].set_title("(c) lambda")
axes[3].plot(t, data["reduced_residual"])
axes[3].set_title("(d) reduced constraint |<a, w>|")
axes[4].semilogy(t, np.maximum(data["unreduced_residual"], 1e-300))
axes[4].set_title("(e) unreduced constraint residual")
axes[5].plot(t, data["energy"] - data["energy"][0])
axes[5].set_title("(f) E - E0")
for ax in axes:
    ax.set_xlabel("t")
    ax.grid(True)
fig.tight_layout()
fig.savefig({figure_path!r}, bbox_inches="tight")
'''

_COMPARE_SCRIPT = '''"""Five panels comparing the two runs in {csv_name}"""
import matplotlib.pyplot as plt
import numpy as np

data = np.genfromtxt({csv_path!r}, delimiter=",", names=True)
t = data["t"]
labels = {labels!r}

fig, axes = plt.subplots(5, 1, figsize=(8, 14), sharex=True)
for prefix, label in zip(("a_", "b_"), labels):
    axes[0].plot(t, data[prefix + "omega1"], label=label)
    axes[1].plot(t, data[prefix + "omega2"], label=label)
    axes[2].plot(t, data[prefix + "lambda"], label=label)
    axes[3].plot(t, data[prefix + "energy"] - data[prefix + "energy"][0], label=label)
    axes[4].semilogy(t, np.maximum(data[prefix + "unreduced_residual"], 1e-300), label=label)
titles = ("(a) omega1", "(b) omega2", "(c) lambda", "(d) E - E0", "(e) unreduced constraint residual")
for ax, title in zip(axes, titles):
    ax.set_title(title)
    ax.grid(True)
    ax.legend()
axes[-1].set_xlabel("t")
fig.tight_layout()
fig.savefig({figure_path!r}, bbox_inches="tight")
'''


def _read_header(csv_path: Path) -> tuple[list[str], int]:
    if not csv_path.exists():
        raise ReportError(f"CSV not found: {csv_path}")
    with open(csv_path, "r", newline="") as f:
        reader = csv.reader(f)
        header = next(reader, [])
        n_rows = sum(1 for _ in reader)
    return header, n_rows


class Reporter:
    """Writes run and study outputs and renders their summaries on a rich console"""

    def __init__(self, console: Console | None = None):
        self.console = console or Console()

    # CSV and JSON

    def write_trajectory_csv(self, rows: Iterable[TrajectoryRow], path: str | Path) -> int:
        """Stream rows to ``path``; returns the number of data rows written"""
        path = _prepare(path)
        count = 0
        with open(path, "w", newline="") as f:
            writer = _writer(f)
            writer.writerow(TrajectoryRow.COLUMNS)
            for row in rows:
                writer.writerow([_fmt(v) for v in row.values()])
                count += 1
        logger.info("wrote %d rows to %s", count, path)
        return count

    def write_comparison_csv(
        self, rows_a: list[TrajectoryRow], rows_b: list[TrajectoryRow], path: str | Path
    ) -> int:
        """Merged time series: t, then every other column of run a and of run b"""
        if len(rows_a) != len(rows_b):
            raise ReportError(f"runs have different lengths ({len(rows_a)} and {len(rows_b)})")
        path = _prepare(path)
        with open(path, "w", newline="") as f:
            writer = _writer(f)
            writer.writerow(comparison_columns())
            for a, b in zip(rows_a, rows_b):
                writer.writerow([_fmt(v) for v in (a.t, *a.values()[1:], *b.values()[1:])])
        logger.info("wrote %d merged rows to %s", len(rows_a), path)
        return len(rows_a)

    def write_samples_csv(self, report: ConsistencyReport, path: str | Path) -> Path:
        """Raw (eps, err_*) samples of a consistency study"""
        path = _prepare(path)
        with open(path, "w", newline="") as f:
            writer = _writer(f)
            writer.writerow(("eps", *ErrorSample.QUANTITIES))
            for sample in report.samples:
                writer.writerow([_fmt(sample.eps), *(_fmt(sample.value(q)) for q in ErrorSample.QUANTITIES)])
        return path

    def write_fits_csv(self, report: ConsistencyReport, path: str | Path) -> Path:
        """One row per fitted slope, plus the lambda offset when the scheme has one"""
        path = _prepare(path)
        with open(path, "w", newline="") as f:
            writer = _writer(f)
            writer.writerow(FIT_COLUMNS)
            for fit in report.fits.values():
                expected = "" if fit.expected_slope is None else _fmt(fit.expected_slope)
                status = "miss" if fit.misses(report.slope_tolerance) else "ok"
                writer.writerow([fit.quantity, "slope", _fmt(fit.slope), expected, _fmt(fit.residual), status])
            offset = report.offset
            if offset is not None:
                reference = "" if offset.reference is None else _fmt(offset.reference)
                gap = offset.relative_gap
                status = "miss" if gap is not None and gap > report.offset_tolerance else "ok"
                writer.writerow([offset.quantity, "offset", _fmt(offset.offset), reference, _fmt(offset.residual), status])
        return path

    def write_report_json(self, report: ConsistencyReport, path: str | Path) -> Path:
        path = _prepare(path)
        with open(path, "w") as f:
            json.dump(report.model_dump(mode="json"), f, indent=2)
        return path

    # Console tables

    def summary_table(self, summary: RunSummary) -> Table:
        table = Table(title=f"{summary.method} run, eps = {summary.eps:g}, t_final = {summary.t_final:g}")
        table.add_column("quantity")
        table.add_column("value", justify="right")
        table.add_row("rows", str(summary.rows))
        table.add_row("E0", f"{summary.energy0:.15g}")
        table.add_row("max |E - E0|", _sci(summary.max_energy_error))
        table.add_row("max reduced residual", _sci(summary.max_reduced_residual))
        table.add_row("max unreduced residual", _sci(summary.max_unreduced_residual))
        table.add_row("max orthonormality defect", _sci(summary.max_orthonormality_defect))
        table.add_row("max |lam_k - lam(w_k)|", _sci(summary.max_lambda_discrepancy))
        if summary.max_newton_iters:
            table.add_row("max Newton iterations", str(summary.max_newton_iters))
            table.add_row("max Jacobian condition", _sci(summary.max_jacobian_condition))
        table.add_row("execution time (s)", f"{summary.execution_time_seconds:.2f}")
        return table

    def comparison_table(self, summary: ComparisonSummary) -> Table:
        a, b = summary.first, summary.second
        table = Table(title=f"{a.method} vs {b.method}, eps = {a.eps:g}, t_final = {a.t_final:g}")
        table.add_column("quantity")
        table.add_column(a.method, justify="right")
        table.add_column(b.method, justify="right")
        table.add_row("max |E - E0|", _sci(a.max_energy_error), _sci(b.max_energy_error))
        table.add_row("max reduced residual", _sci(a.max_reduced_residual), _sci(b.max_reduced_residual))
        table.add_row("max unreduced residual", _sci(a.max_unreduced_residual), _sci(b.max_unreduced_residual))
        table.add_row(
            "max orthonormality defect", _sci(a.max_orthonormality_defect), _sci(b.max_orthonormality_defect)
        )
        table.add_row("max |lam_k - lam(w_k)|", _sci(a.max_lambda_discrepancy), _sci(b.max_lambda_discrepancy))
        table.add_row("max |w_a - w_b|", _sci(summary.max_omega_difference), "")
        table.add_row("max |lam_a - lam_b|", _sci(summary.max_lambda_difference), "")
        return table

    def consistency_table(self, report: ConsistencyReport) -> Table:
        table = Table(title=f"one-step consistency of {report.scheme}")
        table.add_column("quantity")
        table.add_column("slope", justify="right")
        table.add_column("expected", justify="right")
        table.add_column("fit residual", justify="right")
        table.add_column("status")
        for fit in report.fits.values():
            expected = "-" if fit.expected_slope is None else f"{fit.expected_slope:.1f}"
            status = "[red]miss[/red]" if fit.misses(report.slope_tolerance) else "ok"
            table.add_row(fit.quantity, f"{fit.slope:.3f}", expected, _sci(fit.residual), status)
        if report.offset is not None:
            gap = report.offset.relative_gap
            status = "ok" if gap is None or gap <= report.offset_tolerance else "[red]miss[/red]"
            reference = "-" if report.offset.reference is None else _sci(report.offset.reference)
            table.add_row("lambda offset", _sci(report.offset.offset), reference, _sci(report.offset.residual), status)
        return table

    def manifests_table(self, manifests: list[dict]) -> Table:
        table = Table(title=f"{len(manifests)} run manifests")
        table.add_column("created")
        table.add_column("command")
        table.add_column("outputs", justify="right")
        table.add_column("path")
        for m in manifests:
            table.add_row(m["datetime"], m["command"], str(m["num_outputs"]), m["path"])
        return table

    def show(self, table: Table):
        self.console.print(table)

    # Plotting scripts

    def emit_plot_scripts(
        self,
        csv_path: str | Path,
        out_dir: str | Path | None = None,
        labels: tuple[str, str] = ("a", "b"),
    ) -> list[Path]:
        """Write a matplotlib script for a run CSV (six panels) or a comparison CSV (five panels).

        Scripts address columns by header name only. Raises ReportError without
        writing anything when the CSV is missing, empty or unrecognised.
        """
        csv_path = Path(csv_path)
        header, n_rows = _read_header(csv_path)
        if n_rows == 0:
            raise ReportError(f"{csv_path} holds no trajectory rows")

        if list(header) == list(TrajectoryRow.COLUMNS):
            template, suffix = _RUN_SCRIPT, "six_panel"
        elif list(header) == comparison_columns():
            template, suffix = _COMPARE_SCRIPT, "five_panel"
        else:
            raise ReportError(f"{csv_path} has neither a trajectory nor a comparison header")

        out_dir = Path(out_dir) if out_dir is not None else csv_path.parent
        out_dir.mkdir(parents=True, exist_ok=True)
        script_path = out_dir / f"{csv_path.stem}_{suffix}.py"
        figure_path = str(out_dir / f"{csv_path.stem}_{suffix}.png")
        script = template.format(
            csv_name=csv_path.name,
            csv_path=str(csv_path),
            figure_path=figure_path,
            labels=list(labels),
        )
        script_path.write_text(script)
        logger.info("wrote plot script %s", script_path)
        return [script_path]
