"""MCP tool server exposing the Suslov lab using mcp-agent SDK"""
import json
from typing import List, Optional

import numpy as np
from mcp_agent.app import MCPApp
from mcp_agent.core.context import Context

from suslov_lab.config import build_config
from suslov_lab.errors import SuslovError
from suslov_lab.lab import runner
from suslov_lab.lab.consistency import estimate_order
from suslov_lab.lab.manifest import ManifestManager
from suslov_lab.lab.reporter import Reporter
from suslov_lab.models.state import InertiaTensor
from suslov_lab.numerics.continuous import reduced_energy, suslov_multiplier, suslov_rhs
from suslov_lab.numerics.dreps import inconsistency_offset

# Initialize the MCP app
app = MCPApp(
    name="suslov-lab",
    description="Structure-preserving integrators for the Suslov problem on SO(3)"
)


def _error(e: Exception) -> str:
    return json.dumps({"error": f"{type(e).__name__}: {e}"})


@app.async_tool()
async def run_trajectory(
    method: Optional[str] = None,
    eps: Optional[float] = None,
    t_final: Optional[float] = None,
    output: Optional[str] = None,
    app_ctx: Context | None = None,
) -> str:
    """
    Integrate the Suslov problem from the configured initial state.

    Args:
        method: midpoint, variational, variational-consistent or rk4. Defaults to config.json.
        eps: Time step.
        t_final: Final time.
        output: CSV path. When given, the trajectory and its manifest are written.

    Returns:
        JSON string with the run summary
    """
    try:
        config = build_config(method=method, eps=eps, t_final=t_final, output=output)
        rows, summary = runner.run_trajectory(config)
        result = summary.model_dump(mode="json")
        if output:
            Reporter().write_trajectory_csv(rows, output)
            result["output"] = output
            result["manifest"] = ManifestManager().create_manifest(
                "run", config.model_dump(mode="json"), [output], result
            )
        return json.dumps(result, indent=2)
    except SuslovError as e:
        return _error(e)


@app.async_tool()
async def compare_methods(
    method_a: str = "midpoint",
    method_b: str = "variational",
    eps: Optional[float] = None,
    t_final: Optional[float] = None,
    output: Optional[str] = None,
    app_ctx: Context | None = None,
) -> str:
    """
    Run two methods on the same time grid and compare their diagnostics.

    Args:
        method_a: First method.
        method_b: Second method.
        eps: Shared time step.
        t_final: Shared final time.
        output: Merged CSV path, optional.

    Returns:
        JSON string with both summaries and their disagreement
    """
    try:
        first = build_config(method=method_a, eps=eps, t_final=t_final)
        second = build_config(method=method_b, eps=eps, t_final=t_final)
        rows_a, rows_b, summary = runner.compare_runs(first, second)
        result = summary.model_dump(mode="json")
        result["lower_energy_error"] = summary.lower_energy_error()
        if output:
            Reporter().write_comparison_csv(rows_a, rows_b, output)
            result["output"] = output
        return json.dumps(result, indent=2)
    except SuslovError as e:
        return _error(e)


@app.async_tool()
async def consistency_study(
    scheme: str = "midpoint",
    eps_min: Optional[float] = None,
    eps_max: Optional[float] = None,
    eps_count: Optional[int] = None,
    app_ctx: Context | None = None,
) -> str:
    """
    Measure one-step error slopes of a scheme over a log-spaced step grid.

    Args:
        scheme: midpoint, variational or variational-consistent.
        eps_min: log10 of the smallest step.
        eps_max: log10 of the largest step.
        eps_count: Number of steps in the grid (at least 5).

    Returns:
        JSON string with the consistency report and the quantities that missed
    """
    try:
        config = build_config(eps_min=eps_min, eps_max=eps_max, eps_count=eps_count)
        report = estimate_order(scheme, config.inertia_tensor, config.omega0_array, config.eps_grid())
        result = report.model_dump(mode="json")
        result["misses"] = report.misses()
        return json.dumps(result, indent=2)
    except SuslovError as e:
        return _error(e)


@app.async_tool()
async def evaluate_point(
    omega: List[float],
    inertia: Optional[List[float]] = None,
    app_ctx: Context | None = None,
) -> str:
    """
    Evaluate the continuous Suslov quantities at one angular velocity.

    Args:
        omega: Body angular velocity (w1, w2, 0).
        inertia: 9 row-major inertia entries. Defaults to config.json.

    Returns:
        JSON string with the vector field, multiplier, energy and offset O0
    """
    try:
        rows = inertia if inertia is not None else build_config().inertia
        tensor = InertiaTensor.from_rows(rows)
        w = np.asarray(omega, dtype=float)
        result = {
            "omega": w.tolist(),
            "rhs": suslov_rhs(tensor, w).tolist(),
            "multiplier": suslov_multiplier(tensor, w),
            "energy": reduced_energy(tensor, w),
            "offset": inconsistency_offset(tensor, w),
        }
        return json.dumps(result, indent=2)
    except SuslovError as e:
        return _error(e)


@app.async_tool()
async def list_manifests(directory: str = ".", app_ctx: Context | None = None) -> str:
    """
    List run manifests found in a directory.

    Args:
        directory: Where to look for *.manifest.json files.

    Returns:
        JSON string with the manifests, newest first
    """
    manifests = ManifestManager().list_manifests(directory)
    if not manifests:
        return json.dumps({"message": "No run manifests found"})
    return json.dumps({"total_manifests": len(manifests), "manifests": manifests}, indent=2)


@app.async_tool()
async def latest_manifest(directory: str = ".", app_ctx: Context | None = None) -> str:
    """
    Load the newest run manifest in a directory.

    Args:
        directory: Where to look for *.manifest.json files.

    Returns:
        JSON string with the manifest path and its full contents
    """
    manager = ManifestManager()
    path = manager.get_latest_manifest(directory)
    if path is None:
        return json.dumps({"message": "No run manifests found"})
    manifest = manager.load_manifest(path)
    return json.dumps({"path": path, "manifest": manifest.model_dump(mode="json")}, indent=2)
