"""Methods used to evaluate scenarios through the _kpis subpackage."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict
from typing import List
from typing import Optional
from typing import Tuple

import pandas as pd
from rich.progress import BarColumn
from rich.progress import Progress
from rich.progress import TextColumn
from rich.progress import TimeRemainingColumn

from coexist._kpis.analytic import evaluate_kpis
from coexist._kpis.common.core import CliContext
from coexist._kpis.common.core import advance_task
from coexist._kpis.common.result import KpiResult
from coexist._kpis.joint import JointReceptionConfig
from coexist._kpis.joint import mrc_kpis
from coexist._kpis.model import Scenario
from coexist._kpis.montecarlo import SimConfig
from coexist._kpis.montecarlo import simulate_kpis
from coexist._kpis.units import db_to_linear
from coexist.cli import console
from coexist.cli.parsing import SweepSpec
from coexist.cli.report import COLUMN_UNITS

__all__ = [
    "MODES",
    "SWEEP_UNITS",
    "SweepPoint",
    "sweep_points",
    "run_sweep",
    "evaluate",
]


MODES = ("analytic", "mc", "both")

SWEEP_UNITS = {
    "distance": "m",
    "device_density": "devices/m²",
    "sinr_threshold": "dB",
    "ap_count": "APs",
}

columns = (
    TextColumn("[progress.description]{task.description}"),
    BarColumn(bar_width=54),  # i.e. progress is roughly 80 cols wide overall
    TextColumn("[progress.percentage]{task.percentage:>3.0f}%"),
    TimeRemainingColumn(),
)


@dataclass(frozen=True)
class SweepPoint:
    value: float
    scenario: Scenario
    distance: float
    jr: Optional[JointReceptionConfig]


def sweep_points(
    spec: SweepSpec,
    s: Scenario,
    j: int,
    distance: float,
    jr: Optional[JointReceptionConfig] = None,
) -> List[SweepPoint]:
    """Scenario, distance and joint reception config at every sweep value

    Sweeps other than ``distance`` hold the link at ``distance``. A
    ``device_density`` sweep sets the density of every class, and an
    ``ap_count`` sweep places the nearest APs of the reference class' AP
    deployment, listening with the first availability of ``jr`` (or always).
    """
    points = []
    for value in spec.values():
        value = float(value)
        point_s, d, point_jr = s, distance, jr

        if spec.variable == "distance":
            d = value
        elif spec.variable == "device_density":
            point_s = s.with_device_density(value)
        elif spec.variable == "sinr_threshold":
            point_s = s.with_sinr_threshold(float(db_to_linear(value)))
        else:
            availability = jr.availabilities[0] if jr else 1.0
            point_jr = JointReceptionConfig.from_ap_density(
                int(value), s.classes[j].ap_density, d, availability
            )

        if point_jr is not None:
            point_jr = point_jr.scaled_to(d)

        points.append(SweepPoint(value, point_s, d, point_jr))

    return points


def _evaluate_point(
    point: SweepPoint, j: int, mode: str, sim: SimConfig, ctx: Optional[CliContext]
) -> Tuple[Dict[str, float], List[str]]:
    s, d = point.scenario, point.distance
    row = {"sweep_value": point.value}
    failures = []

    if mode in ("analytic", "both"):
        result = evaluate_kpis(j, d, s)
        row["p_sc_analytic"] = result.success_probability
        row["p_delivery"] = result.delivery_probability
        row["n_tx_mean"] = result.mean_transmissions
        row["delay_s"] = result.expected_delay
        row["energy_J"] = result.energy_per_report
        row["lifetime_s"] = result.battery_lifetime

    if mode in ("mc", "both"):
        result = simulate_kpis(j, d, s, sim, ctx=ctx)
        row["p_sc_mc"] = result.success_probability
        row["mc_ci"] = result.ci_halfwidth["success_probability"]
        row["p_delivery_mc"] = result.delivery_probability
        row["n_tx_mean_mc"] = result.mean_transmissions
        row["delay_s_mc"] = result.expected_delay
        row["energy_J_mc"] = result.energy_per_report
        row["lifetime_s_mc"] = result.battery_lifetime
        failures = result.failures

    if point.jr is not None:
        result = mrc_kpis(point.jr, j, d, s)
        row["p_sc_mrc"] = result.success_probability
        row["n_tx_mrc"] = result.mean_transmissions
        row["lifetime_mrc_s"] = result.battery_lifetime

    return row, failures


def run_sweep(
    spec: SweepSpec,
    s: Scenario,
    j: int,
    mode: str,
    sim: SimConfig = SimConfig(),
    jr: Optional[JointReceptionConfig] = None,
    distance: float = 50.0,
    jobs: int = 1,
) -> Tuple[pd.DataFrame, List[str]]:
    """Evaluate KPIs at every point of a sweep

    Points are evaluated by ``jobs`` worker threads; rows always come out in
    sweep order.

    Returns
    -------
    table : ``DataFrame``
        One row per sweep value, with the columns of ``mode``
    failures : ``List[str]``
        Monte Carlo recommendations not met at any point
    """
    points = sweep_points(spec, s, j, distance, jr)

    with Progress(*columns, console=console, transient=True) as progress:
        task = progress.add_task(f"{spec.variable} sweep", total=len(points))
        ctx = CliContext(progress, task)

        def work(point):
            outcome = _evaluate_point(point, j, mode, sim, ctx)
            advance_task(ctx)
            return outcome

        with ThreadPoolExecutor(max_workers=jobs) as executor:
            outcomes = list(executor.map(work, points))

    rows = [row for row, _ in outcomes]
    failures = sorted(
        {failure for _, point_failures in outcomes for failure in point_failures}
    )

    order = ["sweep_value"] + [column for column in COLUMN_UNITS if column in rows[0]]
    df = pd.DataFrame(rows, columns=order)

    return df, failures


def evaluate(
    j: int,
    d: float,
    s: Scenario,
    mode: str,
    sim: SimConfig = SimConfig(),
    jr: Optional[JointReceptionConfig] = None,
) -> Dict[str, KpiResult]:
    """KPIs at one distance, keyed by how they were obtained"""
    results = {}

    if mode in ("analytic", "both"):
        results["Analytic"] = evaluate_kpis(j, d, s)

    if mode in ("mc", "both"):
        with Progress(*columns, console=console, transient=True) as progress:
            task = progress.add_task("simulating", start=False)
            results["Monte Carlo"] = simulate_kpis(
                j, d, s, sim, ctx=CliContext(progress, task)
            )

    if jr is not None:
        results[f"Joint reception, {jr.naps} APs"] = mrc_kpis(jr, j, d, s)

    return results
