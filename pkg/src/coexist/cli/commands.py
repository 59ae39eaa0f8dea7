import json
import sys
from contextlib import contextmanager
from pathlib import Path

import click
from click import Choice
from click import Path as Path_
from click import argument
from click import group
from click import option
from rich.text import Text

from coexist._kpis.common.core import make_failures_msg
from coexist._kpis.common.exceptions import ModelInputError
from coexist._kpis.common.exceptions import NumericalError
from coexist._kpis.joint import coverage_limit
from coexist._kpis.model import validate_scenario
from coexist._kpis.montecarlo import SimConfig
from coexist._kpis.profiles import REFERENCE_ASSUMPTIONS
from coexist._kpis.profiles import reference_scenario
from coexist.cli import console
from coexist.cli.parsing import *
from coexist.cli.pprint import *
from coexist.cli.report import *
from coexist.cli.runner import *

__all__ = ["run", "degradation", "evaluate_", "reference", "validate", "read", "limit"]


CONTEXT_SETTINGS = {"help_option_names": ["-h", "--help"]}

DEFAULT_TRIALS = 100_000


@contextmanager
def exit_on_error():
    """Print errors, exiting with 1 for bad input and 2 for numerical failures"""
    try:
        yield
    except (DataParsingError, ModelInputError) as e:
        print_error(e)
        sys.exit(1)
    except NumericalError as e:
        print_error(e)
        sys.exit(2)


def _load(scenario):
    if scenario:
        return load_scenario(scenario)
    else:
        return ScenarioFile(reference_scenario(), REFERENCE_ASSUMPTIONS)


def _sim_config(mode, trials, seed, overlap, jobs=1) -> SimConfig:
    if trials is not None and mode == "analytic":
        print_warning("trials ignored in analytic mode")

    return SimConfig(
        trials=trials or DEFAULT_TRIALS, seed=seed, overlap=overlap, jobs=jobs
    )


def _print_degradation(report, peaks):
    print_rule("Degradation")
    names = {"p_sc": "Success probability", "lifetime": "Battery lifetime"}
    for kpi, peak in peaks.items():
        if peak is None:
            console.print(f"{names[kpi]}: no sweep point above the floor")
        else:
            value, pct = peak
            console.print(
                f"{names[kpi]} degradation peaks at {pct:.1f}% (sweep value {value:g})"
            )


def _saved(path):
    console.print(f"Results saved to {path}")


scenario_option = option(
    "-s",
    "--scenario",
    type=Path_(exists=True, dir_okay=False),
    help="JSON scenario file. The built-in reference scenario is used when omitted.",
)
class_option = option(
    "-c",
    "--class",
    "class_",
    default="0",
    show_default=True,
    help="Reference class, by name or index.",
    metavar="<class>",
)
mode_option = option(
    "-m",
    "--mode",
    type=Choice(MODES),
    default="analytic",
    show_default=True,
    help="Closed forms, Monte Carlo simulation or both.",
)
trials_option = option(
    "-n",
    "--trials",
    type=int,
    default=None,
    help=f"Monte Carlo snapshots per estimate.  [default: {DEFAULT_TRIALS}]",
)
seed_option = option(
    "--seed", type=int, default=42, show_default=True, help="Monte Carlo seed."
)
mrc_option = option(
    "--mrc",
    metavar="D1,D2,..[;P1,P2,..]",
    help=(
        "AP distances in m and availabilities for joint reception. The "
        "geometry is rescaled so the first AP sits at the link distance."
    ),
)
overlap_option = option(
    "--overlap",
    type=Choice(("sampled", "mean")),
    default="sampled",
    show_default=True,
    help="Weigh simulated interferers by their actual or their expected overlap.",
)
distance_option = option(
    "-d",
    "--distance",
    type=float,
    default=50.0,
    show_default=True,
    help="Link distance in m, for sweeps over anything else.",
)
jobs_option = option(
    "-j", "--jobs", type=int, default=1, show_default=True, help="Worker threads."
)
json_option = option(
    "--json", "as_json", is_flag=True, help="Write tables as JSON instead of CSV."
)
floor_option = option(
    "--floor",
    type=float,
    default=0.01,
    show_default=True,
    help="Smallest baseline success probability compared for degradation.",
)


@group(context_settings=CONTEXT_SETTINGS)
def main():
    """Key performance indicators of coexisting grant-free IoT technologies.

    KPIs of a reference device (success probability, transmissions,
    delay, energy and battery lifetime) can be swept over distance, density,
    threshold or number of APs via the run command, both in closed form and
    by Monte Carlo simulation. Tables of a scenario and its single-technology
    baseline are compared via the degradation command.
    """


@main.command()
@scenario_option
@option(
    "--sweep",
    default="distance:10:500:100",
    show_default=True,
    help=(
        "Variable (distance, device_density, sinr_threshold in dB or ap_count) "
        "and its grid."
    ),
    metavar="VAR:MIN:MAX:STEPS[:log]",
)
@mode_option
@trials_option
@seed_option
@mrc_option
@option("-o", "--out", type=Path_(dir_okay=False), help="Write the table to OUT.")
@json_option
@class_option
@distance_option
@jobs_option
@overlap_option
@option(
    "--compare",
    type=Path_(exists=True, dir_okay=False),
    help="Table of the single-technology baseline to compute degradation against.",
)
@floor_option
def run(
    scenario,
    sweep,
    mode,
    trials,
    seed,
    mrc,
    out,
    as_json,
    class_,
    distance,
    jobs,
    overlap,
    compare,
    floor,
):
    """Evaluate KPIs across a sweep and tabulate them.

    Every sweep point becomes one row. Rows are written to OUT as CSV headed
    by '#' metadata lines (or as JSON), and printed when OUT is not given.
    The output only depends on the scenario, the options and the seed.
    """
    with exit_on_error():
        s, assumptions = _load(scenario)
        j = resolve_class(s, class_)
        spec = parse_sweep(sweep)
        jr = parse_mrc(mrc) if mrc else None
        sim = _sim_config(mode, trials, seed, overlap)
        baseline = read_table(compare)[1] if compare else None

        df, failures = run_sweep(spec, s, j, mode, sim, jr, distance, jobs)

    if failures:
        print_warning(make_failures_msg(failures))

    meta = run_metadata(
        SWEEP_UNITS[spec.variable],
        scenario=scenario or "reference",
        reference_class=s.classes[j].name,
        mode=mode,
        sweep=spec,
        distance=distance if spec.variable != "distance" else "swept",
        seed=seed,
        trials=sim.trials if mode != "analytic" else "n/a",
        overlap=overlap,
        mrc=mrc or "none",
    )

    if out:
        write_table(df, meta, out, as_json)
        _saved(out)
    else:
        print_table(df, meta)

    if baseline is not None:
        with exit_on_error():
            report = degradation_report(baseline, df, floor)

        if out:
            path = Path(out)
            path = path.with_name(f"{path.stem}-degradation{path.suffix}")
            write_table(report, meta, path, as_json)
            _saved(path)
        else:
            print_table(report)

        _print_degradation(report, degradation_peaks(report))


@main.command()
@argument("single", type=Path_(exists=True, dir_okay=False))
@argument("multi", type=Path_(exists=True, dir_okay=False))
@argument("out", type=Path_(dir_okay=False), required=False, metavar="OUT")
@floor_option
@json_option
def degradation(single, multi, out, floor, as_json):
    """Compare a scenario's table MULTI to its baseline table SINGLE.

    The degradation 100·(1 - multi/single) of the success probability and of
    the battery lifetime is computed at every sweep point, and its peak is
    reported. Both tables must share one sweep grid.
    """
    with exit_on_error():
        single_meta, single_df = read_table(single)
        _, multi_df = read_table(multi)
        report = degradation_report(single_df, multi_df, floor)

    if out:
        meta = {
            key: value
            for key, value in single_meta.items()
            if key in ("tool", "git", "sweep", "sweep_value_unit")
        }
        meta["floor"] = str(floor)
        write_table(report, meta, out, as_json)
        _saved(out)
    else:
        print_table(report)

    _print_degradation(report, degradation_peaks(report))


@main.command("evaluate")
@scenario_option
@class_option
@distance_option
@mode_option
@trials_option
@seed_option
@mrc_option
@overlap_option
@jobs_option
def evaluate_(scenario, class_, distance, mode, trials, seed, mrc, overlap, jobs):
    """Print the KPIs of a device at one distance."""
    with exit_on_error():
        s, _ = _load(scenario)
        j = resolve_class(s, class_)
        jr = parse_mrc(mrc) if mrc else None
        sim = _sim_config(mode, trials, seed, overlap, jobs)

        results = evaluate(j, distance, s, mode, sim, jr)

    for title, result in results.items():
        print_rule(f"{title} at {distance:g} m")
        console.print(result)
        console.print("")


@main.command()
@argument("out", type=Path_(dir_okay=False), required=False, metavar="OUT")
@option(
    "--baseline",
    is_flag=True,
    help="Leave the interfering technology out.",
)
def reference(out, baseline):
    """Write the reference scenario file to OUT (or print it).

    The reference scenario places LoRa-like devices alongside a
    frequency-hopping technology; its baseline has LoRa-like devices only.
    Values not taken from measurements are listed under "assumptions".
    """
    s = reference_scenario(interferer=not baseline)

    if out:
        with open(out, "w") as f:
            dump_scenario(s, f, REFERENCE_ASSUMPTIONS)
        _saved(out)
    else:
        click.echo(json.dumps(scenario_to_dict(s, REFERENCE_ASSUMPTIONS), indent=2))


@main.command()
@argument("scenario", type=Path_(exists=True, dir_okay=False))
def validate(scenario):
    """List every broken invariant of a SCENARIO file."""
    with exit_on_error():
        s, assumptions = load_scenario(scenario, validate=False)

    violations = validate_scenario(s)
    if violations:
        for violation in violations:
            print_error(violation)
        sys.exit(1)

    console.print(Text("Scenario is valid", style="green"))
    if assumptions:
        print_warning("Assumptions:\n" + "\n".join(f"  • {a}" for a in assumptions))


@main.command()
@argument("table", type=Path_(exists=True, dir_okay=False))
def read(table):
    """Print a saved TABLE."""
    with exit_on_error():
        meta, df = read_table(table)

    meta.pop("columns", None)
    print_table(df, meta)


@main.command()
@scenario_option
@class_option
@option(
    "-t",
    "--threshold",
    type=float,
    default=0.05,
    show_default=True,
    help="Probability below which the device counts as out of coverage.",
)
@mrc_option
def limit(scenario, class_, threshold, mrc):
    """Find the distance beyond which a device is out of coverage.

    That is the distance where neither retransmissions nor (with --mrc) joint
    reception keep the success probability above the threshold.
    """
    with exit_on_error():
        s, _ = _load(scenario)
        j = resolve_class(s, class_)
        jr = parse_mrc(mrc) if mrc else None

        distance = coverage_limit(j, s, threshold, jr)

    console.print(f"Coverage limit of '{s.classes[j].name}': {distance:.1f} m")
