import json
from io import StringIO
from tempfile import NamedTemporaryFile

import pandas as pd
from click.testing import CliRunner
from hypothesis import HealthCheck
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.stateful import Bundle
from hypothesis.stateful import RuleBasedStateMachine
from hypothesis.stateful import rule
from pytest import approx
from pytest import fixture
from pytest import mark
from rich.console import Console

from coexist._kpis.common.exceptions import QuadratureError
from coexist.cli import commands
from coexist.cli import console
from coexist.cli.parsing import load_scenario
from coexist.cli.parsing import scenario_to_dict
from coexist.cli.report import read_table
from coexist.cli.report import write_table
from coexist.profiles import REFERENCE_ASSUMPTIONS
from coexist.profiles import reference_scenario

SWEEP = "distance:10:100:4"


class CliStateMachine(RuleBasedStateMachine):
    def __init__(self):
        super(CliStateMachine, self).__init__()
        self.runner = CliRunner()

        console.print = noop

    scenarios = Bundle("scenarios")
    tables = Bundle("tables")

    @rule()
    def main(self):
        result = self.runner.invoke(commands.main, [])
        assert_success(result)

    @rule(target=scenarios, baseline=st.booleans())
    def reference(self, baseline):
        out = NamedTemporaryFile(suffix=".json", delete=False)

        args = [out.name] + (["--baseline"] if baseline else [])
        result = self.runner.invoke(commands.reference, args)
        assert_success(result)

        return out.name

    @rule(path=scenarios)
    def validate(self, path):
        result = self.runner.invoke(commands.validate, [path])
        assert_success(result)

    @rule(target=tables, path=scenarios, as_json=st.booleans())
    def run(self, path, as_json):
        out = NamedTemporaryFile(suffix=".json" if as_json else ".csv", delete=False)

        args = ["-s", path, "--sweep", SWEEP, "-o", out.name]
        if as_json:
            args.append("--json")
        result = self.runner.invoke(commands.run, args)
        assert_success(result)

        return out.name

    @rule(path=tables)
    def read(self, path):
        result = self.runner.invoke(commands.read, [path])
        assert_success(result)

    @rule(single=tables, multi=tables)
    def degradation(self, single, multi):
        result = self.runner.invoke(commands.degradation, [single, multi])
        assert_success(result)


TestCliStateMachine = CliStateMachine.TestCase  # top-level TestCase picked up by pytest
TestCliStateMachine.settings = settings(
    suppress_health_check=[HealthCheck.data_too_large, HealthCheck.too_slow],
    deadline=None,
)


def noop(*args, **kwargs):
    return None


def assert_success(result):
    if result.exception and not isinstance(result.exception, SystemExit):
        raise result.exception
    assert result.exit_code == 0, result.output


# ------------------------------------------------------------------------------
# Commands


@fixture
def printed(monkeypatch):
    """Text the CLI prints through its console"""
    buffer = StringIO()
    recorder = Console(file=buffer, width=200)

    def record(*objects, **kwargs):
        recorder.print(*objects)

    monkeypatch.setattr(console, "print", record)

    return buffer


@fixture
def runner():
    return CliRunner()


@fixture
def sparse_scenario(tmp_path):
    """Reference scenario thin enough to simulate quickly"""
    s = reference_scenario().with_device_density(1e-4)
    path = tmp_path / "sparse.json"
    path.write_text(json.dumps(scenario_to_dict(s)))

    return path


def test_reference_prints_scenario(runner):
    result = runner.invoke(commands.reference, [])
    assert_success(result)

    doc = json.loads(result.output)
    assert [c["name"] for c in doc["classes"]] == ["lora", "interferer"]
    assert doc["assumptions"] == list(REFERENCE_ASSUMPTIONS)


def test_reference_baseline(runner, tmp_path, printed):
    path = tmp_path / "baseline.json"

    result = runner.invoke(commands.reference, [str(path), "--baseline"])
    assert_success(result)

    s, assumptions = load_scenario(path)
    assert s == reference_scenario(interferer=False)
    assert assumptions == REFERENCE_ASSUMPTIONS


def test_validate(runner, tmp_path, printed):
    path = tmp_path / "reference.json"
    runner.invoke(commands.reference, [str(path)])

    result = runner.invoke(commands.validate, [str(path)])

    assert_success(result)
    assert "Scenario is valid" in printed.getvalue()
    assert "Assumptions" in printed.getvalue()


def test_validate_lists_violations(runner, tmp_path, printed):
    doc = scenario_to_dict(reference_scenario())
    doc["classes"][0]["tx_power"] = -1.0
    doc["classes"][1]["bandwidth"] = 0.0
    path = tmp_path / "broken.json"
    path.write_text(json.dumps(doc))

    result = runner.invoke(commands.validate, [str(path)])

    assert result.exit_code == 1
    assert "classes[0].tx_power" in printed.getvalue()
    assert "classes[1].bandwidth" in printed.getvalue()


def test_unreadable_scenario(runner, tmp_path, printed):
    path = tmp_path / "broken.json"
    path.write_text(json.dumps({"classes": []}))

    result = runner.invoke(commands.validate, [str(path)])

    assert result.exit_code == 1
    assert "channel" in printed.getvalue()


@mark.parametrize("suffix", [".csv", ".json"])
def test_run_writes_table(runner, tmp_path, printed, suffix):
    out = tmp_path / f"table{suffix}"
    args = ["--sweep", SWEEP, "-o", str(out)]
    if suffix == ".json":
        args.append("--json")

    result = runner.invoke(commands.run, args)
    assert_success(result)

    meta, df = read_table(out)
    assert meta["scenario"] == "reference"
    assert meta["reference_class"] == "lora"
    assert meta["sweep"] == SWEEP
    assert list(df["sweep_value"]) == approx([10, 40, 70, 100])
    assert df["p_sc_analytic"].is_monotonic_decreasing
    assert "p_sc_mc" not in df.columns


def test_run_is_reproducible(runner, tmp_path, printed):
    outs = [tmp_path / name for name in ("a.csv", "b.csv", "c.csv")]

    for out, jobs in zip(outs, (1, 1, 2)):
        args = ["--sweep", SWEEP, "-o", str(out), "--jobs", str(jobs)]
        result = runner.invoke(commands.run, args)
        assert_success(result)

    assert outs[0].read_bytes() == outs[1].read_bytes() == outs[2].read_bytes()


@mark.parametrize(
    "sweep",
    [
        "device_density:1e-4:1e-2:3:log",
        "sinr_threshold:0:6:3",
        "ap_count:1:3:3",
    ],
)
def test_run_other_sweeps(runner, tmp_path, printed, sweep):
    out = tmp_path / "table.csv"
    args = ["--sweep", sweep, "-o", str(out), "--mrc", "50,80"]

    result = runner.invoke(commands.run, args)
    assert_success(result)

    meta, df = read_table(out)
    assert meta["distance"] == "50.0"
    assert len(df) == 3
    assert "p_sc_mrc" in df.columns


def test_run_monte_carlo(runner, tmp_path, printed, sparse_scenario):
    out = tmp_path / "table.csv"
    args = ["-s", str(sparse_scenario), "--sweep", "distance:100:200:2"]
    args += ["--mode", "both", "--trials", "200", "-o", str(out)]

    result = runner.invoke(commands.run, args)
    assert_success(result)

    meta, df = read_table(out)
    assert meta["trials"] == "200"
    assert ((df["p_sc_mc"] - df["p_sc_analytic"]).abs() < 0.2).all()
    assert (df["mc_ci"] > 0).all()
    assert "WARN" in printed.getvalue()


def test_trials_ignored_in_analytic_mode(runner, printed):
    result = runner.invoke(commands.run, ["--sweep", SWEEP, "--trials", "10"])

    assert_success(result)
    assert "trials ignored in analytic mode" in printed.getvalue()


@mark.parametrize(
    "args",
    [
        ["--sweep", "distance:100:10:4"],
        ["--sweep", "speed:1:2:3"],
        ["--class", "wifi"],
        ["--mrc", "10,x"],
        ["--mrc", "10,20;1,2"],
    ],
)
def test_run_bad_input(runner, printed, args):
    result = runner.invoke(commands.run, args)

    assert result.exit_code == 1
    assert "ERR!" in printed.getvalue()


def test_numerical_failure(runner, printed, monkeypatch):
    def diverge(*args, **kwargs):
        raise QuadratureError("the delivery probability", "diverged")

    monkeypatch.setattr(commands, "coverage_limit", diverge)

    result = runner.invoke(commands.limit, [])

    assert result.exit_code == 2
    assert "ERR!" in printed.getvalue()


def test_run_compare(runner, tmp_path, printed):
    baseline = tmp_path / "baseline.json"
    runner.invoke(commands.reference, [str(baseline), "--baseline"])
    single = tmp_path / "single.csv"
    multi = tmp_path / "multi.csv"

    args = ["--sweep", SWEEP, "-o", str(single), "-s", str(baseline)]
    assert_success(runner.invoke(commands.run, args))
    args = ["--sweep", SWEEP, "-o", str(multi), "--compare", str(single)]
    assert_success(runner.invoke(commands.run, args))

    _, report = read_table(tmp_path / "multi-degradation.csv")
    assert (report["p_sc_degradation_pct"].dropna() > 0).all()
    assert report["p_sc_peak"].sum() == 1
    assert report["lifetime_peak"].sum() == 1
    peak = report["p_sc_degradation_pct"].idxmax()
    assert report["p_sc_peak"][peak] == 1
    assert "degradation peaks at" in printed.getvalue()


def write_kpis(path, p_sc, lifetime):
    df = {"sweep_value": [10.0, 20.0], "p_sc_analytic": p_sc, "lifetime_s": lifetime}
    write_table(pd.DataFrame(df), {"sweep": "distance:10:20:2"}, path)


def test_degradation(runner, tmp_path, printed):
    single = tmp_path / "single.csv"
    multi = tmp_path / "multi.csv"
    out = tmp_path / "report.json"
    write_kpis(single, [0.8, 0.005], [100.0, 100.0])
    write_kpis(multi, [0.4, 0.001], [90.0, 50.0])

    result = runner.invoke(commands.degradation, [str(single), str(multi), str(out)])
    assert_success(result)

    meta, report = read_table(out)
    assert meta["floor"] == "0.01"
    assert report["p_sc_degradation_pct"][0] == approx(50)
    assert report["lifetime_degradation_pct"][0] == approx(10)
    assert report["p_sc_degradation_pct"].isna()[1]
    assert list(report["p_sc_peak"]) == [1, 0]
    assert list(report["lifetime_peak"]) == [1, 0]
    assert "peaks at 50.0% (sweep value 10)" in printed.getvalue()


def test_degradation_flags_the_peak_row(runner, tmp_path, printed):
    single = tmp_path / "single.csv"
    multi = tmp_path / "multi.csv"
    out = tmp_path / "report.csv"
    write_kpis(single, [0.8, 0.5], [100.0, 100.0])
    write_kpis(multi, [0.6, 0.2], [95.0, 90.0])

    result = runner.invoke(commands.degradation, [str(single), str(multi), str(out)])
    assert_success(result)

    meta, report = read_table(out)
    assert list(report["p_sc_peak"]) == [0, 1]
    assert list(report["lifetime_peak"]) == [0, 1]
    assert "p_sc_peak [flag]" in meta["columns"]
    assert "peaks at 60.0% (sweep value 20)" in printed.getvalue()


def test_degradation_without_coverage(runner, tmp_path, printed):
    single = tmp_path / "single.csv"
    multi = tmp_path / "multi.csv"
    out = tmp_path / "report.csv"
    write_kpis(single, [0.005, 0.001], [100.0, 100.0])
    write_kpis(multi, [0.001, 0.0005], [90.0, 50.0])

    result = runner.invoke(commands.degradation, [str(single), str(multi), str(out)])
    assert_success(result)

    _, report = read_table(out)
    assert (report["p_sc_peak"] == 0).all()
    assert (report["lifetime_peak"] == 0).all()


def test_degradation_of_identical_tables(runner, tmp_path, printed):
    table = tmp_path / "table.csv"
    runner.invoke(commands.run, ["--sweep", SWEEP, "-o", str(table)])
    out = tmp_path / "report.csv"

    result = runner.invoke(commands.degradation, [str(table), str(table), str(out)])
    assert_success(result)

    _, report = read_table(out)
    covered = report["p_sc_degradation_pct"].dropna()
    assert len(covered) > 0
    assert (covered == 0).all()


def test_degradation_needs_one_grid(runner, tmp_path, printed):
    short = tmp_path / "short.csv"
    long = tmp_path / "long.csv"
    runner.invoke(commands.run, ["--sweep", "distance:10:100:3", "-o", str(short)])
    runner.invoke(commands.run, ["--sweep", SWEEP, "-o", str(long)])

    result = runner.invoke(commands.degradation, [str(short), str(long)])

    assert result.exit_code == 1
    assert "one sweep grid" in printed.getvalue()


def test_read(runner, tmp_path, printed):
    table = tmp_path / "table.csv"
    runner.invoke(commands.run, ["--sweep", SWEEP, "-o", str(table)])

    result = runner.invoke(commands.read, [str(table)])

    assert_success(result)
    assert "p_sc_analytic" in printed.getvalue()


def test_read_rejects_other_files(runner, tmp_path, printed):
    path = tmp_path / "notes.csv"
    path.write_text("a,b\n1,2\n")

    result = runner.invoke(commands.read, [str(path)])

    assert result.exit_code == 1


def test_evaluate(runner, printed):
    result = runner.invoke(commands.evaluate_, ["-d", "30", "--mrc", "30,40;1,0.5"])

    assert_success(result)
    assert "Analytic at 30 m" in printed.getvalue()
    assert "Joint reception, 2 APs" in printed.getvalue()


def test_evaluate_monte_carlo(runner, printed, sparse_scenario):
    args = ["-s", str(sparse_scenario), "--mode", "mc", "--trials", "200"]

    result = runner.invoke(commands.evaluate_, args)

    assert_success(result)
    assert "Monte Carlo at 50 m" in printed.getvalue()


def test_limit(runner, printed):
    result = runner.invoke(commands.limit, [])

    assert_success(result)
    assert "Coverage limit of 'lora'" in printed.getvalue()
    distance = float(printed.getvalue().split(": ")[-1].split(" m")[0])
    assert 140 < distance < 190


def test_limit_with_joint_reception(runner, printed):
    single = runner.invoke(commands.limit, [])
    joint = runner.invoke(commands.limit, ["--mrc", "1,1.2,1.5"])

    assert_success(single)
    assert_success(joint)
    limits = [
        float(line.split(": ")[-1].split(" m")[0])
        for line in printed.getvalue().splitlines()
        if line.startswith("Coverage limit")
    ]
    assert limits[1] >= limits[0]
