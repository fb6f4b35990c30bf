import csv
import pytest
import shutil

from rfidcheck.cli import ExperimentSpec, main, parse_sweep
from rfidcheck.cli.commands import checkpoints
from rfidcheck.cli.output import format_table, format_value, write_csv
from rfidcheck.errors import InvalidArgumentError
from rfidcheck.modelgen import build, load_model


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("RFIDCHECK_SETTINGS", raising=False)
    return tmp_path


def _rows(path):
    with path.open(newline="") as fp:
        return list(csv.reader(fp))


def _check(models_dir, *extra):
    return main(
        [
            "check",
            "--model",
            str(models_dir / "demo.pm"),
            "--props",
            str(models_dir / "demo.props"),
            *extra,
        ]
    )


def test_check_demo_model(models_dir, workdir, capsys):
    out = workdir / "values.csv"
    assert _check(models_dir, "--out", str(out)) == 0

    rows = _rows(out)
    assert rows[0] == ["index", "line", "property", "value"]
    values = {int(row[1]): row[3] for row in rows[1:]}
    assert list(values) == [2, 3, 4, 5, 6, 7, 8]
    assert float(values[2]) == pytest.approx(1.0)
    assert values[3] == "true"
    assert float(values[4]) == pytest.approx(2.0)
    assert float(values[5]) == 0.0
    assert float(values[6]) == pytest.approx(4 * (1 - 2**-10))
    assert float(values[7]) == pytest.approx(1 - 0.5**3)
    assert float(values[8]) == 0.0

    output = capsys.readouterr().out
    assert "P>=1 [F \"done\"]" in output
    assert "time [s]" in output


def test_check_single_property(models_dir, workdir):
    out = workdir / "values.csv"
    assert _check(models_dir, "--property", "4", "--out", str(out)) == 0
    rows = _rows(out)
    assert len(rows) == 2
    assert rows[1][:3] == ["1", "4", 'R{"steps"}=? [F done]']

    assert _check(models_dir, "--property", "1") == 2


def test_check_fails_when_a_threshold_does_not_hold(models_dir, workdir):
    props = workdir / "bad.props"
    props.write_text("P>=1 [F done]\nP>=0.9 [X done]\n")
    assert main(["check", "--model", str(models_dir / "demo.pm"), "--props", str(props)]) == 1


@pytest.mark.parametrize(
    "text",
    ["P=? [F nowhere]\n", "P=? [F\n", 'R{"energy"}=? [C<=3]\n', "R=? [F done]\n"],
)
def test_check_errors_exit_with_code_2(models_dir, workdir, text):
    props = workdir / "broken.props"
    props.write_text(text)
    assert main(["check", "--model", str(models_dir / "demo.pm"), "--props", str(props)]) == 2


def test_check_default_reward(models_dir, workdir):
    props = workdir / "reward.props"
    props.write_text("R=? [F done]\n")
    out = workdir / "values.csv"
    args = ["check", "--model", str(models_dir / "demo.pm"), "--props", str(props)]

    assert main(args + ["--reward", "steps", "--out", str(out)]) == 0
    assert float(_rows(out)[1][3]) == pytest.approx(2.0)
    assert main(args + ["--reward", "energy"]) == 2


def test_check_missing_file(models_dir, workdir):
    assert main(["check", "--model", str(workdir / "missing.pm"), "--props", str(models_dir / "demo.props")]) == 2


def test_check_numerical_failure_exits_with_code_3(models_dir, workdir):
    config = workdir / "solver.json"
    config.write_text('{"SOLVER": {"method": "jacobi", "max_iterations": 2}}')
    assert _check(models_dir, "--property", "4", "-c", str(config)) == 3


def test_check_rfid_model(models_dir, workdir):
    out = workdir / "values.csv"
    args = [
        "check",
        "--model",
        str(models_dir / "operating_point.toml"),
        "--props",
        str(models_dir / "rfid.props"),
        "--out",
        str(out),
    ]
    assert main(args) == 0
    values = {int(row[1]): row[3] for row in _rows(out)[1:]}
    assert values[2] == "true"
    assert float(values[3]) == pytest.approx(6.0)
    assert float(values[4]) == pytest.approx(90.0)
    assert float(values[5]) == pytest.approx(100.0)
    assert float(values[6]) == pytest.approx(30.0)


def test_state_limit_from_environment(models_dir, workdir, monkeypatch):
    config = workdir / "limits.toml"
    config.write_text("STATE_LIMIT = 3\n")
    monkeypatch.setenv("RFIDCHECK_SETTINGS", str(config))
    args = [
        "check",
        "--model",
        str(models_dir / "operating_point.toml"),
        "--props",
        str(models_dir / "rfid.props"),
    ]
    assert main(args) == 3


def test_sweep(models_dir, workdir):
    out = workdir / "results"
    args = [
        "sweep",
        "--model",
        str(models_dir / "operating_point.toml"),
        "--props",
        str(models_dir / "rfid.props"),
        "--sweep",
        "2:4:2",
        "--horizon",
        "20",
        "--out",
        str(out),
    ]
    assert main(args) == 0

    counts = _rows(out / "fig2.csv")
    assert counts[0] == ["t", "N=2", "N=4"]
    assert len(counts) == 22
    assert [float(v) for v in counts[-1]] == pytest.approx([20.0, 2.0, 4.0])

    transmissions = _rows(out / "fig3.csv")
    assert [float(v) for v in transmissions[-1]] == pytest.approx([20.0, 18.0, 36.0])

    costs = _rows(out / "fig4.csv")
    assert costs[0] == ["N", "server", "tag"]
    assert [float(v) for v in costs[1]] == pytest.approx([2.0, 4.0, 6.0])
    assert [float(v) for v in costs[2]] == pytest.approx([4.0, 16.0, 12.0])

    metrics = _rows(out / "fig5.csv")
    assert metrics[0] == ["N", "processing_time", "mean_delay", "service_rate"]
    assert [float(v) for v in metrics[2]] == pytest.approx([4.0, 6.0, 4.5, 4.0])

    properties = _rows(out / "properties.csv")
    assert len(properties) == 1 + 2 * 8
    assert properties[1][:2] == ["2", "2"]


def test_sweep_with_experiment_file(models_dir, workdir):
    experiment = workdir / "experiment.toml"
    experiment.write_text(
        f'model = "{(models_dir / "operating_point.toml").as_posix()}"\n'
        'sweep = "2:3"\nhorizon = 5\nout = "figures"\n'
    )
    assert main(["sweep", "--experiment", str(experiment)]) == 0
    assert _rows(workdir / "figures" / "fig2.csv")[0] == ["t", "N=2", "N=3"]
    assert not (workdir / "figures" / "properties.csv").exists()


def test_sweep_state_limit_exits_with_code_3(workdir):
    config = workdir / "limits.toml"
    config.write_text("STATE_LIMIT = 3\n\n[SWEEP]\nworkers = 2\n")
    args = ["sweep", "-c", str(config), "--sweep", "2:5", "--horizon", "5"]
    assert main(args) == 3
    assert not (workdir / "results").exists()


def test_sweep_rejects_invalid_ranges():
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--sweep", "1:5"])
    assert info.value.code == 2


def test_simulate(models_dir, workdir, capsys):
    out = workdir / "sim"
    args = [
        "simulate",
        "--model",
        str(models_dir / "operating_point.toml"),
        "--runs",
        "3",
        "--horizon",
        "12",
        "--l",
        "64",
        "--out",
        str(out),
    ]
    assert main(args) == 0

    series = _rows(out / "sim.csv")
    assert series[0] == ["t", "authenticated", "in_service", "cum_tx", "cum_srv", "cum_tag"]
    assert len(series) == 14

    comparisons = _rows(out / "comparison.csv")
    assert len(comparisons) == 1 + 5 * len(checkpoints(12))
    assert {row[5] for row in comparisons[1:]} == {"pass"}

    delays = _rows(out / "delays.csv")
    assert len(delays) == 1 + 3 * 10

    output = capsys.readouterr().out
    assert "Mean tag delay: analytic 4.5" in output


def test_simulate_needs_a_model():
    assert main(["simulate", "--runs", "2"]) == 2


def test_simulate_rejects_zero_runs(models_dir):
    with pytest.raises(SystemExit) as info:
        main(["simulate", "--model", str(models_dir / "rfid.toml"), "--runs", "0"])
    assert info.value.code == 2


def test_demo(capsys):
    assert main(["demo", "--seed", "1", "--l", "64"]) == 0
    output = capsys.readouterr().out
    assert "step=1 type=" in output
    assert "server: accepted" in output
    assert "tag: accepted" in output


def test_demo_with_faults(capsys):
    assert main(["demo", "--seed", "1", "--fault", "corrupt:2"]) == 1
    assert "server: rejected" in capsys.readouterr().out

    assert main(["demo", "--seed", "1", "--fault", "drop_m3"]) == 1
    output = capsys.readouterr().out
    assert "server: accepted" in output
    assert "tag: rejected" in output

    assert main(["demo", "--fault", "explode"]) == 2


def test_export(models_dir, workdir):
    source = workdir / "demo.pm"
    shutil.copy(models_dir / "demo.pm", source)
    out = workdir / "exported"

    assert main(["export", "--model", str(source), "--out", str(out)]) == 0
    assert build(load_model(out / "demo.pm")).dtmc.n_states == 2

    values = workdir / "values.csv"
    args = [
        "check",
        "--model",
        str(out / "demo.dtmc"),
        "--props",
        str(models_dir / "demo.props"),
        "--out",
        str(values),
    ]
    assert main(args) == 0
    assert float(_rows(values)[3][3]) == pytest.approx(2.0)

    # the default output directory holds the input file
    assert main(["export", "--model", str(source)]) == 2


def test_export_rfid_model(models_dir, workdir):
    out = workdir / "exported"
    assert main(["export", "--model", str(models_dir / "rfid.toml"), "--out", str(out)]) == 0
    text = (out / "rfid.pm").read_text()
    assert "module MD_TA" in text
    assert (out / "rfid.dtmc").read_text().startswith("dtmc ")


def test_version(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert "rfidcheck version 0.1.0" in capsys.readouterr().out


def test_command_is_required():
    with pytest.raises(SystemExit) as info:
        main([])
    assert info.value.code == 2


def test_parse_sweep():
    assert parse_sweep("10:100:10") == (10, 100, 10)
    assert parse_sweep("2:5") == (2, 5, 1)
    assert parse_sweep([4, 8, 2]) == (4, 8, 2)
    for value in ("1:10", "5:4", "2:101", "2:10:0", "a:b", "2"):
        with pytest.raises(InvalidArgumentError):
            parse_sweep(value)


def test_experiment_spec(tmp_path):
    spec = ExperimentSpec.from_mapping(
        {"model": "rfid.toml", "sweep": [2, 6, 2], "seed": 3}, base=tmp_path
    )
    assert spec.model == tmp_path / "rfid.toml"
    assert list(spec.tag_counts) == [2, 4, 6]
    assert spec.horizon == 2500

    changed = spec.override(horizon=10, seed=None)
    assert changed.horizon == 10
    assert changed.seed == 3

    with pytest.raises(InvalidArgumentError, match="unknown"):
        ExperimentSpec.from_mapping({"tags": 5})
    with pytest.raises(InvalidArgumentError):
        ExperimentSpec(horizon=0)


def test_experiment_file_in_models_dir(models_dir):
    spec = ExperimentSpec.load(models_dir / "experiment.toml")
    assert spec.model == models_dir / "rfid.toml"
    assert spec.sweep == (10, 100, 10)
    assert spec.horizon == 2500


def test_output_formatting(tmp_path):
    assert format_value(True) == "true"
    assert format_value(3) == "3"
    assert format_value(0.1) == "0.1"
    assert format_value(float("inf")) == "inf"
    assert format_value(float("nan")) == "nan"

    path = write_csv(tmp_path / "sub" / "x.csv", ("a", "b"), [(1, 2.5), (False, "x")])
    assert path.read_text() == "a,b\n1,2.5\nfalse,x\n"

    table = format_table(("name", "value"), [("alpha", 1.5), ("b", True)])
    assert table.splitlines() == [
        "name   value",
        "-----  -----",
        "alpha  1.5",
        "b      true",
    ]
