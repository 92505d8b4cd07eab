import json
import os
import stat

from opmult.__main__ import EXIT_CONFIG, EXIT_FAIL, EXIT_PASS, main


def _write(path, **config) -> str:
    path.write_text(json.dumps(config))
    return str(path)


def test_run_passes(tmp_path):
    config = _write(tmp_path / "roundtrip.json", experiment="dft-roundtrip", samples=1)
    out = tmp_path / "report.json"
    assert main(["dft-roundtrip", "-c", config, "-o", str(out)]) == EXIT_PASS
    report = json.loads(out.read_text())
    assert report["experiment"] == "dft-roundtrip"
    assert all(c["passed"] for c in report["criteria"])


def test_defaults_without_config(capsys):
    assert main(["rbdd-variation", "-f", "csv"]) == EXIT_PASS
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "experiment,criterion,value,threshold,passed"
    assert lines[1].startswith("rbdd-variation,")


def test_seed_override(tmp_path, capsys):
    config = _write(tmp_path / "roundtrip.json", experiment="dft-roundtrip", samples=1, seed=2)
    assert main(["dft-roundtrip", "-c", config, "-s", "7"]) == EXIT_PASS
    assert json.loads(capsys.readouterr().out)["provenance"]["seed"] == 7


def test_failing_criterion(tmp_path):
    config = _write(tmp_path / "fail.json", experiment="dft-roundtrip", samples=1, parseval_tolerance=-1.0)
    assert main(["dft-roundtrip", "-c", config, "-o", str(tmp_path / "out.json")]) == EXIT_FAIL


def test_config_errors(tmp_path):
    assert main(["dft-roundtrip", "-c", str(tmp_path / "missing.json")]) == EXIT_CONFIG
    empty = tmp_path / "empty.json"
    empty.write_text("")
    assert main(["dft-roundtrip", "-c", str(empty)]) == EXIT_CONFIG
    unknown = _write(tmp_path / "unknown.json", experiment="dft-roundtrip", colour="blue")
    assert main(["dft-roundtrip", "-c", unknown]) == EXIT_CONFIG
    other = _write(tmp_path / "other.json", experiment="hilbert")
    assert main(["dft-roundtrip", "-c", other]) == EXIT_CONFIG


def test_experiment_error(tmp_path):
    config = _write(tmp_path / "bad.json", experiment="dft-roundtrip", grids=[dict(n=1, N=100, L=8)])
    assert main(["dft-roundtrip", "-c", config]) == EXIT_FAIL


def test_unwritable_report(tmp_path):
    config = _write(tmp_path / "roundtrip.json", experiment="dft-roundtrip", samples=1)
    assert main(["dft-roundtrip", "-c", config, "-o", str(tmp_path / "missing" / "out.json")]) == EXIT_CONFIG


def test_several_configs(tmp_path):
    """Reports keep the order of the configs, also when run in worker processes"""
    first = _write(tmp_path / "a.json", experiment="dft-roundtrip", samples=1, seed=1)
    second = _write(tmp_path / "b.json", experiment="dft-roundtrip", samples=1, seed=2)
    for parallel in ["1", "2"]:
        out = tmp_path / f"out{parallel}.json"
        assert main(["dft-roundtrip", "-c", first, "-c", second, "-j", parallel, "-o", str(out)]) == EXIT_PASS
        reports = json.loads(out.read_text())
        assert [r["provenance"]["seed"] for r in reports] == [1, 2]


def test_separate_outputs(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    first = _write(tmp_path / "a.json", experiment="dft-roundtrip", samples=1, out=str(a), format="csv")
    second = _write(tmp_path / "b.json", experiment="dft-roundtrip", samples=1, out=str(b), format="csv")
    assert main(["dft-roundtrip", "-c", first, "-c", second]) == EXIT_PASS
    assert a.read_text().startswith("experiment,") and b.read_text().startswith("experiment,")


def test_schema(capsys):
    assert main(["schema"]) == EXIT_PASS
    assert json.loads(capsys.readouterr().out)["title"] == "opmult experiment config"


def test_create_env(tmp_path):
    path = tmp_path / ".env"
    assert main(["create-env", "-p", str(path)]) == EXIT_PASS
    text = path.read_text()
    assert "#opmult_workers=1" in text
    assert "#opmult_report_format=json" in text
    assert "# Valid options:" in text
    assert "env_file" not in text
    assert stat.S_IMODE(os.stat(path).st_mode) == 0o600
    assert main(["create-env", "-p", str(path)]) == EXIT_CONFIG


def test_show_config(capsys):
    assert main(["-v", "show-config"]) == EXIT_PASS
    assert "OPMULT_WORKERS=1" in capsys.readouterr().out.splitlines()
