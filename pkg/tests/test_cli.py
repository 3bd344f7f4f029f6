import json
import subprocess
import sys

import pytest

from cookiewalk import cli
from cookiewalk.io import read_csv_body


def test_parse_simulate():
    cfg = cli.parse_args("simulate --cookies 0.9,0.9 --tail 0.3 --horizon 1000 --seed 7".split())
    assert cfg.command == "simulate" and cfg.profile.M == 2
    assert (cfg.horizon, cfg.seed) == (1000, 7)


@pytest.mark.parametrize(
    "argv",
    [
        "simulate --tail 1.2",
        "simulate --cookies 0.9,x --tail 0.3",
        "simulate --cookies 0.9",
        "simulate --tail 0.3 --threads 0",
        "verify --suite nope --tail 0.3",
    ],
)
def test_parse_errors(argv, capsys):
    with pytest.raises(SystemExit) as exc:
        cli.parse_args(argv.split())
    assert exc.value.code == 2


def test_profile_file(tmp_path):
    f = tmp_path / "w.json"
    f.write_text('{"cookies": [0.8], "tail": 0.4}')
    cfg = cli.parse_args(["classify", "--profile", str(f)])
    assert cfg.profile.cookie_probs == (0.8,)
    with pytest.raises(SystemExit):
        cli.parse_args(["classify", "--profile", str(f), "--tail", "0.3"])


def test_classify_command(tmp_path, capsys):
    assert cli.main(["classify", "--cookies", "0.9,0.9", "--tail", "0.3", "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["regime"] == "LEFT_TRANSIENT_NEGATIVE_SPEED"
    assert json.loads((tmp_path / "classify.json").read_text())["regime"] == report["regime"]


def test_oracle_command(tmp_path, capsys):
    assert cli.main(["oracle", "--cookies", "0.9", "--tail", "0.3", "--horizon", "10", "--paths", "--out", str(tmp_path)]) == 0
    rows = read_csv_body(tmp_path / "pathlaw.csv")
    assert rows[0] == ["value", "probability"]
    assert abs(sum(float(r[1]) for r in rows[1:]) - 1.0) <= 1e-12
    assert len(read_csv_body(tmp_path / "paths.csv")) == 2**10 + 1


def test_oracle_horizon_too_large(tmp_path, capsys):
    assert cli.main(["oracle", "--tail", "0.3", "--horizon", "30", "--out", str(tmp_path)]) == 2
    assert list(tmp_path.iterdir()) == []


def test_speed_command(capsys):
    assert cli.main(["speed", "--tail", "0.3", "--horizon", "2000", "--replicas", "40"]) == 0
    check = json.loads(capsys.readouterr().out)["checks"][0]
    assert abs(check["estimate"] + 0.4) <= 3 * check["stderr"]


def test_simulate_reproducible(tmp_path, capsys):
    args = ["simulate", "--cookies", "0.9,0.9", "--tail", "0.3", "--horizon", "500", "--seed", "7"]
    assert cli.main(args + ["--out", str(tmp_path / "a")]) == 0
    assert cli.main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("trajectory.csv", "functionals.csv"):
        assert read_csv_body(tmp_path / "a" / name) == read_csv_body(tmp_path / "b" / name)
    first = (tmp_path / "a" / "trajectory.csv").read_text().splitlines()[0]
    assert first.startswith("# cookiewalk")


def test_branching_command(tmp_path, capsys):
    assert cli.main(["branching", "--cookies", "0.9,0.6", "--tail", "0.7", "--trunc", "60", "--out", str(tmp_path)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["stationary"]["max_equation_residual"] < 1e-6
    assert {p.name for p in tmp_path.iterdir()} >= {"kernel.csv", "stationary.csv", "residuals.csv"}


def test_verify_single_suite(tmp_path, capsys):
    code = cli.main(["verify", "--suite", "martingale", "--cookies", "0.9,0.9", "--tail", "0.3", "--out", str(tmp_path)])
    assert code == 0
    rows = read_csv_body(tmp_path / "checks.csv")
    assert rows[1][0] == "martingale_exact" and rows[1][-1] == "True"


def test_verify_all_dispatches_every_check(capsys):
    code = cli.main(["verify", "--suite", "all", "--cookies", "0.9,0.9", "--tail", "0.3", "--replicas", "300", "-K", "3"])
    report = json.loads(capsys.readouterr().out)
    ids = {c["check_id"] for c in report["checks"]}
    for prefix in ("martingale", "monotonicity", "drift_identity", "d0_limit", "site_decomposition",
                   "zero_one", "transience_K", "speed", "backtrack_correspondence"):
        assert any(i.startswith(prefix) for i in ids), prefix
    assert code in (0, 1)


def test_failed_run_leaves_no_partial_outputs(tmp_path, monkeypatch, capsys):
    # checks.csv is written first, then the report fails
    def boom(self, name, obj):
        assert (tmp_path / "checks.csv").exists()
        raise OSError("disk full")

    monkeypatch.setattr(cli.OutputSet, "json", boom)
    code = cli.main(["verify", "--suite", "martingale", "--tail", "0.3", "--out", str(tmp_path)])
    assert code == 2
    assert list(tmp_path.iterdir()) == []


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "cookiewalk", "classify", "--cookies", "0.6", "--tail", "0.5"],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["regime"] == "RECURRENT"


def test_correspondence_is_exploratory_for_negative_tail(capsys):
    cli.main(["verify", "--suite", "correspondence", "--cookies", "0.9,0.9", "--tail", "0.3"])
    checks = json.loads(capsys.readouterr().out)["checks"]
    assert len(checks) == 3
    assert all(c["details"]["exploratory"] and c["pass"] for c in checks)
