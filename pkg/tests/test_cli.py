from __future__ import annotations

import json

import pytest

from dynaring import config as cfgmod
from dynaring.cli import main
from dynaring.config import ConfigError, build, load, parse_text
from dynaring.runner import SummaryRecord, execute, parse_axis, sweep_cells, worker_count


def run_cli(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr().out
    return code, out


def last_record(out: str) -> SummaryRecord:
    return SummaryRecord.from_json(out.strip().splitlines()[-1])


def test_config_parse_and_digest():
    a = parse_text("ring.n = 6  # six nodes\nrobots.k = 3\n")
    b = parse_text("robots.k=3\n\nring.n=6\n")
    assert a.digest == b.digest
    assert a["ring.n"] == 6 and a["robots.chirality"] == "alternating"
    assert parse_text(a.canonical_text()) == a
    assert a.with_overrides({"ring.n": "7"}).digest != a.digest


@pytest.mark.parametrize(
    "text",
    ["ring.size = 4", "ring.n = four", "robots.algorithm = pef9", "schedule.kind = chaos",
     "checks.list = coverage,telepathy", "ring.n", "ring.n = 4\nring.n = 5", "schedule.seed = -1"],
)
def test_config_rejects(text):
    with pytest.raises(ConfigError):
        parse_text(text)


def test_spread_and_patterns():
    assert cfgmod.spread_positions(10, 3) == [0, 3, 6]
    assert cfgmod.chirality_pattern("alternating", 3, 0) == [True, False, True]
    assert cfgmod.chirality_pattern("uniform", 2, 0) == [True, True]
    assert cfgmod.chirality_pattern("cw,ccw", 2, 0) == [True, False]
    assert cfgmod.chirality_pattern("random", 5, 9) == cfgmod.chirality_pattern("random", 5, 9)
    with pytest.raises(ConfigError):
        cfgmod.chirality_pattern("cw", 2, 0)


def test_build_cross_field_rules(tmp_path):
    with pytest.raises(ConfigError, match="k < n"):
        build(load(None, ["ring.n=4", "robots.k=4"]))
    with pytest.raises(ConfigError, match="schedule.file"):
        build(load(None, ["schedule.kind=scripted"]))
    with pytest.raises(ConfigError):
        build(load(None, ["schedule.kind=two_robot_confiner", "robots.k=2", "ring.n=3"]))
    with pytest.raises(ConfigError):
        build(load(None, ["schedule.kind=one_robot_confiner", "robots.k=1", "ring.n=5", "robots.positions=2"]))
    script = tmp_path / "s.txt"
    script.write_text("edge 1 absent 0..9\n")
    inputs = build(load(None, ["schedule.kind=scripted", f"schedule.file={script}"]))
    assert inputs.schedule.edges_at(3) == {0, 2, 3}
    em = build(load(None, ["schedule.kind=eventual_missing", "schedule.edge=2", "schedule.t_remove=7"]))
    assert em.missing_edge == 2 and 2 not in em.schedule.edges_at(7)


def test_run_examples(capsys):
    code, out = run_cli(capsys, "run", "--set", "ring.n=4", "--set", "robots.k=3", "--horizon", "100")
    assert code == 0 and "inv=coverage verdict=pass" in out
    code, _ = run_cli(capsys, "run", "--set", "ring.n=4", "--set", "robots.k=4")
    assert code == 2
    code, out = run_cli(
        capsys, "run", "--set", "ring.n=3", "--set", "robots.k=2", "--set", "robots.algorithm=pef2",
        "--horizon", "100", "--set", "checks.min_epochs=30",
    )
    assert code == 0
    assert last_record(out).coverage["epochs_completed"] >= 30


def test_config_error_message_names_rule(capsys):
    main(["run", "--set", "ring.n=4", "--set", "robots.k=4"])
    assert "k < n" in capsys.readouterr().err


def test_check_failure_exit_code(capsys):
    code, out = run_cli(capsys, "run", "--set", "ring.n=9", "--set", "robots.k=1", "--set", "schedule.kind=bernoulli",
                        "--set", "checks.min_epochs=100000", "--horizon", "500")
    assert code == 1 and last_record(out).status == "check_failed"
    assert main(["run", "--set", "nope.key=1"]) == 2
    assert main(["run", "--config", "/nonexistent/config.txt"]) == 2


def test_inconclusive_policy(capsys):
    args = ["run", "--set", "ring.n=6", "--set", "schedule.kind=eventual_missing", "--set", "schedule.t_remove=5000",
            "--set", "checks.list=sentinels", "--horizon", "200"]
    assert main(args) == 0
    assert main(args + ["--set", "checks.inconclusive_passes=false"]) == 1
    assert main(["run", "--set", "checks.list=sentinels"]) == 2


def test_config_file_and_replay(tmp_path, capsys):
    conf = tmp_path / "exp.conf"
    conf.write_text("ring.n = 7\nrobots.k = 3\nschedule.kind = bounded_recurrence\nrun.horizon = 400\n")
    t1, t2, summary = tmp_path / "a.trace", tmp_path / "b.trace", tmp_path / "s.json"
    code, out = run_cli(capsys, "run", "--config", str(conf), "--seed", "77", "--trace", str(t1), "--summary", str(summary))
    assert code == 0
    rec = SummaryRecord.from_json(summary.read_text())
    assert rec.seeds == {"schedule": 77} and rec.trace_sha256
    code, out = run_cli(capsys, "run", "--config", str(summary), "--trace", str(t2))
    assert code == 0 and t1.read_bytes() == t2.read_bytes()
    assert last_record(out).digest == rec.digest
    assert len(t1.read_text().splitlines()) == 400


def test_axes_and_cells():
    assert parse_axis("ring.n=4..6") == ("ring.n", ["4", "5", "6"])
    assert parse_axis("robots.chirality=uniform, alternating") == ("robots.chirality", ["uniform", "alternating"])
    with pytest.raises(ConfigError):
        parse_axis("ring.n")
    template = load(None)
    assert sweep_cells(template, []) == [{}]
    cells = sweep_cells(template, [parse_axis("robots.k=3,4")], seeds=3)
    assert len(cells) == 6 and len({c["schedule.seed"] for c in cells}) == 3


def test_empty_sweep_equals_run(tmp_path, capsys):
    out_file = tmp_path / "rec.jsonl"
    code, _ = run_cli(capsys, "sweep", "--horizon", "300", "--out", str(out_file))
    assert code == 0
    swept = SummaryRecord.from_json(out_file.read_text())
    single, _ = execute(load(None, ["run.horizon=300"]))
    assert swept.digest == single.digest and swept.coverage == single.coverage and swept.verdicts == single.verdicts


def test_sweep_reports_config_errors_and_continues(capsys, monkeypatch):
    monkeypatch.setenv("DYNARING_THREADS", "1")
    code, out = run_cli(capsys, "sweep", "--axis", "robots.k=3,4", "--axis", "ring.n=4,5", "--horizon", "500",
                        "--set", "checks.list=max_tower,opposite_dirs,coverage", "--set", "checks.min_epochs=5",
                        "--set", "schedule.kind=bounded_recurrence")
    assert code == 0
    assert "cell robots.k=4 ring.n=4 pass=0 fail=0 config_error=1" in out
    assert "cell robots.k=3 ring.n=5 pass=1 fail=0 config_error=0" in out


def test_sweep_in_parallel_matches_serial(tmp_path, capsys, monkeypatch):
    args = ["sweep", "--axis", "ring.n=5..6", "--seeds", "2", "--horizon", "200", "--set", "schedule.kind=bernoulli"]
    monkeypatch.setenv("DYNARING_THREADS", "1")
    main(args + ["--out", str(tmp_path / "serial.jsonl")])
    monkeypatch.setenv("DYNARING_THREADS", "2")
    main(args + ["--out", str(tmp_path / "parallel.jsonl")])
    capsys.readouterr()

    def strip(path):
        recs = [json.loads(line) for line in path.read_text().splitlines()]
        for r in recs:
            r.pop("wall_clock")
        return recs

    assert strip(tmp_path / "serial.jsonl") == strip(tmp_path / "parallel.jsonl")


def test_worker_count(monkeypatch):
    monkeypatch.setenv("DYNARING_THREADS", "3")
    assert worker_count(10) == 3 and worker_count(2) == 2
    monkeypatch.setenv("DYNARING_THREADS", "lots")
    with pytest.raises(ConfigError):
        worker_count(4)


def test_demo_impossible(capsys):
    code, out = run_cli(capsys, "demo-impossible", "one_robot", "--n", "5", "--horizon", "3000", "--algorithm", "pef1")
    assert code == 0 and "visited=0,4 size=2" in out and "stalled=false" in out
    code, out = run_cli(capsys, "demo-impossible", "two_robots", "--n", "8", "--horizon", "3000")
    assert code == 0 and len(last_record(out).coverage["visited"]) <= 3
    assert main(["demo-impossible", "two_robots", "--n", "3"]) == 2
    assert main(["demo-impossible", "one_robot", "--n", "2"]) == 2
