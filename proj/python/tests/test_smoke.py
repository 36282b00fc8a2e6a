import json
from pathlib import Path

import pytest

import wmsim

DATA = Path(__file__).resolve().parents[2] / "data"
CONFIG = DATA / "seth.json"


def swf_line(job_id, submit, duration, procs, estimate):
    fields = [job_id, submit, 0, duration, procs, -1, -1, procs, estimate, -1, 1, 1, 1, 1, 1, -1, -1, -1]
    return " ".join(str(f) for f in fields)


@pytest.fixture
def trace(tmp_path):
    lines = ["; small trace"]
    for i in range(1, 201):
        lines.append(swf_line(i, i * 37, 60 + (i * 53) % 3000, 1 + (i * 7) % 64, 4000))
    path = tmp_path / "trace.swf"
    path.write_text("\n".join(lines) + "\n")
    return path


def test_dispatchers_and_helpers():
    names = wmsim.dispatchers()
    assert len(names) == 8
    assert "EBF-BF" in names
    assert wmsim.slowdown(10, 5) == 3.0
    assert wmsim.update_vmax(7200, 1800, 0.5) == 4500.0
    info = wmsim.load_config(str(CONFIG))
    assert info["nodes"] == 120
    assert info["total"]["core"] == 480


def test_simulate_jobs_in_memory():
    jobs = [
        {"id": 1, "submit": 0, "duration": 100, "request": {"core": 4}},
        {"id": 2, "submit": 0, "duration": 10, "request": {"core": 4}, "nodes": 120},
        {"id": 3, "submit": 1, "duration": 5, "estimate": 5, "request": {"core": 1}},
    ]
    cfg = CONFIG.read_text()
    fifo = {r["id"]: r for r in wmsim.simulate_jobs(jobs, cfg, "FIFO-FF")}
    assert fifo[2]["start"] == 100
    assert fifo[3]["start"] == 110
    ebf = {r["id"]: r for r in wmsim.simulate_jobs(jobs, cfg, "EBF-FF")}
    assert ebf[3]["start"] == 1
    assert ebf[2]["start"] == 100


def test_errors():
    with pytest.raises(wmsim.ConfigError):
        wmsim.load_config("/nonexistent.json")
    with pytest.raises(ValueError, match="EBF-FF"):
        wmsim.simulate_jobs([], CONFIG.read_text(), "NOPE-FF")


def test_simulate_writes_run_files(trace, tmp_path):
    out = tmp_path / "run"
    summary = wmsim.simulate(str(trace), str(CONFIG), "SJF-BF", out=str(out), timing=False)
    assert summary["completed"] + summary["rejected"] == summary["read"] == 200
    assert summary["wall_ms"] == 0
    files = sorted(p.name for p in out.iterdir())
    assert any(name.endswith(".results.tsv") for name in files)
    summary_json = next(p for p in out.iterdir() if p.name.endswith("summary.json"))
    assert json.loads(summary_json.read_text())["jobs"] == summary["completed"]


def test_generate_experiment_report(trace, tmp_path):
    gen = tmp_path / "gen.json"
    gen.write_text(json.dumps({
        "performance": {"core": 1.667},
        "request_limits": {"min": {"core": 1}, "max": {"core": 4}},
        "count": 100,
        "seed": 3,
    }))
    synth = tmp_path / "synth.swf"
    assert wmsim.generate(str(trace), str(CONFIG), str(gen), str(synth)) == 100

    plan = tmp_path / "plan.json"
    plan.write_text(json.dumps({
        "name": "smoke",
        "workload": str(synth),
        "config": str(CONFIG),
        "schedulers": ["FIFO", "EBF"],
        "allocators": ["FF"],
        "repetitions": 1,
        "out": str(tmp_path / "exp"),
    }))
    runs = wmsim.experiment(str(plan), timing=False)
    assert [r["dispatcher"] for r in runs] == ["FIFO-FF", "EBF-FF"]
    assert all(r["ok"] for r in runs)
    report = Path(wmsim.report(str(tmp_path / "exp" / "smoke")))
    assert (report / "usage_table.txt").exists()
