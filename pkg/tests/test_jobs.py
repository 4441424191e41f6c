import json

import pytest

from cuspidal_atlas import classifier
from cuspidal_atlas.checkpoint_db import CheckpointDB
from cuspidal_atlas.classifier import ClassificationReport, SweepAxis, SweepGrid
from cuspidal_atlas.jobs import checkpoint_key, run_sweep, setup_directories


@pytest.fixture
def counting_classify(monkeypatch):
    calls = []

    def fake(params, run_config=None):
        calls.append(params)
        quaternary = params.d4 > 0.5
        return ClassificationReport(params=params, kind="quaternary" if quaternary else "binary",
                                    generic=True, n_aspects=2, n_cusps=4 if quaternary else 0,
                                    homotopy="2(1,0)" if quaternary else None, cuspidal=quaternary,
                                    max_postures=4 if quaternary else 2)

    monkeypatch.setattr(classifier, "classify", fake)
    return calls


def grid():
    return SweepGrid(d3=SweepAxis(start=0.5, stop=1.0, step=0.5), r2=SweepAxis(start=0.2, stop=0.2, step=0.1),
                     d4=SweepAxis(start=0.3, stop=0.9, step=0.3))


def test_checkpoint_db_round_trip(tmp_path):
    path = str(tmp_path / "cp.jsonl")
    db = CheckpointDB(path)
    db["a"] = {"x": 1}
    db["b"] = {"x": 2}
    reopened = CheckpointDB(path)
    assert len(reopened) == 2
    assert reopened["a"] == {"x": 1}
    assert "b" in reopened
    assert "missing" not in reopened
    with pytest.raises(KeyError):
        reopened["missing"]


def test_checkpoint_db_skips_truncated_line(tmp_path):
    path = tmp_path / "cp.jsonl"
    path.write_text(json.dumps({"key": "a", "value": 1}) + "\n" + '{"key": "b", "val')
    db = CheckpointDB(str(path))
    assert db.items() == [("a", 1)]


def test_setup_directories_creates_output(tmp_path):
    target = tmp_path / "nested" / "out"
    setup_directories(str(target))
    assert target.is_dir()


def test_run_sweep_returns_grid_order(counting_classify, run_config):
    records = run_sweep(grid(), run_config, threads=3)
    assert [r.index for r in records] == list(range(6))
    assert [r.params.d4 for r in records] == [0.3, 0.6, 0.9] * 2
    assert [r.signature.kind for r in records] == ["binary", "quaternary", "quaternary"] * 2
    assert len(counting_classify) == 6


def test_run_sweep_resumes_from_checkpoint(counting_classify, run_config, tmp_path):
    path = str(tmp_path / "sweep.checkpoint.jsonl")
    first = run_sweep(grid(), run_config, path)
    assert len(counting_classify) == 6

    second = run_sweep(grid(), run_config, path)
    assert len(counting_classify) == 6
    assert [r.model_dump() for r in second] == [r.model_dump() for r in first]


def test_run_sweep_computes_only_missing_points(counting_classify, run_config, tmp_path):
    path = str(tmp_path / "sweep.checkpoint.jsonl")
    points = grid().params()
    db = CheckpointDB(path)
    done = run_sweep(SweepGrid(points=points[:2]), run_config)
    for record in done:
        db[checkpoint_key(record.index, record.params)] = record.model_dump(mode="json")
    counting_classify.clear()

    records = run_sweep(SweepGrid(points=points), run_config, path)
    assert len(records) == 6
    assert len(counting_classify) == 4


def test_run_sweep_caps_threads_at_settings(counting_classify, run_config, monkeypatch):
    from cuspidal_atlas import jobs
    monkeypatch.setattr(jobs.settings, "CUSPIDAL_ATLAS_THREADS", 2)
    seen = []
    real_executor = jobs.ThreadPoolExecutor

    def recording_executor(max_workers):
        seen.append(max_workers)
        return real_executor(max_workers=max_workers)

    monkeypatch.setattr(jobs, "ThreadPoolExecutor", recording_executor)
    records = run_sweep(grid(), run_config, threads=64)
    assert seen == [2]
    assert len(records) == 6
