"""Run-record format: round trip, atomicity, strictly increasing steps."""

import json

import pytest

from climbench.records import (RunRecord, config_digest, load_record,
                               load_records_dir, record_filename)


def test_round_trip(tmp_path):
    rec = RunRecord("v0-homo-64L", "ddpg", 3, wall_time_s=1.25,
                    config_digest=config_digest("cfg"))
    rec.add(200, -0.5)
    rec.add(400, -0.25)
    path = tmp_path / record_filename(rec.experiment_id, rec.algorithm, rec.seed)
    rec.save(path)
    loaded = load_record(path)
    assert loaded.entries == rec.entries
    assert loaded.experiment_id == rec.experiment_id
    assert loaded.algorithm == "ddpg"
    assert loaded.seed == 3
    assert loaded.config_digest == rec.config_digest
    assert not loaded.aborted


def test_steps_strictly_increasing():
    rec = RunRecord("x", "a", 1)
    rec.add(200, -1.0)
    with pytest.raises(ValueError):
        rec.add(200, -0.9)
    with pytest.raises(ValueError):
        rec.add(100, -0.9)


def test_body_excludes_wall_time(tmp_path):
    a = RunRecord("x", "a", 1, wall_time_s=1.0)
    b = RunRecord("x", "a", 1, wall_time_s=99.0)
    for rec in (a, b):
        rec.add(200, -0.123456789)
    assert a.body_bytes() == b.body_bytes()
    header = json.loads(a.header_line())
    assert "wall_time_s" in header


def test_abort_metadata_round_trips(tmp_path):
    rec = RunRecord("x", "a", 1, aborted=True, abort_reason="non-finite loss")
    rec.add(200, -1.0)
    path = tmp_path / "r.rec"
    rec.save(path)
    loaded = load_record(path)
    assert loaded.aborted and loaded.abort_reason == "non-finite loss"


def test_no_temp_file_left_behind(tmp_path):
    rec = RunRecord("x", "a", 1)
    rec.add(200, -1.0)
    rec.save(tmp_path / "r.rec")
    assert [p.name for p in tmp_path.iterdir()] == ["r.rec"]


def test_load_records_dir_empty_raises(tmp_path):
    with pytest.raises(FileNotFoundError, match="no records"):
        load_records_dir(tmp_path)


def test_mismatched_body_line_rejected(tmp_path):
    rec = RunRecord("x", "a", 1)
    rec.add(200, -1.0)
    path = tmp_path / "r.rec"
    rec.save(path)
    text = path.read_text().replace("x,a,1,200", "x,b,1,200")
    path.write_text(text)
    with pytest.raises(ValueError, match="does not match header"):
        load_record(path)
