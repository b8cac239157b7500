import csv
import io

import numpy as np
import pytest

from boosterlab.cli import main
from boosterlab.planner import read_schedule
from boosterlab.records import append_record
from boosterlab.wavio import read_wav

from conftest import dummy_records_from_table, make_record


@pytest.fixture
def fixture_dir(tmp_path):
    out = tmp_path / "raw"
    assert main(["make-fixtures", "--out", str(out), "--seed", "7"]) == 0
    return out


class TestFilterReport:
    def test_csv_to_stdout(self, capsys):
        assert main(["filter-report", "--fc", "500", "--points", "64"]) == 0
        rows = list(csv.reader(io.StringIO(capsys.readouterr().out)))
        assert rows[0] == ["freq_hz", "magnitude_db"]
        assert len(rows) == 65
        assert abs(float(rows[1][1])) <= 0.1  # flat at 10 Hz

    def test_dip_curve_to_file(self, tmp_path):
        out = tmp_path / "dip.csv"
        assert main(["filter-report", "--fc", "250", "--combine", "1,-1",
                     "--output", str(out)]) == 0
        rows = list(csv.reader(out.open()))[1:]
        freqs = np.array([float(r[0]) for r in rows])
        mags = np.array([float(r[1]) for r in rows])
        dip_freq = freqs[mags.argmin()]
        assert mags.min() <= -40
        assert 200 <= dip_freq <= 300

    def test_bad_combine(self, capsys):
        assert main(["filter-report", "--combine", "2x"]) == 2


class TestMakeFixturesAndPrepare:
    def test_fixture_wavs_written(self, fixture_dir):
        files = sorted(p.name for p in fixture_dir.glob("*.wav"))
        assert files == ["noise_a.wav", "noise_b.wav", "noise_c.wav",
                         "signal_a.wav", "signal_b.wav", "signal_c.wav"]
        samples, rate = read_wav(fixture_dir / "signal_a.wav")
        assert rate == 48000 and samples.ndim == 1

    def test_prepare_manifest(self, fixture_dir, tmp_path, capsys):
        out = tmp_path / "stimuli"
        args = ["prepare", "--out", str(out),
                "--signals"] + [str(fixture_dir / f"signal_{s}.wav") for s in "abc"] \
            + ["--noises"] + [str(fixture_dir / f"noise_{s}.wav") for s in "abc"] \
            + ["--gain-table-out", str(tmp_path / "gains.conf")]
        assert main(args) == 0
        with open(out / "levels.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["id"] for r in rows] == ["signal_a", "signal_b", "signal_c",
                                           "noise_a", "noise_b", "noise_c"]
        by_id = {r["id"]: r for r in rows}
        assert abs(float(by_id["signal_a"]["rms_db_after"]) - (-14.9)) <= 0.5
        assert abs(float(by_id["noise_a"]["rms_db_after"]) - (-8.0)) <= 0.5
        assert (tmp_path / "gains.conf").read_text().count("=") == 9
        assert (out / "signal_a.wav").exists()


class TestPlan:
    def test_schedule_written(self, tmp_path):
        out = tmp_path / "schedule.jsonl"
        assert main(["plan", "--participants", "16", "--seed", "3",
                     "--out", str(out)]) == 0
        rows = read_schedule(out)
        assert len(rows) == 16 * 36
        assert sum(1 for r in rows if r.scored) == 432

    def test_explicit_ids(self, tmp_path):
        out = tmp_path / "two.jsonl"
        assert main(["plan", "--ids", "alice,bob", "--seed", "3",
                     "--out", str(out)]) == 0
        rows = read_schedule(out)
        assert {r.participant for r in rows} == {"alice", "bob"}


class TestAnalyze:
    def _write_log(self, path, with_outlier=True):
        table = {"P1": [0, 0, 4], "P2": [0, 1, 0]}
        if with_outlier:
            table["P9"] = [2, 5, 1]
        for rec in dummy_records_from_table(table):
            append_record(path, rec)
        for pid in table:
            for i in range(4):
                append_record(path, make_record(pid, "B", "C", "low1000",
                                                5 + i % 2, trial=10 + i))

    def test_exclusion_sets_exit_code(self, tmp_path, capsys):
        log = tmp_path / "log.jsonl"
        self._write_log(log)
        out = tmp_path / "stats.csv"
        assert main(["analyze", str(log), "--out", str(out)]) == 3
        err = capsys.readouterr().err
        assert "P9" in err
        with open(out) as fh:
            rows = list(csv.DictReader(fh))
        # P9 is excluded from aggregation
        low_row = next(r for r in rows if r["method"] == "low1000")
        assert int(low_row["n"]) == 8

    def test_allow_exclusions_flag(self, tmp_path):
        log = tmp_path / "log.jsonl"
        self._write_log(log)
        assert main(["analyze", str(log), "--allow-exclusions",
                     "--out", str(tmp_path / "s.csv")]) == 0

    def test_clean_log_exits_zero(self, tmp_path, capsys):
        log = tmp_path / "log.jsonl"
        self._write_log(log, with_outlier=False)
        assert main(["analyze", str(log)]) == 0
        assert "method,fc_hz" in capsys.readouterr().out

    def test_grouping_flag(self, tmp_path, capsys):
        log = tmp_path / "log.jsonl"
        self._write_log(log, with_outlier=False)
        assert main(["analyze", str(log), "--grouping", "by-noise"]) == 0
        out = capsys.readouterr().out
        assert "by-noise" in out

    def test_missing_log(self, tmp_path, capsys):
        assert main(["analyze", str(tmp_path / "absent.jsonl")]) == 2
