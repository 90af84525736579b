from dataclasses import replace

import pytest

from campaign import CampaignConfig, Task, run_campaign, run_task, task_seed
from config import CERTIFICATES_FILE, REPORT_FILE, ROWS_FILE, SUITES
from export_utils import write_campaign_artifacts
from helpers import read_jsonl
from iso_engine import OrbitSampleError, TruncationParams


@pytest.fixture
def level_one(tmp_path):
    return CampaignConfig(j=1, pairs=3, seed=0, out=tmp_path / "out")


def test_level_one_campaign_passes_trivially(level_one):
    report = run_campaign(level_one)
    assert report.all_passed
    assert list(report.suites) == list(SUITES)
    assert report.suites["injective"].passed == 0
    assert "0/3" in report.suites["injective"].note


def test_config_validation(level_one):
    with pytest.raises(ValueError):
        replace(level_one, suites=()).validate()
    with pytest.raises(ValueError):
        replace(level_one, suites=("unknown",)).validate()
    with pytest.raises(ValueError):
        replace(level_one, pairs=0).validate()
    with pytest.raises(ValueError):
        replace(level_one, j=0).validate()


def test_params_for_level(level_one):
    assert level_one.params_for(2) == TruncationParams.default_for(2)
    custom = replace(level_one, params=TruncationParams(1, 1, 0))
    assert custom.params_for(2) == TruncationParams(2, 5, 0)


def test_task_seed_is_stable():
    assert task_seed(7, "welldef", 3) == task_seed(7, "welldef", 3)
    assert task_seed(7, "welldef", 3) != task_seed(7, "welldef", 4)
    assert task_seed(7, "welldef", 3, 0) != task_seed(7, "injective", 3, 0)


def test_closedness_and_saturation_at_level_two(tmp_path):
    config = CampaignConfig(j=2, pairs=4, seed=1, out=tmp_path, suites=("closedness", "saturation"))
    report = run_campaign(config)
    assert report.all_passed
    assert report.suites["closedness"].passed == 4
    assert report.certificate_count == 4
    assert all(row["verdict"] == "CertifiedIso" for row in report.rows if row["suite"] == "saturation")


def test_welldef_row_carries_certificate(tmp_path):
    config = CampaignConfig(j=2, pairs=1, seed=7, out=tmp_path, suites=("welldef",))
    outcome = run_task(Task("welldef", 0, config))
    assert outcome.row["passed"]
    assert outcome.row["j"] == 3
    assert outcome.certificates[0]["id"] == outcome.row["certificate_id"]


def test_report_files_are_byte_identical(tmp_path):
    config = CampaignConfig(j=2, pairs=2, seed=3, out=tmp_path, suites=("welldef", "monotonicity"))
    write_campaign_artifacts(run_campaign(config), tmp_path / "first")
    write_campaign_artifacts(run_campaign(config), tmp_path / "second")
    assert read_jsonl(tmp_path / "first" / CERTIFICATES_FILE)
    for name in (REPORT_FILE, ROWS_FILE, CERTIFICATES_FILE):
        assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()


def test_campaign_at_minimal_window_returns_report(tmp_path):
    config = CampaignConfig(
        j=2, pairs=2, seed=0, out=tmp_path, suites=("welldef", "stabilization"), params=TruncationParams(2, 5)
    )
    report = run_campaign(config)
    assert [row["suite"] for row in report.rows] == ["welldef", "welldef", "stabilization", "stabilization"]
    assert not any(row["note"].startswith("wyjątek") for row in report.rows)


def test_task_exception_becomes_failed_row(tmp_path, monkeypatch):
    import campaign

    def broken_sampler(*args, **kwargs):
        raise OrbitSampleError("układ sprzeczny")

    monkeypatch.setattr(campaign, "orbit_sample", broken_sampler)
    report = run_campaign(CampaignConfig(j=2, pairs=2, seed=0, out=tmp_path, suites=("welldef", "closedness")))
    assert not report.all_passed
    assert report.suites["welldef"].failed == 2
    assert report.suites["closedness"].ok
    row = report.rows[0]
    assert row["verdict"] is None
    assert row["note"] == "wyjątek OrbitSampleError: układ sprzeczny"


def test_timings_are_kept_out_of_report(level_one):
    report = run_campaign(level_one)
    assert "timings" not in report.to_record()
    assert len(report.timings) == len(report.rows)


@pytest.mark.slow
def test_full_campaign_at_level_two(tmp_path):
    config = CampaignConfig(j=2, pairs=5, seed=7, out=tmp_path)
    report = run_campaign(config)
    assert report.all_passed, report.to_record()["suites"]


@pytest.mark.slow
@pytest.mark.parametrize("suite", ["welldef", "injective", "saturation", "closedness"])
def test_embedding_suites_at_scale(tmp_path, suite):
    report = run_campaign(CampaignConfig(j=2, pairs=50, seed=11, out=tmp_path, suites=(suite,)))
    assert report.all_passed, report.to_record()["suites"]
    assert len(report.rows) <= 50


@pytest.mark.slow
def test_parallel_workers_match_serial(tmp_path):
    config = CampaignConfig(j=2, pairs=3, seed=5, out=tmp_path, suites=("welldef", "stabilization"))
    serial = run_campaign(config)
    parallel = run_campaign(replace(config, workers=2))
    assert serial.rows == parallel.rows
    assert serial.certificates == parallel.certificates
