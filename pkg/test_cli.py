import json

import pytest
from click.testing import CliRunner

from cli import cli
from config import CERTIFICATES_FILE, CSV_FILE, REPORT_FILE
from helpers import read_jsonl, write_jsonl

HAND_P = json.dumps({"j": 2, "coeffs": [{"u": 1, "z": 0, "re": "1", "im": "0"}]})
ZERO_FORM = json.dumps({"j": 2, "coeffs": []})


@pytest.fixture
def runner():
    return CliRunner()


def _stdout_records(result):
    return [json.loads(line) for line in result.stdout.splitlines() if line.strip()]


def test_gen_emits_requested_forms(runner):
    result = runner.invoke(cli, ["gen", "--j", "3", "--seed", "5", "--count", "4"])
    assert result.exit_code == 0, result.output
    records = _stdout_records(result)
    assert len(records) == 4
    assert all(record["j"] == 3 for record in records)


def test_gen_is_deterministic(runner):
    first = runner.invoke(cli, ["gen", "--j", "2", "--seed", "1", "--count", "3"])
    second = runner.invoke(cli, ["gen", "--j", "2", "--seed", "1", "--count", "3"])
    assert first.stdout == second.stdout


def test_iso_hand_example(runner):
    result = runner.invoke(cli, ["iso", "--p", HAND_P, "--pprime", ZERO_FORM])
    assert result.exit_code == 0, result.output
    (record,) = _stdout_records(result)
    assert record["verdict"] == "CertifiedNonIso"
    assert record["Mz"] == 4


def test_iso_pairs_file_with_certificate(runner, tmp_path):
    pairs = tmp_path / "pairs.jsonl"
    form = json.loads(HAND_P)
    write_jsonl(pairs, [{"p": form, "pprime": form}])
    result = runner.invoke(cli, ["iso", str(pairs), "--fail-on-undecided"])
    assert result.exit_code == 0, result.output
    (record,) = _stdout_records(result)
    assert record["verdict"] == "CertifiedIso"
    assert record["certificate"]["j"] == 2


def test_iso_requires_input(runner):
    result = runner.invoke(cli, ["iso"])
    assert result.exit_code == 2


def test_iso_rejects_malformed_form(runner):
    result = runner.invoke(cli, ["iso", "--p", '{"j": 2, "coeffs": [{"u": 5}]}', "--pprime", ZERO_FORM])
    assert result.exit_code == 1
    assert "❌" in result.output


def test_phi_and_inverse_round_trip(runner, tmp_path):
    forms = tmp_path / "forms.jsonl"
    images = tmp_path / "images.jsonl"
    back = tmp_path / "back.jsonl"
    runner.invoke(cli, ["gen", "--j", "2", "--count", "3", "--out", str(forms)])

    assert runner.invoke(cli, ["phi", str(forms), "--out", str(images)]).exit_code == 0
    assert all(record["j"] == 3 for record in read_jsonl(images))
    assert runner.invoke(cli, ["phi", str(images), "--inverse", "--out", str(back)]).exit_code == 0
    assert read_jsonl(back) == read_jsonl(forms)


def test_phi_inverse_outside_image_fails(runner, tmp_path):
    forms = tmp_path / "forms.jsonl"
    write_jsonl(forms, [json.loads(HAND_P)])
    result = runner.invoke(cli, ["phi", str(forms), "--inverse"])
    assert result.exit_code == 1


def test_orbit_then_verify(runner, tmp_path):
    forms = tmp_path / "forms.jsonl"
    samples = tmp_path / "samples.jsonl"
    certificates = tmp_path / "certs.jsonl"
    runner.invoke(cli, ["gen", "--j", "2", "--count", "2", "--out", str(forms)])
    result = runner.invoke(cli, ["orbit", str(forms), "--count", "2", "--out", str(samples)])
    assert result.exit_code == 0, result.output

    records = read_jsonl(samples)
    assert len(records) == 4
    write_jsonl(certificates, [record["certificate"] for record in records])
    result = runner.invoke(cli, ["verify", str(certificates)])
    assert result.exit_code == 0
    assert "4/4" in result.output


def test_orbit_at_minimal_window(runner, tmp_path):
    forms = tmp_path / "forms.jsonl"
    runner.invoke(cli, ["gen", "--j", "2", "--count", "2", "--out", str(forms)])
    result = runner.invoke(cli, ["orbit", str(forms), "--U", "2", "--Z", "5"])
    assert result.exit_code == 0, result.output
    records = _stdout_records(result)
    assert [record["certificate"]["params"] for record in records] == [{"U": 2, "Z": 5}] * 2


def test_engine_errors_are_reported(runner, tmp_path, monkeypatch):
    import cli as cli_module
    from iso_engine import OrbitSampleError

    def broken_sampler(*args, **kwargs):
        raise OrbitSampleError("układ sprzeczny")

    monkeypatch.setattr(cli_module, "orbit_sample", broken_sampler)
    forms = tmp_path / "forms.jsonl"
    write_jsonl(forms, [json.loads(HAND_P)])
    result = runner.invoke(cli, ["orbit", str(forms)])
    assert result.exit_code == 1
    assert "❌" in result.output


def test_campaign_and_report(runner, tmp_path):
    out = tmp_path / "run"
    result = runner.invoke(cli, ["campaign", "--j", "1", "--pairs", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / REPORT_FILE).exists()

    result = runner.invoke(cli, ["report", str(out), "--xlsx", "--reverify"])
    assert result.exit_code == 0, result.output
    assert (out / CSV_FILE).exists()
    assert (out / CERTIFICATES_FILE).exists()


def test_campaign_rejects_unknown_suite(runner, tmp_path):
    result = runner.invoke(cli, ["campaign", "--j", "2", "--suites", "bogus", "--out", str(tmp_path)])
    assert result.exit_code == 1
    assert "bogus" in result.output


def test_crosscheck_small_sweep(runner):
    result = runner.invoke(cli, ["crosscheck", "--j", "2", "--pairs", "2"])
    assert result.exit_code == 0, result.output
    assert all(record["agrees"] for record in _stdout_records(result))
