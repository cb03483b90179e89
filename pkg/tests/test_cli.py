"""Command-line surface: subcommands, reports, determinism, exit codes."""

import datetime as dt
import json

import numpy as np
import pytest

from hems.cli import main
from hems.ingestion import serialize_trace
from hems.synth import default_profiles, synth_fleet, write_day_files

from conftest import ROME, local_ts, series_1hz

NOW = "2024-05-08T12:00:00+02:00"


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "hems.ini"
    path.write_text(
        "[hems]\n"
        "household_id = testhome\n"
        "timezone = Europe/Rome\n"
        f"data_dir = {tmp_path / 'data'}\n"
        "category = C1\n"
        "[detector]\n"
        "on_threshold_w = 15\n"
        "off_threshold_w = 10\n"
        "min_duration_s = 60\n"
        "merge_gap_s = 30\n"
        "[advisor]\n"
        "tau1 = 0.30\n"
        "max_displayed = 10\n"
        "rng_seed = 42\n"
        "[tokens]\n"
        "cli-token = alice:read,write\n"
    )
    return str(path)


def run(capsys, *args):
    code = main(list(args))
    output = capsys.readouterr().out
    return code, output


class TestSavingsCalculators:
    def test_shift_example(self, capsys, config_path):
        code, out = run(capsys, "--config", config_path, "savings", "--calc", "shift",
                        "--l", "19", "--from", "T1", "--to", "T2", "--category", "C1")
        assert code == 0
        payload = json.loads(out)
        assert payload["saving_eur"] == pytest.approx(0.1210, abs=0.005)

    def test_standby_always_on(self, capsys, config_path):
        code, out = run(capsys, "--config", config_path, "savings", "--calc", "standby",
                        "--power-w", "6.57")
        assert json.loads(out)["kwh_year"] == pytest.approx(57.5532)

    def test_standby_scheduled(self, capsys, config_path):
        code, out = run(capsys, "--config", config_path, "savings", "--calc", "standby",
                        "--power-w", "30", "--weekday-hours", "3", "--weekend-hours", "24")
        assert json.loads(out)["kwh_year"] == pytest.approx(98.28)

    def test_swap(self, capsys, config_path):
        code, out = run(capsys, "--config", config_path, "savings", "--calc", "swap",
                        "--rate-a", "200", "--energy-a", "84.2",
                        "--rate-b", "80", "--energy-b", "11.84")
        payload = json.loads(out)
        assert payload["hours_a"] == pytest.approx(421.0)
        assert payload["hours_b"] == pytest.approx(148.0)
        assert payload["savings_fraction"] == pytest.approx(0.3411, abs=0.01)

    def test_replacement(self, capsys, config_path):
        code, out = run(capsys, "--config", config_path, "savings", "--calc", "replacement",
                        "--measured-w", "47.7", "--measured-w", "28.6",
                        "--target-kwh-year", "258")
        payload = json.loads(out)
        assert payload["old_kwh_year"] == pytest.approx(668.388)
        assert payload["old_kwh_month"] == pytest.approx(55.699)
        assert payload["monthly_saving_kwh"] == pytest.approx(34.199)

    def test_replacement_from_label(self, capsys, config_path):
        code, out = run(capsys, "--config", config_path, "savings", "--calc", "replacement",
                        "--measured-w", "76.3", "--eei", "22", "--volume-l", "302",
                        "--label-category", "7")
        payload = json.loads(out)
        veq = 302 * 43 / 20
        assert payload["new_kwh_year"] == pytest.approx(0.22 * (0.777 * veq + 303), abs=0.01)

    def test_missing_params_exit_nonzero(self, config_path):
        with pytest.raises(SystemExit):
            main(["--config", config_path, "savings", "--calc", "shift"])


class TestDevicesCommand:
    def test_add_and_list(self, capsys, config_path):
        code, _ = run(capsys, "--config", config_path, "devices", "add",
                      "--id", "tv1", "--type", "television", "--room", "living room",
                      "--user-driven", "--standby", "--credit", "5.0")
        assert code == 0
        code, out = run(capsys, "--config", config_path, "devices", "list")
        devices = json.loads(out)
        assert devices[0]["device_id"] == "tv1"
        assert devices[0]["credit_eur"] == 5.0

    def test_unknown_vocabulary_exits_one(self, capsys, config_path):
        code = main(["--config", config_path, "devices", "add",
                     "--id", "x", "--type", "warpdrive", "--room", "kitchen"])
        assert code == 1


class TestIngestCommand:
    def test_clean_file(self, capsys, config_path, tmp_path):
        series = series_1hz(local_ts(2024, 5, 6, 10), np.full(120, 50.0), "tv1")
        trace = tmp_path / "day.csv"
        trace.write_text(serialize_trace({"tv1": series}))
        code, out = run(capsys, "--config", config_path, "ingest", str(trace))
        assert code == 0
        assert "malformed=0" in out

    def test_malformed_rows_exit_nonzero(self, capsys, config_path, tmp_path):
        trace = tmp_path / "bad.csv"
        trace.write_text("timestamp,tv1\n100,5\n101,garbage\n102,6\n")
        code, out = run(capsys, "--config", config_path, "ingest", str(trace))
        assert code == 1
        assert "malformed=1" in out

    def test_unknown_subcommand_usage(self, config_path):
        with pytest.raises(SystemExit) as exc:
            main(["--config", config_path, "frobnicate"])
        assert exc.value.code == 2


@pytest.fixture(scope="module")
def loaded(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("cli-pipeline")
    config_path = tmp_path / "hems.ini"
    config_path.write_text(
        "[hems]\n"
        "household_id = testhome\n"
        "timezone = Europe/Rome\n"
        f"data_dir = {tmp_path / 'data'}\n"
        "category = C1\n"
        "[advisor]\n"
        "rng_seed = 42\n"
        "[tokens]\n"
        "cli-token = alice:read,write\n"
    )
    config_path = str(config_path)
    by_id = {p.device_id: p for p in default_profiles()}
    profiles = [by_id["fridge1"], by_id["washer1"], by_id["tv1"]]
    traces = synth_fleet(profiles, dt.date(2024, 5, 5), 3, seed=5)
    paths = write_day_files(traces, tmp_path / "traces")
    for profile in profiles:
        flags = ["--id", profile.device_id, "--type", profile.device_type,
                 "--room", profile.room, "--credit", "5.0"]
        if profile.user_driven:
            flags.append("--user-driven")
        if profile.has_standby:
            flags.append("--standby")
        assert main(["--config", config_path, "devices", "add"] + flags) == 0
    code = main(["--config", config_path, "ingest"] + [str(p) for p in paths])
    assert code == 0
    assert main(["--config", config_path, "--now", NOW, "detect"]) == 0
    return config_path


class TestPipelineCommands:
    def test_detect_then_itemization_shares_sum_to_one(self, capsys, loaded):
        code, out = run(capsys, "--config", loaded, "--now", NOW,
                        "analyze", "--report", "itemization", "--period", "week")
        entries = json.loads(out)
        assert entries
        assert sum(e["share"] for e in entries) == pytest.approx(1.0, abs=1e-9)

    def test_reports_are_pure_projections(self, capsys, loaded):
        # re-running any report without new data is byte-identical
        for report in ("itemization", "slots", "estimate"):
            _, first = run(capsys, "--config", loaded, "--now", NOW,
                           "analyze", "--report", report, "--period", "week")
            _, second = run(capsys, "--config", loaded, "--now", NOW,
                            "analyze", "--report", report, "--period", "week")
            assert first == second, report

    def test_csv_output(self, capsys, loaded, tmp_path):
        out_file = tmp_path / "report.csv"
        code, _ = run(capsys, "--config", loaded, "--now", NOW,
                      "analyze", "--report", "itemization", "--period", "week",
                      "--format", "csv", "--out", str(out_file))
        assert code == 0
        lines = out_file.read_text().splitlines()
        assert lines[0] == "device_id,energy_kwh,cost_eur,share"
        assert len(lines) > 1

    def test_estimate_report(self, capsys, loaded):
        code, out = run(capsys, "--config", loaded, "--now", NOW,
                        "analyze", "--report", "estimate")
        payload = json.loads(out)
        assert payload["consumption_kwh"] > 0

    def test_slots_report(self, capsys, loaded):
        code, out = run(capsys, "--config", loaded, "--now", NOW,
                        "analyze", "--report", "slots", "--period", "month")
        payload = json.loads(out)
        for slot in ("T1", "T2"):
            total = sum(d[slot] for d in payload.values())
            assert total == pytest.approx(100.0, abs=0.01) or total == 0.0

    def test_usage_report(self, capsys, loaded):
        code, out = run(capsys, "--config", loaded, "--now", NOW,
                        "analyze", "--report", "usage", "--period", "week",
                        "--device", "washer1")
        payload = json.loads(out)
        assert sum(payload["start_hour_histogram"]) == payload["event_count"]

    def test_advise_byte_identical_with_fixed_seed(self, capsys, loaded):
        code_a, out_a = run(capsys, "--config", loaded, "--now", NOW, "advise")
        code_b, out_b = run(capsys, "--config", loaded, "--now", NOW, "advise")
        assert code_a == code_b == 0
        assert out_a == out_b
        payload = json.loads(out_a)
        assert payload["seed"] == 42
        assert payload["advices"]

    def test_advise_feedback_file(self, capsys, loaded, tmp_path):
        # mutates the shared board: keep this the last test in the class
        _, out = run(capsys, "--config", loaded, "--now", NOW, "advise")
        first = json.loads(out)["advices"][0]["advice_id"]
        feedback = tmp_path / "feedback.jsonl"
        feedback.write_text(json.dumps({"advice_id": first, "action": "converted"}) + "\n")
        _, out = run(capsys, "--config", loaded, "--now", NOW,
                     "advise", "--apply-feedback", str(feedback))
        remaining = {a["advice_id"] for a in json.loads(out)["advices"]}
        assert first not in remaining
