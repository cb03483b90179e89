#!/usr/bin/env python3
"""End-to-end demo on a synthetic nine-device household.

Generates a week of 1 Hz traces, then drives the CLI through the full loop:
register devices, ingest, detect + price, report, advise, apply feedback.
Everything lands in a scratch directory; pass one as the first argument to
keep the results.

    python scripts/demo_desk_run.py [workdir]
"""

import datetime as dt
import json
import sys
import tempfile
from pathlib import Path

from hems.cli import main
from hems.synth import default_profiles, synth_fleet, write_day_files

CONFIG_TEMPLATE = """\
[hems]
household_id = demo-home
timezone = Europe/Rome
data_dir = {data_dir}

[detector]
on_threshold_w = 15
off_threshold_w = 10
min_duration_s = 60
merge_gap_s = 30

# the modem idles at 29 W: that is standby, not usage
[detector.modem1]
on_threshold_w = 60
off_threshold_w = 50

[advisor]
tau1 = 0.30
max_displayed = 10
rng_seed = 42

[tokens]
demo-token = demo:read,write
"""


def run(*args: str) -> None:
    code = main(list(args))
    if code != 0:
        raise SystemExit(f"command failed ({code}): {' '.join(args)}")


def main_demo() -> None:
    workdir = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(tempfile.mkdtemp(prefix="hems-demo-"))
    workdir.mkdir(parents=True, exist_ok=True)
    print(f"working directory: {workdir}")

    profiles = default_profiles()
    first_day = dt.date.today() - dt.timedelta(days=8)
    traces = synth_fleet(profiles, first_day, 7, seed=42, with_pv=True)
    paths = write_day_files(traces, workdir / "traces")
    print(f"wrote {len(paths)} synthetic day files")

    config = workdir / "hems.ini"
    config.write_text(CONFIG_TEMPLATE.format(data_dir=workdir / "state"))
    devices = workdir / "devices.json"
    devices.write_text(json.dumps([
        {"device_id": p.device_id, "device_type": p.device_type, "room": p.room,
         "user_driven": p.user_driven, "has_standby": p.has_standby,
         "credit_eur": p.credit_eur}
        for p in profiles
    ], indent=2))

    now = (first_day + dt.timedelta(days=7)).isoformat() + "T08:00:00Z"
    base = ["--config", str(config), "--now", now]

    print("\n== register devices ==")
    run(*base, "devices", "add", "--file", str(devices))
    print("\n== ingest ==")
    run(*base, "ingest", *[str(p) for p in paths])
    print("\n== detect + price ==")
    run(*base, "detect")
    print("\n== itemization (this week) ==")
    run(*base, "analyze", "--report", "itemization", "--period", "week", "--format", "csv")
    print("\n== advices ==")
    run(*base, "advise", "--user", "demo")
    print("\nfeedback example: convert the top advice, then re-rank")
    out = workdir / "advices.json"
    run(*base, "advise", "--user", "demo", "--out", str(out))
    top = json.loads(out.read_text())["advices"][0]["advice_id"]
    feedback = workdir / "feedback.jsonl"
    feedback.write_text(json.dumps({"advice_id": top, "action": "converted"}) + "\n")
    run(*base, "advise", "--user", "demo", "--apply-feedback", str(feedback))


if __name__ == "__main__":
    main_demo()
