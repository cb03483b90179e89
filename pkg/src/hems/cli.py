"""Operational command line: ingest, detect, analyze, advise, savings, serve.

Configuration comes from --config or the HEMS_CONFIG environment variable
(built-in defaults otherwise). The clock is injectable with --now so every
time-dependent report is reproducible; the advisor seed is recorded in the
advise output. Exit status is 0 only when no row-level errors occurred.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import io
import json
import sys
from pathlib import Path
from typing import Optional

from . import analytics
from .advisor import FeedbackAction, FeedbackRecord, RejectCause
from .config import load_config
from .model import DeviceMetadata, HemsError, eur_to_mc
from .pipeline import Engine
from .tariff import price_per_kwh


def _parse_now(text: Optional[str]) -> Optional[float]:
    if text is None:
        return None
    try:
        return float(text)
    except ValueError:
        pass
    try:
        parsed = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise SystemExit(f"--now must be unix seconds or ISO-8601, got {text!r}")
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=dt.timezone.utc)
    return parsed.timestamp()


def _emit(payload, fmt: str, out: Optional[str], csv_rows=None) -> None:
    """Write a report as canonical JSON or CSV to stdout or --out."""
    if fmt == "json" or csv_rows is None:
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        for row in csv_rows:
            writer.writerow(row)
        text = buffer.getvalue()
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _eur4(value: float) -> float:
    return round(value, 4)


# -- subcommand handlers -------------------------------------------------------


def cmd_ingest(engine: Engine, args) -> int:
    failures = 0
    for path in args.files:
        summary = engine.ingest_file(path)
        status = "ok" if summary.ok else "errors"
        print(
            f"{summary.source}: {status} rows={summary.rows_total}"
            f" malformed={summary.rows_malformed} dup_rows={summary.duplicates_dropped}"
            f" stored={summary.samples_stored} dup_samples={summary.samples_duplicate}"
        )
        for warning in summary.warnings:
            print(f"  warning: {warning}", file=sys.stderr)
        if not summary.ok:
            failures += 1
    return 1 if failures else 0


def cmd_detect(engine: Engine, args) -> int:
    devices = args.device or [m.device_id for m in engine.store.list_devices()]
    category = engine.category().category_id
    for device_id in devices:
        new, dup = engine.detect_device(device_id, category=category)
        print(f"{device_id}: events_new={new} events_duplicate={dup}")
    return 0


def cmd_analyze(engine: Engine, args) -> int:
    if args.report == "itemization":
        entries = engine.itemization(args.period)
        payload = [
            {"device_id": e.device_id, "energy_kwh": round(e.energy_kwh, 4),
             "cost_eur": _eur4(e.cost_eur), "share": e.share}
            for e in entries
        ]
        rows = [["device_id", "energy_kwh", "cost_eur", "share"]] + [
            [e.device_id, f"{e.energy_kwh:.4f}", f"{e.cost_eur:.4f}", f"{e.share:.9f}"]
            for e in entries
        ]
        _emit(payload, args.format, args.out, rows)
    elif args.report == "slots":
        bounds = engine.period_bounds(args.period)
        distribution = engine.slot_report(*bounds)
        slots = engine.scheme.slot_ids
        payload = {d: {s: round(p, 4) for s, p in sd.items()} for d, sd in distribution.items()}
        rows = [["device_id"] + slots] + [
            [device] + [f"{distribution[device][s]:.4f}" for s in slots]
            for device in sorted(distribution)
        ]
        _emit(payload, args.format, args.out, rows)
    elif args.report == "estimate":
        consumption, production = engine.estimate_today()
        payload = {"consumption_kwh": round(consumption, 4), "production_kwh": round(production, 4)}
        rows = [["consumption_kwh", "production_kwh"], [f"{consumption:.4f}", f"{production:.4f}"]]
        _emit(payload, args.format, args.out, rows)
    elif args.report == "usage":
        if not args.device:
            raise SystemExit("--device is required for the usage report")
        model = engine.usage_model(args.device[0], args.period)
        payload = {
            "device_id": model.device_id,
            "events_per_week": round(model.events_per_week, 4),
            "mean_event_kwh": round(model.mean_event_kwh, 4),
            "event_count": model.event_count,
            "start_hour_histogram": model.start_hour_histogram,
        }
        rows = [["device_id", "events_per_week", "mean_event_kwh", "event_count"]
                + [f"h{h:02d}" for h in range(24)],
                [model.device_id, f"{model.events_per_week:.4f}", f"{model.mean_event_kwh:.4f}",
                 model.event_count] + [str(c) for c in model.start_hour_histogram]]
        _emit(payload, args.format, args.out, rows)
    return 0


def cmd_advise(engine: Engine, args) -> int:
    user = args.user or (engine.cfg.tokens[0].user_id if engine.cfg.tokens else "resident")
    if args.apply_feedback:
        # feedback targets the persisted board from earlier advise runs
        for line in Path(args.apply_feedback).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            entry = json.loads(line)
            record = FeedbackRecord(
                user_id=user,
                advice_id=entry["advice_id"],
                action=FeedbackAction(entry["action"]),
                reject_cause=RejectCause(entry["cause"]) if entry.get("cause") else None,
                time=engine.now(),
            )
            engine.apply_feedback(record)
    ranked = engine.advise(user)
    payload = {
        "user": user,
        "seed": engine.cfg.advisor.rng_seed,
        "advices": [
            {
                "advice_id": a.advice_id,
                "advice_type": a.advice_type.value,
                "device_id": a.device_id,
                "device_type": a.device_type,
                "score": a.score,
                "message": engine.render(a),
            }
            for a in ranked
        ],
    }
    _emit(payload, args.format, args.out)
    return 0


def cmd_savings(engine: Engine, args) -> int:
    if args.calc == "shift":
        if args.l is None or not args.slot_from or not args.slot_to:
            raise SystemExit("shift needs --l, --from and --to")
        category = args.category or engine.category().category_id
        saving = analytics.shift_savings(
            args.l, args.slot_from, args.slot_to, category, engine.scheme)
        payload = {"saving_eur": _eur4(saving), "l_kwh": args.l,
                   "from": args.slot_from, "to": args.slot_to, "category": category}
    elif args.calc == "standby":
        if args.power_w is None:
            raise SystemExit("standby needs --power-w")
        schedule = None
        if args.weekday_hours is not None or args.weekend_hours is not None:
            schedule = analytics.StandbySchedule(
                weekday_hours=args.weekday_hours or 0.0,
                weekend_hours=args.weekend_hours or 0.0,
            )
        kwh_year = analytics.standby_annual_kwh(args.power_w, schedule)
        payload = {"kwh_year": round(kwh_year, 4)}
        if args.category:
            prices = [price_per_kwh(s, args.category, engine.scheme)
                      for s in engine.scheme.slot_ids]
            payload["saving_eur"] = _eur4(kwh_year * sum(prices) / len(prices))
    elif args.calc == "swap":
        needed = (args.rate_a, args.energy_a, args.rate_b, args.energy_b)
        if any(v is None for v in needed):
            raise SystemExit("swap needs --rate-a, --energy-a, --rate-b, --energy-b")
        estimate = analytics.swap_savings(args.rate_a, args.energy_a, args.rate_b, args.energy_b)
        payload = {
            "hours_a": round(estimate.hours_a, 2),
            "hours_b": round(estimate.hours_b, 2),
            "savings_fraction": round(estimate.savings_fraction, 4),
        }
    elif args.calc == "replacement":
        if not args.measured_w:
            raise SystemExit("replacement needs at least one --measured-w")
        if args.target_kwh_year is not None:
            target = args.target_kwh_year
        elif args.eei is not None and args.volume_l is not None and args.label_category is not None:
            target = analytics.ApplianceLabel(
                eei=args.eei, volume_liters=args.volume_l, category=args.label_category,
                compartment_temp_c=args.compartment_temp)
        else:
            raise SystemExit(
                "replacement needs --target-kwh-year or --eei/--volume-l/--label-category")
        estimate = analytics.replacement_annual_kwh(
            args.measured_w, target, engine.label_coefficients)
        payload = {
            "old_kwh_year": round(estimate.old_kwh_year, 4),
            "old_kwh_month": round(estimate.old_kwh_year / 12.0, 4),
            "new_kwh_year": round(estimate.new_kwh_year, 4),
            "monthly_saving_kwh": round(estimate.monthly_saving_kwh, 4),
        }
    else:  # pragma: no cover - argparse restricts choices
        raise SystemExit(f"unknown calculator: {args.calc}")
    _emit(payload, args.format, args.out)
    return 0


def cmd_devices(engine: Engine, args) -> int:
    if args.action == "list":
        payload = [
            {"device_id": m.device_id, "device_type": m.device_type, "room": m.room,
             "mobility": m.mobility.value, "curtailable": m.curtailable,
             "user_driven": m.user_driven, "has_standby": m.has_standby,
             "credit_eur": _eur4(m.credit_mc / 1e5)}
            for m in engine.store.list_devices()
        ]
        _emit(payload, args.format, args.out)
        return 0
    if args.file:
        entries = json.loads(Path(args.file).read_text(encoding="utf-8"))
        for entry in entries:
            credit = entry.pop("credit_eur", 0.0)
            engine.register_device(DeviceMetadata(credit_mc=eur_to_mc(credit), **entry))
            print(f"registered {entry['device_id']}")
        return 0
    if not args.id or not args.type or not args.room:
        raise SystemExit("devices add needs --id, --type and --room (or --file)")
    meta = DeviceMetadata(
        device_id=args.id, device_type=args.type, room=args.room,
        mobility=args.mobility, curtailable=args.curtailable,
        user_driven=args.user_driven, has_standby=args.standby,
        credit_mc=eur_to_mc(args.credit),
    )
    engine.register_device(meta)
    print(f"registered {meta.device_id}")
    return 0


def cmd_serve(engine: Engine, args) -> int:
    import uvicorn

    from .api import build_app

    host, _, port = args.listen.rpartition(":")
    app = build_app(engine, static_dir=args.frontend)
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8421))
    return 0


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hems", description="Household energy management engine")
    parser.add_argument("--config", help="configuration file (or set HEMS_CONFIG)")
    parser.add_argument("--now", help="inject the clock: unix seconds or ISO-8601")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="ingest trace CSV files")
    p.add_argument("files", nargs="+")

    p = sub.add_parser("detect", help="detect, price and credit usage events")
    p.add_argument("--device", action="append", help="device id (default: all registered)")

    p = sub.add_parser("analyze", help="reports over stored data")
    p.add_argument("--report", required=True,
                   choices=["itemization", "slots", "estimate", "usage"])
    p.add_argument("--period", default="day", choices=["day", "week", "month", "year"])
    p.add_argument("--device", action="append", help="device id for the usage report")
    p.add_argument("--format", default="json", choices=["json", "csv"])
    p.add_argument("--out", help="write the report to a file instead of stdout")

    p = sub.add_parser("advise", help="generate and rank advices")
    p.add_argument("--user", help="user id (default: first configured token's user)")
    p.add_argument("--apply-feedback", help="JSON-lines feedback file to apply first")
    p.add_argument("--format", default="json", choices=["json"])
    p.add_argument("--out")

    p = sub.add_parser("savings", help="standalone savings calculators")
    p.add_argument("--calc", required=True,
                   choices=["standby", "swap", "replacement", "shift"])
    p.add_argument("--l", type=float, help="shift: monthly load to move (kWh)")
    p.add_argument("--from", dest="slot_from", help="shift: slot the load is in now")
    p.add_argument("--to", dest="slot_to", help="shift: slot to move the load to")
    p.add_argument("--category", help="consumption category (default: derived)")
    p.add_argument("--power-w", type=float, help="standby: draw in watts")
    p.add_argument("--weekday-hours", type=float, help="standby: scheduled hours per weekday")
    p.add_argument("--weekend-hours", type=float, help="standby: scheduled hours per weekend day")
    p.add_argument("--rate-a", type=float, help="swap: Wh per hour of device A")
    p.add_argument("--energy-a", type=float, help="swap: consumed kWh of device A")
    p.add_argument("--rate-b", type=float, help="swap: Wh per hour of device B")
    p.add_argument("--energy-b", type=float, help="swap: consumed kWh of device B")
    p.add_argument("--measured-w", type=float, action="append",
                   help="replacement: measured mean draw, repeatable")
    p.add_argument("--target-kwh-year", type=float, help="replacement: known target annual kWh")
    p.add_argument("--eei", type=float, help="replacement: label energy efficiency index")
    p.add_argument("--volume-l", type=float, help="replacement: rated volume in liters")
    p.add_argument("--label-category", type=int, help="replacement: label appliance category")
    p.add_argument("--compartment-temp", type=float, default=-18.0,
                   help="replacement: compartment temperature (default -18)")
    p.add_argument("--format", default="json", choices=["json"])
    p.add_argument("--out")

    p = sub.add_parser("devices", help="register or list devices")
    p.add_argument("action", choices=["add", "list"])
    p.add_argument("--id")
    p.add_argument("--type")
    p.add_argument("--room")
    p.add_argument("--mobility", default="fixed", choices=["fixed", "portable"])
    p.add_argument("--curtailable", action="store_true")
    p.add_argument("--user-driven", action="store_true")
    p.add_argument("--standby", action="store_true")
    p.add_argument("--credit", type=float, default=0.0, help="initial credit in EUR")
    p.add_argument("--file", help="JSON file with a list of device entries")
    p.add_argument("--format", default="json", choices=["json"])
    p.add_argument("--out")

    p = sub.add_parser("serve", help="run the HTTP API")
    p.add_argument("--listen", default="127.0.0.1:8421", help="host:port")
    p.add_argument("--frontend", help="serve this directory as the dashboard at /")

    return parser


_HANDLERS = {
    "ingest": cmd_ingest,
    "detect": cmd_detect,
    "analyze": cmd_analyze,
    "advise": cmd_advise,
    "savings": cmd_savings,
    "devices": cmd_devices,
    "serve": cmd_serve,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        engine = Engine.open(cfg, now=_parse_now(args.now))
        return _HANDLERS[args.command](engine, args)
    except HemsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
