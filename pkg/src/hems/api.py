"""Token-authenticated JSON API under /api/v1.

Every call must carry a bearer token from the deployment config; tokens
are compared in constant time and never logged. GET endpoints need the
read scope, mutating ones the write scope. Timestamps on the wire are
ISO-8601 UTC, energies kWh at 4 decimals, money EUR at 4 decimals.
"""

from __future__ import annotations

import datetime as dt
import hmac
from typing import Optional

import numpy as np
from fastapi import Depends, FastAPI, Query, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .advisor import (
    Advice,
    DisabledAdviceError,
    FeedbackAction,
    FeedbackRecord,
    RejectCause,
    UnknownAdviceError,
)
from .analytics import InsufficientHistoryError
from .config import TokenEntry
from .model import DeviceMetadata, HemsError, eur_to_mc, mc_to_eur
from .pipeline import Engine
from .registry import (
    DuplicateDeviceError,
    DuplicateEventError,
    OverlappingEventError,
    UnknownDeviceError,
    VocabularyError,
)
from .tariff import TariffError


class ApiError(Exception):
    def __init__(self, status: int, detail: str):
        self.status = status
        self.detail = detail


def iso_utc(timestamp: float) -> str:
    return (
        dt.datetime.fromtimestamp(timestamp, dt.timezone.utc)
        .isoformat(timespec="seconds")
        .replace("+00:00", "Z")
    )


def parse_iso(text: str) -> float:
    try:
        parsed = dt.datetime.fromisoformat(text.replace("Z", "+00:00"))
    except ValueError:
        raise ApiError(400, f"bad ISO-8601 timestamp: {text!r}") from None
    if parsed.tzinfo is None:
        parsed = parsed.replace(tzinfo=dt.timezone.utc)
    return parsed.timestamp()


def kwh(value: float) -> float:
    return round(value, 4)


def eur(value: float) -> float:
    return round(value, 4)


# -- request bodies ----------------------------------------------------------


class SampleIn(BaseModel):
    t: str
    w: Optional[float] = None


class ReadingsIn(BaseModel):
    channel_id: str
    samples: list[SampleIn]


class EventIn(BaseModel):
    device_id: str
    t_start: str
    duration_s: float
    energy_kwh: Optional[float] = None


class DeviceIn(BaseModel):
    device_id: str
    device_type: str
    room: str
    mobility: str = "fixed"
    curtailable: bool = False
    user_driven: bool = False
    has_standby: bool = False
    credit_eur: float = 0.0


class DevicePatch(BaseModel):
    device_type: Optional[str] = None
    room: Optional[str] = None
    mobility: Optional[str] = None
    curtailable: Optional[bool] = None
    user_driven: Optional[bool] = None
    has_standby: Optional[bool] = None
    credit_eur: Optional[float] = None


class FeedbackIn(BaseModel):
    action: str = Field(description="accept | converted | reject")
    cause: Optional[str] = Field(default=None, description="device_reluctance | advice_mistrust")


# -- app factory ---------------------------------------------------------------


def build_app(engine: Engine, static_dir: Optional[str] = None) -> FastAPI:
    """API under /api/v1; with `static_dir` set, the dashboard is served
    from the same origin (API routes keep precedence over the mount)."""
    app = FastAPI(title="hems", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"])
    tokens = list(engine.cfg.tokens)

    def authenticate(request: Request) -> TokenEntry:
        header = request.headers.get("Authorization", "")
        if not header.startswith("Bearer "):
            raise ApiError(401, "missing bearer token")
        presented = header[len("Bearer "):].strip()
        matched = None
        for entry in tokens:  # constant-time compare, no early exit
            if hmac.compare_digest(presented.encode(), entry.token.encode()):
                matched = entry
        if matched is None:
            raise ApiError(401, "invalid token")
        return matched

    def require(scope: str):
        def dependency(request: Request) -> TokenEntry:
            principal = authenticate(request)
            if scope not in principal.scopes:
                raise ApiError(403, f"token lacks {scope} scope")
            return principal
        return Depends(dependency)

    read, write = require("read"), require("write")

    @app.exception_handler(ApiError)
    async def on_api_error(_request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content={"detail": exc.detail})

    _STATUS = [
        (VocabularyError, 400),
        (DuplicateDeviceError, 409),
        (UnknownDeviceError, 404),
        (DuplicateEventError, 409),
        (OverlappingEventError, 409),
        (UnknownAdviceError, 404),
        (DisabledAdviceError, 409),
        (InsufficientHistoryError, 409),
        (TariffError, 409),
    ]

    @app.exception_handler(HemsError)
    async def on_hems_error(_request, exc: HemsError):
        for klass, status in _STATUS:
            if isinstance(exc, klass):
                return JSONResponse(status_code=status, content={"detail": str(exc)})
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    @app.exception_handler(ValueError)
    async def on_value_error(_request, exc: ValueError):
        return JSONResponse(status_code=400, content={"detail": str(exc)})

    def device_payload(meta: DeviceMetadata) -> dict:
        return {
            "device_id": meta.device_id,
            "device_type": meta.device_type,
            "room": meta.room,
            "mobility": meta.mobility.value,
            "curtailable": meta.curtailable,
            "user_driven": meta.user_driven,
            "has_standby": meta.has_standby,
            "credit_eur": eur(mc_to_eur(meta.credit_mc)),
        }

    def advice_payload(advice: Advice) -> dict:
        params = dict(advice.params)
        for key in ("saving_eur",):
            if key in params:
                params[key] = eur(params[key])
        for key in ("kwh_year", "l_kwh"):
            if key in params:
                params[key] = kwh(params[key])
        return {
            "advice_id": advice.advice_id,
            "advice_type": advice.advice_type.value,
            "device_id": advice.device_id,
            "device_type": advice.device_type,
            "score": advice.score,
            "message": engine.render(advice),
            "params": params,
        }

    # -- ingestion ----------------------------------------------------------

    @app.post("/api/v1/readings")
    def post_readings(body: ReadingsIn, principal: TokenEntry = write):
        rejected = []
        t_list, w_list = [], []
        for index, sample in enumerate(body.samples):
            try:
                ts = parse_iso(sample.t)
            except ApiError as exc:
                rejected.append({"index": index, "reason": exc.detail})
                continue
            if sample.w is not None and sample.w < 0:
                rejected.append({"index": index, "reason": "power must be >= 0 or null"})
                continue
            t_list.append(ts)
            w_list.append(np.nan if sample.w is None else sample.w)
        stored = duplicates = 0
        if t_list:
            stored, duplicates = engine.store.append_samples(
                body.channel_id,
                np.asarray(t_list),
                np.asarray(w_list),
                household_id=engine.cfg.household_id,
                direction=engine._direction_of(body.channel_id),
            )
        status = 400 if rejected and not t_list else 200
        return JSONResponse(status_code=status, content={
            "accepted": stored,
            "duplicates": duplicates,
            "rejected": rejected,
        })

    @app.post("/api/v1/events")
    def post_event(body: EventIn, principal: TokenEntry = write):
        event = engine.add_external_event(
            body.device_id, parse_iso(body.t_start), body.duration_s, body.energy_kwh)
        return {
            "device_id": event.device_id,
            "t_start": iso_utc(event.t_start),
            "duration_s": event.duration_s,
            "energy_kwh": kwh(event.energy_kwh),
            "cost_eur": eur(event.cost_eur or 0.0),
        }

    # -- devices --------------------------------------------------------------

    @app.get("/api/v1/devices")
    def get_devices(principal: TokenEntry = read):
        return [device_payload(m) for m in engine.store.list_devices()]

    @app.post("/api/v1/devices", status_code=201)
    def post_device(body: DeviceIn, principal: TokenEntry = write):
        meta = DeviceMetadata(
            device_id=body.device_id,
            device_type=body.device_type,
            room=body.room,
            mobility=body.mobility,
            curtailable=body.curtailable,
            user_driven=body.user_driven,
            has_standby=body.has_standby,
            credit_mc=eur_to_mc(body.credit_eur),
        )
        engine.register_device(meta)
        return device_payload(engine.store.get_device(body.device_id))

    @app.patch("/api/v1/devices/{device_id}")
    def patch_device(device_id: str, body: DevicePatch, principal: TokenEntry = write):
        changes = {k: v for k, v in body.model_dump().items() if v is not None}
        if "credit_eur" in changes:
            changes["credit_mc"] = eur_to_mc(changes.pop("credit_eur"))
        meta = engine.update_device(device_id, **changes)
        return device_payload(meta)

    # -- events and reports ------------------------------------------------------

    @app.get("/api/v1/events")
    def get_events(
        device: Optional[str] = None,
        t_from: Optional[str] = Query(default=None, alias="from"),
        t_to: Optional[str] = Query(default=None, alias="to"),
        principal: TokenEntry = read,
    ):
        events = engine.store.events_query(
            device_id=device,
            t_from=parse_iso(t_from) if t_from else None,
            t_to=parse_iso(t_to) if t_to else None,
        )
        return [
            {
                "device_id": e.device_id,
                "t_start": iso_utc(e.t_start),
                "duration_s": e.duration_s,
                "energy_kwh": kwh(e.energy_kwh),
                "cost_eur": eur(e.cost_eur) if e.cost_mc is not None else None,
            }
            for e in events
        ]

    @app.get("/api/v1/summary/day")
    def get_day_summary(date: str, principal: TokenEntry = read):
        try:
            day = dt.date.fromisoformat(date)
        except ValueError:
            raise ApiError(400, f"bad date: {date!r}") from None
        summary = engine.day_summary(day)
        return {
            "date": summary.date.isoformat(),
            "consumption_kwh": kwh(summary.consumption_kwh),
            "production_kwh": kwh(summary.production_kwh),
            "cost_eur": eur(summary.cost_eur),
        }

    @app.get("/api/v1/itemization")
    def get_itemization(period: str = "day", principal: TokenEntry = read):
        if period not in ("day", "week", "month", "year"):
            raise ApiError(400, "period must be day|week|month|year")
        entries = engine.itemization(period)
        return [
            {
                "device_id": e.device_id,
                "energy_kwh": kwh(e.energy_kwh),
                "cost_eur": eur(e.cost_eur),
                "share": e.share,
            }
            for e in entries
        ]

    @app.get("/api/v1/estimate/today")
    def get_estimate(principal: TokenEntry = read):
        consumption, production = engine.estimate_today()
        return {"consumption_kwh": kwh(consumption), "production_kwh": kwh(production)}

    @app.get("/api/v1/slots/distribution")
    def get_slot_distribution(month: Optional[str] = None, principal: TokenEntry = read):
        if month is not None:
            try:
                first = dt.date.fromisoformat(month + "-01")
            except ValueError:
                raise ApiError(400, f"month must be YYYY-MM, got {month!r}") from None
            start = dt.datetime.combine(first, dt.time(0), tzinfo=engine.tz).timestamp()
            next_first = (first + dt.timedelta(days=32)).replace(day=1)
            end = dt.datetime.combine(next_first, dt.time(0), tzinfo=engine.tz).timestamp()
            distribution = engine.slot_report(start, end)
        else:
            distribution = engine.slot_report()
        return {
            device: {slot: round(pct, 4) for slot, pct in slots.items()}
            for device, slots in distribution.items()
        }

    # -- advisor ---------------------------------------------------------------

    @app.get("/api/v1/advices")
    def get_advices(principal: TokenEntry = read):
        return [advice_payload(a) for a in engine.advise(principal.user_id)]

    @app.post("/api/v1/advices/{advice_id}/feedback")
    def post_feedback(advice_id: str, body: FeedbackIn, principal: TokenEntry = write):
        try:
            action = FeedbackAction(body.action)
        except ValueError:
            raise ApiError(400, f"unknown action: {body.action!r}") from None
        cause = None
        if body.cause is not None:
            try:
                cause = RejectCause(body.cause)
            except ValueError:
                raise ApiError(400, f"unknown cause: {body.cause!r}") from None
        record = FeedbackRecord(
            user_id=principal.user_id,
            advice_id=advice_id,
            action=action,
            reject_cause=cause,
            time=engine.now(),
        )
        engine.apply_feedback(record)
        return [advice_payload(a) for a in engine.advise(principal.user_id)]

    @app.get("/api/v1/usage/{device_id}")
    def get_usage(device_id: str, period: str = "month", principal: TokenEntry = read):
        if period not in ("day", "week", "month", "year"):
            raise ApiError(400, "period must be day|week|month|year")
        model = engine.usage_model(device_id, period)
        return {
            "device_id": model.device_id,
            "events_per_week": round(model.events_per_week, 4),
            "start_hour_histogram": model.start_hour_histogram,
            "mean_event_kwh": kwh(model.mean_event_kwh),
            "event_count": model.event_count,
        }

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="dashboard")

    return app
