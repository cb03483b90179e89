"""Application layer tying storage, tariff, analytics and advisor together.

The CLI and the HTTP service both drive this single engine, so reports and
advice are identical regardless of the surface. The clock is injectable
(`now`) to make every time-dependent output reproducible.
"""

from __future__ import annotations

import datetime as dt
import json
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from . import advisor as adv
from . import analytics, events as ev, tariff
from .config import AppConfig
from .ingestion import coverage_seconds, integrate_energy_kwh, merge_channels, parse_trace
from .model import (
    Direction,
    DeviceMetadata,
    HemsError,
    Household,
    UsageEvent,
    User,
    eur_to_mc,
)
from .registry import OverlappingEventError, Vocabulary
from .store import Store

TRAILING_WINDOW_S = 30 * 86400.0  # "month" figures use the trailing 30 days


@dataclass
class IngestSummary:
    source: str
    rows_total: int
    rows_malformed: int
    duplicates_dropped: int
    samples_stored: int
    samples_duplicate: int
    warnings: list[str]

    @property
    def ok(self) -> bool:
        return self.rows_malformed == 0


class Engine:
    def __init__(self, cfg: AppConfig, store: Store, now: Optional[float] = None):
        self.cfg = cfg
        self.store = store
        self._now = now
        self._category_cache: Optional[tariff.CategoryAssignment] = None
        self.tz = ZoneInfo(cfg.timezone)
        self.scheme = tariff.load_tariff(cfg.tariff_file, tariff.load_holidays(cfg.holiday_file))
        self.device_vocabulary = Vocabulary.from_file(cfg.device_vocabulary_file, "device type")
        self.room_vocabulary = Vocabulary.from_file(cfg.room_vocabulary_file, "room")
        self.templates = adv.load_templates(cfg.advice_templates_file)
        self.label_coefficients = analytics.load_label_coefficients(cfg.label_coefficients_file)

    @classmethod
    def open(cls, cfg: AppConfig, now: Optional[float] = None) -> "Engine":
        cfg.data_dir.mkdir(parents=True, exist_ok=True)
        return cls(cfg, Store(cfg.db_path), now=now)

    def now(self) -> float:
        return self._now if self._now is not None else time.time()

    def household(self) -> Household:
        """The deployment's single household: its users, devices and the one
        active tariff scheme."""
        return Household(
            household_id=self.cfg.household_id,
            timezone=self.cfg.timezone,
            users=[User(user_id=t.user_id, token=t.token) for t in self.cfg.tokens],
            device_ids=[m.device_id for m in self.store.list_devices()],
            tariff_name=self.scheme.name,
        )

    # -- devices -------------------------------------------------------------

    def register_device(self, meta: DeviceMetadata) -> str:
        meta.device_type = self.device_vocabulary.require(meta.device_type)
        meta.room = self.room_vocabulary.require(meta.room)
        return self.store.add_device(self.cfg.household_id, meta)

    def update_device(self, device_id: str, **changes) -> DeviceMetadata:
        if "device_type" in changes:
            changes["device_type"] = self.device_vocabulary.require(changes["device_type"])
        if "room" in changes:
            changes["room"] = self.room_vocabulary.require(changes["room"])
        return self.store.update_device(device_id, **changes)

    # -- ingestion -----------------------------------------------------------

    def _direction_of(self, channel_id: str) -> Direction:
        if channel_id in self.cfg.production_channels:
            return Direction.PRODUCTION
        return Direction.CONSUMPTION

    def ingest_bytes(self, data: bytes | str, source: str = "<memory>") -> IngestSummary:
        result = parse_trace(data)
        self._category_cache = None  # new data can shift the derived category
        stored = duplicate = 0
        for channel_id, series in result.channels.items():
            n_stored, n_dup = self.store.append_samples(
                channel_id, series.t, series.w,
                household_id=self.cfg.household_id,
                direction=self._direction_of(channel_id),
            )
            stored += n_stored
            duplicate += n_dup
        return IngestSummary(
            source=source,
            rows_total=result.stats.rows_total,
            rows_malformed=result.stats.rows_malformed,
            duplicates_dropped=result.stats.duplicates_dropped,
            samples_stored=stored,
            samples_duplicate=duplicate,
            warnings=list(result.stats.warnings),
        )

    def ingest_file(self, path: str | Path) -> IngestSummary:
        summary = self.ingest_bytes(Path(path).read_bytes(), source=str(path))
        return summary

    # -- tariff context --------------------------------------------------------

    def category(self) -> tariff.CategoryAssignment:
        """Household consumption category: manual override, measured year,
        or annualized projection over the observed days.

        The derivation is precomputed and cached in the store behind a
        sample-store watermark, so repeated calls avoid rescanning traces.
        """
        if self._category_cache is not None:
            return self._category_cache
        if self.cfg.manual_category:
            assignment = tariff.assign_category(
                self.cfg.household_id, 0.0, 0.0, self.scheme, self.cfg.manual_category)
            self._category_cache = assignment
            return assignment

        watermark = list(self.store.sample_watermark())
        cached = self.store.get_derived("category_basis")
        if cached is not None:
            state = json.loads(cached)
            if state["watermark"] == watermark:
                assignment = tariff.assign_category(
                    self.cfg.household_id, state["total_kwh"], state["days_observed"],
                    self.scheme)
                self._category_cache = assignment
                return assignment

        # "days of data" is the observed coverage, not calendar-date touches;
        # the longest-covered channel stands in for the household's metering span.
        total = 0.0
        best_coverage = 0.0
        for channel_id, _hh, direction in self.store.channels(Direction.CONSUMPTION):
            series = self.store.sample_range(channel_id)
            if not len(series):
                continue
            total += integrate_energy_kwh(series, series.t[0], series.t[-1] + 1)
            best_coverage = max(best_coverage, coverage_seconds(series))
        if best_coverage <= 0:
            raise tariff.TariffError(
                "no consumption data to derive a category; set one in the config")
        days_observed = best_coverage / 86400.0
        self.store.set_derived("category_basis", json.dumps(
            {"watermark": watermark, "total_kwh": total, "days_observed": days_observed}))
        assignment = tariff.assign_category(
            self.cfg.household_id, total, days_observed, self.scheme)
        self._category_cache = assignment
        return assignment

    # -- event detection and pricing -------------------------------------------

    def price_event(self, event: UsageEvent, category: Optional[str] = None) -> UsageEvent:
        cat = category or self.category().category_id
        cost = tariff.cost_of_event(event, self.scheme, cat, self.tz)
        event.cost_mc = eur_to_mc(cost)
        return event

    def detect_device(
        self,
        device_id: str,
        t_from: Optional[float] = None,
        t_to: Optional[float] = None,
        category: Optional[str] = None,
    ) -> tuple[int, int]:
        """Detect, price, persist and credit-apply events for one device.

        Re-running over the same data is a no-op: detection is
        deterministic, the event store dedups on identity and the credit
        ledger refuses replays. Returns (new events, duplicates).
        """
        meta = self.store.get_device(device_id)  # raises for unknown device
        series = self.store.sample_range(device_id, t_from, t_to)
        detected = ev.detect_events(series, self.cfg.detector_for(device_id), device_id=device_id)
        cat = category or self.category().category_id
        for event in detected:
            self.price_event(event, cat)
        new, dup, conflicts = self.store.store_events(detected)
        if conflicts:
            raise HemsError(
                f"{conflicts} detected events overlap stored ones for {device_id};"
                " was the detector reconfigured? Clear its events before re-detecting")
        for event in detected:
            if not self.store.credit_applied(event):
                self.store.apply_event_credit(event)
        return new, dup

    def add_external_event(
        self,
        device_id: str,
        t_start: float,
        duration_s: float,
        energy_kwh: Optional[float] = None,
    ) -> UsageEvent:
        """Accept a manually defined event; energy is integrated from the
        stored samples when the caller does not supply it."""
        self.store.get_device(device_id)
        if energy_kwh is None:
            series = self.store.sample_range(device_id)
            energy_kwh = ev.compute_event_energy(series, t_start, duration_s)
        event = UsageEvent(device_id, t_start, duration_s, energy_kwh)
        if self.store.overlapping_event_exists(event):
            raise OverlappingEventError(
                f"event overlaps a stored event for {device_id}")
        self.price_event(event)
        self.store.store_events([event])
        if not self.store.credit_applied(event):
            self.store.apply_event_credit(event)
        return event

    # -- reports -----------------------------------------------------------------

    def period_bounds(self, period: str, now: Optional[float] = None) -> tuple[float, float]:
        """Local calendar bounds of the current day/week/month/year."""
        instant = dt.datetime.fromtimestamp(now if now is not None else self.now(), self.tz)
        day = instant.date()
        if period == "day":
            start, end = day, day + dt.timedelta(days=1)
        elif period == "week":
            start = day - dt.timedelta(days=day.weekday())
            end = start + dt.timedelta(days=7)
        elif period == "month":
            start = day.replace(day=1)
            end = (start + dt.timedelta(days=32)).replace(day=1)
        elif period == "year":
            start = day.replace(month=1, day=1)
            end = start.replace(year=start.year + 1)
        else:
            raise ValueError(f"unknown period: {period!r}")
        to_ts = lambda d: dt.datetime.combine(d, dt.time(0), tzinfo=self.tz).timestamp()
        return to_ts(start), to_ts(end)

    def itemization(self, period: str = "day") -> list[analytics.ItemizationEntry]:
        bounds = self.period_bounds(period)
        return analytics.itemize(self.store.events_query(), period=bounds)

    def slot_report(self, t_from: Optional[float] = None, t_to: Optional[float] = None):
        events = self.store.events_query(t_from=t_from, t_to=t_to)
        return analytics.slot_distribution(events, self.scheme, self.tz)

    def _household_series(self, direction: Direction, t_from: float, t_to: float):
        parts = [
            self.store.sample_range(cid, t_from, t_to)
            for cid, _hh, _d in self.store.channels(direction)
        ]
        parts = [p for p in parts if len(p)]
        if not parts:
            return None
        return merge_channels(parts, out_channel_id=f"household-{direction.value}")

    def estimate_today(self, window_days: int = 7) -> tuple[float, float]:
        now = self.now()
        local = dt.datetime.fromtimestamp(now, self.tz)
        today = local.date()
        day_start = dt.datetime.combine(today, dt.time(0), tzinfo=self.tz).timestamp()
        second_of_day = now - day_start

        def curves(direction: Direction) -> tuple[list[analytics.DayCurve], float]:
            history = []
            for offset in range(window_days, 0, -1):
                date = today - dt.timedelta(days=offset)
                d_start = dt.datetime.combine(date, dt.time(0), tzinfo=self.tz).timestamp()
                d_end = dt.datetime.combine(date + dt.timedelta(days=1), dt.time(0), tzinfo=self.tz).timestamp()
                series = self._household_series(direction, d_start, d_end)
                if series is not None:
                    history.append(analytics.day_curve(series, date, self.tz))
            series_today = self._household_series(direction, day_start, now)
            so_far = 0.0
            if series_today is not None:
                so_far = integrate_energy_kwh(series_today, day_start, now)
            return history, so_far

        cons_history, cons_so_far = curves(Direction.CONSUMPTION)
        prod_history, prod_so_far = curves(Direction.PRODUCTION)
        return analytics.estimate_today(
            cons_history, prod_history, cons_so_far, prod_so_far, second_of_day, window_days)

    def day_summary(self, date: dt.date) -> analytics.DaySummary:
        day_start = dt.datetime.combine(date, dt.time(0), tzinfo=self.tz).timestamp()
        day_end = dt.datetime.combine(date + dt.timedelta(days=1), dt.time(0), tzinfo=self.tz).timestamp()
        consumption = [
            self.store.sample_range(cid, day_start, day_end)
            for cid, _hh, _d in self.store.channels(Direction.CONSUMPTION)
        ]
        production = [
            self.store.sample_range(cid, day_start, day_end)
            for cid, _hh, _d in self.store.channels(Direction.PRODUCTION)
        ]
        return analytics.day_summary(
            [s for s in consumption if len(s)], [s for s in production if len(s)],
            date, self.scheme, self.category().category_id, self.tz)

    def usage_model(self, device_id: str, period: str = "month") -> analytics.UsageModel:
        meta = self.store.get_device(device_id)
        bounds = self.period_bounds(period)
        return analytics.build_usage_model(self.store.events_query(), meta, bounds, self.tz)

    # -- advisor -------------------------------------------------------------------

    def fleet_stats(self) -> list[analytics.DeviceUsageStat]:
        now = self.now()
        window = (now - TRAILING_WINDOW_S, now)
        events = self.store.events_query()
        stats = []
        for meta in self.store.list_devices():
            series = self.store.sample_range(meta.device_id, window[0], window[1])
            stats.append(analytics.device_usage_stat(
                meta, series if len(series) else None, events, window, self.scheme, self.tz,
                standby_ceiling_w=self.cfg.detector_for(meta.device_id).off_threshold_w + 5.0,
            ))
        return stats

    def advise(self, user_id: str) -> list[adv.Advice]:
        """Run all generators, merge with persisted state, return the
        ordered active list."""
        stats = self.fleet_stats()
        cat = self.category().category_id
        candidates = (
            adv.generate_diagnostics(stats, analytics.type_mean_power_w(stats), self.cfg.advisor, user_id)
            + adv.generate_shifting(stats, self.scheme, cat, self.cfg.advisor, user_id)
            + adv.generate_standby(stats, adv.mean_unit_price(self.scheme, cat), user_id)
            + adv.generate_curtailment(stats, analytics.type_mean_runs(stats), user_id)
        )
        board = self.store.load_advices(user_id)
        merged = adv.merge_candidates(board, candidates)
        self.store.save_advices(merged)
        return adv.active_advices(merged, candidates, self.cfg.advisor)

    def apply_feedback(self, record: adv.FeedbackRecord) -> None:
        board = self.store.load_advices(record.user_id)
        changed = adv.apply_feedback(board, record)
        self.store.save_advices(changed)
        self.store.append_feedback(record)

    def render(self, advice: adv.Advice) -> str:
        return adv.render_message(advice, self.templates)
