"""Dashboard and advisor figures.

Everything here is a pure function over immutable snapshots: itemization
and slot distribution over priced events, same-day energy estimation from
prior-day cumulative curves, per-device usage models, and the savings
calculators (standby shedding, efficient-device swap, appliance
replacement via the energy-label model, and load shifting between tariff
slots).
"""

from __future__ import annotations

import configparser
import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .ingestion import ChannelSeries, integrate_energy_kwh
from .model import DeviceMetadata, HemsError, UsageEvent, mc_to_eur
from .tariff import TariffScheme, iter_slot_spans, price_per_kwh, slot_spans

HOURS_PER_YEAR = 8760  # 365 * 24
WEEKS_PER_YEAR = 52


class InsufficientHistoryError(HemsError):
    pass


class LabelError(HemsError):
    pass


# ---------------------------------------------------------------------------
# Itemization and slot distribution


@dataclass(frozen=True)
class ItemizationEntry:
    device_id: str
    energy_kwh: float
    cost_eur: float
    share: float  # fraction of monitored consumption, in [0, 1]


def itemize(
    events: Iterable[UsageEvent],
    period: Optional[tuple[float, float]] = None,
) -> list[ItemizationEntry]:
    """Per-device energy/cost totals with shares of the monitored total.

    `period` is an optional [t_from, t_to) filter on event start times.
    Costs are summed over priced events (in exact milli-cents).
    """
    if period is not None and period[1] < period[0]:
        raise ValueError("malformed period: end before start")
    energy: dict[str, float] = {}
    cost_mc: dict[str, int] = {}
    for event in events:
        if period is not None and not (period[0] <= event.t_start < period[1]):
            continue
        energy[event.device_id] = energy.get(event.device_id, 0.0) + event.energy_kwh
        cost_mc[event.device_id] = cost_mc.get(event.device_id, 0) + (event.cost_mc or 0)
    total = sum(energy.values())
    entries = [
        ItemizationEntry(
            device_id=device,
            energy_kwh=kwh,
            cost_eur=mc_to_eur(cost_mc[device]),
            share=kwh / total if total > 0 else 0.0,
        )
        for device, kwh in energy.items()
    ]
    entries.sort(key=lambda e: (-e.energy_kwh, e.device_id))
    return entries


def slot_distribution(
    events: Iterable[UsageEvent],
    scheme: TariffScheme,
    tz: str | ZoneInfo,
) -> dict[str, dict[str, float]]:
    """Per-device percentage of each slot's total energy.

    Event energy is apportioned to slots by time overlap (uniform power),
    then each slot column is normalized so it sums to 100 across devices;
    a slot with no energy yields an all-zero column.
    """
    by_device: dict[str, dict[str, float]] = {}
    slot_totals: dict[str, float] = {s: 0.0 for s in scheme.slot_ids}
    for event in events:
        spans = slot_spans(event.t_start, event.t_end, scheme, tz)
        span_total = sum(spans.values())
        device = by_device.setdefault(event.device_id, {s: 0.0 for s in scheme.slot_ids})
        for slot, seconds in spans.items():
            kwh = event.energy_kwh * seconds / span_total
            device[slot] += kwh
            slot_totals[slot] += kwh
    return {
        device: {
            slot: (100.0 * kwh / slot_totals[slot] if slot_totals[slot] > 0 else 0.0)
            for slot, kwh in slots.items()
        }
        for device, slots in by_device.items()
    }


def slot_energy_kwh(events: Iterable[UsageEvent], scheme: TariffScheme, tz: str | ZoneInfo) -> dict[str, dict[str, float]]:
    """Per-device absolute energy per slot (kWh), same apportioning as above."""
    by_device: dict[str, dict[str, float]] = {}
    for event in events:
        spans = slot_spans(event.t_start, event.t_end, scheme, tz)
        span_total = sum(spans.values())
        device = by_device.setdefault(event.device_id, {s: 0.0 for s in scheme.slot_ids})
        for slot, seconds in spans.items():
            device[slot] += event.energy_kwh * seconds / span_total
    return by_device


# ---------------------------------------------------------------------------
# Same-day estimation


@dataclass
class DayCurve:
    """Cumulative energy over one local day, for the estimation widget."""

    date: dt.date
    seconds: np.ndarray  # seconds since local midnight, ascending
    cumulative_kwh: np.ndarray
    total_kwh: float
    gap_seconds: float = 0.0

    def cumulative_at(self, second_of_day: float) -> float:
        idx = int(np.searchsorted(self.seconds, second_of_day, side="right")) - 1
        if idx < 0:
            return 0.0
        return float(self.cumulative_kwh[idx])


def day_curve(series: ChannelSeries, date: dt.date, tz: str | ZoneInfo) -> DayCurve:
    """Build the cumulative curve of one local day from a channel series."""
    if isinstance(tz, str):
        tz = ZoneInfo(tz)
    day_start = dt.datetime.combine(date, dt.time(0), tzinfo=tz).timestamp()
    day_end = dt.datetime.combine(date + dt.timedelta(days=1), dt.time(0), tzinfo=tz).timestamp()
    obs = series.observed()
    mask = (obs.t >= day_start) & (obs.t < day_end)
    t, w = obs.t[mask], obs.w[mask]
    if len(t) == 0:
        return DayCurve(date, np.empty(0), np.empty(0), 0.0, gap_seconds=day_end - day_start)
    bridge = ChannelSeries(series.channel_id, t, w, series.direction, series.cadence_s).bridge_s()
    widths = np.minimum(np.append(np.diff(t), bridge), bridge)
    widths = np.minimum(widths, day_end - t)
    energy = np.cumsum(w * widths) / 3.6e6
    covered = float(widths.sum())
    return DayCurve(
        date=date,
        seconds=t - day_start,
        cumulative_kwh=energy,
        total_kwh=float(energy[-1]),
        gap_seconds=(day_end - day_start) - covered,
    )


def estimate_day_total(
    history: Sequence[DayCurve],
    cumulative_so_far_kwh: float,
    second_of_day: float,
    window_days: int = 7,
    max_gap_s: float = 7200.0,
) -> float:
    """Expected day-end total: today so far plus the mean remainder that
    prior days still had ahead of them at this time of day.

    Days with more than `max_gap_s` of unobserved time are skipped; the
    estimate never drops below what has already been measured.
    """
    usable = [d for d in sorted(history, key=lambda d: d.date) if d.gap_seconds <= max_gap_s]
    usable = usable[-window_days:]
    if not usable:
        raise InsufficientHistoryError("need at least one complete prior day")
    remainders = [d.total_kwh - d.cumulative_at(second_of_day) for d in usable]
    estimate = cumulative_so_far_kwh + float(np.mean(remainders))
    return max(estimate, cumulative_so_far_kwh)


def estimate_today(
    consumption_history: Sequence[DayCurve],
    production_history: Sequence[DayCurve],
    consumption_so_far_kwh: float,
    production_so_far_kwh: float,
    second_of_day: float,
    window_days: int = 7,
) -> tuple[float, float]:
    """(expected consumption, expected production) for the current day.

    Consumption history is mandatory; a household without production
    metering gets its cumulative production (normally zero) back unchanged.
    """
    consumption = estimate_day_total(
        consumption_history, consumption_so_far_kwh, second_of_day, window_days)
    if production_history:
        production = estimate_day_total(
            production_history, production_so_far_kwh, second_of_day, window_days)
    else:
        production = production_so_far_kwh
    return consumption, production


# ---------------------------------------------------------------------------
# Usage models


@dataclass
class UsageModel:
    device_id: str
    events_per_week: float
    start_hour_histogram: list[int]  # 24 bins, local start hour
    mean_event_kwh: float
    event_count: int


def build_usage_model(
    events: Iterable[UsageEvent],
    device: DeviceMetadata,
    period: tuple[float, float],
    tz: str | ZoneInfo,
) -> UsageModel:
    """Usage model of one user-driven device over [t_from, t_to)."""
    if not device.user_driven:
        raise HemsError(f"usage models apply to user-driven devices only: {device.device_id}")
    t_from, t_to = period
    if t_to <= t_from:
        raise ValueError("malformed period")
    if isinstance(tz, str):
        tz = ZoneInfo(tz)
    histogram = [0] * 24
    count = 0
    energy = 0.0
    for event in events:
        if event.device_id != device.device_id or not t_from <= event.t_start < t_to:
            continue
        local = dt.datetime.fromtimestamp(event.t_start, tz)
        histogram[local.hour] += 1
        count += 1
        energy += event.energy_kwh
    weeks = (t_to - t_from) / (7 * 86400.0)
    return UsageModel(
        device_id=device.device_id,
        events_per_week=count / weeks,
        start_hour_histogram=histogram,
        mean_event_kwh=energy / count if count else 0.0,
        event_count=count,
    )


# ---------------------------------------------------------------------------
# Savings calculators


@dataclass(frozen=True)
class ApplianceRates:
    """Hourly active draw versus standby draw of one appliance."""

    device_id: str
    active_rate_wh_per_h: float
    standby_power_w: float = 0.0

    def __post_init__(self) -> None:
        if not self.active_rate_wh_per_h > self.standby_power_w >= 0:
            raise ValueError("active rate must exceed standby power, standby >= 0")


@dataclass(frozen=True)
class StandbySchedule:
    """Weekly on-schedule; hours outside it the device could be powered off."""

    weekday_hours: float
    weekend_hours: float

    @property
    def hours_per_year(self) -> float:
        return (self.weekday_hours * 5 + self.weekend_hours * 2) * WEEKS_PER_YEAR


def standby_annual_kwh(standby_power_w: float, schedule: Optional[StandbySchedule] = None) -> float:
    """Yearly energy of a standby draw: 8760 h if always on, else the
    scheduled hours of a 52-week year."""
    if standby_power_w < 0:
        raise ValueError("standby power must be >= 0")
    hours = HOURS_PER_YEAR if schedule is None else schedule.hours_per_year
    return standby_power_w * hours / 1000.0


def estimate_standby_power(
    series: ChannelSeries,
    events: Sequence[UsageEvent],
    ceiling_w: float,
) -> float:
    """Median observed draw below `ceiling_w` outside detected events."""
    obs = series.observed()
    if len(obs) == 0:
        return 0.0
    spans = sorted((e.t_start, e.t_end) for e in events)
    outside = np.ones(len(obs), dtype=bool)
    if spans:
        starts = np.array([s for s, _ in spans])
        ends = np.array([e for _, e in spans])
        idx = np.searchsorted(starts, obs.t, side="right") - 1
        inside = (idx >= 0) & (obs.t < ends[np.clip(idx, 0, None)])
        outside = ~inside
    idle = obs.w[outside & (obs.w < ceiling_w)]
    return float(np.median(idle)) if len(idle) else 0.0


@dataclass(frozen=True)
class SwapEstimate:
    hours_a: float
    hours_b: float
    savings_fraction: float


def swap_savings(
    rate_a_wh_per_h: float,
    energy_a_kwh: float,
    rate_b_wh_per_h: float,
    energy_b_kwh: float,
) -> SwapEstimate:
    """Saving from exchanging the roles of two devices.

    Hours of activity are consumed energy over hourly draw; the swapped
    configuration runs each device for the other one's hours, so the
    fraction saved is 1 - (ha*rb + hb*ra) / (ha*ra + hb*rb).
    """
    if rate_a_wh_per_h <= 0 or rate_b_wh_per_h <= 0:
        raise ValueError("hourly rates must be > 0")
    hours_a = energy_a_kwh * 1000.0 / rate_a_wh_per_h
    hours_b = energy_b_kwh * 1000.0 / rate_b_wh_per_h
    baseline = hours_a * rate_a_wh_per_h + hours_b * rate_b_wh_per_h
    if baseline <= 0:
        return SwapEstimate(hours_a, hours_b, 0.0)
    swapped = hours_a * rate_b_wh_per_h + hours_b * rate_a_wh_per_h
    return SwapEstimate(hours_a, hours_b, 1.0 - swapped / baseline)


@dataclass(frozen=True)
class ApplianceLabel:
    """Energy-label description of a replacement appliance.

    The label's annual energy is (EEI / 100) * SAE with the standard annual
    consumption SAE = M * Veq + N; the equivalent volume scales the rated
    volume by (25 - Tc) / 20 for the compartment temperature Tc.
    """

    eei: float
    volume_liters: float
    category: int
    compartment_temp_c: float = -18.0  # freezer compartment

    def equivalent_volume(self) -> float:
        return self.volume_liters * (25.0 - self.compartment_temp_c) / 20.0

    def annual_kwh(self, coefficients: dict[int, tuple[float, float]]) -> float:
        if self.category not in coefficients:
            raise LabelError(f"unknown label category: {self.category}")
        m, n = coefficients[self.category]
        sae = m * self.equivalent_volume() + n
        return self.eei / 100.0 * sae


def load_label_coefficients(path: str | Path) -> dict[int, tuple[float, float]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    if not parser.read(path, encoding="utf-8"):
        raise LabelError(f"cannot read label coefficient file: {path}")
    table = {}
    for key, value in parser["coefficients"].items():
        m, n = value.split()
        table[int(key)] = (float(m), float(n))
    return table


@dataclass(frozen=True)
class ReplacementEstimate:
    old_kwh_year: float
    new_kwh_year: float
    monthly_saving_kwh: float


def replacement_annual_kwh(
    old_measured_w: Sequence[float],
    target: float | ApplianceLabel,
    coefficients: Optional[dict[int, tuple[float, float]]] = None,
) -> ReplacementEstimate:
    """Yearly consumption before/after replacing always-on appliances.

    `old_measured_w` holds the measured mean draw of each unit being
    replaced; the target is either a label model or a known annual kWh.
    """
    if any(w < 0 for w in old_measured_w):
        raise ValueError("measured powers must be >= 0")
    old = sum(old_measured_w) * HOURS_PER_YEAR / 1000.0
    if isinstance(target, ApplianceLabel):
        if coefficients is None:
            raise LabelError("label coefficients required for a label target")
        new = target.annual_kwh(coefficients)
    else:
        new = float(target)
    return ReplacementEstimate(old, new, (old - new) / 12.0)


def shift_savings(
    l_kwh: float,
    expensive_slot: str,
    cheap_slot: str,
    category: str,
    scheme: TariffScheme,
) -> float:
    """Saving from moving a load between slots: l*t - l*c."""
    if l_kwh < 0:
        raise ValueError("load must be >= 0")
    t = price_per_kwh(expensive_slot, category, scheme)
    c = price_per_kwh(cheap_slot, category, scheme)
    return l_kwh * t - l_kwh * c


# ---------------------------------------------------------------------------
# Fleet statistics (advisor inputs)


def mean_observed_power_w(series: ChannelSeries, t_from: float, t_to: float) -> Optional[float]:
    """Average draw over the observed portion of [t_from, t_to); None when
    nothing was observed."""
    obs = series.observed()
    if len(obs) == 0:
        return None
    bridge = obs.bridge_s()
    ends = np.minimum(np.append(obs.t[1:], np.inf), obs.t + bridge)
    overlap = np.clip(np.minimum(ends, t_to) - np.maximum(obs.t, t_from), 0.0, None)
    seconds = float(overlap.sum())
    if seconds <= 0:
        return None
    joules = float(np.dot(obs.w, overlap))
    return joules / seconds


@dataclass
class DeviceUsageStat:
    """One device's trailing-window figures, as consumed by the advisor."""

    device_id: str
    device_type: str
    user_driven: bool
    has_standby: bool
    mean_power_w: Optional[float]
    standby_power_w: float
    runs: int
    month_cost_eur: float
    avg_event_kwh: float
    monthly_kwh_by_slot: dict[str, float] = field(default_factory=dict)


def device_usage_stat(
    metadata: DeviceMetadata,
    series: Optional[ChannelSeries],
    events: Sequence[UsageEvent],
    window: tuple[float, float],
    scheme: TariffScheme,
    tz: str | ZoneInfo,
    standby_ceiling_w: float = 15.0,
) -> DeviceUsageStat:
    """Collect one device's advisor inputs over a trailing window (the
    engine uses the last 30 days as its month)."""
    t_from, t_to = window
    own = [e for e in events if e.device_id == metadata.device_id and t_from <= e.t_start < t_to]
    by_slot: dict[str, float] = {s: 0.0 for s in scheme.slot_ids}
    for event in own:
        spans = slot_spans(event.t_start, event.t_end, scheme, tz)
        span_total = sum(spans.values())
        for slot, seconds in spans.items():
            by_slot[slot] += event.energy_kwh * seconds / span_total
    total_kwh = sum(e.energy_kwh for e in own)
    return DeviceUsageStat(
        device_id=metadata.device_id,
        device_type=metadata.device_type,
        user_driven=metadata.user_driven,
        has_standby=metadata.has_standby,
        mean_power_w=mean_observed_power_w(series, t_from, t_to) if series is not None else None,
        standby_power_w=estimate_standby_power(series, own, standby_ceiling_w) if series is not None else 0.0,
        runs=len(own),
        month_cost_eur=sum(mc_to_eur(e.cost_mc or 0) for e in own),
        avg_event_kwh=total_kwh / len(own) if own else 0.0,
        monthly_kwh_by_slot=by_slot,
    )


def type_mean_power_w(stats: Iterable[DeviceUsageStat]) -> dict[str, float]:
    """Population mean draw per device type (the cross-household figure the
    diagnostics policy compares against)."""
    sums: dict[str, list[float]] = {}
    for stat in stats:
        if stat.mean_power_w is not None:
            sums.setdefault(stat.device_type, []).append(stat.mean_power_w)
    return {t: float(np.mean(v)) for t, v in sums.items()}


def type_mean_runs(stats: Iterable[DeviceUsageStat]) -> dict[str, float]:
    """Population mean number of runs per device type (user-driven only)."""
    sums: dict[str, list[int]] = {}
    for stat in stats:
        if stat.user_driven:
            sums.setdefault(stat.device_type, []).append(stat.runs)
    return {t: float(np.mean(v)) for t, v in sums.items()}


# ---------------------------------------------------------------------------
# Day summary (dashboard gauges and reports)


@dataclass(frozen=True)
class DaySummary:
    date: dt.date
    consumption_kwh: float
    production_kwh: float
    cost_eur: float


def day_summary(
    consumption: Sequence[ChannelSeries],
    production: Sequence[ChannelSeries],
    date: dt.date,
    scheme: TariffScheme,
    category: str,
    tz: str | ZoneInfo,
) -> DaySummary:
    """Consumption, production and consumption cost of one local day.

    Cost prices the actually-measured energy of each slot span, so it does
    not depend on event detection.
    """
    if isinstance(tz, str):
        tz = ZoneInfo(tz)
    day_start = dt.datetime.combine(date, dt.time(0), tzinfo=tz).timestamp()
    day_end = dt.datetime.combine(date + dt.timedelta(days=1), dt.time(0), tzinfo=tz).timestamp()

    produced = sum(integrate_energy_kwh(s, day_start, day_end) for s in production)
    consumed = 0.0
    cost = 0.0
    for slot, span_start, span_end in iter_slot_spans(day_start, day_end, scheme, tz):
        chunk = sum(integrate_energy_kwh(s, span_start, span_end) for s in consumption)
        consumed += chunk
        cost += chunk * price_per_kwh(slot, category, scheme)
    return DaySummary(date, consumed, produced, cost)
