"""Time-of-use tariff engine.

Classifies instants into tariff slots (weekday-daytime T1 versus nights,
weekends and public holidays in the shipped Italian scheme), resolves the
household's annual consumption category, and prices energy and usage events.
The scheme is immutable after load; every operation here is pure.
"""

from __future__ import annotations

import configparser
import datetime as dt
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Optional
from zoneinfo import ZoneInfo

from .model import HemsError, UsageEvent

_WEEKDAY_NAMES = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"]


class TariffError(HemsError):
    pass


@dataclass(frozen=True)
class SlotRule:
    """One weekly recurrence: given weekdays, half-open local time window."""

    slot_id: str
    weekdays: frozenset[int]  # 0 = Monday
    start_minute: int  # local minutes since midnight, inclusive
    end_minute: int  # exclusive

    def matches(self, weekday: int, minute: int) -> bool:
        return weekday in self.weekdays and self.start_minute <= minute < self.end_minute


@dataclass(frozen=True)
class CategoryBand:
    category_id: str
    lower_kwh_year: Optional[int]  # None = unbounded below
    upper_kwh_year: Optional[int]  # None = unbounded above


class AssignmentMethod(str, enum.Enum):
    MEASURED_365D = "measured_365d"
    ANNUALIZED_PROJECTION = "annualized_projection"
    MANUAL = "manual"


@dataclass(frozen=True)
class CategoryAssignment:
    household_id: str
    category_id: str
    basis_kwh_year: float
    method: AssignmentMethod


@dataclass(frozen=True)
class TariffScheme:
    name: str
    currency: str
    fallback_slot: str
    rules: tuple[SlotRule, ...]
    categories: tuple[CategoryBand, ...]  # ascending by bounds
    prices: dict[tuple[str, str], float]  # (slot, category) -> unit price
    holidays: frozenset[dt.date]

    @property
    def slot_ids(self) -> list[str]:
        seen = {r.slot_id for r in self.rules}
        return sorted(seen | {self.fallback_slot})

    @property
    def category_ids(self) -> list[str]:
        return [c.category_id for c in self.categories]


def _parse_weekdays(spec: str) -> frozenset[int]:
    days: set[int] = set()
    for part in spec.split(","):
        part = part.strip().lower()
        if "-" in part:
            a, b = part.split("-", 1)
            ia, ib = _WEEKDAY_NAMES.index(a), _WEEKDAY_NAMES.index(b)
            if ib < ia:
                raise TariffError(f"bad weekday range: {spec!r}")
            days.update(range(ia, ib + 1))
        else:
            days.add(_WEEKDAY_NAMES.index(part))
    return frozenset(days)


def _parse_minute(hhmm: str) -> int:
    h, m = hhmm.split(":")
    minute = int(h) * 60 + int(m)
    if not 0 <= minute <= 24 * 60:
        raise TariffError(f"time out of range: {hhmm!r}")
    return minute


def _parse_rule(slot_id: str, text: str) -> list[SlotRule]:
    rules = []
    for clause in text.split(";"):
        clause = clause.strip()
        if not clause:
            continue
        try:
            day_spec, window = clause.rsplit(None, 1)
            start, end = window.split("-", 1)
            rule = SlotRule(slot_id, _parse_weekdays(day_spec), _parse_minute(start), _parse_minute(end))
        except (ValueError, IndexError) as exc:
            raise TariffError(f"cannot parse slot rule {clause!r} for {slot_id}") from exc
        if rule.end_minute <= rule.start_minute:
            raise TariffError(f"empty time window in rule {clause!r}")
        rules.append(rule)
    return rules


def _parse_bound(text: str) -> Optional[int]:
    return None if text == "*" else int(text)


def _validate(scheme: TariffScheme) -> None:
    # Explicit rules must not overlap: together with the fallback slot this
    # makes classification a partition of every instant.
    for i, a in enumerate(scheme.rules):
        for b in scheme.rules[i + 1:]:
            if a.weekdays & b.weekdays and a.start_minute < b.end_minute and b.start_minute < a.end_minute:
                raise TariffError(f"overlapping slot rules: {a.slot_id} and {b.slot_id}")
    if any(r.slot_id == scheme.fallback_slot for r in scheme.rules):
        raise TariffError("fallback slot must not carry an explicit rule")

    cats = scheme.categories
    if not cats:
        raise TariffError("no consumption categories defined")
    if cats[0].lower_kwh_year not in (None, 0):
        raise TariffError("first category must be unbounded below")
    if cats[-1].upper_kwh_year is not None:
        raise TariffError("last category must be unbounded above")
    for prev, cur in zip(cats, cats[1:]):
        if prev.upper_kwh_year is None or cur.lower_kwh_year is None:
            raise TariffError("interior category bounds must be finite")
        if cur.lower_kwh_year != prev.upper_kwh_year + 1:
            raise TariffError(
                f"category bounds not contiguous between {prev.category_id} and {cur.category_id}")

    for slot in scheme.slot_ids:
        prices = []
        for cat in scheme.category_ids:
            if (slot, cat) not in scheme.prices:
                raise TariffError(f"missing price for ({slot}, {cat})")
            prices.append(scheme.prices[(slot, cat)])
        if any(b < a for a, b in zip(prices, prices[1:])):
            raise TariffError(f"prices not monotone in category for slot {slot}")


def load_holidays(path: str | Path) -> frozenset[dt.date]:
    """Holiday calendar file: one ISO-8601 date per line, '#' comments."""
    days = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            days.add(dt.date.fromisoformat(line))
    return frozenset(days)


def load_tariff(path: str | Path, holidays: frozenset[dt.date] = frozenset()) -> TariffScheme:
    """Load and validate a tariff scheme file (key/value sections + tables)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # slot and category ids are case-sensitive
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise TariffError(f"cannot read tariff file: {path}")
    try:
        meta = parser["scheme"]
        rules: list[SlotRule] = []
        for slot_id, text in parser["slots"].items():
            rules.extend(_parse_rule(slot_id, text))
        categories = []
        for cat_id, text in parser["categories"].items():
            lower, upper = text.split()
            categories.append(CategoryBand(cat_id, _parse_bound(lower), _parse_bound(upper)))
        categories.sort(key=lambda c: c.lower_kwh_year if c.lower_kwh_year is not None else -1)
        prices = {}
        for key, value in parser["prices"].items():
            slot, cat = key.split(".")
            prices[(slot, cat)] = float(value)
    except (KeyError, ValueError) as exc:
        raise TariffError(f"malformed tariff file {path}: {exc}") from exc
    scheme = TariffScheme(
        name=meta.get("name", Path(path).stem),
        currency=meta.get("currency", "EUR"),
        fallback_slot=meta["fallback_slot"],
        rules=tuple(rules),
        categories=tuple(categories),
        prices=prices,
        holidays=holidays,
    )
    _validate(scheme)
    return scheme


def classify_slot(timestamp: float, scheme: TariffScheme, tz: str | ZoneInfo) -> str:
    """Return the single slot covering a unix instant (total over valid times)."""
    if isinstance(tz, str):
        tz = ZoneInfo(tz)
    local = dt.datetime.fromtimestamp(timestamp, tz)
    if local.date() in scheme.holidays:
        return scheme.fallback_slot
    minute = local.hour * 60 + local.minute
    for rule in scheme.rules:
        if rule.matches(local.weekday(), minute):
            return rule.slot_id
    return scheme.fallback_slot


def determine_category(annual_kwh: float, scheme: TariffScheme) -> str:
    """Category by inclusive annual-kWh bounds."""
    if annual_kwh < 0:
        raise TariffError(f"annual consumption must be >= 0, got {annual_kwh}")
    for band in scheme.categories:
        if band.upper_kwh_year is None or annual_kwh <= band.upper_kwh_year:
            return band.category_id
    raise TariffError("category bands do not cover input")  # unreachable after validation


def annualized_basis(total_kwh: float, days_observed: float) -> float:
    """Project a partial observation to a full year (365/days scaling)."""
    if days_observed <= 0:
        raise TariffError("cannot annualize without observed days")
    return total_kwh * 365.0 / days_observed


def assign_category(
    household_id: str,
    total_kwh: float,
    days_observed: float,
    scheme: TariffScheme,
    manual_category: Optional[str] = None,
) -> CategoryAssignment:
    """Pick the household's category from measurement, projection or override.

    Trailing measured total is used as-is once a full year of data exists;
    shorter observations are annualized. A manual category wins outright.
    """
    if manual_category is not None:
        if manual_category not in scheme.category_ids:
            raise TariffError(f"unknown category: {manual_category}")
        band = next(c for c in scheme.categories if c.category_id == manual_category)
        basis = float(band.lower_kwh_year or 0)
        return CategoryAssignment(household_id, manual_category, basis, AssignmentMethod.MANUAL)
    if days_observed >= 365:
        basis, method = total_kwh, AssignmentMethod.MEASURED_365D
    else:
        basis, method = annualized_basis(total_kwh, days_observed), AssignmentMethod.ANNUALIZED_PROJECTION
    return CategoryAssignment(household_id, determine_category(basis, scheme), basis, method)


def price_per_kwh(slot: str, category: str, scheme: TariffScheme) -> float:
    try:
        return scheme.prices[(slot, category)]
    except KeyError:
        raise TariffError(f"no price for slot {slot!r}, category {category!r}") from None


def cost_of_energy(kwh: float, slot: str, category: str, scheme: TariffScheme) -> float:
    if kwh < 0:
        raise TariffError(f"energy must be >= 0, got {kwh}")
    return kwh * price_per_kwh(slot, category, scheme)


def _next_boundary(local: dt.datetime, scheme: TariffScheme, tz: ZoneInfo) -> dt.datetime:
    """Earliest local instant strictly after `local` where the slot can change."""
    minutes = sorted({m for r in scheme.rules for m in (r.start_minute, r.end_minute) if m < 24 * 60})
    today = local.date()
    current_minute = local.hour * 60 + local.minute + (local.second + local.microsecond / 1e6) / 60.0
    for m in minutes:
        if m > current_minute:
            t = dt.datetime.combine(today, dt.time(m // 60, m % 60), tzinfo=tz)
            if t > local:
                return t
    return dt.datetime.combine(today + dt.timedelta(days=1), dt.time(0, 0), tzinfo=tz)


def iter_slot_spans(
    t_start: float, t_end: float, scheme: TariffScheme, tz: str | ZoneInfo
) -> list[tuple[str, float, float]]:
    """Split [t_start, t_end) at slot boundaries: (slot, span_start, span_end)."""
    if isinstance(tz, str):
        tz = ZoneInfo(tz)
    out: list[tuple[str, float, float]] = []
    t = t_start
    while t < t_end:
        slot = classify_slot(t, scheme, tz)
        boundary = _next_boundary(dt.datetime.fromtimestamp(t, tz), scheme, tz).timestamp()
        chunk_end = min(boundary, t_end)
        if chunk_end <= t:  # defensive: never stall
            chunk_end = t_end
        if out and out[-1][0] == slot:
            out[-1] = (slot, out[-1][1], chunk_end)
        else:
            out.append((slot, t, chunk_end))
        t = chunk_end
    return out


def slot_spans(t_start: float, t_end: float, scheme: TariffScheme, tz: str | ZoneInfo) -> dict[str, float]:
    """Seconds of [t_start, t_end) spent in each slot."""
    spans: dict[str, float] = {}
    for slot, span_start, span_end in iter_slot_spans(t_start, t_end, scheme, tz):
        spans[slot] = spans.get(slot, 0.0) + (span_end - span_start)
    return spans


def cost_of_event(event: UsageEvent, scheme: TariffScheme, category: str, tz: str | ZoneInfo) -> float:
    """Price one event, apportioning energy across slots by time overlap.

    Power is assumed uniform within the event, so each slot receives energy
    proportional to the seconds the event spends in it.
    """
    spans = slot_spans(event.t_start, event.t_end, scheme, tz)
    total = sum(spans.values())
    cost = 0.0
    for slot, seconds in spans.items():
        cost += cost_of_energy(event.energy_kwh * seconds / total, slot, category, scheme)
    return cost
