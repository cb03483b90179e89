"""Personalized efficiency advice: generation, feedback scoring, ranking.

Four candidate generators map fleet statistics to advices (appliance
diagnostics, load shifting, standby shedding, usage curtailment). Explicit
feedback then shapes what surfaces: "I'm already doing it" retires an
advice for good, "Ok thanks" raises its usefulness score, and "No thanks"
lowers the score of every enabled advice sharing the rejected advice type
or device type, depending on the cause the user picks. Ranking is by score
with a seeded random tie-break, so a fixed seed reproduces the exact order.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .analytics import DeviceUsageStat, shift_savings, standby_annual_kwh
from .model import HemsError
from .tariff import TariffScheme, price_per_kwh


class AdviceError(HemsError):
    pass


class UnknownAdviceError(AdviceError):
    pass


class DisabledAdviceError(AdviceError):
    """Feedback arrived for an advice that conversion already retired."""


class AdviceType(str, enum.Enum):
    DIAGNOSTICS = "diagnostics"
    SHIFTING = "shifting"
    STANDBY = "standby"
    CURTAILMENT = "curtailment"


class FeedbackAction(str, enum.Enum):
    ACCEPT = "accept"  # "Ok thanks"
    CONVERTED = "converted"  # "I'm already doing it"
    REJECT = "reject"  # "No thanks"


class RejectCause(str, enum.Enum):
    DEVICE_RELUCTANCE = "device_reluctance"
    ADVICE_MISTRUST = "advice_mistrust"


@dataclass
class Advice:
    advice_id: str
    user_id: str
    advice_type: AdviceType
    device_type: str
    device_id: str
    template_id: str
    params: dict = field(default_factory=dict)
    enabled: bool = True
    score: int = 0

    def identity(self) -> tuple[str, str, str]:
        return (self.user_id, self.advice_type.value, self.device_id)


def advice_id_for(user_id: str, advice_type: AdviceType, device_id: str) -> str:
    return f"{user_id}:{advice_type.value}:{device_id}"


@dataclass(frozen=True)
class FeedbackRecord:
    user_id: str
    advice_id: str
    action: FeedbackAction
    reject_cause: Optional[RejectCause] = None
    time: float = 0.0

    def __post_init__(self) -> None:
        if (self.action is FeedbackAction.REJECT) != (self.reject_cause is not None):
            raise ValueError("reject_cause must be present exactly when action is reject")


@dataclass(frozen=True)
class AdvisorConfig:
    tau1: float = 0.30  # diagnostics threshold: advise above (1 + tau1) * type mean
    max_displayed: int = 10
    rng_seed: int = 0
    min_saving_eur: float = 0.01  # shifting advices at or below this are suppressed

    def __post_init__(self) -> None:
        if self.tau1 <= 0:
            raise ValueError("tau1 must be > 0")


# ---------------------------------------------------------------------------
# Candidate generators


def _advice(user_id: str, advice_type: AdviceType, stat: DeviceUsageStat, params: dict) -> Advice:
    return Advice(
        advice_id=advice_id_for(user_id, advice_type, stat.device_id),
        user_id=user_id,
        advice_type=advice_type,
        device_type=stat.device_type,
        device_id=stat.device_id,
        template_id=advice_type.value,
        params=params,
    )


def generate_diagnostics(
    stats: Sequence[DeviceUsageStat],
    type_mean_power_w: dict[str, float],
    cfg: AdvisorConfig,
    user_id: str,
) -> list[Advice]:
    """Replacement advice for autonomous devices drawing strictly more than
    (1 + tau1) times their type's population mean."""
    out = []
    for stat in stats:
        if stat.user_driven or stat.mean_power_w is None:
            continue
        mean = type_mean_power_w.get(stat.device_type)
        if mean is None or mean <= 0:
            continue  # no population average for this type
        if stat.mean_power_w > (1.0 + cfg.tau1) * mean:
            out.append(_advice(user_id, AdviceType.DIAGNOSTICS, stat, {
                "device": stat.device_id,
                "ratio": stat.mean_power_w / mean,
                "device_mean_w": stat.mean_power_w,
                "type_mean_w": mean,
            }))
    return out


def generate_shifting(
    stats: Sequence[DeviceUsageStat],
    scheme: TariffScheme,
    category: str,
    cfg: AdvisorConfig,
    user_id: str,
) -> list[Advice]:
    """Suggest running user-driven devices in the cheapest slot.

    The shiftable load l is the device's monthly energy in the most
    expensive slot; the attached saving is l*t - l*c. Candidates are ranked
    by average per-event consumption. A flat tariff yields nothing.
    """
    prices = {slot: price_per_kwh(slot, category, scheme) for slot in scheme.slot_ids}
    if len(set(prices.values())) < 2:
        return []
    expensive = max(prices, key=lambda s: (prices[s], s))
    cheapest = min(prices, key=lambda s: (prices[s], s))
    candidates = []
    for stat in stats:
        if not stat.user_driven:
            continue
        load = stat.monthly_kwh_by_slot.get(expensive, 0.0)
        saving = shift_savings(load, expensive, cheapest, category, scheme)
        if saving <= cfg.min_saving_eur:
            continue
        candidates.append((stat, load, saving))
    candidates.sort(key=lambda c: (-c[0].avg_event_kwh, -c[1], c[0].device_id))
    return [
        _advice(user_id, AdviceType.SHIFTING, stat, {
            "device": stat.device_id,
            "slot": cheapest,
            "l_kwh": load,
            "saving_eur": saving,
        })
        for stat, load, saving in candidates
    ]


def generate_standby(
    stats: Sequence[DeviceUsageStat],
    mean_unit_price_eur: float,
    user_id: str,
) -> list[Advice]:
    """One advice per standby-capable device, priced at the household's
    mean unit price. Fires unconditionally on the standby flag (no
    occupancy model)."""
    out = []
    for stat in stats:
        if not stat.has_standby:
            continue
        kwh_year = standby_annual_kwh(stat.standby_power_w)
        out.append(_advice(user_id, AdviceType.STANDBY, stat, {
            "device": stat.device_id,
            "kwh_year": kwh_year,
            "saving_eur": kwh_year * mean_unit_price_eur,
        }))
    return out


def generate_curtailment(
    stats: Sequence[DeviceUsageStat],
    type_mean_runs: dict[str, float],
    user_id: str,
) -> list[Advice]:
    """Suggest cutting usage of user-driven devices run more often than
    their type's average, ranked by (positive deviation, cost).

    The yearly figure scales this month's running cost by the excess
    fraction and annualizes it: cost * (excess / runs) * 12.
    """
    candidates = []
    for stat in stats:
        if not stat.user_driven or stat.runs == 0:
            continue
        mean = type_mean_runs.get(stat.device_type)
        if mean is None:
            continue
        excess = stat.runs - mean
        if excess <= 0:
            continue
        saving = stat.month_cost_eur * (excess / stat.runs) * 12.0
        candidates.append((stat, excess, saving))
    candidates.sort(key=lambda c: (-c[1], -c[0].month_cost_eur, c[0].device_id))
    return [
        _advice(user_id, AdviceType.CURTAILMENT, stat, {
            "device": stat.device_id,
            "runs": excess,
            "saving_eur": saving,
        })
        for stat, excess, saving in candidates
    ]


def mean_unit_price(scheme: TariffScheme, category: str) -> float:
    """Arithmetic mean of the category's slot prices."""
    prices = [price_per_kwh(slot, category, scheme) for slot in scheme.slot_ids]
    return sum(prices) / len(prices)


# ---------------------------------------------------------------------------
# State merge, feedback, ranking


def merge_candidates(existing: Iterable[Advice], candidates: Sequence[Advice]) -> list[Advice]:
    """Fold freshly generated candidates into the persisted board.

    Identity is (user, advice type, device); a known advice keeps its score
    and enabled flag (conversion is permanent) while its figures refresh,
    and unknown ones join with score 0.
    """
    board = {a.identity(): a for a in existing}
    for candidate in candidates:
        known = board.get(candidate.identity())
        if known is None:
            board[candidate.identity()] = replace(candidate)
        else:
            known.params = dict(candidate.params)
            known.template_id = candidate.template_id
            known.device_type = candidate.device_type
    return list(board.values())


def apply_feedback(advices: Sequence[Advice], record: FeedbackRecord) -> list[Advice]:
    """Apply one feedback record in place; returns the advices it changed.

    Converted advices are disabled for good; accepts raise the advice's
    score by one; rejects lower by one the score of every enabled advice of
    the same user sharing the advice type (mistrust) or the device type
    (reluctance), the rejected advice included.
    """
    target = next((a for a in advices if a.advice_id == record.advice_id
                   and a.user_id == record.user_id), None)
    if target is None:
        raise UnknownAdviceError(f"unknown advice: {record.advice_id}")
    if not target.enabled:
        raise DisabledAdviceError(f"advice is disabled: {record.advice_id}")

    if record.action is FeedbackAction.CONVERTED:
        target.enabled = False
        return [target]
    if record.action is FeedbackAction.ACCEPT:
        target.score += 1
        return [target]

    if record.reject_cause is RejectCause.ADVICE_MISTRUST:
        hit = [a for a in advices if a.enabled and a.user_id == record.user_id
               and a.advice_type is target.advice_type]
    else:
        hit = [a for a in advices if a.enabled and a.user_id == record.user_id
               and a.device_type == target.device_type]
    for advice in hit:
        advice.score -= 1
    return hit


def _tie_key(seed: int, advice_id: str) -> str:
    return hashlib.sha256(f"{seed}|{advice_id}".encode()).hexdigest()


def rank_advices(advices: Iterable[Advice], rng_seed: int) -> list[Advice]:
    """Descending score; ties ordered by a seeded per-identity draw, so the
    result is a pure function of (scores, identities, seed)."""
    return sorted(advices, key=lambda a: (-a.score, _tie_key(rng_seed, a.advice_id)))


def active_advices(
    board: Iterable[Advice],
    candidates: Sequence[Advice],
    cfg: AdvisorConfig,
) -> list[Advice]:
    """The ordered list a user sees: current candidates with persisted
    state, minus disabled ones, deduplicated, ranked and truncated."""
    state = {a.identity(): a for a in board}
    seen: set[tuple[str, str, str]] = set()
    merged: list[Advice] = []
    for candidate in candidates:
        identity = candidate.identity()
        if identity in seen:
            continue
        seen.add(identity)
        advice = state.get(identity, candidate)
        if advice.enabled:
            merged.append(advice)
    ranked = rank_advices(merged, cfg.rng_seed)
    return ranked[: cfg.max_displayed]


# ---------------------------------------------------------------------------
# Message templates


def load_templates(path: str | Path) -> dict[str, str]:
    """Template file: `advice_type = message with {placeholders}` lines."""
    templates = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, text = line.split("=", 1)
        templates[key.strip()] = text.strip()
    return templates


_PARAM_FORMATS = {
    "saving_eur": "{:.2f}",
    "kwh_year": "{:.1f}",
    "l_kwh": "{:.1f}",
    "ratio": "{:.2f}",
    "device_mean_w": "{:.0f}",
    "type_mean_w": "{:.0f}",
    "runs": "{:.0f}",
}


class _Verbatim(dict):
    def __missing__(self, key: str) -> str:
        return "{" + key + "}"


def render_message(advice: Advice, templates: dict[str, str]) -> str:
    template = templates.get(advice.template_id, "{device}")
    shown = {
        key: _PARAM_FORMATS[key].format(value) if key in _PARAM_FORMATS else str(value)
        for key, value in advice.params.items()
    }
    return template.format_map(_Verbatim(shown))
