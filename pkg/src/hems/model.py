"""Shared domain types for the energy management engine.

Money is held as integer milli-cents (1 EUR = 100_000 mc) so that credit
bookkeeping and cost reconciliation stay exact under accumulation; values
are rendered at 2 decimals for people and 4 decimals on the wire.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

MILLICENTS_PER_EUR = 100_000


class HemsError(Exception):
    """Base class for engine errors."""


def eur_to_mc(eur: float) -> int:
    """Quantize an EUR amount to integer milli-cents (half away from zero)."""
    scaled = eur * MILLICENTS_PER_EUR
    return int(scaled + 0.5) if scaled >= 0 else -int(-scaled + 0.5)


def mc_to_eur(mc: int) -> float:
    return mc / MILLICENTS_PER_EUR


def format_eur(mc: int) -> str:
    """Render milli-cents at 2 decimals, e.g. 950000 -> '9.50'."""
    return f"{mc / MILLICENTS_PER_EUR:.2f}"


class Mobility(str, enum.Enum):
    FIXED = "fixed"
    PORTABLE = "portable"


class Direction(str, enum.Enum):
    CONSUMPTION = "consumption"
    PRODUCTION = "production"


@dataclass
class DeviceMetadata:
    """Annotation describing one monitored device.

    `user_driven` marks appliances operated on explicit demand (washing
    machine) as opposed to autonomous ones (fridge); `credit_mc` is the
    informational per-device budget in milli-cents, never negative.
    """

    device_id: str
    device_type: str
    room: str
    mobility: Mobility = Mobility.FIXED
    curtailable: bool = False
    user_driven: bool = False
    has_standby: bool = False
    credit_mc: int = 0

    def __post_init__(self) -> None:
        if isinstance(self.mobility, str):
            self.mobility = Mobility(self.mobility)
        if self.credit_mc < 0:
            raise ValueError("device credit must be >= 0")

    @property
    def credit_eur(self) -> float:
        return mc_to_eur(self.credit_mc)


@dataclass(frozen=True)
class PowerSample:
    """One timestamped active-power reading on a named channel.

    `power_w` is None when the reading is missing; a missing value is never
    silently coerced to 0 W.
    """

    channel_id: str
    timestamp: float  # unix seconds, UTC
    power_w: Optional[float]
    direction: Direction = Direction.CONSUMPTION


@dataclass
class UsageEvent:
    """One detected (or externally supplied) appliance run.

    Energy is the rectangular integral of the device samples over
    [t_start, t_start + duration). Cost is attached by the tariff engine
    and stays None until the event has been priced.
    """

    device_id: str
    t_start: float  # unix seconds, UTC
    duration_s: float
    energy_kwh: float
    cost_mc: Optional[int] = None

    def __post_init__(self) -> None:
        if self.duration_s <= 0:
            raise ValueError("event duration must be > 0")
        if self.energy_kwh <= 0:
            raise ValueError("event energy must be > 0")

    @property
    def t_end(self) -> float:
        return self.t_start + self.duration_s

    @property
    def cost_eur(self) -> Optional[float]:
        return None if self.cost_mc is None else mc_to_eur(self.cost_mc)

    def identity(self) -> str:
        """Idempotency key: one physical run maps to one ledger entry."""
        return f"{self.device_id}|{self.t_start:.3f}|{self.duration_s:.3f}"


@dataclass
class User:
    user_id: str
    token: str
    display_name: str = ""


@dataclass
class Household:
    """One dwelling: its users, devices and the single active tariff."""

    household_id: str
    timezone: str = "Europe/Rome"
    users: list[User] = field(default_factory=list)
    device_ids: list[str] = field(default_factory=list)
    tariff_name: str = ""
