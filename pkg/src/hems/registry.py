"""Device registry and per-device credit ledger.

The registry gates device metadata through controlled vocabularies (device
types and rooms, one editable term-per-line file each). The ledger debits a
device's credit when a priced usage event is applied; application is
idempotent by event identity and the balance floors at zero, so credit is
informational feedback rather than an enforcement mechanism.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Iterable, Optional

from .model import DeviceMetadata, HemsError, UsageEvent


class VocabularyError(HemsError):
    """A metadata term is not in the controlled vocabulary."""


class DuplicateDeviceError(HemsError):
    pass


class UnknownDeviceError(HemsError):
    pass


class UnpricedEventError(HemsError):
    pass


class DuplicateEventError(HemsError):
    """The same usage event was already applied to the ledger."""


class OverlappingEventError(HemsError):
    """A device's events must never overlap in time."""


class Vocabulary:
    """Controlled term set loaded from a text file.

    File format: one term per line, UTF-8, '#' starts a comment. Terms are
    matched case-insensitively after whitespace normalization; unknown terms
    are rejected, never coerced.
    """

    def __init__(self, terms: Iterable[str], name: str = "vocabulary"):
        self.name = name
        self._terms = {self._norm(t) for t in terms if self._norm(t)}
        if not self._terms:
            raise ValueError(f"{name} is empty")

    @staticmethod
    def _norm(term: str) -> str:
        return " ".join(term.strip().lower().split())

    @classmethod
    def from_file(cls, path: str | Path, name: Optional[str] = None) -> "Vocabulary":
        terms = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                terms.append(line)
        return cls(terms, name=name or Path(path).stem)

    def __contains__(self, term: str) -> bool:
        return self._norm(term) in self._terms

    def require(self, term: str) -> str:
        norm = self._norm(term)
        if norm not in self._terms:
            raise VocabularyError(f"unknown {self.name} term: {term!r}")
        return norm

    def terms(self) -> list[str]:
        return sorted(self._terms)


class DeviceRegistry:
    """Vocabulary-validated device catalogue for one household.

    Single writer per household; reads hand out copies so a caller never
    observes a half-applied update.
    """

    def __init__(self, device_vocabulary: Vocabulary, room_vocabulary: Vocabulary):
        self.device_vocabulary = device_vocabulary
        self.room_vocabulary = room_vocabulary
        self._devices: dict[str, DeviceMetadata] = {}

    def register(self, metadata: DeviceMetadata) -> str:
        if metadata.device_id in self._devices:
            raise DuplicateDeviceError(f"device id already registered: {metadata.device_id}")
        validated = replace(
            metadata,
            device_type=self.device_vocabulary.require(metadata.device_type),
            room=self.room_vocabulary.require(metadata.room),
        )
        self._devices[validated.device_id] = validated
        return validated.device_id

    def update(self, device_id: str, **changes) -> DeviceMetadata:
        current = self.get(device_id)
        updated = replace(current, **changes)
        updated.device_type = self.device_vocabulary.require(updated.device_type)
        updated.room = self.room_vocabulary.require(updated.room)
        self._devices[device_id] = updated
        return replace(updated)

    def get(self, device_id: str) -> DeviceMetadata:
        try:
            return replace(self._devices[device_id])
        except KeyError:
            raise UnknownDeviceError(f"unknown device: {device_id}") from None

    def __contains__(self, device_id: str) -> bool:
        return device_id in self._devices

    def list(self) -> list[DeviceMetadata]:
        return [replace(m) for _, m in sorted(self._devices.items())]


class CreditLedger:
    """Debits device credit as priced events are applied.

    Every application is recorded with its full cost even when the balance
    floors at zero, so the sum of debit records always reconciles exactly
    with the sum of applied event costs.
    """

    def __init__(self, registry: DeviceRegistry):
        self._registry = registry
        self._applied: dict[str, int] = {}  # event identity -> cost_mc

    def apply_event(self, device_id: str, event: UsageEvent) -> int:
        """Apply one priced event; returns the new credit in milli-cents."""
        if event.cost_mc is None:
            raise UnpricedEventError(f"event has no cost: {event.identity()}")
        device = self._registry.get(device_id)
        key = event.identity()
        if key in self._applied:
            raise DuplicateEventError(f"event already applied: {key}")
        self._applied[key] = event.cost_mc
        new_credit = max(0, device.credit_mc - event.cost_mc)
        self._registry.update(device_id, credit_mc=new_credit)
        return new_credit

    def is_applied(self, event: UsageEvent) -> bool:
        return event.identity() in self._applied

    def total_debited_mc(self) -> int:
        return sum(self._applied.values())
