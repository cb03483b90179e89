"""Embedded, file-backed storage for the gateway deployment.

One sqlite database holds samples, events, the device registry, the credit
log and the advice/feedback state. Writes are serialized behind one lock
(desk-scale single-household gateway); every mutation commits before
returning, so state survives restarts. Sample and event appends are
idempotent under their natural keys.
"""

from __future__ import annotations

import json
import sqlite3
import threading
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .advisor import Advice, AdviceType, FeedbackRecord
from .ingestion import ChannelSeries
from .model import Direction, DeviceMetadata, Mobility, UsageEvent
from .registry import DuplicateDeviceError, DuplicateEventError, UnknownDeviceError, UnpricedEventError

_SCHEMA = """
CREATE TABLE IF NOT EXISTS devices (
    device_id TEXT PRIMARY KEY,
    household_id TEXT NOT NULL,
    device_type TEXT NOT NULL,
    room TEXT NOT NULL,
    mobility TEXT NOT NULL,
    curtailable INTEGER NOT NULL,
    user_driven INTEGER NOT NULL,
    has_standby INTEGER NOT NULL,
    credit_mc INTEGER NOT NULL CHECK (credit_mc >= 0)
);
CREATE TABLE IF NOT EXISTS channels (
    channel_id TEXT PRIMARY KEY,
    household_id TEXT NOT NULL,
    direction TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS samples (
    channel_id TEXT NOT NULL,
    t REAL NOT NULL,
    w REAL,
    PRIMARY KEY (channel_id, t)
) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS events (
    device_id TEXT NOT NULL,
    t_start REAL NOT NULL,
    duration_s REAL NOT NULL,
    energy_kwh REAL NOT NULL,
    cost_mc INTEGER,
    PRIMARY KEY (device_id, t_start, duration_s)
) WITHOUT ROWID;
CREATE TABLE IF NOT EXISTS credit_log (
    event_key TEXT PRIMARY KEY,
    device_id TEXT NOT NULL,
    cost_mc INTEGER NOT NULL,
    applied_at REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS advices (
    advice_id TEXT PRIMARY KEY,
    user_id TEXT NOT NULL,
    advice_type TEXT NOT NULL,
    device_type TEXT NOT NULL,
    device_id TEXT NOT NULL,
    template_id TEXT NOT NULL,
    params TEXT NOT NULL,
    enabled INTEGER NOT NULL,
    score INTEGER NOT NULL,
    UNIQUE (user_id, advice_type, device_id)
);
CREATE TABLE IF NOT EXISTS feedback_log (
    seq INTEGER PRIMARY KEY AUTOINCREMENT,
    user_id TEXT NOT NULL,
    advice_id TEXT NOT NULL,
    action TEXT NOT NULL,
    reject_cause TEXT,
    time REAL NOT NULL
);
CREATE TABLE IF NOT EXISTS derived_state (
    key TEXT PRIMARY KEY,
    value TEXT NOT NULL
);
"""


class Store:
    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.RLock()
        self._conn = sqlite3.connect(str(path), check_same_thread=False)
        with self._lock:
            self._conn.execute("PRAGMA journal_mode=WAL")
            self._conn.execute("PRAGMA synchronous=NORMAL")
            self._conn.executescript(_SCHEMA)
            self._conn.commit()

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    # -- device registry ---------------------------------------------------

    def add_device(self, household_id: str, meta: DeviceMetadata) -> str:
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO devices VALUES (?,?,?,?,?,?,?,?,?)",
                    (meta.device_id, household_id, meta.device_type, meta.room,
                     meta.mobility.value, int(meta.curtailable), int(meta.user_driven),
                     int(meta.has_standby), meta.credit_mc),
                )
            except sqlite3.IntegrityError:
                raise DuplicateDeviceError(f"device id already registered: {meta.device_id}") from None
            self._conn.commit()
        return meta.device_id

    def get_device(self, device_id: str) -> DeviceMetadata:
        with self._lock:
            row = self._conn.execute(
                "SELECT device_id, device_type, room, mobility, curtailable, user_driven,"
                " has_standby, credit_mc FROM devices WHERE device_id=?", (device_id,)
            ).fetchone()
        if row is None:
            raise UnknownDeviceError(f"unknown device: {device_id}")
        return DeviceMetadata(
            device_id=row[0], device_type=row[1], room=row[2], mobility=Mobility(row[3]),
            curtailable=bool(row[4]), user_driven=bool(row[5]), has_standby=bool(row[6]),
            credit_mc=row[7],
        )

    def list_devices(self, household_id: Optional[str] = None) -> list[DeviceMetadata]:
        sql = "SELECT device_id FROM devices"
        args: tuple = ()
        if household_id is not None:
            sql += " WHERE household_id=?"
            args = (household_id,)
        with self._lock:
            ids = [r[0] for r in self._conn.execute(sql + " ORDER BY device_id", args)]
        return [self.get_device(i) for i in ids]

    def update_device(self, device_id: str, **changes) -> DeviceMetadata:
        allowed = {"device_type", "room", "mobility", "curtailable", "user_driven",
                   "has_standby", "credit_mc"}
        bad = set(changes) - allowed
        if bad:
            raise ValueError(f"cannot update fields: {sorted(bad)}")
        current = self.get_device(device_id)  # raises UnknownDeviceError
        for key, value in changes.items():
            setattr(current, key, value if key != "mobility" else Mobility(value))
        with self._lock:
            self._conn.execute(
                "UPDATE devices SET device_type=?, room=?, mobility=?, curtailable=?,"
                " user_driven=?, has_standby=?, credit_mc=? WHERE device_id=?",
                (current.device_type, current.room, current.mobility.value,
                 int(current.curtailable), int(current.user_driven),
                 int(current.has_standby), current.credit_mc, device_id),
            )
            self._conn.commit()
        return current

    # -- sample store --------------------------------------------------------

    def ensure_channel(self, channel_id: str, household_id: str, direction: Direction) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT OR IGNORE INTO channels VALUES (?,?,?)",
                (channel_id, household_id, direction.value),
            )
            self._conn.commit()

    def channels(self, direction: Optional[Direction] = None) -> list[tuple[str, str, Direction]]:
        sql = "SELECT channel_id, household_id, direction FROM channels"
        args: tuple = ()
        if direction is not None:
            sql += " WHERE direction=?"
            args = (direction.value,)
        with self._lock:
            rows = self._conn.execute(sql + " ORDER BY channel_id", args).fetchall()
        return [(r[0], r[1], Direction(r[2])) for r in rows]

    def append_samples(
        self,
        channel_id: str,
        t: np.ndarray,
        w: np.ndarray,
        household_id: str = "home",
        direction: Direction = Direction.CONSUMPTION,
    ) -> tuple[int, int]:
        """Idempotent append; returns (newly stored, duplicates ignored)."""
        self.ensure_channel(channel_id, household_id, direction)
        rows = [
            (channel_id, float(ts), None if np.isnan(p) else float(p))
            for ts, p in zip(t, w)
        ]
        with self._lock:
            before = self._conn.total_changes
            self._conn.executemany("INSERT OR IGNORE INTO samples VALUES (?,?,?)", rows)
            stored = self._conn.total_changes - before
            self._conn.commit()
        return stored, len(rows) - stored

    def sample_range(
        self,
        channel_id: str,
        t_from: Optional[float] = None,
        t_to: Optional[float] = None,
    ) -> ChannelSeries:
        # -1 is a safe missing-value sentinel: stored powers are >= 0
        sql = "SELECT t, IFNULL(w, -1.0) FROM samples WHERE channel_id=?"
        args: list = [channel_id]
        if t_from is not None:
            sql += " AND t>=?"
            args.append(t_from)
        if t_to is not None:
            sql += " AND t<?"
            args.append(t_to)
        with self._lock:
            rows = self._conn.execute(sql + " ORDER BY t", args).fetchall()
            direction_row = self._conn.execute(
                "SELECT direction FROM channels WHERE channel_id=?", (channel_id,)).fetchone()
        data = np.array(rows, dtype=np.float64).reshape(len(rows), 2)
        t, w = data[:, 0], data[:, 1]
        w[w < 0] = np.nan
        direction = Direction(direction_row[0]) if direction_row else Direction.CONSUMPTION
        return ChannelSeries(channel_id, t, w, direction)

    def sample_span(self, channel_id: Optional[str] = None) -> Optional[tuple[float, float]]:
        sql = "SELECT MIN(t), MAX(t) FROM samples"
        args: tuple = ()
        if channel_id is not None:
            sql += " WHERE channel_id=?"
            args = (channel_id,)
        with self._lock:
            row = self._conn.execute(sql, args).fetchone()
        if row is None or row[0] is None:
            return None
        return float(row[0]), float(row[1])

    # -- event store ---------------------------------------------------------

    def overlapping_event_exists(self, event: UsageEvent) -> bool:
        """True when a different stored event for the device intersects the
        span (events for one device must never overlap)."""
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM events WHERE device_id=? AND t_start < ?"
                " AND t_start + duration_s > ? AND NOT (t_start=? AND duration_s=?) LIMIT 1",
                (event.device_id, event.t_end, event.t_start,
                 event.t_start, event.duration_s),
            ).fetchone()
        return row is not None

    def store_events(self, events: Sequence[UsageEvent]) -> tuple[int, int, int]:
        """Idempotent by (device, start, duration).

        Events intersecting an already-stored different event are rejected,
        keeping per-device events non-overlapping. Returns
        (new, exact duplicates, overlap conflicts).
        """
        stored = duplicates = conflicts = 0
        with self._lock:
            for event in events:
                if self.overlapping_event_exists(event):
                    conflicts += 1
                    continue
                before = self._conn.total_changes
                self._conn.execute(
                    "INSERT OR IGNORE INTO events VALUES (?,?,?,?,?)",
                    (event.device_id, event.t_start, event.duration_s,
                     event.energy_kwh, event.cost_mc))
                if self._conn.total_changes - before:
                    stored += 1
                else:
                    duplicates += 1
            self._conn.commit()
        return stored, duplicates, conflicts

    def events_query(
        self,
        device_id: Optional[str] = None,
        t_from: Optional[float] = None,
        t_to: Optional[float] = None,
    ) -> list[UsageEvent]:
        sql = "SELECT device_id, t_start, duration_s, energy_kwh, cost_mc FROM events WHERE 1=1"
        args: list = []
        if device_id is not None:
            sql += " AND device_id=?"
            args.append(device_id)
        if t_from is not None:
            sql += " AND t_start>=?"
            args.append(t_from)
        if t_to is not None:
            sql += " AND t_start<?"
            args.append(t_to)
        with self._lock:
            rows = self._conn.execute(sql + " ORDER BY t_start, device_id", args).fetchall()
        return [UsageEvent(r[0], r[1], r[2], r[3], r[4]) for r in rows]

    # -- credit ledger ---------------------------------------------------------

    def apply_event_credit(self, event: UsageEvent) -> int:
        """Debit the device's credit for one priced event (idempotent,
        floored at zero); returns the new credit. The log keeps the full
        cost so debits always reconcile with event costs."""
        if event.cost_mc is None:
            raise UnpricedEventError(f"event has no cost: {event.identity()}")
        device = self.get_device(event.device_id)
        with self._lock:
            try:
                self._conn.execute(
                    "INSERT INTO credit_log VALUES (?,?,?,?)",
                    (event.identity(), event.device_id, event.cost_mc, time.time()),
                )
            except sqlite3.IntegrityError:
                raise DuplicateEventError(f"event already applied: {event.identity()}") from None
            new_credit = max(0, device.credit_mc - event.cost_mc)
            self._conn.execute(
                "UPDATE devices SET credit_mc=? WHERE device_id=?", (new_credit, event.device_id))
            self._conn.commit()
        return new_credit

    def credit_applied(self, event: UsageEvent) -> bool:
        with self._lock:
            row = self._conn.execute(
                "SELECT 1 FROM credit_log WHERE event_key=?", (event.identity(),)).fetchone()
        return row is not None

    def total_debited_mc(self) -> int:
        with self._lock:
            row = self._conn.execute("SELECT COALESCE(SUM(cost_mc), 0) FROM credit_log").fetchone()
        return int(row[0])

    # -- advice board and feedback log -----------------------------------------

    def load_advices(self, user_id: Optional[str] = None) -> list[Advice]:
        sql = ("SELECT advice_id, user_id, advice_type, device_type, device_id,"
               " template_id, params, enabled, score FROM advices")
        args: tuple = ()
        if user_id is not None:
            sql += " WHERE user_id=?"
            args = (user_id,)
        with self._lock:
            rows = self._conn.execute(sql + " ORDER BY advice_id", args).fetchall()
        return [
            Advice(
                advice_id=r[0], user_id=r[1], advice_type=AdviceType(r[2]), device_type=r[3],
                device_id=r[4], template_id=r[5], params=json.loads(r[6]),
                enabled=bool(r[7]), score=r[8],
            )
            for r in rows
        ]

    def save_advices(self, advices: Sequence[Advice]) -> None:
        rows = [
            (a.advice_id, a.user_id, a.advice_type.value, a.device_type, a.device_id,
             a.template_id, json.dumps(a.params, sort_keys=True), int(a.enabled), a.score)
            for a in advices
        ]
        with self._lock:
            self._conn.executemany(
                "INSERT INTO advices VALUES (?,?,?,?,?,?,?,?,?)"
                " ON CONFLICT(advice_id) DO UPDATE SET device_type=excluded.device_type,"
                " template_id=excluded.template_id, params=excluded.params,"
                " enabled=excluded.enabled, score=excluded.score",
                rows,
            )
            self._conn.commit()

    def append_feedback(self, record: FeedbackRecord) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO feedback_log (user_id, advice_id, action, reject_cause, time)"
                " VALUES (?,?,?,?,?)",
                (record.user_id, record.advice_id, record.action.value,
                 record.reject_cause.value if record.reject_cause else None, record.time),
            )
            self._conn.commit()

    def feedback_count(self) -> int:
        with self._lock:
            return int(self._conn.execute("SELECT COUNT(*) FROM feedback_log").fetchone()[0])

    # -- derived-state cache (precomputed figures with data watermarks) ---------

    def sample_watermark(self) -> tuple[int, float]:
        """Cheap fingerprint of the sample store: (row count, max t)."""
        with self._lock:
            row = self._conn.execute("SELECT COUNT(*), COALESCE(MAX(t), 0) FROM samples").fetchone()
        return int(row[0]), float(row[1])

    def get_derived(self, key: str) -> Optional[str]:
        with self._lock:
            row = self._conn.execute(
                "SELECT value FROM derived_state WHERE key=?", (key,)).fetchone()
        return None if row is None else row[0]

    def set_derived(self, key: str, value: str) -> None:
        with self._lock:
            self._conn.execute(
                "INSERT INTO derived_state VALUES (?,?)"
                " ON CONFLICT(key) DO UPDATE SET value=excluded.value", (key, value))
            self._conn.commit()
