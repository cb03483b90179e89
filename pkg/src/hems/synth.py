"""Synthetic household fleet: reproducible 1 Hz traces for demos and tests.

Each device profile describes an idle draw, an active draw and a usage
pattern (duty-cycling compressor or user-driven runs at preferred hours).
Generated traces include measurement noise, missing cells and recording
gaps, and can be written out as one-day CSV files in the ingest format.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .ingestion import ChannelSeries
from .model import DeviceMetadata, Direction, eur_to_mc


@dataclass
class DeviceProfile:
    device_id: str
    device_type: str
    room: str
    user_driven: bool
    has_standby: bool
    standby_w: float
    active_w: float
    run_duration_s: tuple[int, int] = (600, 3600)
    runs_per_day: float = 1.0
    start_hours: tuple[int, ...] = tuple(range(8, 22))
    duty_cycle: Optional[tuple[int, int]] = None  # (on seconds, off seconds)
    noise_sd: float = 0.5
    credit_eur: float = 5.0

    def metadata(self) -> DeviceMetadata:
        return DeviceMetadata(
            device_id=self.device_id,
            device_type=self.device_type,
            room=self.room,
            user_driven=self.user_driven,
            has_standby=self.has_standby,
            credit_mc=eur_to_mc(self.credit_eur),
        )


def default_profiles() -> list[DeviceProfile]:
    """A nine-device fleet shaped like the monitored households."""
    return [
        DeviceProfile("fridge1", "fridge", "kitchen", False, False, 1.5, 75.0,
                      duty_cycle=(900, 1800), noise_sd=0.8),
        DeviceProfile("freezer1", "freezer", "cellar", False, False, 1.0, 65.0,
                      duty_cycle=(800, 2100), noise_sd=0.8),
        DeviceProfile("washer1", "washing machine", "bathroom", True, False, 1.0, 1400.0,
                      run_duration_s=(3600, 5400), runs_per_day=0.8,
                      start_hours=(7, 8, 18, 19, 20), noise_sd=4.0),
        DeviceProfile("dishwasher1", "dishwasher", "kitchen", True, False, 0.8, 1100.0,
                      run_duration_s=(2700, 4500), runs_per_day=0.9,
                      start_hours=(13, 20, 21), noise_sd=3.0),
        DeviceProfile("tv1", "television", "living room", True, True, 6.5, 110.0,
                      run_duration_s=(3600, 10800), runs_per_day=1.6,
                      start_hours=(12, 18, 19, 20, 21), noise_sd=1.5),
        DeviceProfile("modem1", "modem", "office", False, True, 29.0, 29.0,
                      runs_per_day=0.0, noise_sd=0.3),
        DeviceProfile("computer1", "computer", "office", True, True, 2.5, 85.0,
                      run_duration_s=(1800, 14400), runs_per_day=1.2,
                      start_hours=(9, 10, 15, 16, 21), noise_sd=2.0),
        DeviceProfile("coffee1", "coffee machine", "kitchen", True, False, 1.2, 950.0,
                      run_duration_s=(120, 420), runs_per_day=1.8,
                      start_hours=(6, 7, 8, 13), noise_sd=3.0),
        DeviceProfile("kettle1", "kettle", "kitchen", True, False, 0.0, 1900.0,
                      run_duration_s=(120, 300), runs_per_day=1.5,
                      start_hours=(7, 8, 16, 17), noise_sd=3.0),
    ]


def pv_profile_w(seconds: np.ndarray, peak_w: float = 1500.0) -> np.ndarray:
    """Daylight production bell centered on 13:00 UTC."""
    second_of_day = seconds % 86400
    return peak_w * np.exp(-0.5 * ((second_of_day - 13 * 3600) / (3.2 * 3600)) ** 2)


def synth_device_trace(
    profile: DeviceProfile,
    t0: float,
    n_days: int,
    rng: np.random.Generator,
    gap_count_per_day: float = 1.0,
    missing_rate: float = 2e-4,
) -> ChannelSeries:
    """One device's 1 Hz trace over n_days starting at UTC instant t0."""
    n = n_days * 86400
    t = t0 + np.arange(n, dtype=np.float64)
    w = np.full(n, profile.standby_w, dtype=np.float64)

    if profile.duty_cycle is not None:
        on_s, off_s = profile.duty_cycle
        cycle = on_s + off_s
        phase = rng.integers(0, cycle)
        in_cycle = (np.arange(n) + phase) % cycle
        w[in_cycle < on_s] = profile.active_w
    elif profile.runs_per_day > 0:
        for day in range(n_days):
            runs = rng.poisson(profile.runs_per_day)
            for _ in range(runs):
                hour = int(rng.choice(profile.start_hours))
                start = day * 86400 + hour * 3600 + int(rng.integers(0, 3600))
                duration = int(rng.integers(*profile.run_duration_s))
                w[start:min(start + duration, n)] = profile.active_w

    w += rng.normal(0.0, profile.noise_sd, size=n)
    np.clip(w, 0.0, None, out=w)

    # missing cells (logger hiccups) and recording gaps (rows absent entirely)
    missing = rng.random(n) < missing_rate
    w[missing] = np.nan
    keep = np.ones(n, dtype=bool)
    for _ in range(rng.poisson(gap_count_per_day * n_days)):
        gap_start = int(rng.integers(0, n))
        gap_len = int(rng.integers(10, 180))
        keep[gap_start:gap_start + gap_len] = False
    return ChannelSeries(profile.device_id, t[keep], w[keep])


def synth_fleet(
    profiles: Sequence[DeviceProfile],
    first_day: dt.date,
    n_days: int,
    seed: int = 0,
    with_pv: bool = False,
) -> dict[str, ChannelSeries]:
    rng = np.random.default_rng(seed)
    t0 = dt.datetime.combine(first_day, dt.time(0), tzinfo=dt.timezone.utc).timestamp()
    traces = {p.device_id: synth_device_trace(p, t0, n_days, rng) for p in profiles}
    if with_pv:
        t = t0 + np.arange(n_days * 86400, dtype=np.float64)[::15]  # 15 s cadence
        traces["pv"] = ChannelSeries(
            "pv", t, pv_profile_w(t - t0), Direction.PRODUCTION)
    return traces


def write_day_files(traces: dict[str, ChannelSeries], out_dir: str | Path) -> list[Path]:
    """Split traces into one CSV per UTC day, all channels side by side."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    all_days = sorted({
        int(day)
        for series in traces.values()
        for day in np.unique(np.floor(series.t / 86400.0).astype(np.int64))
    })
    paths = []
    for day in all_days:
        start, end = day * 86400.0, (day + 1) * 86400.0
        date = dt.datetime.fromtimestamp(start, dt.timezone.utc).date()
        columns = {}
        for channel_id, series in traces.items():
            mask = (series.t >= start) & (series.t < end)
            if mask.any():
                columns[channel_id] = pd.Series(
                    series.w[mask], index=series.t[mask].astype(np.int64))
        frame = pd.DataFrame(columns).sort_index()
        frame.index.name = "timestamp"
        path = out_dir / f"day_{date.isoformat()}.csv"
        frame.to_csv(path, na_rep="", float_format="%.3f")
        paths.append(path)
    return paths
