"""Usage-event extraction from per-device power traces.

Hysteresis thresholding: an event opens when power reaches the on
threshold, stays open while power holds at or above the off threshold, and
closes once power sits below the off threshold for more than the merge gap
(so short dips and split cycles fuse into one run). Events shorter than the
minimum duration are dropped.

Event energy is the rectangular integral of the observed samples over the
event span, so idle/standby power outside events is never attributed to
them; it is surfaced separately by the standby estimator in analytics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ingestion import ChannelSeries, integrate_energy_kwh
from .model import HemsError, UsageEvent


class DetectorError(HemsError):
    pass


@dataclass(frozen=True)
class DetectorConfig:
    on_threshold_w: float = 15.0
    off_threshold_w: float = 10.0
    min_duration_s: float = 60.0
    merge_gap_s: float = 30.0

    def __post_init__(self) -> None:
        if self.off_threshold_w > self.on_threshold_w:
            raise ValueError("off threshold must not exceed on threshold")
        if self.min_duration_s <= 0:
            raise ValueError("min duration must be > 0")
        if self.merge_gap_s < 0:
            raise ValueError("merge gap must be >= 0")


def detect_events(
    series: ChannelSeries,
    cfg: DetectorConfig,
    device_id: Optional[str] = None,
) -> list[UsageEvent]:
    """Extract non-overlapping, time-ordered usage events from one device.

    Missing readings are not observations: they neither keep an event alive
    nor close it, but a recording dropout longer than the merge gap (or the
    carry-forward bridge, if larger) ends the running event, since unobserved
    time cannot be claimed.
    """
    device = device_id or series.channel_id
    obs = series.observed()
    t, w = obs.t, obs.w
    if len(t) > 1 and np.any(np.diff(t) <= 0):
        raise DetectorError("samples must be sorted with strictly increasing timestamps")

    bridge = obs.bridge_s()
    dropout_limit = max(cfg.merge_gap_s, bridge)
    events: list[UsageEvent] = []

    def emit(start: float, end: float) -> None:
        duration = end - start
        if duration < cfg.min_duration_s:
            return
        energy = integrate_energy_kwh(obs, start, end, bridge_s=bridge)
        if energy <= 0:
            return
        events.append(UsageEvent(device, float(start), float(duration), energy))

    IDLE, OPEN, GAP = 0, 1, 2
    state = IDLE
    start = gap_start = 0.0
    for i in range(len(t)):
        ti, wi = t[i], w[i]
        if state != IDLE and ti - t[i - 1] > dropout_limit:
            emit(start, gap_start if state == GAP else t[i - 1] + bridge)
            state = IDLE
        if state == IDLE:
            if wi >= cfg.on_threshold_w:
                state, start = OPEN, ti
        elif state == OPEN:
            if wi < cfg.off_threshold_w:
                state, gap_start = GAP, ti
        else:  # GAP: below the off threshold since gap_start
            if wi >= cfg.off_threshold_w:
                if ti - gap_start <= cfg.merge_gap_s:
                    state = OPEN
                else:
                    emit(start, gap_start)
                    state, start = (OPEN, ti) if wi >= cfg.on_threshold_w else (IDLE, 0.0)
            elif ti - gap_start > cfg.merge_gap_s:
                emit(start, gap_start)
                state = IDLE
    if state == OPEN and len(t):
        emit(start, t[-1] + bridge)
    elif state == GAP:
        emit(start, gap_start)
    return events


def compute_event_energy(
    series: ChannelSeries,
    t_start: float,
    duration_s: float,
    bridge_s: Optional[float] = None,
) -> float:
    """Energy (kWh) of one span via rectangular integration of the samples."""
    if duration_s <= 0:
        raise ValueError("duration must be > 0")
    obs = series.observed()
    if len(obs) == 0:
        raise HemsError("span not covered: no observed samples")
    bridge = obs.bridge_s() if bridge_s is None else bridge_s
    t_end = t_start + duration_s
    covering = (obs.t < t_end) & (obs.t + bridge > t_start)
    if not covering.any():
        raise HemsError("span not covered by any observation")
    return integrate_energy_kwh(obs, t_start, t_end, bridge_s=bridge)
