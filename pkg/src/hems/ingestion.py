"""Power-trace ingestion: CSV day files, resampling, channel aggregation.

Trace format: CSV with a header row, first column ``timestamp`` (unix epoch
seconds, UTC), remaining columns one channel each; an empty cell or the
literal ``NULL`` is a missing reading, never 0 W. One file covers at most
one UTC calendar day.

Gap policy: a reading is carried forward for at most the bridge window
(5 s, widened to the trace's native cadence for coarser series); longer
gaps count as unobserved time, so integrals only claim observed spans.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from .model import Direction, HemsError, PowerSample

GAP_BRIDGE_S = 5.0
JOULES_PER_KWH = 3.6e6


class TraceFormatError(HemsError):
    pass


@dataclass
class ChannelSeries:
    """Column-oriented sample sequence for one channel.

    `t` is strictly increasing unix seconds; `w` is watts with NaN marking
    missing readings. Producers that know the nominal cadence (resampling)
    declare it via `cadence_s`; otherwise it is inferred from the data.
    """

    channel_id: str
    t: np.ndarray
    w: np.ndarray
    direction: Direction = Direction.CONSUMPTION
    cadence_s: Optional[float] = None

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.float64)
        self.w = np.asarray(self.w, dtype=np.float64)
        if self.t.shape != self.w.shape:
            raise ValueError("timestamp and power arrays differ in length")

    def __len__(self) -> int:
        return len(self.t)

    def observed(self) -> "ChannelSeries":
        """Drop missing readings (non-observations)."""
        mask = np.isfinite(self.w)
        return ChannelSeries(self.channel_id, self.t[mask], self.w[mask],
                             self.direction, self.cadence_s)

    def bridge_s(self, floor: float = GAP_BRIDGE_S) -> float:
        """Carry-forward window: the 5 s logger-dropout rule, widened to the
        series' cadence so coarse series integrate over full rectangles."""
        return max(floor, self.cadence_s if self.cadence_s else native_spacing(self.t))

    def samples(self) -> list[PowerSample]:
        return [
            PowerSample(self.channel_id, float(ts), None if np.isnan(p) else float(p), self.direction)
            for ts, p in zip(self.t, self.w)
        ]


@dataclass
class ParseStats:
    rows_total: int = 0
    rows_malformed: int = 0
    duplicates_dropped: int = 0
    rows_reordered: int = 0
    warnings: list[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.rows_malformed == 0


@dataclass
class ParseResult:
    channels: dict[str, ChannelSeries]
    stats: ParseStats

    def sample_count(self) -> int:
        return sum(len(s) for s in self.channels.values())


def _parse_cell(cell: str) -> float:
    cell = cell.strip()
    if cell == "" or cell.upper() == "NULL":
        return np.nan
    value = float(cell)  # raises ValueError for garbage
    if value < 0:
        raise ValueError(f"negative power: {cell}")
    return value


def _read_rows_tolerant(text: str, n_columns: int, stats: ParseStats) -> tuple[np.ndarray, np.ndarray]:
    """Row-by-row parse that counts and skips malformed rows."""
    timestamps: list[float] = []
    rows: list[list[float]] = []
    reader = csv.reader(io.StringIO(text))
    next(reader)  # header, validated by caller
    for row in reader:
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        stats.rows_total += 1
        if len(row) != n_columns:
            stats.rows_malformed += 1
            continue
        try:
            ts = float(row[0])
            values = [_parse_cell(c) for c in row[1:]]
        except ValueError:
            stats.rows_malformed += 1
            continue
        timestamps.append(ts)
        rows.append(values)
    if not timestamps:
        return np.empty(0), np.empty((0, n_columns - 1))
    return np.asarray(timestamps), np.asarray(rows)


def _read_rows_fast(text: str, n_columns: int, stats: ParseStats) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized parse for clean files; raises on any irregularity."""
    frame = pd.read_csv(
        io.StringIO(text),
        header=0,
        dtype=np.float64,
        na_values=["", "NULL", "null"],
        keep_default_na=False,
        skip_blank_lines=True,
    )
    if frame.shape[1] != n_columns:
        raise ValueError("column count mismatch")
    values = frame.to_numpy()
    if np.nanmin(values[:, 1:], initial=0.0) < 0:
        raise ValueError("negative power present")
    if np.isnan(values[:, 0]).any():
        raise ValueError("missing timestamp")
    stats.rows_total += len(frame)
    return values[:, 0], values[:, 1:]


def parse_trace(data: bytes | str) -> ParseResult:
    """Parse one trace file into per-channel series.

    Malformed rows (bad field count, unparsable or negative power, bad
    timestamp) are counted and skipped. Non-monotonic rows are reordered
    with a warning; a later row repeating an already-seen timestamp is
    dropped and counted.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise TraceFormatError("empty trace: header row required")
    header = next(csv.reader([lines[0]]))
    if not header or header[0].strip().lower() != "timestamp":
        raise TraceFormatError("missing header: first column must be 'timestamp'")
    channel_ids = [c.strip() for c in header[1:]]
    if not channel_ids or any(not c for c in channel_ids):
        raise TraceFormatError("header must declare at least one named channel")
    if len(set(channel_ids)) != len(channel_ids):
        raise TraceFormatError("duplicate channel column in header")

    # The fast path must only see rows with the declared field count: the
    # C parser would silently NaN-pad short rows instead of rejecting them.
    expected_commas = len(header) - 1
    uniform = all(
        line.count(",") == expected_commas for line in lines[1:] if line.strip()
    )
    stats = ParseStats()
    if uniform:
        try:
            ts, values = _read_rows_fast(text, len(header), stats)
        except Exception:
            stats = ParseStats()
            ts, values = _read_rows_tolerant(text, len(header), stats)
    else:
        ts, values = _read_rows_tolerant(text, len(header), stats)

    if len(ts):
        order = np.argsort(ts, kind="stable")
        if not np.array_equal(order, np.arange(len(ts))):
            stats.rows_reordered = int(np.sum(order != np.arange(len(ts))))
            stats.warnings.append("non-monotonic timestamps: rows reordered")
            ts, values = ts[order], values[order]
        keep = np.ones(len(ts), dtype=bool)
        keep[1:] = np.diff(ts) > 0  # stable sort kept the first occurrence first
        stats.duplicates_dropped = int((~keep).sum())
        ts, values = ts[keep], values[keep]

    if len(ts):
        day_first = np.floor(ts[0] / 86400.0)
        day_last = np.floor(ts[-1] / 86400.0)
        if day_first != day_last:
            raise TraceFormatError("trace spans more than one UTC calendar day")

    channels = {
        cid: ChannelSeries(cid, ts.copy(), values[:, i].copy())
        for i, cid in enumerate(channel_ids)
    }
    return ParseResult(channels, stats)


def _format_number(value: float) -> str:
    if np.isnan(value):
        return ""
    if value == int(value):
        return str(int(value))
    return repr(float(value))


def serialize_trace(channels: dict[str, ChannelSeries]) -> str:
    """Write channels back to canonical CSV (timestamps ascending)."""
    ids = sorted(channels)
    grid = np.unique(np.concatenate([channels[c].t for c in ids])) if ids else np.empty(0)
    lookup = {
        c: dict(zip(channels[c].t.tolist(), channels[c].w.tolist())) for c in ids
    }
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["timestamp"] + ids)
    for ts in grid.tolist():
        row = [_format_number(ts)]
        for c in ids:
            value = lookup[c].get(ts, np.nan)
            row.append(_format_number(value))
        writer.writerow(row)
    return out.getvalue()


def native_spacing(t: np.ndarray) -> float:
    """Median positive inter-sample spacing; 1 s for degenerate input."""
    if len(t) < 2:
        return 1.0
    diffs = np.diff(t)
    diffs = diffs[diffs > 0]
    return float(np.median(diffs)) if len(diffs) else 1.0


def resample(series: ChannelSeries, period: float) -> ChannelSeries:
    """Average readings into fixed bins of `period` seconds.

    Output timestamps are bin starts (aligned to the epoch). Bins holding
    only missing readings stay missing; bins with no readings at all are
    absent from the output.
    """
    if period <= 0:
        raise ValueError(f"resample period must be > 0, got {period}")
    if len(series) == 0:
        return ChannelSeries(series.channel_id, np.empty(0), np.empty(0), series.direction)
    diffs = np.diff(series.t)
    diffs = diffs[diffs > 0]
    if len(diffs) and period < diffs.min():
        raise ValueError("resample period below the native resolution")
    bins = np.floor(series.t / period)
    uniq, inverse = np.unique(bins, return_inverse=True)
    finite = np.isfinite(series.w)
    sums = np.bincount(inverse[finite], weights=series.w[finite], minlength=len(uniq))
    counts = np.bincount(inverse[finite], minlength=len(uniq))
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
    return ChannelSeries(series.channel_id, uniq * period, means, series.direction,
                         cadence_s=period)


def merge_channels(
    channels: Sequence[ChannelSeries],
    weights: Optional[Sequence[float]] = None,
    out_channel_id: str = "aggregate",
) -> ChannelSeries:
    """Pointwise weighted sum on the union time grid.

    At each grid point a channel contributes its last observation if it is
    at most 5 s old, otherwise it is left out of the sum; channels must all
    share one direction.
    """
    if not channels:
        raise ValueError("no channels to merge")
    directions = {c.direction for c in channels}
    if len(directions) > 1:
        raise ValueError("cannot merge consumption and production channels")
    if weights is None:
        weights = [1.0] * len(channels)
    if len(weights) != len(channels):
        raise ValueError("one weight per channel required")

    observed = [c.observed() for c in channels]
    grids = [c.t for c in observed if len(c)]
    if not grids:
        return ChannelSeries(out_channel_id, np.empty(0), np.empty(0), channels[0].direction)
    grid = np.unique(np.concatenate(grids))

    total = np.zeros(len(grid))
    covered = np.zeros(len(grid), dtype=bool)
    for series, weight in zip(observed, weights):
        if not len(series):
            continue
        idx = np.searchsorted(series.t, grid, side="right") - 1
        valid = idx >= 0
        age = np.where(valid, grid - series.t[np.clip(idx, 0, None)], np.inf)
        valid &= age <= GAP_BRIDGE_S
        total[valid] += weight * series.w[idx[valid]]
        covered |= valid
    total[~covered] = np.nan
    return ChannelSeries(out_channel_id, grid, total, channels[0].direction)


def coverage_seconds(
    series: ChannelSeries,
    t_from: float = -np.inf,
    t_to: float = np.inf,
    bridge_s: Optional[float] = None,
) -> float:
    """Observed time within [t_from, t_to): each reading covers until the
    next one or for the bridge window, whichever ends first."""
    obs = series.observed()
    if len(obs) == 0:
        return 0.0
    bridge = obs.bridge_s() if bridge_s is None else bridge_s
    ends = np.minimum(np.append(obs.t[1:], np.inf), obs.t + bridge)
    overlap = np.clip(np.minimum(ends, t_to) - np.maximum(obs.t, t_from), 0.0, None)
    return float(overlap.sum())


def integrate_energy_kwh(
    series: ChannelSeries,
    t_from: float,
    t_to: float,
    bridge_s: Optional[float] = None,
) -> float:
    """Rectangular energy integral over [t_from, t_to) in kWh.

    Each observation holds until the next one or for the bridge window,
    whichever ends first; time not covered by either contributes nothing.
    """
    if t_to <= t_from:
        return 0.0
    obs = series.observed()
    if len(obs) == 0:
        return 0.0
    bridge = obs.bridge_s() if bridge_s is None else bridge_s
    ends = np.minimum(np.append(obs.t[1:], np.inf), obs.t + bridge)
    seg_start = np.maximum(obs.t, t_from)
    seg_end = np.minimum(ends, t_to)
    overlap = np.clip(seg_end - seg_start, 0.0, None)
    return float(np.dot(obs.w, overlap) / JOULES_PER_KWH)
