import datetime as dt
from zoneinfo import ZoneInfo

import numpy as np
import pytest

from hems.config import AppConfig, TokenEntry, shipped_data
from hems.ingestion import ChannelSeries
from hems.pipeline import Engine
from hems.store import Store
from hems.tariff import load_holidays, load_tariff

ROME = ZoneInfo("Europe/Rome")


@pytest.fixture(scope="session")
def scheme():
    return load_tariff(
        shipped_data("tariff_it_residential.ini"),
        load_holidays(shipped_data("holidays_it.txt")),
    )


@pytest.fixture()
def store(tmp_path):
    s = Store(tmp_path / "test.db")
    yield s
    s.close()


@pytest.fixture()
def engine_factory(tmp_path):
    """Engines over throwaway stores, with an injectable clock."""
    opened = []

    def make(now=None, **overrides) -> Engine:
        cfg = AppConfig(**overrides)
        cfg.data_dir = tmp_path / f"data{len(opened)}"
        if not cfg.tokens:
            cfg.tokens = [
                TokenEntry("rw-token", "alice", frozenset({"read", "write"})),
                TokenEntry("ro-token", "bob", frozenset({"read"})),
            ]
        engine = Engine.open(cfg, now=now)
        opened.append(engine)
        return engine

    yield make
    for engine in opened:
        engine.store.close()


def local_ts(year, month, day, hour=0, minute=0, second=0, tz=ROME) -> float:
    return dt.datetime(year, month, day, hour, minute, second, tzinfo=tz).timestamp()


def utc_ts(year, month, day, hour=0, minute=0, second=0) -> float:
    return dt.datetime(year, month, day, hour, minute, second,
                       tzinfo=dt.timezone.utc).timestamp()


def series_1hz(t0: float, watts, channel_id="dev") -> ChannelSeries:
    watts = np.asarray(watts, dtype=np.float64)
    return ChannelSeries(channel_id, t0 + np.arange(len(watts), dtype=np.float64), watts)
