"""Engine configuration: one INI file describing a household deployment.

Every referenced data file (tariff, holidays, vocabularies, label
coefficients, advice templates) must exist at startup; anything not set
falls back to the data shipped with the package, so a bare `hems` run
works out of the box.
"""

from __future__ import annotations

import configparser
import importlib.resources
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .advisor import AdvisorConfig
from .events import DetectorConfig
from .model import HemsError

ENV_VAR = "HEMS_CONFIG"


class ConfigError(HemsError):
    pass


def shipped_data(name: str) -> Path:
    return Path(str(importlib.resources.files("hems").joinpath("data", name)))


@dataclass(frozen=True)
class TokenEntry:
    token: str
    user_id: str
    scopes: frozenset[str]  # subset of {"read", "write"}


@dataclass
class AppConfig:
    household_id: str = "home"
    timezone: str = "Europe/Rome"
    data_dir: Path = Path("hems-data")
    tariff_file: Path = field(default_factory=lambda: shipped_data("tariff_it_residential.ini"))
    holiday_file: Path = field(default_factory=lambda: shipped_data("holidays_it.txt"))
    device_vocabulary_file: Path = field(default_factory=lambda: shipped_data("device_types.txt"))
    room_vocabulary_file: Path = field(default_factory=lambda: shipped_data("rooms.txt"))
    label_coefficients_file: Path = field(default_factory=lambda: shipped_data("label_coefficients.ini"))
    advice_templates_file: Path = field(default_factory=lambda: shipped_data("advice_templates.txt"))
    production_channels: frozenset[str] = frozenset()
    manual_category: Optional[str] = None
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    detector_overrides: dict[str, DetectorConfig] = field(default_factory=dict)
    advisor: AdvisorConfig = field(default_factory=AdvisorConfig)
    tokens: list[TokenEntry] = field(default_factory=list)

    @property
    def db_path(self) -> Path:
        return self.data_dir / "hems.db"

    def detector_for(self, device_id: str) -> DetectorConfig:
        return self.detector_overrides.get(device_id, self.detector)

    def validate_files(self) -> None:
        for label, path in [
            ("tariff_file", self.tariff_file),
            ("holiday_file", self.holiday_file),
            ("device_vocabulary", self.device_vocabulary_file),
            ("room_vocabulary", self.room_vocabulary_file),
            ("label_coefficients", self.label_coefficients_file),
            ("advice_templates", self.advice_templates_file),
        ]:
            if not Path(path).is_file():
                raise ConfigError(f"{label} does not exist: {path}")


def _detector_from_section(section, base: DetectorConfig) -> DetectorConfig:
    return DetectorConfig(
        on_threshold_w=section.getfloat("on_threshold_w", base.on_threshold_w),
        off_threshold_w=section.getfloat("off_threshold_w", base.off_threshold_w),
        min_duration_s=section.getfloat("min_duration_s", base.min_duration_s),
        merge_gap_s=section.getfloat("merge_gap_s", base.merge_gap_s),
    )


def load_config(path: Optional[str | Path] = None) -> AppConfig:
    """Load configuration from `path`, the HEMS_CONFIG environment variable,
    or built-in defaults when neither is given. Relative paths resolve
    against the config file's directory."""
    if path is None:
        path = os.environ.get(ENV_VAR) or None
    if path is None:
        cfg = AppConfig()
        cfg.validate_files()
        return cfg

    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file does not exist: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    parser.read(path, encoding="utf-8")
    base_dir = path.parent

    def resolve(value: str) -> Path:
        p = Path(value).expanduser()
        return p if p.is_absolute() else base_dir / p

    cfg = AppConfig()
    if parser.has_section("hems"):
        main = parser["hems"]
        cfg.household_id = main.get("household_id", cfg.household_id)
        cfg.timezone = main.get("timezone", cfg.timezone)
        cfg.data_dir = resolve(main.get("data_dir", "hems-data"))
        for attr, key in [
            ("tariff_file", "tariff_file"),
            ("holiday_file", "holiday_file"),
            ("device_vocabulary_file", "device_vocabulary"),
            ("room_vocabulary_file", "room_vocabulary"),
            ("label_coefficients_file", "label_coefficients"),
            ("advice_templates_file", "advice_templates"),
        ]:
            if main.get(key):
                setattr(cfg, attr, resolve(main[key]))
        if main.get("production_channels"):
            cfg.production_channels = frozenset(
                c.strip() for c in main["production_channels"].split(",") if c.strip())
        if main.get("category"):
            cfg.manual_category = main["category"].strip()
    else:
        cfg.data_dir = base_dir / "hems-data"

    if parser.has_section("detector"):
        cfg.detector = _detector_from_section(parser["detector"], DetectorConfig())
    for section in parser.sections():
        if section.startswith("detector."):
            device_id = section.split(".", 1)[1]
            cfg.detector_overrides[device_id] = _detector_from_section(
                parser[section], cfg.detector)

    if parser.has_section("advisor"):
        adv = parser["advisor"]
        cfg.advisor = AdvisorConfig(
            tau1=adv.getfloat("tau1", 0.30),
            max_displayed=adv.getint("max_displayed", 10),
            rng_seed=adv.getint("rng_seed", 0),
            min_saving_eur=adv.getfloat("min_saving_eur", 0.01),
        )

    if parser.has_section("tokens"):
        for token, spec in parser["tokens"].items():
            try:
                user_id, scope_text = spec.split(":", 1)
            except ValueError:
                raise ConfigError(f"token entry must be 'user:scopes', got {spec!r}") from None
            scopes = frozenset(s.strip() for s in scope_text.split(",") if s.strip())
            if not scopes <= {"read", "write"}:
                raise ConfigError(f"unknown scopes in token entry: {spec!r}")
            cfg.tokens.append(TokenEntry(token=token, user_id=user_id.strip(), scopes=scopes))

    cfg.validate_files()
    return cfg
