"""Scenario configuration files.

A configuration is an INI file with three sections. Every key is optional
and falls back to the defaults of :class:`~dibrcast.simulator.ScenarioConfig`
and :class:`AnalysisSettings`::

    [model]
    views = 16                 # M
    quality = 3                # R
    channels = 13
    rates = 6.5, 13, 19.5, 26, 39, 52, 58.5, 65
    video_rate = 800000        # bits/s
    frame_interval = 0.0333    # s
    base_loss = 0.02, 0.03, 0.05, 0.08, 0.12, 0.18, 0.22, 0.26
    reference_distance = 50    # m
    distance_exponent = 2

    [analysis]
    loss_grid = 0.1, 0.3, 0.5
    quality_grid = 1, 2, 3, 4
    ...

    [simulator]
    population = 50
    arrival = 0.2
    ...

Overrides use ``section.key=value`` (or a bare ``key`` when it is unique).
Lists are comma separated. :func:`config_hash` fingerprints the resolved
values so every output file can name the configuration it came from.
"""

from __future__ import annotations

import configparser
import dataclasses
import hashlib
import typing
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

from .model import ConfigurationError
from .simulator import ScenarioConfig

MODEL_KEYS = (
    "views",
    "quality",
    "channels",
    "rates",
    "video_rate",
    "frame_interval",
    "base_loss",
    "reference_distance",
    "distance_exponent",
    "cell_radius",
    "min_distance",
)


@dataclass(frozen=True)
class AnalysisSettings:
    """Instance grids for ``analyze`` and sizes for ``validate``."""

    loss_grid: tuple[float, ...] = (0.1, 0.3, 0.5)
    quality_grid: tuple[int, ...] = (1, 2, 3, 4)
    spacing_grid: tuple[int, ...] = (1, 2, 3)
    p_select: float = 0.8
    sequence_length: int = 1_000_000
    mc_trials: int = 1_000_000
    mc_instances: int = 10
    enumeration_instances: int = 300
    zipf_cases: tuple[str, ...] = ("3:1:0.5", "5:1:0.6")
    zipf_peak: float = 0.9
    seed: int = 2024

    def __post_init__(self):
        for p in self.loss_grid:
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"loss_grid entry {p} outside [0, 1]")
        if any(r < 1 for r in self.quality_grid) or any(r < 1 for r in self.spacing_grid):
            raise ConfigurationError("quality_grid and spacing_grid entries must be >= 1")
        if not 0.0 < self.p_select <= 1.0:
            raise ConfigurationError("p_select must lie in (0, 1]")
        if self.sequence_length < 100_000:
            raise ConfigurationError("sequence_length must be >= 100000")
        if self.mc_trials < 1 or self.mc_instances < 0 or self.enumeration_instances < 0:
            raise ConfigurationError("trial and instance counts must be non-negative")
        for case in self.zipf_cases:
            zipf_case(case)

    @property
    def zipf(self) -> list[tuple[int, float, float]]:
        return [zipf_case(c) for c in self.zipf_cases]


def zipf_case(text: str) -> tuple[int, float, float]:
    """Parse ``m:s:p`` (period, exponent, success probability)."""
    try:
        m, s, p = text.split(":")
        out = int(m), float(s), float(p)
    except ValueError:
        raise ConfigurationError(f"zipf case {text!r} is not m:s:p") from None
    if out[0] < 1 or not 0.0 <= out[2] <= 1.0:
        raise ConfigurationError(f"zipf case {text!r} out of range")
    return out


@dataclass(frozen=True)
class Config:
    scenario: ScenarioConfig = ScenarioConfig()
    analysis: AnalysisSettings = AnalysisSettings()

    def with_seed(self, seed: int) -> "Config":
        return dataclasses.replace(self, scenario=self.scenario.replace(seed=seed))


def _sections() -> dict[str, tuple[type, tuple[str, ...]]]:
    sim_keys = tuple(f.name for f in dataclasses.fields(ScenarioConfig) if f.name not in MODEL_KEYS)
    ana_keys = tuple(f.name for f in dataclasses.fields(AnalysisSettings))
    return {
        "model": (ScenarioConfig, MODEL_KEYS),
        "simulator": (ScenarioConfig, sim_keys),
        "analysis": (AnalysisSettings, ana_keys),
    }


def _convert(cls: type, key: str, text: str):
    hint = typing.get_type_hints(cls)[key]
    text = text.strip()
    try:
        if hint is bool:
            low = text.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if typing.get_origin(hint) is tuple:
            (item, _) = typing.get_args(hint)
            return tuple(item(x.strip()) for x in text.split(",") if x.strip())
        if hint is int:
            return int(text)
        return hint(text)
    except ValueError:
        raise ConfigurationError(f"{key}: cannot parse {text!r} as {getattr(hint, '__name__', hint)}") from None


def _resolve_key(key: str) -> tuple[str, str]:
    sections = _sections()
    if "." in key:
        section, name = key.split(".", 1)
        if section not in sections or name not in sections[section][1]:
            raise ConfigurationError(f"unknown configuration key {key!r}")
        return section, name
    hits = [s for s, (_, keys) in sections.items() if key in keys]
    if len(hits) != 1:
        raise ConfigurationError(f"unknown configuration key {key!r}")
    return hits[0], key


def build_config(values: Mapping[str, Mapping[str, str]]) -> Config:
    """Build a :class:`Config` from raw ``section -> key -> text`` values."""
    sections = _sections()
    scenario: dict[str, object] = {}
    analysis: dict[str, object] = {}
    for section, items in values.items():
        if section not in sections:
            raise ConfigurationError(f"unknown section [{section}]")
        cls, keys = sections[section]
        for key, text in items.items():
            if key not in keys:
                raise ConfigurationError(f"unknown key {key!r} in [{section}]")
            (analysis if cls is AnalysisSettings else scenario)[key] = _convert(cls, key, text)
    try:
        return Config(ScenarioConfig(**scenario), AnalysisSettings(**analysis))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None


def parse_overrides(pairs: Iterable[str]) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigurationError(f"override {pair!r} is not key=value")
        key, text = pair.split("=", 1)
        section, name = _resolve_key(key.strip())
        out.setdefault(section, {})[name] = text
    return out


def load_config(path: str | Path | None = None, overrides: Iterable[str] = ()) -> Config:
    """Read an INI file (optional) and apply ``key=value`` overrides."""
    raw: dict[str, dict[str, str]] = {}
    if path is not None:
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except OSError as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc.strerror}") from None
        except configparser.Error as exc:
            raise ConfigurationError(f"malformed config {path}: {exc}") from None
        raw = {s: dict(parser[s]) for s in parser.sections()}
    for section, items in parse_overrides(overrides).items():
        raw.setdefault(section, {}).update(items)
    return build_config(raw)


def _render(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_render(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(cfg: Config, include_seed: bool = True) -> str:
    """Canonical INI text of every resolved value."""
    lines = []
    for section, (cls, keys) in _sections().items():
        source = cfg.analysis if cls is AnalysisSettings else cfg.scenario
        lines.append(f"[{section}]")
        for key in keys:
            if key == "seed" and cls is ScenarioConfig and not include_seed:
                continue
            lines.append(f"{key} = {_render(getattr(source, key))}")
        lines.append("")
    return "\n".join(lines)


def config_hash(cfg: Config) -> str:
    """Short fingerprint of the configuration, independent of the run seed."""
    return hashlib.sha256(dump_config(cfg, include_seed=False).encode()).hexdigest()[:16]


def override(cfg: Config, key: str, value: str) -> Config:
    """Copy of ``cfg`` with one key replaced (same syntax as ``--set``)."""
    section, name = _resolve_key(key)
    cls = _sections()[section][0]
    converted = _convert(cls, name, value)
    try:
        if cls is AnalysisSettings:
            return dataclasses.replace(cfg, analysis=dataclasses.replace(cfg.analysis, **{name: converted}))
        return dataclasses.replace(cfg, scenario=cfg.scenario.replace(**{name: converted}))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(str(exc)) from None
