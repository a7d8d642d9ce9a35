"""Scenario definitions and per-call environment generation."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
import yaml

from ..netsim import LinkParams, LinkTrace, build_link_trace
from ..orbital import (Constellation, GroundTerminal, ManeuverSpec, apply_maneuvers,
                       serving_schedule, synthesize_walker)
from ..rtc.call import SEGMENT_S, RtcConfig

# (name, lat, lon)
CITIES = (
    ("New York", 40.71, -74.01), ("London", 51.51, -0.13), ("Tokyo", 35.68, 139.69),
    ("Paris", 48.86, 2.35), ("Los Angeles", 34.05, -118.24), ("Sydney", -33.87, 151.21),
    ("Sao Paulo", -23.55, -46.63), ("Mumbai", 19.08, 72.88), ("Beijing", 39.90, 116.41),
    ("Moscow", 55.76, 37.62), ("Cairo", 30.04, 31.24), ("Lagos", 6.52, 3.38),
    ("Mexico City", 19.43, -99.13), ("Toronto", 43.65, -79.38), ("Singapore", 1.35, 103.82),
    ("Dubai", 25.20, 55.27), ("Seoul", 37.57, 126.98), ("Berlin", 52.52, 13.40),
    ("Madrid", 40.42, -3.70), ("Johannesburg", -26.20, 28.05),
)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ManeuverPlan:
    """Random maneuvers drawn per call.

    Each maneuver moves one random satellite: altitude drops by U(0, max_drop_km),
    RAAN shifts by U(-max_raan_deg, max_raan_deg), phase by U(-max_phase_deg,
    max_phase_deg), applied at a uniform time within the call.
    """
    count: int = 0
    max_drop_km: float = 200.0
    max_raan_deg: float = 5.0
    max_phase_deg: float = 10.0

    def draw(self, rng: np.random.Generator, n_sats: int, t0: float, duration: float) -> list[ManeuverSpec]:
        return [ManeuverSpec((int(rng.integers(n_sats)),),
                             -float(rng.uniform(0, self.max_drop_km)),
                             float(rng.uniform(-self.max_raan_deg, self.max_raan_deg)),
                             float(rng.uniform(-self.max_phase_deg, self.max_phase_deg)),
                             t0 + float(rng.uniform(0, duration)))
                for _ in range(self.count)]


@dataclass(frozen=True)
class ScenarioConfig:
    name: str = "ideal"
    planes: int = 10
    sats_per_plane: int = 8
    altitude_km: float = 2000.0
    inclination_deg: float = 53.0
    min_elevation_deg: float = 25.0
    hysteresis_ms: float = 2.0
    maneuvers: ManeuverPlan = field(default_factory=ManeuverPlan)
    call_duration_s: int = 480
    cities: tuple = CITIES
    calls: int = 100
    seed: int = 0
    link: LinkParams = field(default_factory=LinkParams)
    rtc: RtcConfig = field(default_factory=RtcConfig)

    def __post_init__(self):
        if self.call_duration_s < SEGMENT_S or self.call_duration_s % SEGMENT_S:
            raise ConfigError(f"call_duration_s must be a positive multiple of {SEGMENT_S}")
        if len(self.cities) < 2:
            raise ConfigError("city pool needs at least two cities")
        if self.calls < 1:
            raise ConfigError("calls must be >= 1")
        object.__setattr__(self, "cities", tuple(tuple(c) for c in self.cities))

    @property
    def n_satellites(self) -> int:
        return self.planes * self.sats_per_plane

    @property
    def segments_per_call(self) -> int:
        return self.call_duration_s // SEGMENT_S

    def with_(self, **kw) -> "ScenarioConfig":
        return dataclasses.replace(self, **kw)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["cities"] = [list(c) for c in self.cities]
        return d


IDEAL = ScenarioConfig()
DYNAMIC = ScenarioConfig(name="dynamic", sats_per_plane=10, hysteresis_ms=0.0,
                         maneuvers=ManeuverPlan(count=20))
PRESETS = {"ideal": IDEAL, "dynamic": DYNAMIC}


def scenario_from_dict(d: dict) -> ScenarioConfig:
    d = dict(d or {})
    base = PRESETS.get(d.pop("preset", d.get("name", "ideal")), IDEAL)
    known = {f.name for f in dataclasses.fields(ScenarioConfig)}
    unknown = set(d) - known
    if unknown:
        raise ConfigError(f"unknown scenario keys: {sorted(unknown)}")
    if "maneuvers" in d:
        d["maneuvers"] = ManeuverPlan(**d["maneuvers"])
    if "link" in d:
        d["link"] = LinkParams(**d["link"])
    if "rtc" in d:
        d["rtc"] = RtcConfig.from_dict(d["rtc"])
    try:
        return dataclasses.replace(base, **d)
    except TypeError as e:
        raise ConfigError(str(e)) from None


def load_config(path) -> ScenarioConfig:
    raw = yaml.safe_load(Path(path).read_text())
    if raw is not None and not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    return scenario_from_dict(raw or {})


@lru_cache(maxsize=8)
def _walker(planes, spp, alt, inc) -> Constellation:
    return synthesize_walker(planes, spp, alt, inc)


@dataclass
class CallEnv:
    call_id: int
    src: str
    dst: str
    t0: float
    seed: int
    trace: LinkTrace


def call_env(cfg: ScenarioConfig, call_id: int) -> CallEnv:
    """Deterministic environment of one call; depends only on (cfg, call_id)."""
    rng = np.random.default_rng([cfg.seed, call_id])
    i, j = rng.choice(len(cfg.cities), 2, replace=False)
    t0 = float(rng.uniform(0, 86400))
    const = _walker(cfg.planes, cfg.sats_per_plane, cfg.altitude_km, cfg.inclination_deg)
    specs = cfg.maneuvers.draw(rng, len(const), t0, cfg.call_duration_s)
    if specs:
        const = apply_maneuvers(const, specs)
    a, b = cfg.cities[i], cfg.cities[j]
    src = GroundTerminal(a[1], a[2], cfg.min_elevation_deg, a[0])
    dst = GroundTerminal(b[1], b[2], cfg.min_elevation_deg, b[0])
    sched = serving_schedule(const, src, dst, cfg.call_duration_s, cfg.hysteresis_ms, t0=t0)
    trace = build_link_trace(sched, cfg.link, seed=int(rng.integers(1 << 31)))
    trace.meta.update(call_id=call_id, src=a[0], dst=b[0], t0=t0, scenario=cfg.name)
    return CallEnv(call_id, a[0], b[0], t0, int(rng.integers(1 << 31)), trace)
