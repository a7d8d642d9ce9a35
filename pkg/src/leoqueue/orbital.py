"""Constellation geometry: TLE ingestion, circular two-body propagation,
terminal visibility and the delay-based serving-satellite schedule.

Positions are Earth-centred inertial (km).  Terminals rotate with the
Earth; satellites follow circular orbits (no J2, no drag).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

MU_EARTH = 398600.4418          # km^3 / s^2
R_EARTH = 6371.0                # km
C_KM_S = 299792.458             # km / s
EARTH_ROT_DEG_S = 360.0 / 86164.0
MIN_ALTITUDE_KM = 300.0
MAX_ALTITUDE_KM = 2000.0
ISL_HOP_MS = 7.0


class OrbitalError(Exception):
    pass


class EmptyInput(OrbitalError):
    pass


class ChecksumError(OrbitalError):
    pass


class InvalidGeometry(OrbitalError):
    pass


class UnknownSatellite(OrbitalError):
    pass


def _wrap360(x: float) -> float:
    x = math.fmod(x, 360.0)
    if x < 0:
        x += 360.0
    # fmod of e.g. -1e-17 can land on exactly 360.0
    return 0.0 if x >= 360.0 else x


@dataclass(frozen=True)
class OrbitalElements:
    semi_major_axis: float
    inclination: float
    raan: float
    mean_anomaly_at_epoch: float
    epoch: float = 0.0

    def __post_init__(self):
        alt = self.semi_major_axis - R_EARTH
        if not MIN_ALTITUDE_KM <= alt <= MAX_ALTITUDE_KM:
            raise InvalidGeometry(f"altitude {alt:.1f} km outside [{MIN_ALTITUDE_KM}, {MAX_ALTITUDE_KM}]")
        for name in ("inclination", "raan", "mean_anomaly_at_epoch"):
            object.__setattr__(self, name, _wrap360(float(getattr(self, name))))

    @property
    def altitude(self) -> float:
        return self.semi_major_axis - R_EARTH

    @property
    def mean_motion(self) -> float:
        """rad/s"""
        return math.sqrt(MU_EARTH / self.semi_major_axis ** 3)

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.mean_motion


@dataclass(frozen=True)
class ManeuverSpec:
    target_sat_ids: tuple[int, ...]
    delta_altitude: float = 0.0
    delta_raan: float = 0.0
    delta_mean_anomaly: float = 0.0
    apply_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "target_sat_ids", tuple(int(i) for i in self.target_sat_ids))


@dataclass(frozen=True)
class Constellation:
    planes: int
    sats_per_plane: int
    satellites: tuple[tuple[int, OrbitalElements], ...]
    topology_tag: str = "GridPlus"
    # per satellite: ((apply_time, elements), ...) sorted by time
    maneuvered: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        ids = [sid for sid, _ in self.satellites]
        if ids != list(range(len(ids))):
            raise InvalidGeometry("satellite ids must be dense 0..N-1 in order")
        if self.planes * self.sats_per_plane != len(ids):
            raise InvalidGeometry("planes * sats_per_plane must equal satellite count")

    def __len__(self) -> int:
        return len(self.satellites)

    def elements(self, sat_id: int, t: float = 0.0) -> OrbitalElements:
        el = self.satellites[sat_id][1]
        for t0, e in self.maneuvered.get(sat_id, ()):
            if t >= t0:
                el = e
        return el

    def positions(self, times) -> np.ndarray:
        """ECI positions, shape (len(times), N, 3)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        els = [e for _, e in self.satellites]
        out = _propagate_arrays(
            np.array([e.semi_major_axis for e in els]),
            np.array([e.inclination for e in els]),
            np.array([e.raan for e in els]),
            np.array([e.mean_anomaly_at_epoch for e in els]),
            np.array([e.epoch for e in els]),
            times,
        )
        for sid, segments in self.maneuvered.items():
            for t0, e in segments:
                mask = times >= t0
                if mask.any():
                    out[mask, sid] = _propagate_arrays(
                        np.array([e.semi_major_axis]), np.array([e.inclination]),
                        np.array([e.raan]), np.array([e.mean_anomaly_at_epoch]),
                        np.array([e.epoch]), times[mask])[:, 0]
        return out

    def isl_hops(self, a: int, b: int) -> int:
        """Grid+ hop count: in-plane ring plus links to adjacent planes."""
        s = self.sats_per_plane
        pa, sa = divmod(a, s)
        pb, sb = divmod(b, s)
        dp = abs(pa - pb)
        ds = abs(sa - sb)
        return min(dp, self.planes - dp) + min(ds, s - ds)


@dataclass(frozen=True)
class GroundTerminal:
    latitude: float
    longitude: float
    min_elevation: float = 25.0
    name: str = ""

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude {self.latitude} outside [-90, 90]")
        lon = ((self.longitude + 180.0) % 360.0) - 180.0
        object.__setattr__(self, "longitude", lon)
        if not 0.0 < self.min_elevation < 90.0:
            raise ValueError("min_elevation must lie in (0, 90)")

    def position(self, t) -> np.ndarray:
        """ECI position(s) at time(s) t; shape (..., 3)."""
        t = np.asarray(t, dtype=float)
        lat = math.radians(self.latitude)
        lon = np.radians(self.longitude + EARTH_ROT_DEG_S * t)
        return np.stack([R_EARTH * math.cos(lat) * np.cos(lon),
                         R_EARTH * math.cos(lat) * np.sin(lon),
                         np.full_like(lon, R_EARTH * math.sin(lat))], axis=-1)


@dataclass
class ServingSchedule:
    duration: int
    serving_sat_id: np.ndarray      # src-side serving satellite, -1 when no path
    delay_ms: np.ndarray            # one-way end-to-end propagation delay
    dst_serving_sat_id: np.ndarray | None = None

    def __post_init__(self):
        self.serving_sat_id = np.asarray(self.serving_sat_id, dtype=np.int64)
        self.delay_ms = np.asarray(self.delay_ms, dtype=float)
        if len(self.serving_sat_id) != self.duration or len(self.delay_ms) != self.duration:
            raise ValueError("series lengths must equal duration")

    @property
    def handover_seconds(self) -> np.ndarray:
        return handover_indices(self.serving_sat_id)

    @property
    def handover_count(self) -> int:
        return int(self.handover_seconds.size)


def handover_indices(serving) -> np.ndarray:
    """Indices t where the serving id changes between two valid ids."""
    s = np.asarray(serving)
    if s.size < 2:
        return np.zeros(0, dtype=np.int64)
    prev, cur = s[:-1], s[1:]
    return np.flatnonzero((prev >= 0) & (cur >= 0) & (prev != cur)) + 1


# ---------------------------------------------------------------- TLE

def _tle_checksum(line: str) -> int:
    total = 0
    for ch in line[:68]:
        if ch.isdigit():
            total += int(ch)
        elif ch == "-":
            total += 1
    return total % 10


def _check_line(line: str, number: int) -> None:
    if len(line) != 69 or line[0] != str(number) or line[1] != " ":
        raise ValueError(f"line {number} malformed")
    if not line[68].isdigit() or _tle_checksum(line) != int(line[68]):
        raise ChecksumError(f"checksum mismatch on line {number}")


def mean_motion_to_sma(revs_per_day: float) -> float:
    n = revs_per_day * 2.0 * math.pi / 86400.0
    return (MU_EARTH / n ** 2) ** (1.0 / 3.0)


def parse_tle(text: str, errors: list | None = None) -> list[tuple[str, OrbitalElements]]:
    """Parse 2- or 3-line element sets.

    Bad records (wrong layout, checksum, out-of-range altitude) are skipped
    and logged; pass ``errors`` to collect ``(record_index, exception)``.
    """
    lines = [ln.rstrip() for ln in (text or "").splitlines() if ln.strip()]
    out: list[tuple[str, OrbitalElements]] = []
    skipped = 0
    i = 0
    rec = 0
    while i < len(lines):
        name = ""
        if not lines[i].startswith("1 "):
            name = lines[i].strip()
            if name.startswith("0 "):
                name = name[2:].strip()
            i += 1
        if i + 1 >= len(lines) + 0 and i >= len(lines):
            break
        l1 = lines[i] if i < len(lines) else ""
        l2 = lines[i + 1] if i + 1 < len(lines) else ""
        i += 2
        try:
            _check_line(l1, 1)
            _check_line(l2, 2)
            if l1[2:7] != l2[2:7]:
                raise ValueError("catalog numbers differ between lines")
            incl = float(l2[8:16])
            raan = float(l2[17:25])
            mean_anom = float(l2[43:51])
            mm = float(l2[52:63])
            el = OrbitalElements(mean_motion_to_sma(mm), incl, raan, mean_anom)
            out.append((name or l1[2:7].strip(), el))
        except (ValueError, OrbitalError) as exc:
            skipped += 1
            if errors is not None:
                errors.append((rec, exc))
            log.warning("skipping TLE record %d: %s", rec, exc)
        rec += 1
    if skipped:
        log.warning("%d malformed TLE record(s) skipped", skipped)
    if not out:
        raise EmptyInput("no valid TLE records")
    return out


def constellation_from_tle(records: Sequence[tuple[str, OrbitalElements]],
                           planes: int | None = None) -> Constellation:
    """Wrap parsed TLEs as a constellation (single 'plane' unless given)."""
    sats = tuple((i, e) for i, (_, e) in enumerate(records))
    n = len(sats)
    p = planes or 1
    if n % p:
        raise InvalidGeometry("record count not divisible by planes")
    return Constellation(p, n // p, sats)


# ---------------------------------------------------------------- geometry

def synthesize_walker(planes: int, sats_per_plane: int, altitude: float,
                      inclination: float, seed: int = 0) -> Constellation:
    """Walker-delta layout with phasing factor 1.

    ``seed`` is accepted for interface symmetry; the layout is fully
    determined by the other arguments.
    """
    if planes < 2 or sats_per_plane < 2:
        raise InvalidGeometry("walker needs at least 2 planes and 2 satellites per plane")
    a = R_EARTH + altitude
    total = planes * sats_per_plane
    sats = []
    for p in range(planes):
        for s in range(sats_per_plane):
            sid = p * sats_per_plane + s
            m = 360.0 * s / sats_per_plane + 360.0 * p / total
            sats.append((sid, OrbitalElements(a, inclination, 360.0 * p / planes, m)))
    return Constellation(planes, sats_per_plane, tuple(sats))


def _propagate_arrays(a, inc, raan, m0, epoch, times) -> np.ndarray:
    n = np.sqrt(MU_EARTH / a ** 3)
    u = np.radians(m0)[None, :] + n[None, :] * (times[:, None] - epoch[None, :])
    i = np.radians(inc)[None, :]
    o = np.radians(raan)[None, :]
    cu, su = np.cos(u), np.sin(u)
    ci, si = np.cos(i), np.sin(i)
    co, so = np.cos(o), np.sin(o)
    r = a[None, :]
    x = r * (co * cu - so * su * ci)
    y = r * (so * cu + co * su * ci)
    z = r * (su * si)
    return np.stack([x, y, z], axis=-1)


def propagate(elements: OrbitalElements, t: float) -> np.ndarray:
    if t < 0:
        raise ValueError("t must be >= 0")
    e = elements
    return _propagate_arrays(np.array([e.semi_major_axis]), np.array([e.inclination]),
                             np.array([e.raan]), np.array([e.mean_anomaly_at_epoch]),
                             np.array([e.epoch]), np.array([float(t)]))[0, 0]


def elevation_and_range(sat_position, terminal: GroundTerminal, t: float) -> tuple[float, float]:
    sat = np.asarray(sat_position, dtype=float)
    if np.linalg.norm(sat) <= R_EARTH:
        raise ValueError("satellite position lies inside the Earth")
    el, rng = _elevation_range(sat[None, :], terminal.position(t))
    return float(el[0]), float(rng[0])


def _elevation_range(sats: np.ndarray, term: np.ndarray):
    d = sats - term
    rng = np.linalg.norm(d, axis=-1)
    up = term / np.linalg.norm(term, axis=-1, keepdims=True)
    s = np.clip(np.sum(d * up, axis=-1) / rng, -1.0, 1.0)
    return np.degrees(np.arcsin(s)), rng


def propagation_delay(slant_range_km: float) -> float:
    if slant_range_km < 0:
        raise ValueError("slant range must be nonnegative")
    return slant_range_km / C_KM_S * 1000.0


def apply_maneuvers(constellation: Constellation,
                    specs: Sequence[ManeuverSpec]) -> Constellation:
    """Return a copy with orbit changes that take effect at each apply_time.

    A maneuver re-epochs the orbit at ``apply_time`` so the track stays
    continuous apart from the requested deltas.
    """
    n = len(constellation)
    segments = {k: list(v) for k, v in constellation.maneuvered.items()}
    for spec in sorted(specs, key=lambda s: s.apply_time):
        for sid in spec.target_sat_ids:
            if not 0 <= sid < n:
                raise UnknownSatellite(f"satellite {sid} not in constellation")
            t0 = float(spec.apply_time)
            cur = constellation.elements(sid, t0)
            for ts, e in segments.get(sid, ()):
                if ts <= t0:
                    cur = e
            u = math.degrees(cur.mean_motion * (t0 - cur.epoch)) + cur.mean_anomaly_at_epoch
            new = replace(cur,
                          semi_major_axis=cur.semi_major_axis + spec.delta_altitude,
                          raan=cur.raan + spec.delta_raan,
                          mean_anomaly_at_epoch=u + spec.delta_mean_anomaly,
                          epoch=t0)
            segments.setdefault(sid, []).append((t0, new))
            segments[sid].sort(key=lambda x: x[0])
    return replace(constellation, maneuvered={k: tuple(v) for k, v in segments.items()})


def _access(constellation: Constellation, terminal: GroundTerminal, pos: np.ndarray):
    """Per-second (visible mask, access delay ms) for all satellites."""
    t = np.arange(pos.shape[0], dtype=float)
    term = terminal.position(t)[:, None, :]
    el, rng = _elevation_range(pos, term)
    return el >= terminal.min_elevation, rng / C_KM_S * 1000.0


def _select(visible: np.ndarray, delay: np.ndarray, hysteresis_ms: float) -> np.ndarray:
    T = visible.shape[0]
    out = np.full(T, -1, dtype=np.int64)
    masked = np.where(visible, delay, np.inf)
    cur = -1
    for t in range(T):
        row = masked[t]
        best = int(np.argmin(row))
        if not np.isfinite(row[best]):
            cur = -1
        elif cur < 0 or not visible[t, cur]:
            cur = best
        elif row[best] < row[cur] - hysteresis_ms:
            cur = best
        out[t] = cur
    return out


def serving_schedule(constellation: Constellation, src: GroundTerminal, dst: GroundTerminal,
                     duration: int, hysteresis_ms: float = 0.0,
                     isl_hop_ms: float = ISL_HOP_MS, t0: float = 0.0) -> ServingSchedule:
    """Delay-based serving satellites for both ends of a call.

    Each terminal keeps its serving satellite until a visible candidate is
    faster by more than ``hysteresis_ms`` (or the incumbent sets).  The
    path is up when both ends are served; its one-way delay is the two
    access delays plus grid+ hop count times ``isl_hop_ms``.
    """
    if duration < 1:
        raise ValueError("duration must be >= 1")
    times = t0 + np.arange(duration, dtype=float)
    pos = constellation.positions(times)
    vis_s, d_s = _access(constellation, replace(src), pos) if t0 == 0 else _access_at(src, pos, times)
    vis_d, d_d = _access(constellation, replace(dst), pos) if t0 == 0 else _access_at(dst, pos, times)
    sel_s = _select(vis_s, d_s, hysteresis_ms)
    sel_d = _select(vis_d, d_d, hysteresis_ms)
    serving = np.full(duration, -1, dtype=np.int64)
    delay = np.zeros(duration)
    last = 0.0
    for t in range(duration):
        a, b = sel_s[t], sel_d[t]
        if a >= 0 and b >= 0:
            serving[t] = a
            last = d_s[t, a] + d_d[t, b] + isl_hop_ms * constellation.isl_hops(a, b)
        delay[t] = last
    return ServingSchedule(duration, serving, delay, sel_d)


def _access_at(terminal: GroundTerminal, pos: np.ndarray, times: np.ndarray):
    term = terminal.position(times)[:, None, :]
    el, rng = _elevation_range(pos, term)
    return el >= terminal.min_elevation, rng / C_KM_S * 1000.0
