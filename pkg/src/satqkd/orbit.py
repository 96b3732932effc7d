"""Circular polar LEO constellation propagation and ground-station geometry.

Spherical Earth, two-body circular orbits at 90 degree inclination.  The
constellation is a "star" pattern: ring ascending nodes are spread over
`raan_span` radians (default pi) and each ring holds equally spaced
satellites.  Positions are returned in an Earth-fixed frame; at t = 0 the
node line of ring 0 is aligned with the Greenwich meridian.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

EARTH_RADIUS_M = 6_371_000.0
EARTH_MU = 3.986004418e14  # m^3 / s^2
EARTH_ROTATION_RAD_S = 7.2921159e-5


@dataclass(frozen=True)
class GroundStation:
    name: str
    latitude: float  # degrees
    longitude: float  # degrees

    def __post_init__(self):
        if not -90.0 <= self.latitude <= 90.0:
            raise ValueError(f"latitude out of range for {self.name}: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValueError(f"longitude out of range for {self.name}: {self.longitude}")


@dataclass(frozen=True)
class ConstellationConfig:
    altitude: float  # meters
    rings: int = 20
    sats_per_ring: int = 20
    raan_span: float = math.pi
    interplane_phase: float = 0.0

    def __post_init__(self):
        if self.rings < 1 or self.sats_per_ring < 1:
            raise ValueError("rings and sats_per_ring must be >= 1")
        if self.altitude <= 0:
            raise ValueError(f"altitude must be > 0, got {self.altitude}")

    @property
    def n_sats(self) -> int:
        return self.rings * self.sats_per_ring


@dataclass(frozen=True)
class SatPosition:
    ring_index: int
    slot_index: int
    position: tuple[float, float, float]  # Earth-fixed, meters


@dataclass(frozen=True)
class VisibilityRecord:
    time: float
    sat: tuple[int, int]
    elevation_a: float  # degrees
    elevation_b: float  # degrees


def kepler_period(altitude: float) -> float:
    """Orbital period of a circular orbit at the given altitude, seconds."""
    if altitude <= 0:
        raise ValueError(f"altitude must be > 0, got {altitude}")
    radius = EARTH_RADIUS_M + altitude
    return 2.0 * math.pi * math.sqrt(radius**3 / EARTH_MU)


def station_ecef(gs: GroundStation) -> np.ndarray:
    """Earth-fixed Cartesian position of a ground station, meters."""
    lat = math.radians(gs.latitude)
    lon = math.radians(gs.longitude)
    return EARTH_RADIUS_M * np.array(
        [math.cos(lat) * math.cos(lon), math.cos(lat) * math.sin(lon), math.sin(lat)]
    )


def propagate_positions(
    config: ConstellationConfig,
    times: np.ndarray,
    earth_rotation: bool = True,
) -> np.ndarray:
    """Earth-fixed positions of every satellite at every time.

    Returns shape (len(times), rings * sats_per_ring, 3); satellites are
    ordered ring-major, i.e. index = ring * sats_per_ring + slot.
    """
    times = np.asarray(times, dtype=float)
    radius = EARTH_RADIUS_M + config.altitude
    period = kepler_period(config.altitude)

    rings = np.arange(config.rings)
    slots = np.arange(config.sats_per_ring)
    raan = rings * (config.raan_span / config.rings)  # (R,)
    phase = (
        2.0 * math.pi * slots / config.sats_per_ring
    )[None, :] + (rings * config.interplane_phase)[:, None]  # (R, S)

    # anomaly (T, R, S): in-plane angle measured from the ascending node
    anomaly = phase[None, :, :] + (2.0 * math.pi / period) * times[:, None, None]

    cos_u = np.cos(anomaly)
    sin_u = np.sin(anomaly)
    cos_o = np.cos(raan)[None, :, None]
    sin_o = np.sin(raan)[None, :, None]

    # polar orbit: plane vector [cos u, 0, sin u] rotated about z by the node
    x = radius * cos_u * cos_o
    y = radius * cos_u * sin_o
    z = radius * sin_u

    if earth_rotation:
        theta = EARTH_ROTATION_RAD_S * times[:, None, None]
        cos_t = np.cos(theta)
        sin_t = np.sin(theta)
        x, y = x * cos_t + y * sin_t, -x * sin_t + y * cos_t

    pos = np.stack([x, y, z], axis=-1)
    return pos.reshape(len(times), config.n_sats, 3)


def propagate(
    config: ConstellationConfig, t: float, earth_rotation: bool = True
) -> list[SatPosition]:
    """Snapshot of the whole constellation at time t."""
    if t < 0:
        raise ValueError(f"t must be >= 0, got {t}")
    pos = propagate_positions(config, np.array([t]), earth_rotation)[0]
    out = []
    for idx in range(config.n_sats):
        ring, slot = divmod(idx, config.sats_per_ring)
        out.append(SatPosition(ring, slot, tuple(pos[idx])))
    return out


def elevation_deg(positions: np.ndarray, station: np.ndarray) -> np.ndarray:
    """Elevation angle (degrees) from a station to each position.

    `positions` may have any leading shape ending in 3; broadcasts.
    """
    d = positions - station
    up = station / np.linalg.norm(station)
    sin_el = (d @ up) / np.linalg.norm(d, axis=-1)
    return np.degrees(np.arcsin(np.clip(sin_el, -1.0, 1.0)))


def elevation(sat: SatPosition, gs: GroundStation) -> float:
    return float(elevation_deg(np.array(sat.position), station_ecef(gs)))


def slant_range(sat: SatPosition, gs: GroundStation) -> float:
    """Line-of-sight distance from station to satellite, meters."""
    return float(np.linalg.norm(np.array(sat.position) - station_ecef(gs)))


def slant_range_from_elevation(elevation_degrees, altitude: float):
    """Slant range implied by elevation and altitude on a spherical Earth."""
    el = np.radians(elevation_degrees)
    radius = EARTH_RADIUS_M + altitude
    cos_el = np.cos(el)
    return np.sqrt(radius**2 - (EARTH_RADIUS_M * cos_el) ** 2) - EARTH_RADIUS_M * np.sin(el)


def visible_sats(
    config: ConstellationConfig,
    t: float,
    pair: tuple[GroundStation, GroundStation],
    min_elevation: float,
) -> list[VisibilityRecord]:
    """Satellites whose elevation to both stations is >= min_elevation at t."""
    if not 0.0 <= min_elevation < 90.0:
        raise ValueError(f"min_elevation must be in [0, 90), got {min_elevation}")
    pos = propagate_positions(config, np.array([t]))[0]
    el_a = elevation_deg(pos, station_ecef(pair[0]))
    el_b = elevation_deg(pos, station_ecef(pair[1]))
    records = []
    for idx in np.nonzero((el_a >= min_elevation) & (el_b >= min_elevation))[0]:
        ring, slot = divmod(int(idx), config.sats_per_ring)
        records.append(
            VisibilityRecord(
                time=t,
                sat=(ring, slot),
                elevation_a=float(el_a[idx]),
                elevation_b=float(el_b[idx]),
            )
        )
    return records
