"""Experiment configuration: defaults, JSON loading, validation, hashing.

The config file is a single JSON document; every field is optional and
falls back to the defaults below, which mirror the shipped
configs/default.json.  Station coordinates are public geographic facts;
the radiance scales and optics values are invented calibration defaults.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

from .channel import ChannelParams, OpticsConfig, RadianceSchedule, SourceConfig
from .finite_key import SecurityParams
from .orbit import ConstellationConfig, GroundStation
from .strategy import BlockingPolicy, SearchGrids


class ConfigError(ValueError):
    """A configuration file failed to parse or validate."""


DEFAULT_STATIONS = (
    GroundStation("DC", 38.9072, -77.0369),
    GroundStation("Toronto", 43.6532, -79.3832),
    GroundStation("Houston", 29.7604, -95.3698),
)
DEFAULT_PAIRS = (("Toronto", "DC"), ("DC", "Houston"), ("Toronto", "Houston"))
DEFAULT_ALTITUDES = (500e3, 800e3, 1000e3, 1300e3)
DEFAULT_POLICIES = (BlockingPolicy((0.98,)), BlockingPolicy((0.90, 0.98)))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a full sweep needs, resolved and validated."""

    constellation: ConstellationConfig = field(
        default_factory=lambda: ConstellationConfig(altitude=DEFAULT_ALTITUDES[0])
    )
    altitudes: tuple[float, ...] = DEFAULT_ALTITUDES
    stations: tuple[GroundStation, ...] = DEFAULT_STATIONS
    pairs: tuple[tuple[str, str], ...] = DEFAULT_PAIRS
    channel: ChannelParams = field(default_factory=ChannelParams)
    security: SecurityParams = field(default_factory=SecurityParams)
    grids: SearchGrids = field(default_factory=SearchGrids)
    policies: tuple[BlockingPolicy, ...] = DEFAULT_POLICIES
    horizon: float = 86400.0
    time_step: float = 1.0
    min_elevation: float = 20.0

    def __post_init__(self):
        names = {s.name for s in self.stations}
        if len(names) != len(self.stations):
            raise ConfigError("stations: duplicate station names")
        for a, b in self.pairs:
            for name in (a, b):
                if name not in names:
                    raise ConfigError(
                        f"pairs: pair {a}-{b} references undeclared station {name!r}"
                    )
            if a == b:
                raise ConfigError(f"pairs: pair {a}-{b} repeats one station")
        if self.horizon <= 0 or self.time_step <= 0:
            raise ConfigError("horizon and time_step must be > 0")
        if self.horizon % self.time_step != 0:
            raise ConfigError("horizon must be divisible by time_step")
        if not 0.0 <= self.min_elevation < 90.0:
            raise ConfigError("min_elevation must be in [0, 90)")
        if any(a <= 0 for a in self.altitudes):
            raise ConfigError("altitudes must all be > 0")

    def station(self, name: str) -> GroundStation:
        for s in self.stations:
            if s.name == name:
                return s
        raise ConfigError(f"unknown station {name!r}")

    def constellation_at(self, altitude: float) -> ConstellationConfig:
        return replace(self.constellation, altitude=altitude)

    def to_dict(self) -> dict:
        """Fully resolved config as plain JSON-serializable data."""
        return {
            "constellation": {
                "rings": self.constellation.rings,
                "sats_per_ring": self.constellation.sats_per_ring,
                "raan_span_rad": self.constellation.raan_span,
                "interplane_phase_rad": self.constellation.interplane_phase,
            },
            "altitudes_m": list(self.altitudes),
            "stations": [
                {"name": s.name, "latitude": s.latitude, "longitude": s.longitude}
                for s in self.stations
            ],
            "pairs": [list(p) for p in self.pairs],
            "source": {
                "pair_rate": self.channel.source.pair_rate,
                "pump_power": self.channel.source.pump_power,
                "source_fidelity": self.channel.source.source_fidelity,
            },
            "optics": {
                "beam_divergence_rad": self.channel.optics.beam_divergence,
                "rx_aperture_diameter_m": self.channel.optics.rx_aperture_diameter,
                "rx_efficiency": self.channel.optics.rx_efficiency,
                "zenith_optical_depth": self.channel.optics.zenith_optical_depth,
                "dark_rate_hz": self.channel.optics.dark_rate,
                "gate_time_s": self.channel.optics.gate_time,
            },
            "radiance": {
                "interval_scales": list(self.channel.radiance.interval_scales),
                "base_flux_hz": self.channel.base_background_flux,
            },
            "basis_sift_factor": self.channel.basis_sift_factor,
            "security": {
                "eps_sec": self.security.eps_sec,
                "eps_cor": self.security.eps_cor,
            },
            "grids": {
                "sampling_rates": list(self.grids.sampling_rates),
                "thresholds": list(self.grids.thresholds),
            },
            "policies": [list(p.boundaries) for p in self.policies],
            "horizon_s": self.horizon,
            "time_step_s": self.time_step,
            "min_elevation_deg": self.min_elevation,
        }

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _require(condition: bool, message: str):
    if not condition:
        raise ConfigError(message)


def _grids_from_dict(d: dict) -> SearchGrids:
    if "sampling_rates" in d:
        rates = tuple(float(r) for r in d["sampling_rates"])
    else:
        import numpy as np

        lo = float(d.get("sampling_rate_min", 1e-5))
        hi = float(d.get("sampling_rate_max", 0.05))
        pts = int(d.get("sampling_rate_points", 50))
        _require(0 < lo <= hi, "grids: need 0 < sampling_rate_min <= sampling_rate_max")
        rates = tuple(np.geomspace(lo, hi, pts))
    if "thresholds" in d:
        thetas = tuple(float(t) for t in d["thresholds"])
    else:
        lo = float(d.get("threshold_min", 0.70))
        hi = float(d.get("threshold_max", 0.90))
        step = float(d.get("threshold_step", 0.02))
        _require(step > 0 and lo <= hi, "grids: bad threshold range")
        n = int(round((hi - lo) / step)) + 1
        thetas = tuple(round(lo + i * step, 10) for i in range(n))
    return SearchGrids(sampling_rates=rates, thresholds=thetas)


def config_from_dict(data: dict) -> ExperimentConfig:
    """Build a validated config from parsed JSON, applying defaults."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    try:
        c = data.get("constellation", {})
        altitudes = tuple(float(a) for a in data.get("altitudes_m", DEFAULT_ALTITUDES))
        constellation = ConstellationConfig(
            altitude=altitudes[0],
            rings=int(c.get("rings", 20)),
            sats_per_ring=int(c.get("sats_per_ring", 20)),
            raan_span=float(c.get("raan_span_rad", math.pi)),
            interplane_phase=float(c.get("interplane_phase_rad", 0.0)),
        )
        if "stations" in data:
            stations = tuple(
                GroundStation(s["name"], float(s["latitude"]), float(s["longitude"]))
                for s in data["stations"]
            )
        else:
            stations = DEFAULT_STATIONS
        pairs = tuple(
            (p[0], p[1]) for p in data.get("pairs", [list(q) for q in DEFAULT_PAIRS])
        )
        s = data.get("source", {})
        source = SourceConfig(
            pair_rate=float(s.get("pair_rate", 1e9)),
            pump_power=float(s.get("pump_power", 0.01)),
            source_fidelity=float(s.get("source_fidelity", 1.0)),
        )
        o = data.get("optics", {})
        optics = OpticsConfig(
            beam_divergence=float(o.get("beam_divergence_rad", 10e-6)),
            rx_aperture_diameter=float(o.get("rx_aperture_diameter_m", 1.0)),
            rx_efficiency=float(o.get("rx_efficiency", 0.5)),
            zenith_optical_depth=float(o.get("zenith_optical_depth", 0.7)),
            dark_rate=float(o.get("dark_rate_hz", 100.0)),
            gate_time=float(o.get("gate_time_s", 1e-9)),
        )
        r = data.get("radiance", {})
        radiance = RadianceSchedule(
            interval_scales=tuple(
                float(x) for x in r.get("interval_scales", (1.0, 20.0, 100.0, 1.0))
            )
        )
        channel = ChannelParams(
            source=source,
            optics=optics,
            radiance=radiance,
            base_background_flux=float(r.get("base_flux_hz", 3e3)),
            basis_sift_factor=float(data.get("basis_sift_factor", 0.5)),
        )
        sec = data.get("security", {})
        security = SecurityParams(
            eps_sec=float(sec.get("eps_sec", 1e-9)),
            eps_cor=float(sec.get("eps_cor", 1e-15)),
        )
        grids = _grids_from_dict(data.get("grids", {}))
        policies = tuple(
            BlockingPolicy(tuple(float(b) for b in bounds))
            for bounds in data.get("policies", [[0.98], [0.90, 0.98]])
        )
        return ExperimentConfig(
            constellation=constellation,
            altitudes=altitudes,
            stations=stations,
            pairs=pairs,
            channel=channel,
            security=security,
            grids=grids,
            policies=policies,
            horizon=float(data.get("horizon_s", 86400.0)),
            time_step=float(data.get("time_step_s", 1.0)),
            min_elevation=float(data.get("min_elevation_deg", 20.0)),
        )
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


def load_config(path: str | None = None) -> ExperimentConfig:
    """Load a JSON config file; None gives the built-in defaults."""
    if path is None:
        return ExperimentConfig()
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
    return config_from_dict(data)
