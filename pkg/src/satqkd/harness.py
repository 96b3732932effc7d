"""Experiment orchestration and flat-file I/O.

Traces are generated with vectorized geometry (chunked over time so memory
stays flat), then handed to the strategy layer.  All outputs are CSV with a
leading comment block that records the resolved config hash, so results are
attributable to the exact configuration that produced them.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import channel as ch
from . import orbit
from .channel import LinkSample
from .config import ConfigError, ExperimentConfig
from .strategy import (
    BlockingPolicy,
    FidelityTrace,
    StrategyOutcome,
    evaluate_block,
    evaluate_nonblock,
    improvement,
)

_TIME_CHUNK = 4096

TRACE_COLUMNS = "time_s,sat_ring,sat_slot,fidelity,sifted_bits"
RESULT_COLUMNS = "pair,altitude_m,strategy,secret_bits,threshold,improvement_pct,normalized_bits"


@dataclass(frozen=True)
class ResultRow:
    pair: str
    altitude_m: float
    strategy: str
    secret_bits: int
    threshold: str
    improvement_pct: float | None
    normalized_bits: float


def pair_name(pair: tuple[str, str]) -> str:
    return f"{pair[0]}-{pair[1]}"


def run_trace(
    config: ExperimentConfig, pair: tuple[str, str], altitude: float
) -> FidelityTrace:
    """Per-second link samples for one station pair at one altitude."""
    gs_a = config.station(pair[0])
    gs_b = config.station(pair[1])
    const = config.constellation_at(altitude)
    chan = config.channel
    optics = chan.optics
    sta = orbit.station_ecef(gs_a)
    stb = orbit.station_ecef(gs_b)

    n_steps = int(round(config.horizon / config.time_step))
    times_all = np.arange(n_steps) * config.time_step
    samples: list[LinkSample] = []

    for start in range(0, n_steps, _TIME_CHUNK):
        times = times_all[start : start + _TIME_CHUNK]
        pos = orbit.propagate_positions(const, times)
        el_a = orbit.elevation_deg(pos, sta)
        el_b = orbit.elevation_deg(pos, stb)
        mask = (el_a >= config.min_elevation) & (el_b >= config.min_elevation)

        # dummy elevations keep the transmissivity math in-domain off-mask
        el_a_safe = np.where(mask, el_a, 45.0)
        el_b_safe = np.where(mask, el_b, 45.0)
        eta_a = ch.arm_transmissivity(
            orbit.slant_range_from_elevation(el_a_safe, altitude),
            np.radians(90.0 - el_a_safe),
            optics,
        )
        eta_b = ch.arm_transmissivity(
            orbit.slant_range_from_elevation(el_b_safe, altitude),
            np.radians(90.0 - el_b_safe),
            optics,
        )
        p_click = np.array(
            [
                ch.background_click_prob(t, chan.radiance, chan.base_background_flux, optics)
                for t in times
            ]
        )[:, None]
        p_signal = eta_a * eta_b
        p_acc = ch.accidental_prob(p_click, p_click, eta_a, eta_b)
        fid = ch.delivered_fidelity(p_signal, p_acc, chan.source.source_fidelity)
        sifted = chan.source.pair_rate * (p_signal + p_acc) * chan.basis_sift_factor

        fid_masked = np.where(mask, fid, -1.0)
        best = np.argmax(fid_masked, axis=1)
        has_link = mask.any(axis=1)
        for i, t in enumerate(times):
            if has_link[i]:
                j = int(best[i])
                samples.append(
                    LinkSample(
                        time=float(t),
                        fidelity=float(fid[i, j]),
                        sifted_bits=float(sifted[i, j]),
                        sat=divmod(j, const.sats_per_ring),
                    )
                )
            else:
                samples.append(LinkSample(time=float(t), fidelity=None, sifted_bits=0.0, sat=None))
    return FidelityTrace(pair=pair_name(pair), samples=samples, horizon=config.horizon)


def _threshold_summary(outcome: StrategyOutcome) -> str:
    def fmt(theta):
        return "none" if theta is None else f"{theta:g}"

    return "|".join(fmt(b.threshold) for b in outcome.per_block)


def _rows_for_cell(
    pair: tuple[str, str], altitude: float, outcomes: dict[str, StrategyOutcome]
) -> list[ResultRow]:
    nonblock = outcomes["non-blockwise"]
    rows = []
    for label, outcome in outcomes.items():
        if label == "non-blockwise":
            imp = None
        else:
            imp = improvement(outcome.secret_bits, nonblock.secret_bits)
        rows.append(
            ResultRow(
                pair=pair_name(pair),
                altitude_m=altitude,
                strategy=label,
                secret_bits=outcome.secret_bits,
                threshold=_threshold_summary(outcome),
                improvement_pct=imp,
                normalized_bits=0.0,  # filled in by normalization
            )
        )
    return rows


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Full sweep: every pair at every altitude, all strategies.

    Failures in a single (pair, altitude) cell become an NA row; the sweep
    continues.  Rows come out in (pair, altitude, strategy) order with
    normalized_bits filled per altitude group.
    """
    rows: list[ResultRow] = []
    for pair in config.pairs:
        for altitude in config.altitudes:
            try:
                trace = run_trace(config, pair, altitude)
                outcomes: dict[str, StrategyOutcome] = {
                    "non-blockwise": evaluate_nonblock(trace, config.grids, config.security)
                }
                block_outcomes = []
                for policy in config.policies:
                    outcome = evaluate_block(trace, policy, config.grids, config.security)
                    outcomes[outcome.label] = outcome
                    block_outcomes.append(outcome)
                if block_outcomes:
                    best = None
                    for outcome in sorted(block_outcomes, key=lambda o: len(o.per_block)):
                        if best is None or outcome.secret_bits > best.secret_bits:
                            best = outcome
                    outcomes["best-block"] = best
                rows.extend(_rows_for_cell(pair, altitude, outcomes))
            except Exception:  # noqa: BLE001 - cell isolation is deliberate
                rows.append(
                    ResultRow(
                        pair=pair_name(pair),
                        altitude_m=altitude,
                        strategy="NA",
                        secret_bits=0,
                        threshold="NA",
                        improvement_pct=None,
                        normalized_bits=0.0,
                    )
                )
    return _normalize(rows)


def _normalize(rows: list[ResultRow]) -> list[ResultRow]:
    """Scale secret_bits to [0, 1] within each altitude group."""
    peaks: dict[float, int] = {}
    for row in rows:
        peaks[row.altitude_m] = max(peaks.get(row.altitude_m, 0), row.secret_bits)
    out = []
    for row in rows:
        peak = peaks[row.altitude_m]
        norm = row.secret_bits / peak if peak > 0 else 0.0
        out.append(
            ResultRow(
                pair=row.pair,
                altitude_m=row.altitude_m,
                strategy=row.strategy,
                secret_bits=row.secret_bits,
                threshold=row.threshold,
                improvement_pct=row.improvement_pct,
                normalized_bits=norm,
            )
        )
    return out


def _open_out(path, header_meta: dict):
    """Open path for writing and emit the comment header."""
    try:
        fh = open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    for key, value in header_meta.items():
        fh.write(f"# {key}={value}\n")
    return fh


def emit_trace_csv(trace: FidelityTrace, path, meta: dict | None = None) -> None:
    """Write a per-second trace; empty sat/fidelity fields mean no link."""
    header = {"pair": trace.pair, "horizon_s": trace.horizon}
    header.update(meta or {})
    with _open_out(path, header) as fh:
        fh.write(TRACE_COLUMNS + "\n")
        for s in trace.samples:
            if s.sat is None:
                fh.write(f"{s.time:g},,,,{s.sifted_bits!r}\n")
            else:
                fh.write(
                    f"{s.time:g},{s.sat[0]},{s.sat[1]},{s.fidelity:.6f},{s.sifted_bits!r}\n"
                )


def read_trace_csv(path) -> tuple[FidelityTrace, dict]:
    """Re-ingest a trace CSV; returns the trace and its header metadata."""
    meta = {}
    samples = []
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    with fh:
        data_lines = []
        for line in fh:
            if line.startswith("#"):
                _meta(line, meta)
            else:
                data_lines.append(line)
        reader = csv.reader(data_lines)
        header = next(reader, None)
        if header is None or ",".join(header) != TRACE_COLUMNS:
            raise ConfigError(f"{path}: not a trace CSV (bad or missing header)")
        for row in reader:
            time_s = float(row[0])
            if row[1] == "":
                samples.append(LinkSample(time=time_s, fidelity=None, sifted_bits=float(row[4]), sat=None))
            else:
                samples.append(
                    LinkSample(
                        time=time_s,
                        fidelity=float(row[3]),
                        sifted_bits=float(row[4]),
                        sat=(int(row[1]), int(row[2])),
                    )
                )
    horizon = float(meta.get("horizon_s", samples[-1].time + 1 if samples else 0))
    return FidelityTrace(pair=meta.get("pair", "unknown"), samples=samples, horizon=horizon), meta


def _meta(line: str, meta: dict) -> None:
    body = line[1:].strip()
    if "=" in body:
        key, _, value = body.partition("=")
        meta[key.strip()] = value.strip()


def format_improvement(imp: float | None) -> str:
    return "NA" if imp is None else f"{imp:.6f}"


def emit_results_csv(rows: list[ResultRow], path, meta: dict | None = None) -> None:
    with _open_out(path, meta or {}) as fh:
        fh.write(RESULT_COLUMNS + "\n")
        for r in rows:
            fh.write(
                f"{r.pair},{int(r.altitude_m)},{r.strategy},{r.secret_bits},"
                f"{r.threshold},{format_improvement(r.improvement_pct)},"
                f"{r.normalized_bits:.6f}\n"
            )


def emit_plotdata(obj, path, meta: dict | None = None) -> None:
    """Plot-ready data: minute-averaged fidelity for traces, or result rows."""
    if isinstance(obj, FidelityTrace):
        _emit_trace_plotdata(obj, path, meta)
    else:
        _emit_results_plotdata(obj, path, meta)


def _emit_trace_plotdata(trace: FidelityTrace, path, meta: dict | None) -> None:
    header = {"pair": trace.pair}
    header.update(meta or {})
    with _open_out(path, header) as fh:
        fh.write("minute,mean_fidelity,sifted_bits\n")
        n_minutes = math.ceil(len(trace.samples) / 60)
        for minute in range(n_minutes):
            window = trace.samples[minute * 60 : (minute + 1) * 60]
            fids = [s.fidelity for s in window if s.fidelity is not None]
            bits = sum(s.sifted_bits for s in window)
            mean = f"{sum(fids) / len(fids):.6f}" if fids else ""
            fh.write(f"{minute},{mean},{bits!r}\n")


def _emit_results_plotdata(rows: list[ResultRow], path, meta: dict | None) -> None:
    with _open_out(path, meta or {}) as fh:
        fh.write("pair,altitude_m,strategy,normalized_bits,improvement_pct\n")
        for r in rows:
            fh.write(
                f"{r.pair},{int(r.altitude_m)},{r.strategy},{r.normalized_bits:.6f},"
                f"{format_improvement(r.improvement_pct)}\n"
            )


def threshold_sweep(trace: FidelityTrace, config: ExperimentConfig):
    """Key length at every threshold grid point (non-blockwise).

    Returns a list of (theta, best_rate, secret_bits) over the whole grid;
    the basis of the optimal-threshold curve.
    """
    from .strategy import optimize_threshold

    out = []
    for theta in config.grids.thresholds:
        _, rate, result, _ = optimize_threshold(
            trace.samples, config.grids, config.security, thresholds=(theta,)
        )
        out.append((theta, rate, result.secret_bits))
    return out
