"""Post-processing policies over fidelity traces.

A trace is reduced to (fidelity, sifted_bits) pairs; a policy then decides
which samples to discard (fidelity threshold), how to partition the rest
into blocks, and how many bits to sacrifice to error sampling.  Thresholds
and sampling rates are chosen by exhaustive grid search; everything here
is deterministic, with ties broken toward the smaller threshold, the
smaller sampling rate, and the fewer blocks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import FIDELITY_FLOOR, LinkSample, fidelity_to_qber
from .finite_key import KeyLengthResult, SampleCounts, SecurityParams, key_length_nonblock


class NoDataError(ValueError):
    """Raised when an operation needs sample data and none is available."""


@dataclass(frozen=True)
class FidelityTrace:
    """Per-second link samples for one ground-station pair."""

    pair: str
    samples: list[LinkSample]
    horizon: float

    def __post_init__(self):
        times = [s.time for s in self.samples]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise ValueError("trace samples must be strictly increasing in time")


@dataclass(frozen=True)
class BlockingPolicy:
    """Fidelity cut-points defining blocks; empty = non-blockwise."""

    boundaries: tuple[float, ...] = ()

    def __post_init__(self):
        if any(b >= c for b, c in zip(self.boundaries, self.boundaries[1:])):
            raise ValueError("boundaries must be strictly ascending")
        if any(not FIDELITY_FLOOR < b < 1.0 for b in self.boundaries):
            raise ValueError("boundaries must lie in (0.25, 1)")

    @property
    def n_blocks(self) -> int:
        return len(self.boundaries) + 1

    @property
    def label(self) -> str:
        if not self.boundaries:
            return "non-blockwise"
        return f"{self.n_blocks}-block"


def _default_sampling_rates() -> tuple[float, ...]:
    return tuple(np.geomspace(1e-5, 0.05, 50))

def _default_thresholds() -> tuple[float, ...]:
    return tuple(round(0.70 + 0.02 * i, 2) for i in range(11))


@dataclass(frozen=True)
class SearchGrids:
    """Grid-search candidates for sampling rate and fidelity threshold."""

    sampling_rates: tuple[float, ...] = field(default_factory=_default_sampling_rates)
    thresholds: tuple[float, ...] = field(default_factory=_default_thresholds)

    def __post_init__(self):
        if not self.sampling_rates or not self.thresholds:
            raise ValueError("grids must be nonempty")


@dataclass(frozen=True)
class BlockOutcome:
    """Diagnostics for one distilled block."""

    fidelity_lo: float
    fidelity_hi: float
    block_bits: int  # bits retained after thresholding (N fed to the formula)
    test_bits: int
    qber: float
    threshold: float | None  # None when the block used no discard step
    sampling_rate: float | None
    secret_bits: int


@dataclass(frozen=True)
class StrategyOutcome:
    """A distillation result: total key plus per-block bookkeeping."""

    secret_bits: int
    per_block: list[BlockOutcome]
    label: str


def _linked_arrays(samples) -> tuple[np.ndarray, np.ndarray]:
    """(fidelity, sifted_bits) arrays over samples that carried a link."""
    fid = np.array(
        [s.fidelity for s in samples if s.fidelity is not None], dtype=float
    )
    bits = np.array(
        [s.sifted_bits for s in samples if s.fidelity is not None], dtype=float
    )
    return fid, bits


def aggregate_qber(samples) -> tuple[float, float]:
    """Total sifted bits and rate-weighted mean QBER over the samples."""
    fid, bits = _linked_arrays(samples)
    total = float(bits.sum())
    if len(fid) == 0 or total <= 0.0:
        raise NoDataError("no sifted bits in sample set")
    qber = float((bits * fidelity_to_qber(fid)).sum() / total)
    return total, qber


def apply_threshold(samples, theta: float):
    """Keep only the samples whose fidelity is >= theta."""
    if not FIDELITY_FLOOR <= theta <= 1.0:
        raise ValueError(f"threshold must be in [0.25, 1], got {theta}")
    return [s for s in samples if s.fidelity is not None and s.fidelity >= theta]


def partition(trace: FidelityTrace, policy: BlockingPolicy) -> list[list[LinkSample]]:
    """Split linked samples into fidelity buckets, highest bucket first.

    Bucket j covers [b_j, b_{j+1}); the top bucket is closed at 1.
    """
    edges = [FIDELITY_FLOOR, *policy.boundaries, 1.0]
    ranges = [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)]
    buckets: list[list[LinkSample]] = [[] for _ in ranges]
    for s in trace.samples:
        if s.fidelity is None:
            continue
        for i, (lo, hi) in enumerate(ranges):
            if lo <= s.fidelity < hi or (s.fidelity == hi == 1.0):
                buckets[i].append(s)
                break
    return buckets[::-1]


def bucket_ranges(policy: BlockingPolicy) -> list[tuple[float, float]]:
    """Fidelity ranges of the policy's buckets, highest first."""
    edges = [FIDELITY_FLOOR, *policy.boundaries, 1.0]
    return [(edges[i], edges[i + 1]) for i in range(len(edges) - 1)][::-1]


def optimize_sampling(
    total_bits: float,
    qber: float,
    grid: SearchGrids,
    params: SecurityParams,
) -> tuple[float, KeyLengthResult]:
    """Grid-search the sampling rate maximizing the key length.

    Ties break toward the smaller rate.
    """
    if total_bits < 2:
        raise NoDataError(f"need at least 2 bits to split, got {total_bits}")
    n_total = int(total_bits)
    best = None
    for rate in grid.sampling_rates:
        m = max(1, round(rate * n_total))
        n = n_total - m
        if n < 1:
            continue
        result = key_length_nonblock(SampleCounts(n, m), qber, params)
        if best is None or result.secret_bits > best[1].secret_bits:
            best = (rate, result)
    if best is None:
        raise NoDataError("no feasible sampling rate on the grid")
    return best


def optimize_threshold(
    samples,
    grids: SearchGrids,
    params: SecurityParams,
    thresholds: tuple[float, ...] | None = None,
) -> tuple[float | None, float | None, KeyLengthResult, tuple[float, float, int]]:
    """Joint (threshold, sampling-rate) grid search maximizing key length.

    `thresholds` overrides the grid's threshold candidates; an empty tuple
    means a single no-discard evaluation.  Ties break toward the smaller
    threshold.  Returns (theta, rate, result, (total_bits, qber, n_samples))
    for the winning cell; cells with no retainable data score zero.
    """
    candidates: list[float | None] = (
        list(grids.thresholds) if thresholds is None else list(thresholds)
    )
    if not candidates:
        candidates = [None]

    zero = KeyLengthResult(secret_bits=0, raw_value=0.0, mu=0.0, ec_leakage=0.0)
    best_theta: float | None = None
    best_rate: float | None = None
    best_result = zero
    best_stats = (0.0, 0.0, 0)
    have_best = False
    for theta in candidates:
        kept = samples if theta is None else apply_threshold(samples, theta)
        try:
            total, qber = aggregate_qber(kept)
            rate, result = optimize_sampling(total, qber, grids, params)
            stats = (total, qber, len(kept))
        except NoDataError:
            rate, result, stats = None, zero, (0.0, 0.0, len(kept))
        if not have_best or result.secret_bits > best_result.secret_bits:
            best_theta, best_rate, best_result, best_stats = theta, rate, result, stats
            have_best = True
    return best_theta, best_rate, best_result, best_stats


def _bucket_outcome(
    bucket_samples,
    fid_range: tuple[float, float],
    grids: SearchGrids,
    params: SecurityParams,
    thresholds: tuple[float, ...] | None,
) -> BlockOutcome:
    theta, rate, result, (total, qber, _) = optimize_threshold(
        bucket_samples, grids, params, thresholds=thresholds
    )
    test_bits = max(1, round(rate * int(total))) if rate is not None else 0
    return BlockOutcome(
        fidelity_lo=fid_range[0],
        fidelity_hi=fid_range[1],
        block_bits=int(total),
        test_bits=test_bits,
        qber=qber,
        threshold=theta,
        sampling_rate=rate,
        secret_bits=result.secret_bits,
    )


def evaluate_nonblock(
    trace: FidelityTrace, grids: SearchGrids, params: SecurityParams
) -> StrategyOutcome:
    """Distill the whole trace as a single block."""
    block = _bucket_outcome(
        trace.samples, (FIDELITY_FLOOR, 1.0), grids, params, thresholds=None
    )
    return StrategyOutcome(
        secret_bits=block.secret_bits, per_block=[block], label="non-blockwise"
    )


def evaluate_block(
    trace: FidelityTrace,
    policy: BlockingPolicy,
    grids: SearchGrids,
    params: SecurityParams,
) -> StrategyOutcome:
    """Partition the trace per the policy and distill each block on its own.

    Within each bucket, threshold candidates are the grid points that fall
    inside the bucket's fidelity range; buckets entirely above the grid are
    distilled without a discard step.
    """
    buckets = partition(trace, policy)
    per_block = []
    total = 0
    for bucket_samples, fid_range in zip(buckets, bucket_ranges(policy)):
        lo, hi = fid_range
        if policy.boundaries:
            local = tuple(t for t in grids.thresholds if lo <= t < hi)
        else:
            local = tuple(grids.thresholds)
        block = _bucket_outcome(bucket_samples, fid_range, grids, params, local)
        per_block.append(block)
        total += block.secret_bits
    return StrategyOutcome(secret_bits=total, per_block=per_block, label=policy.label)


def best_blocking(
    trace: FidelityTrace,
    policies: list[BlockingPolicy],
    grids: SearchGrids,
    params: SecurityParams,
) -> StrategyOutcome:
    """Evaluate every policy and keep the best; ties go to fewer blocks."""
    if not policies:
        raise ValueError("best_blocking needs at least one policy")
    best = None
    for policy in sorted(policies, key=lambda p: p.n_blocks):
        outcome = evaluate_block(trace, policy, grids, params)
        if best is None or outcome.secret_bits > best.secret_bits:
            best = outcome
    return best


def improvement(l_block: int, l_nonblock: int) -> float | None:
    """Percent gain of blockwise over non-blockwise; None when undefined."""
    if l_block < 0 or l_nonblock < 0:
        raise ValueError("key lengths must be >= 0")
    if l_nonblock == 0:
        return None
    return 100.0 * (l_block - l_nonblock) / l_nonblock
