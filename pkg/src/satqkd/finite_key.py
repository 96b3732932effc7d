"""Finite-key and asymptotic secret-key-length formulas.

All functions here are pure and operate on plain numbers; they know nothing
about satellites or traces.  Key lengths are computed analytically (no bit
strings are ever manipulated):

    l = n * (1 - h(Q + mu)) - lambda_EC - log2(2 / (eps_sec^2 * eps_cor))

with the error-correction leakage modeled as lambda_EC = f * n * h(Q + mu)
(f = 1 by default) and the sampling deviation

    mu = sqrt( (n + m) * (m + 1) / (n * m^2) * ln(2 / eps_sec) ).

Negative key lengths are clamped to zero and floored to whole bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SecurityParams:
    """Failure budgets for secrecy and correctness."""

    eps_sec: float = 1e-9
    eps_cor: float = 1e-15

    def __post_init__(self):
        if not 0.0 < self.eps_sec < 1.0:
            raise ValueError(f"eps_sec must be in (0, 1), got {self.eps_sec}")
        if not 0.0 < self.eps_cor < 1.0:
            raise ValueError(f"eps_cor must be in (0, 1), got {self.eps_cor}")


@dataclass(frozen=True)
class SampleCounts:
    """Raw-key split: n_keep bits kept, m_test bits sacrificed for testing."""

    n_keep: int
    m_test: int

    def __post_init__(self):
        if self.m_test < 1:
            raise ValueError(f"m_test must be >= 1, got {self.m_test}")
        if self.n_keep < 0:
            raise ValueError(f"n_keep must be >= 0, got {self.n_keep}")

    @property
    def total(self) -> int:
        return self.n_keep + self.m_test


@dataclass(frozen=True)
class BlockStats:
    """One post-processing block: size, test-sample size, observed error rate."""

    block_size: int
    test_size: int
    qber: float

    def __post_init__(self):
        if not 0 < self.test_size < self.block_size:
            raise ValueError(
                f"need 0 < test_size < block_size, got "
                f"test_size={self.test_size}, block_size={self.block_size}"
            )
        if not 0.0 <= self.qber <= 0.5:
            raise ValueError(f"qber must be in [0, 0.5], got {self.qber}")


@dataclass(frozen=True)
class KeyLengthResult:
    """Clamped key length plus the diagnostics behind it."""

    secret_bits: int
    raw_value: float
    mu: float
    ec_leakage: float


def binary_entropy(x: float) -> float:
    """Binary entropy h(x) in bits, with h(0) = h(1) = 0."""
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"binary_entropy domain is [0, 1], got {x}")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def sampling_deviation(counts: SampleCounts, eps_sec: float) -> float:
    """Finite-sampling correction mu for an (n, m) raw-key split."""
    n, m = counts.n_keep, counts.m_test
    if n < 1:
        raise ValueError("sampling_deviation requires n_keep >= 1")
    if m < 1:
        raise ValueError("sampling_deviation requires m_test >= 1")
    if not 0.0 < eps_sec < 1.0:
        raise ValueError("eps_sec must lie in (0, 1)")
    return math.sqrt((n + m) * (m + 1) / (n * m * m) * math.log(2.0 / eps_sec))


def ec_leakage(n_keep: int, qber: float, mu: float, efficiency: float = 1.0) -> float:
    """Bits leaked by error correction: f * n * h(Q + mu).

    Q + mu is capped at 0.5; past that point the entropy bound saturates.
    """
    if efficiency < 1.0:
        raise ValueError(f"efficiency must be >= 1, got {efficiency}")
    q_eff = min(qber + mu, 0.5)
    return efficiency * n_keep * binary_entropy(q_eff)


def security_term(params: SecurityParams) -> float:
    """The log2(2 / (eps_sec^2 * eps_cor)) subtraction."""
    return 1.0 - 2.0 * math.log2(params.eps_sec) - math.log2(params.eps_cor)


def key_length_nonblock(
    counts: SampleCounts,
    qber: float,
    params: SecurityParams,
    ec_efficiency: float = 1.0,
) -> KeyLengthResult:
    """Secret key length when the whole raw key is processed as one block."""
    if not 0.0 <= qber <= 0.5:
        raise ValueError(f"qber must be in [0, 0.5], got {qber}")
    n = counts.n_keep
    mu = sampling_deviation(counts, params.eps_sec)
    q_eff = min(qber + mu, 0.5)
    entropy = binary_entropy(q_eff)
    leak = ec_efficiency * n * entropy
    raw = n * (1.0 - entropy) - leak - security_term(params)
    secret = min(n, max(0, math.floor(raw)))
    return KeyLengthResult(secret_bits=secret, raw_value=raw, mu=mu, ec_leakage=leak)


def key_length_block(
    block: BlockStats,
    params: SecurityParams,
    ec_efficiency: float = 1.0,
) -> KeyLengthResult:
    """Secret key length for a single block (n = B - m, m = test_size)."""
    counts = SampleCounts(block.block_size - block.test_size, block.test_size)
    return key_length_nonblock(counts, block.qber, params, ec_efficiency)


def key_length_total(
    blocks: list[BlockStats],
    params: SecurityParams,
    ec_efficiency: float = 1.0,
) -> KeyLengthResult:
    """Sum of per-block key lengths, each clamped before the sum.

    Diagnostics are aggregates: raw_value and ec_leakage are sums, mu is the
    n-weighted mean over blocks (0 for an empty list).
    """
    total_bits = 0
    total_raw = 0.0
    total_leak = 0.0
    mu_weighted = 0.0
    n_total = 0
    for block in blocks:
        result = key_length_block(block, params, ec_efficiency)
        total_bits += result.secret_bits
        total_raw += result.raw_value
        total_leak += result.ec_leakage
        n = block.block_size - block.test_size
        mu_weighted += n * result.mu
        n_total += n
    mu = mu_weighted / n_total if n_total else 0.0
    return KeyLengthResult(
        secret_bits=total_bits, raw_value=total_raw, mu=mu, ec_leakage=total_leak
    )


def asymptotic_rate_nonblock(qber: float) -> float:
    """Infinite-data key rate 1 - 2 h(Q), clamped at zero."""
    if not 0.0 <= qber <= 0.5:
        raise ValueError(f"qber must be in [0, 0.5], got {qber}")
    return max(0.0, 1.0 - 2.0 * binary_entropy(qber))


def asymptotic_rate_block(fractions: list[tuple[float, float]]) -> float:
    """Infinite-data blockwise rate: sum of p_i * max(0, 1 - 2 h(Q_i)).

    `fractions` holds (p_i, Q_i) pairs; the p_i must sum to 1.
    """
    total_p = sum(p for p, _ in fractions)
    if abs(total_p - 1.0) > 1e-9:
        raise ValueError(f"block fractions must sum to 1, got {total_p}")
    rate = 0.0
    for p, q in fractions:
        if p < 0.0:
            raise ValueError(f"block fraction must be >= 0, got {p}")
        rate += p * asymptotic_rate_nonblock(q)
    return rate
