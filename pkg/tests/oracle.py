"""Independent high-precision reference implementations used to freeze expected values.

Everything here is computed with mpmath at 50 decimal digits and deliberately
shares no code with the package under test.
"""

import mpmath as mp

mp.mp.dps = 50


def entropy(q):
    q = mp.mpf(q)
    if q == 0 or q == 1:
        return mp.mpf(0)
    return -q * mp.log(q, 2) - (1 - q) * mp.log(1 - q, 2)


def deviation(n, m, eps_sec):
    n, m = mp.mpf(n), mp.mpf(m)
    return mp.sqrt((n + m) * (m + 1) / (n * m * m) * mp.log(2 / mp.mpf(eps_sec)))


def leakage(n, q, mu, efficiency=1.0):
    qm = min(mp.mpf(q) + mp.mpf(mu), mp.mpf("0.5"))
    return mp.mpf(efficiency) * mp.mpf(n) * entropy(qm)


def raw_key_length(n, m, q, eps_sec, eps_cor, efficiency=1.0):
    mu = deviation(n, m, eps_sec)
    qm = min(mp.mpf(q) + mu, mp.mpf("0.5"))
    sec = 1 - 2 * mp.log(mp.mpf(eps_sec), 2) - mp.log(mp.mpf(eps_cor), 2)
    return mp.mpf(n) * (1 - entropy(qm)) - leakage(n, q, mu, efficiency) - sec


def secret_bits(n, m, q, eps_sec, eps_cor, efficiency=1.0):
    raw = raw_key_length(n, m, q, eps_sec, eps_cor, efficiency)
    return int(min(mp.mpf(n), max(mp.mpf(0), mp.floor(raw))))


def rate_nonblock(q):
    return max(mp.mpf(0), 1 - 2 * entropy(q))


def rate_block(weights_qbers):
    return mp.fsum(mp.mpf(p) * rate_nonblock(q) for p, q in weights_qbers)
