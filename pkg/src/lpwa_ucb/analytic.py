"""Collision probabilities at the first and second transmission of a packet.

``p_c`` is the probability that a first transmission collides, ``x`` the
steady-state per-slot transmission probability of a device, and ``p_ca`` the
probability that the retransmission collides with one of the packets from the
first collision. The closed form assumes ``x << 1``; outside that regime the
outputs are clamped to [0, 1].
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaln, logsumexp


class DomainError(ValueError):
    pass


def _check_n_devices(N: int) -> None:
    if N < 2:
        raise DomainError(f"N must be >= 2, got {N}")


def _check_window(m: int) -> None:
    if m < 1:
        raise DomainError(f"m must be >= 1, got {m}")


def _clamp(p: float) -> float:
    return min(max(p, 0.0), 1.0)


def x_from_pc(p_c: float, N: int) -> float:
    _check_n_devices(N)
    if not (0.0 <= p_c < 1.0):
        raise DomainError(f"p_c must lie in [0, 1), got {p_c}")
    return -math.expm1(math.log1p(-p_c) / (N - 1))


def pc_from_x(x: float, N: int) -> float:
    _check_n_devices(N)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 1.0:
        return 1.0
    return -math.expm1((N - 1) * math.log1p(-x))


def _log_prob_n_collide(n, x: float, N: int):
    # log of C(N-1, n) x^n (1-x)^(N-1-n); callers handle x in {0, 1}
    n = np.asarray(n, dtype=float)
    return (gammaln(N) - gammaln(n + 1) - gammaln(N - n)
            + n * math.log(x) + (N - 1 - n) * math.log1p(-x))


def _check_n(n: int, N: int) -> None:
    if not (0 <= n <= N - 1):
        raise DomainError(f"n must lie in [0, N-1] = [0, {N - 1}], got {n}")


def prob_n_collide(n: int, x: float, N: int) -> float:
    """Probability that exactly ``n`` of the other N-1 devices transmit in the slot."""
    _check_n_devices(N)
    _check_n(n, N)
    if not (0.0 <= x <= 1.0):
        raise DomainError(f"x must lie in [0, 1], got {x}")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x == 1.0:
        return 1.0 if n == N - 1 else 0.0
    return float(np.exp(_log_prob_n_collide(n, x, N)))


def _log_same_backoff(n, m: int):
    # log of 1 - (1 - 1/m)^n, the chance one of n colliders draws our back-off
    n = np.asarray(n, dtype=float)
    if m == 1:
        return np.where(n > 0, 0.0, -np.inf)
    with np.errstate(divide="ignore"):
        return np.log(-np.expm1(n * math.log1p(-1.0 / m)))


def prob_backoff_collision(n: int, x: float, N: int, m: int) -> float:
    """Collision with exactly ``n`` packets, at least one of which picks the same back-off."""
    _check_window(m)
    base = prob_n_collide(n, x, N)
    if base == 0.0:
        return 0.0
    return base * float(np.exp(_log_same_backoff(n, m)))


def _check_pc(p_c: float) -> None:
    if not (0.0 < p_c < 1.0):
        raise DomainError(f"p_c must lie in (0, 1), got {p_c}")


def p_ca_exact(p_c: float, N: int, m: int) -> float:
    """Re-collision probability from the full binomial sum, evaluated in log space."""
    _check_pc(p_c)
    _check_n_devices(N)
    _check_window(m)
    x = x_from_pc(p_c, N)
    n = np.arange(1, N)
    log_terms = _log_prob_n_collide(n, x, N) + _log_same_backoff(n, m)
    return _clamp(float(np.exp(logsumexp(log_terms) - math.log(p_c))))


def p_ca_closed(p_c: float, N: int, m: int) -> float:
    """Re-collision probability from the binomial-theorem closed form (valid for x << 1)."""
    _check_pc(p_c)
    _check_n_devices(N)
    _check_window(m)
    x = x_from_pc(p_c, N)
    growth = math.exp((N - 1) * math.log1p(x * (1.0 - 1.0 / m)))
    return _clamp(1.0 / p_c - (1.0 / p_c - 1.0) * growth)


def p_c1_approx(p_c: float, N: int, m: int) -> float:
    """Collision probability at the first retransmission."""
    p_ca = p_ca_closed(p_c, N, m)
    return _clamp(p_ca + (1.0 - p_ca) * p_c)


def gap(p_c: float, N: int, m: int) -> float:
    return p_c1_approx(p_c, N, m) - p_c
