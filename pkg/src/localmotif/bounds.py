"""Analytic tail bounds for theme orders.

Everything is evaluated in log space; quantities such as ``p`` values are
exponentiated only at the reporting boundary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .errors import DomainError

LOG_PVALUE_FLOOR = math.log(1e-300)


_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _stirling_error(n: int) -> float:
    """``lgamma(n+1) - (n+1/2) log n + n - log(2 pi)/2``."""
    if n <= 15:
        if n == 0:
            return 1.0 - _HALF_LOG_2PI
        return math.lgamma(n + 1.0) - (n + 0.5) * math.log(n) + n - _HALF_LOG_2PI
    nn = 1.0 / (n * n)
    return (1 / 12 - nn * (1 / 360 - nn * (1 / 1260 - nn * (1 / 1680 - nn / 1188)))) / n


def _deviance(x: float, mu: float) -> float:
    """``x log(x/mu) + mu - x`` without cancellation near ``x == mu``."""
    if abs(x - mu) < 0.1 * (x + mu):
        v = (x - mu) / (x + mu)
        s = (x - mu) * v
        ej = 2.0 * x * v
        v2 = v * v
        j = 1
        while True:
            ej *= v2
            s_new = s + ej / (2 * j + 1)
            if s_new == s:
                return s_new
            s = s_new
            j += 1
    return x * math.log(x / mu) + mu - x


def poisson_log_pmf(lam: float, K: int) -> float:
    """``log P(Po(lam) = K)`` in saddle-point form, accurate to a few ulps
    of the result even when ``K`` and ``lam`` are large."""
    if K == 0:
        return -lam
    return -_stirling_error(K) - _deviance(K, lam) - _HALF_LOG_2PI - 0.5 * math.log(K)


def poisson_upper_tail_log(lam: float, K: int) -> float:
    """``log P(Po(lam) >= K)``.

    Above the mean the tail is summed upward from ``K`` (terms shrink by
    ``lam / (K + i)``); at or below the mean the lower tail is summed
    downward from ``K - 1`` and complemented with ``log1p``.
    """
    if lam <= 0:
        raise DomainError(f"Poisson mean must be > 0, got {lam}")
    K = int(K)
    if K <= 0:
        return 0.0
    if K > lam:
        log_head = poisson_log_pmf(lam, K)
        total, term, i = 1.0, 1.0, 1
        while True:
            term *= lam / (K + i)
            total += term
            if term < 1e-17 * total:
                break
            i += 1
        return log_head + math.log(total)
    top = K - 1
    log_head = poisson_log_pmf(lam, top)
    total, term = 1.0, 1.0
    for j in range(top, 0, -1):
        term *= j / lam
        total += term
        if term < 1e-17 * total:
            break
    log_lower = log_head + math.log(total)
    return math.log1p(-math.exp(log_lower))


def chen_stein_bound_log(lam: float, K: int) -> float:
    if not K > 2 * lam:
        raise DomainError(f"Chen-Stein bound needs K > 2*lambda (K={K}, lambda={lam})")
    return math.log((K - lam) / (K - 2 * lam)) + poisson_upper_tail_log(lam, K)


def chen_stein_bound(lam: float, K: int) -> float:
    """Upper bound on ``P(N_U >= K | occurrence)`` for ``K > 2 lam``."""
    return math.exp(chen_stein_bound_log(lam, K))


def t_lambda(lam: float) -> float:
    """Threshold above which the Chen-Stein factor ``h`` drops below one."""
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    return 1.0 + (1.0 + math.sqrt(1.0 + 16.0 * math.pi * lam)) / (4.0 * math.pi * lam)


def _log_h_branch(lam: float, t: float) -> float:
    # log of sqrt(t+1) / (sqrt(2 pi lam) (t-1)); only valid for t > 1
    return 0.5 * math.log1p(t) - 0.5 * math.log(2.0 * math.pi * lam) - math.log(t - 1.0)


def log_h(lam: float, t: float) -> float:
    if t <= t_lambda(lam):
        return 0.0
    return _log_h_branch(lam, t)


def h(lam: float, t: float) -> float:
    return math.exp(log_h(lam, t))


def deviation_rate(t: float) -> float:
    """``(1+t) log(1+t) - t``, with a series near zero to avoid cancellation."""
    if abs(t) < 1e-3:
        # sum_{n>=2} (-1)^n t^n / (n (n-1))
        return t * t * (0.5 - t * (1 / 6 - t * (1 / 12 - t * (1 / 20 - t / 30))))
    return (1.0 + t) * math.log1p(t) - t


def concentration_bound_log(lam: float, t: float, occ_prob: float = 1.0) -> float:
    """Bound valid for every ``t > 0`` (no ``h`` factor)."""
    return _log(occ_prob) - lam * deviation_rate(t)


def chen_stein_branch_log(lam: float, t: float, occ_prob: float = 1.0) -> float:
    """Bound valid for ``t > 1`` obtained from the Chen-Stein tail."""
    if t <= 1:
        raise DomainError("Chen-Stein branch needs t > 1")
    return _log(occ_prob) + _log_h_branch(lam, t) - lam * deviation_rate(t)


def _log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


@dataclass(frozen=True)
class BoundInputs:
    lam: float
    t: float
    lam2: float = 0.0
    occ_prob: float = 1.0

    def __post_init__(self):
        vals = (self.lam, self.t, self.lam2, self.occ_prob)
        if not all(math.isfinite(x) for x in vals):
            raise DomainError("bound inputs must be finite")
        if self.lam <= 0 or self.t <= 0:
            raise DomainError("lambda and t must be > 0")
        if self.lam2 < 0 or self.lam2 > self.lam * (1 + 1e-12):
            raise DomainError("need 0 <= lambda2 <= lambda")
        if not 0 <= self.occ_prob <= 1:
            raise DomainError("occurrence probability must lie in [0, 1]")


def local_bound_log(lam: float, t: float, occ_prob: float = 1.0) -> float:
    return _log(occ_prob) + log_h(lam, t) - lam * deviation_rate(t)


def local_bound(inputs: BoundInputs) -> float:
    """Upper bound on ``P(Delta_U >= t)`` at one position."""
    return math.exp(local_bound_log(inputs.lam, inputs.t, inputs.occ_prob))


def g(lam: float, t: float) -> float:
    """Exponential-scale score of a normalized excess ``t`` at mean ``lam``."""
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    if t <= 0:
        raise DomainError(f"t must be > 0, got {t}")
    if math.isinf(t):
        return math.inf
    return lam * deviation_rate(t) - log_h(lam, t)


def invert_g(lam: float, s: float) -> float:
    """The ``t > 0`` with ``g(lam, t) = s``."""
    if lam <= 0 or s <= 0:
        raise DomainError("invert_g needs lambda > 0 and s > 0")
    hi = 1.0
    while g(lam, hi) < s:
        hi *= 2.0
    t = brentq(lambda x: g(lam, x) - s if x > 0 else -s, 0.0, hi,
               xtol=1e-300, rtol=4 * 2.220446049250313e-16, maxiter=1000)
    return float(t)


def score(lam: float, n_u: int) -> float:
    """``g(lam, Delta_U)`` for an observed theme order, 0 when there is no
    excess and ``inf`` when ``lam == 0`` but extensions were seen."""
    if lam <= 0:
        return math.inf if n_u > 0 else 0.0
    delta = (n_u - lam) / lam
    return g(lam, delta) if delta > 0 else 0.0


def global_pvalue_log(expected_sub: float, s_star: float) -> float:
    if expected_sub < 0 or s_star < 0:
        raise DomainError("expected count and score must be >= 0")
    return min(0.0, _log(expected_sub) - s_star)


def global_pvalue(expected_sub: float, s_star: float) -> float:
    """``min(1, E[N(m')] exp(-s_star))``."""
    return math.exp(global_pvalue_log(expected_sub, s_star))


def format_pvalue(log_p: float) -> str:
    if log_p < LOG_PVALUE_FLOOR:
        return "< 1e-300"
    return f"{math.exp(log_p):.2e}"


def lower_bound_diag(inputs: BoundInputs) -> float | None:
    """Lower bound on the ratio of the exact local tail to :func:`local_bound`;
    ``None`` where its preconditions fail."""
    lam, lam2, t = inputs.lam, inputs.lam2, inputs.t
    if not lam2 < 0.25:
        return None
    if lam2 > 0 and not 1 < t < 1 / (8 * math.sqrt(lam2)) - 1:
        return None
    if lam2 == 0 and not t > 1:
        return None
    ratio = (
        (1 - 52 * (lam2 / lam) * (1 + t))
        * (1 - 2 / (1 + t))
        * (1 - 1 / (10 * lam * (1 + t)))
    )
    return max(0.0, ratio)


def tv_distance_bound(lam: float, lam2: float) -> float:
    """Total-variation bound between the theme order and ``Po(lam)``."""
    if lam <= 0:
        raise DomainError(f"lambda must be > 0, got {lam}")
    return min(1.0, 1.0 / lam) * lam2
