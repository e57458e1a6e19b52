"""Small-sample tests used by the study analysis: two-sided Mann-Whitney U,
one-sample t against chance, and Shapiro-Wilk normality.

Mann-Whitney is exact (full enumeration over rank arrangements) when the
pooled sample has at most 12 observations, and otherwise uses the normal
approximation with tie and continuity corrections. Shapiro-Wilk follows the
standard polynomial-approximation algorithm for 3 <= n <= 5000.
"""

from __future__ import annotations

import math
from itertools import combinations
from typing import NamedTuple

import numpy as np
from scipy import stats as _scipy_stats

from .errors import DomainError

EXACT_LIMIT = 12  # pooled size at or below which Mann-Whitney enumerates


class MannWhitneyResult(NamedTuple):
    u: float
    p_value: float


class TTestResult(NamedTuple):
    t: float
    p_value: float


class ShapiroResult(NamedTuple):
    w: float
    p_value: float


def _midranks(values):
    return _scipy_stats.rankdata(values)


def mann_whitney_u(a, b, method: str = "auto") -> MannWhitneyResult:
    """Two-sided Mann-Whitney U test; U reported for the first sample.

    method: "auto" picks exact enumeration when len(a)+len(b) <= 12,
    "exact" or "normal" force a branch.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or len(a) < 1 or len(b) < 1:
        raise DomainError("both samples must be non-empty 1-D arrays")
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise DomainError("samples must be finite")
    if method not in ("auto", "exact", "normal"):
        raise DomainError(f"unknown method {method!r}")
    n1, n2 = len(a), len(b)
    n = n1 + n2
    ranks = _midranks(np.concatenate([a, b]))
    u1 = float(ranks[:n1].sum() - n1 * (n1 + 1) / 2)
    if method == "exact" or (method == "auto" and n <= EXACT_LIMIT):
        p = _mwu_exact_p(ranks, n1, u1)
    else:
        p = _mwu_normal_p(a, b, ranks, u1)
    return MannWhitneyResult(u=u1, p_value=p)


def _mwu_exact_p(ranks, n1, u1):
    # permutation distribution of U over all assignments of pooled ranks;
    # two-sided p = mass at least as far from the mean as observed. Ties
    # with unequal group sizes make the distribution asymmetric, so the
    # usual doubled-tail shortcut is not used
    n = len(ranks)
    offset = n1 * (n1 + 1) / 2
    mu = n1 * (n - n1) / 2
    d = abs(u1 - mu)
    count = 0
    total = 0
    for idx in combinations(range(n), n1):
        u = sum(ranks[i] for i in idx) - offset
        if abs(u - mu) >= d - 1e-9:
            count += 1
        total += 1
    return count / total


def _mwu_normal_p(a, b, ranks, u1):
    n1, n2 = len(a), len(b)
    n = n1 + n2
    mu = n1 * n2 / 2
    _, tie_counts = np.unique(np.concatenate([a, b]), return_counts=True)
    tie = float(np.sum(tie_counts**3 - tie_counts))
    var = n1 * n2 / 12 * ((n + 1) - tie / (n * (n - 1)))
    if var <= 0:
        return 1.0  # every observation tied: no ordering evidence
    d = u1 - mu
    # continuity correction pulls the statistic half a step toward the mean
    z = (abs(d) - 0.5) / math.sqrt(var) if abs(d) > 0.5 else 0.0
    return min(1.0, 2.0 * float(_scipy_stats.norm.sf(z)))


def one_sample_t(x, mu0: float) -> TTestResult:
    """Two-sided one-sample t-test of mean(x) against mu0."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or len(x) < 2:
        raise DomainError("need at least 2 observations")
    if not np.all(np.isfinite(x)):
        raise DomainError("sample must be finite")
    sd = float(np.std(x, ddof=1))
    if sd == 0.0:
        raise DomainError("sample is constant; t statistic undefined")
    n = len(x)
    t = (float(np.mean(x)) - mu0) / (sd / math.sqrt(n))
    p = 2.0 * float(_scipy_stats.t.sf(abs(t), n - 1))
    return TTestResult(t=t, p_value=min(1.0, p))


def shapiro_wilk(x) -> ShapiroResult:
    """Shapiro-Wilk W and p for 3 <= n <= 5000.

    Weights follow the normal-scores polynomial approximation; the p-value
    uses the published small-n transforms (n=3 arcsine form, 4..11 logistic
    form) and the log-normal form for n >= 12.
    """
    x = np.sort(np.asarray(x, dtype=float))
    n = len(x)
    if x.ndim != 1 or n < 3 or n > 5000:
        raise DomainError("sample size must be in [3, 5000]")
    if not np.all(np.isfinite(x)):
        raise DomainError("sample must be finite")
    if x[0] == x[-1]:
        raise DomainError("sample is constant; W undefined")
    m = _scipy_stats.norm.ppf((np.arange(1, n + 1) - 0.375) / (n + 0.25))
    mm = float(m @ m)
    c = m / math.sqrt(mm)
    u = 1.0 / math.sqrt(n)
    a = np.empty(n)
    if n == 3:
        a[:] = [-math.sqrt(0.5), 0.0, math.sqrt(0.5)]
    else:
        an = (-2.706056 * u**5 + 4.434685 * u**4 - 2.071190 * u**3
              - 0.147981 * u**2 + 0.221157 * u + c[-1])
        if n <= 5:
            phi = (mm - 2.0 * m[-1] ** 2) / (1.0 - 2.0 * an**2)
            a[1:-1] = m[1:-1] / math.sqrt(phi)
            a[-1], a[0] = an, -an
        else:
            an1 = (-3.582633 * u**5 + 5.682633 * u**4 - 1.752461 * u**3
                   - 0.293762 * u**2 + 0.042981 * u + c[-2])
            phi = (mm - 2.0 * m[-1] ** 2 - 2.0 * m[-2] ** 2) / (
                1.0 - 2.0 * an**2 - 2.0 * an1**2)
            a[2:-2] = m[2:-2] / math.sqrt(phi)
            a[-1], a[-2] = an, an1
            a[0], a[1] = -an, -an1
    num = float(a @ x) ** 2
    den = float(np.sum((x - x.mean()) ** 2))
    w = min(num / den, 1.0)
    if n == 3:
        p = 6.0 / math.pi * (math.asin(math.sqrt(w)) - math.asin(math.sqrt(0.75)))
        p = min(max(p, 0.0), 1.0)
    elif w >= 1.0 - 1e-15:
        p = 1.0  # log(1 - w) blows up; a perfect fit cannot reject normality
    elif n <= 11:
        g = -2.273 + 0.459 * n
        lw = -math.log(g - math.log(1.0 - w))
        mu = 0.5440 - 0.39978 * n + 0.025054 * n**2 - 0.0006714 * n**3
        sig = math.exp(1.3822 - 0.77857 * n + 0.062767 * n**2 - 0.0020322 * n**3)
        p = float(_scipy_stats.norm.sf((lw - mu) / sig))
    else:
        lw = math.log(1.0 - w)
        y = math.log(n)
        mu = -1.5861 - 0.31082 * y - 0.083751 * y**2 + 0.0038915 * y**3
        sig = math.exp(-0.4803 - 0.082676 * y + 0.0030302 * y**2)
        p = float(_scipy_stats.norm.sf((lw - mu) / sig))
    return ShapiroResult(w=w, p_value=p)
