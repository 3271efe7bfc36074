"""Independent high-precision oracles for the statistics under test.

These deliberately avoid the implementation's code path: agreement
statistics are computed in exact rational arithmetic with explicit loops,
and tail probabilities come from mpmath at 50 significant digits.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath

mpmath.mp.dps = 50


def kappa_exact(matrix) -> "Fraction | None":
    """Cohen's kappa in exact rational arithmetic; None when undefined."""
    n = sum(sum(row) for row in matrix)
    if n == 0:
        return None
    k = len(matrix)
    po = Fraction(sum(matrix[i][i] for i in range(k)), n)
    pe = Fraction(0)
    for i in range(k):
        row_i = sum(matrix[i][j] for j in range(k))
        col_i = sum(matrix[j][i] for j in range(k))
        pe += Fraction(row_i * col_i, n * n)
    if pe == 1:
        return None
    return (po - pe) / (1 - pe)


def weighted_kappa_exact(matrix, weights) -> "Fraction | None":
    """Weighted kappa with exact rational arithmetic; None when undefined."""
    n = sum(sum(row) for row in matrix)
    if n == 0:
        return None
    k = len(matrix)
    w_obs = Fraction(0)
    w_exp = Fraction(0)
    for i in range(k):
        row_i = sum(matrix[i][j] for j in range(k))
        for j in range(k):
            col_j = sum(matrix[r][j] for r in range(k))
            w = Fraction(weights[i][j]).limit_denominator(10**9)
            w_obs += w * matrix[i][j]
            w_exp += w * Fraction(row_i * col_j, n)
    if w_exp == 0:
        return None
    return 1 - w_obs / w_exp


def quadratic_weights_exact(k: int):
    return [[Fraction((i - j) ** 2, (k - 1) ** 2) for j in range(k)] for i in range(k)]


def chi2_sf_mp(stat: float, df: int) -> mpmath.mpf:
    return mpmath.gammainc(mpmath.mpf(df) / 2, mpmath.mpf(stat) / 2, mpmath.inf, regularized=True)


def chi2_homogeneity_mp(counts) -> "tuple[Fraction, int, mpmath.mpf]":
    """Statistic in exact arithmetic, then the mpmath tail."""
    total = sum(n for _, n in counts)
    s_total = sum(x for x, _ in counts)
    f_total = total - s_total
    stat = Fraction(0)
    for x, n in counts:
        e_s = Fraction(n * s_total, total)
        e_f = Fraction(n * f_total, total)
        stat += Fraction((x * total - n * s_total) ** 2, n * s_total * total)
        stat += Fraction(((n - x) * total - n * f_total) ** 2, n * f_total * total)
        assert stat is not None and e_s > 0 and e_f > 0
    df = len(counts) - 1
    p = chi2_sf_mp(float(stat), df)
    return stat, df, p


def ztest_mp(x1: int, n1: int, x2: int, n2: int) -> "tuple[mpmath.mpf, mpmath.mpf]":
    p1 = mpmath.mpf(x1) / n1
    p2 = mpmath.mpf(x2) / n2
    if p1 == p2:
        return mpmath.mpf(0), mpmath.mpf(1)
    pooled = mpmath.mpf(x1 + x2) / (n1 + n2)
    se = mpmath.sqrt(pooled * (1 - pooled) * (mpmath.mpf(1) / n1 + mpmath.mpf(1) / n2))
    z = (p1 - p2) / se
    p = mpmath.erfc(abs(z) / mpmath.sqrt(2))
    return z, p


def normal_sf_mp(z: float) -> mpmath.mpf:
    return mpmath.erfc(mpmath.mpf(z) / mpmath.sqrt(2)) / 2


def erfc_mp(x: float) -> mpmath.mpf:
    return mpmath.erfc(mpmath.mpf(x))
