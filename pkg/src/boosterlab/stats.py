"""Dummy-trial screening, BHLD aggregation, and the t machinery.

The Student-t kernel is self-contained: the CDF goes through the
regularized incomplete beta function (continued fraction), and the
quantile inverts it by bisection with a Newton polish.  Confidence
intervals use per-group df = n - 1; hypothesis tests use Welch's
unequal-variance statistic with Welch-Satterthwaite df.
"""

from __future__ import annotations

import io
import csv
import math
from dataclasses import dataclass
from collections import defaultdict

from .dsp import BoosterMethod
from .errors import ScreeningError, StatsError
from .records import TrialRecord

DEFAULT_SCREENING_THRESHOLD_DB = 5
CONFIDENCE_LEVEL = 0.95

GROUPINGS = ("overall", "by-signal", "by-noise")


# --------------------------------------------------------------------------
# Student-t kernel
# --------------------------------------------------------------------------

def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta (modified Lentz)."""
    max_iter = 500
    eps = 3e-16
    fpmin = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise StatsError("incomplete beta continued fraction did not converge")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    if a <= 0 or b <= 0:
        raise StatsError("beta parameters must be positive")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log1p(-x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_cdf(t: float, df: float) -> float:
    if df <= 0:
        raise StatsError("degrees of freedom must be positive")
    if t == 0.0:
        return 0.5
    tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t))
    return 1.0 - tail if t > 0 else tail


def t_pdf(t: float, df: float) -> float:
    log_pdf = (math.lgamma((df + 1.0) / 2.0) - math.lgamma(df / 2.0)
               - 0.5 * math.log(df * math.pi)
               - (df + 1.0) / 2.0 * math.log1p(t * t / df))
    return math.exp(log_pdf)


def t_quantile(p: float, df: float) -> float:
    """Inverse t CDF, |CDF(result) - p| <= 1e-9."""
    if not 0.0 < p < 1.0:
        raise StatsError("quantile probability must lie in (0, 1)")
    if df <= 0:
        raise StatsError("degrees of freedom must be positive")
    if p == 0.5:
        return 0.0
    if p < 0.5:
        return -t_quantile(1.0 - p, df)

    hi = 1.0
    while t_cdf(hi, df) < p and hi < 1e12:
        hi *= 2.0
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if t_cdf(mid, df) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13 * max(1.0, hi):
            break
    q = 0.5 * (lo + hi)
    for _ in range(4):  # Newton polish
        err = t_cdf(q, df) - p
        slope = t_pdf(q, df)
        if slope <= 0.0:
            break
        q -= err / slope
    return q


# --------------------------------------------------------------------------
# Screening
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class ScreeningOutcome:
    excluded: tuple[str, ...]
    dummy_adjustments: dict[str, tuple[float, ...]]
    threshold_db: float


def screen_participants(records: list[TrialRecord],
                        threshold_db: float = DEFAULT_SCREENING_THRESHOLD_DB
                        ) -> ScreeningOutcome:
    """Exclude participants with any dummy adjustment at or beyond the
    threshold.  Every participant must have supplied at least 3 dummy
    trials (sessions carry one or two each, so 3 sessions give 3 to 6).
    """
    participants = sorted({r.participant_id for r in records if r.scored})
    if not participants:
        raise ScreeningError("no scored records to screen")
    dummies: dict[str, list[float]] = defaultdict(list)
    for r in records:
        if r.scored and r.is_dummy:
            dummies[r.participant_id].append(r.bhld_db)

    for pid in participants:
        if not dummies.get(pid):
            raise ScreeningError(f"participant {pid} has no dummy trials")
        if len(dummies[pid]) < 3:
            raise ScreeningError(
                f"participant {pid} has only {len(dummies[pid])} dummy trials (need >= 3)")

    excluded = tuple(pid for pid in participants
                     if any(abs(v) >= threshold_db for v in dummies[pid]))
    return ScreeningOutcome(excluded,
                            {pid: tuple(vals) for pid, vals in dummies.items()},
                            threshold_db)


# --------------------------------------------------------------------------
# Aggregation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StatsRow:
    grouping: str
    group: str  # "" for overall, else the signal or noise id
    method_key: str
    fc_hz: int
    n: int
    mean_db: float
    sd_db: float
    ci_low_db: float
    ci_high_db: float
    level: float = CONFIDENCE_LEVEL


def _mean_sd(values: list[float]) -> tuple[float, float]:
    # fsum keeps the results independent of record order
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def aggregate_bhld(records: list[TrialRecord],
                   grouping: str = "overall") -> list[StatsRow]:
    """Mean/sd/CI per (method, fc) within each group of screened records.

    CI = mean +- t(0.975, n-1) * sd / sqrt(n).  Empty groups are simply
    omitted.
    """
    if grouping not in GROUPINGS:
        raise StatsError(f"unknown grouping {grouping!r}")
    scored = [r for r in records if r.scored]

    def group_of(r: TrialRecord) -> str:
        if grouping == "by-signal":
            return r.condition.signal_id
        if grouping == "by-noise":
            return r.condition.noise_id
        return ""

    buckets: dict[tuple[str, str], list[float]] = defaultdict(list)
    for r in scored:
        buckets[(group_of(r), r.condition.method.key)].append(r.bhld_db)

    groups = sorted({g for g, _ in buckets})
    rows = []
    for group in groups:
        for method in BoosterMethod.all_methods():
            values = buckets.get((group, method.key))
            if not values:
                continue
            n = len(values)
            mean, sd = _mean_sd(values)
            if n >= 2:
                half = t_quantile(0.5 + CONFIDENCE_LEVEL / 2.0, n - 1) * sd / math.sqrt(n)
            else:
                half = 0.0
            rows.append(StatsRow(grouping, group, method.key, method.fc_hz,
                                 n, mean, sd, mean - half, mean + half))
    return rows


# --------------------------------------------------------------------------
# Welch's t-test
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class TestResult:
    t_statistic: float
    df: float
    p_value: float
    sidedness: str


def welch_t_test(a: list[float], b: list[float],
                 sided: str = "two") -> TestResult:
    """Unequal-variance t-test.

    sided="two" tests mean(a) != mean(b); sided="one-greater" tests
    mean(a) > mean(b).
    """
    if sided not in ("two", "one-greater"):
        raise StatsError(f"unknown sidedness {sided!r}")
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise StatsError("each sample needs at least two observations")
    ma, sa = _mean_sd(list(a))
    mb, sb = _mean_sd(list(b))
    va, vb = sa * sa / na, sb * sb / nb
    if va + vb == 0.0:
        raise StatsError("both samples have zero variance")
    t = (ma - mb) / math.sqrt(va + vb)
    df = (va + vb) ** 2 / (va * va / (na - 1) + vb * vb / (nb - 1))
    if sided == "two":
        p = 2.0 * (1.0 - t_cdf(abs(t), df))
    else:
        p = 1.0 - t_cdf(t, df)
    return TestResult(t, df, min(max(p, 0.0), 1.0), sided)


# --------------------------------------------------------------------------
# CSV export
# --------------------------------------------------------------------------

FIGURE_CSV_COLUMNS = ("grouping", "group", "method", "fc_hz", "n",
                      "mean_db", "sd_db", "ci_low_db", "ci_high_db", "level")


def export_figure_data(rows: list[StatsRow]) -> str:
    """CSV with one line per (group, method, fc) stats row."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(FIGURE_CSV_COLUMNS)
    for row in rows:
        writer.writerow([row.grouping, row.group, row.method_key, row.fc_hz,
                         row.n, f"{row.mean_db:.6g}", f"{row.sd_db:.6g}",
                         f"{row.ci_low_db:.6g}", f"{row.ci_high_db:.6g}",
                         row.level])
    return out.getvalue()
