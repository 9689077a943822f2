"""Cohort statistics: age groups, age/density correlation, group comparisons."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple, Sequence

import numpy as np
from scipy import stats

from .errors import InvalidInputError, OutOfRangeError, UndefinedCorrelationError
from .regions import N_REGIONS, REGION_IDS

logger = logging.getLogger(__name__)

# largest min(n1, n2) for which the exact U distribution is used
EXACT_MAX_SIZE = 8
TESTS = ("mann-whitney", "welch")


@dataclass(frozen=True)
class AgeGroup:
    index: int
    lower: int
    upper: int | None  # inclusive; None = open-ended

    @property
    def label(self) -> str:
        return f">={self.lower}" if self.upper is None else f"{self.lower}-{self.upper}"

    @property
    def midpoint(self) -> float:
        # observed cohort ages end at 88, so the open group is centred on 83
        return 83.0 if self.upper is None else (self.lower + self.upper + 1) / 2.0

    def contains(self, age: float) -> bool:
        return age >= self.lower and (self.upper is None or age < self.upper + 1)


AGE_GROUPS = tuple(
    [AgeGroup(i + 1, 18 + 10 * i, 27 + 10 * i) for i in range(6)] + [AgeGroup(7, 78, None)]
)


def age_group_of(age: float) -> AgeGroup:
    for group in AGE_GROUPS:
        if group.contains(age):
            return group
    raise OutOfRangeError(f"age {age} is below {AGE_GROUPS[0].lower}")


def group_by_age(records) -> dict:
    """Map every :data:`AGE_GROUPS` entry to its records (possibly empty)."""
    groups = {g: [] for g in AGE_GROUPS}
    for rec in records:
        if not (rec.age >= AGE_GROUPS[0].lower):
            raise OutOfRangeError(
                f"subject {rec.subject_id!r}: age {rec.age} is below {AGE_GROUPS[0].lower}")
        groups[age_group_of(rec.age)].append(rec)
    return groups


class GroupAverage(NamedTuple):
    group: AgeGroup
    n_smoker: int
    n_nonsmoker: int
    overall: float | None
    smoker: float | None
    nonsmoker: float | None


def _mean(values):
    return float(np.mean(values)) if len(values) else None


def group_averages(groups) -> list[GroupAverage]:
    """Mean face density per age group: everyone, smokers and non-smokers.

    Cells without members are ``None``.
    """
    out = []
    for group in AGE_GROUPS:
        members = groups.get(group, [])
        smokers = [r.face_density for r in members if r.smoker]
        others = [r.face_density for r in members if not r.smoker]
        out.append(GroupAverage(group, len(smokers), len(others),
                                _mean([r.face_density for r in members]),
                                _mean(smokers), _mean(others)))
    return out


def pearson_correlation(xs, ys) -> float:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise InvalidInputError("pearson_correlation needs two 1-D sequences of equal length")
    if len(x) < 2:
        raise InvalidInputError("pearson_correlation needs at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelationError("correlation is undefined for constant data")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


# -- Mann-Whitney U ------------------------------------------------------------

class TestResult(NamedTuple):
    statistic: float
    p_value: float
    method: str


def _ranks(values: np.ndarray) -> np.ndarray:
    return stats.rankdata(values, method="average")


@lru_cache(maxsize=None)
def _u_counts(m: int, n: int) -> tuple:
    """Number of rank arrangements giving U = 0..m*n for sample sizes m, n."""
    # f(m, n, u) = f(m-1, n, u-n) + f(m, n-1, u)
    if m == 0 or n == 0:
        return (1,)
    a = _u_counts(m - 1, n)
    b = _u_counts(m, n - 1)
    out = [0] * (m * n + 1)
    for u, c in enumerate(b):
        out[u] += c
    for u, c in enumerate(a):
        out[u + n] += c
    return tuple(out)


def mann_whitney_u(a, b) -> TestResult:
    """Two-sided Mann-Whitney U test.

    Exact null distribution when the smaller sample has at most
    :data:`EXACT_MAX_SIZE` values and there are no ties; otherwise the normal
    approximation with tie and continuity correction.  The statistic is
    ``U`` of the first sample.
    """
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.size == 0 or y.size == 0:
        raise InvalidInputError("both samples must be nonempty")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise InvalidInputError("samples contain non-finite values")
    m, n = x.size, y.size
    pooled = np.concatenate([x, y])
    ranks = _ranks(pooled)
    u = float(ranks[:m].sum() - m * (m + 1) / 2.0)
    has_ties = np.unique(pooled).size < pooled.size

    if min(m, n) <= EXACT_MAX_SIZE and not has_ties:
        counts = _u_counts(m, n)
        k = int(round(u))
        low = sum(counts[:k + 1])
        high = sum(counts[k:])
        total = sum(counts)
        return TestResult(u, min(1.0, 2 * min(low, high) / total), "exact")

    nt = m + n
    _, tie_sizes = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(tie_sizes ** 3 - tie_sizes)) / (nt * (nt - 1))
    variance = m * n / 12.0 * ((nt + 1) - tie_term)
    if variance <= 0:
        return TestResult(u, 1.0, "normal")
    deviation = max(abs(u - m * n / 2.0) - 0.5, 0.0)
    z = deviation / math.sqrt(variance)
    return TestResult(u, min(1.0, math.erfc(z / math.sqrt(2.0))), "normal")


def welch_t_test(a, b) -> TestResult:
    """Two-sided Welch's unequal-variance t-test."""
    x = np.asarray(a, dtype=np.float64).ravel()
    y = np.asarray(b, dtype=np.float64).ravel()
    if x.size < 2 or y.size < 2:
        raise InvalidInputError("Welch's t-test needs at least two values per sample")
    vx, vy = x.var(ddof=1) / x.size, y.var(ddof=1) / y.size
    diff = x.mean() - y.mean()
    if vx + vy == 0:
        return TestResult(0.0 if diff == 0 else math.copysign(math.inf, diff),
                          1.0 if diff == 0 else 0.0, "welch")
    t = diff / math.sqrt(vx + vy)
    dof = (vx + vy) ** 2 / (vx ** 2 / (x.size - 1) + vy ** 2 / (y.size - 1))
    return TestResult(float(t), float(min(1.0, 2 * stats.t.sf(abs(t), dof))), "welch")


def two_sample_test(a, b, test: str = "mann-whitney") -> float:
    """p-value of the selected two-sided test."""
    if test == "mann-whitney":
        return mann_whitney_u(a, b).p_value
    if test == "welch":
        return welch_t_test(a, b).p_value
    raise InvalidInputError(f"unknown test {test!r}; choose from {TESTS}")


# -- report --------------------------------------------------------------------

class RegionComparison(NamedTuple):
    region: int
    mean_nonsmoker: float | None
    mean_smoker: float | None
    p_value: float | None


@dataclass(frozen=True)
class CohortReport:
    n_subjects: int
    test: str
    groups: list
    correlation_overall: float | None
    correlation_smoker: float | None
    correlation_nonsmoker: float | None
    regions: list


def _group_correlation(groups: Sequence[GroupAverage], column: str):
    pts = [(g.group.midpoint, getattr(g, column)) for g in groups if getattr(g, column) is not None]
    if len(pts) < 2:
        return None
    try:
        return pearson_correlation(*zip(*pts))
    except UndefinedCorrelationError:
        logger.warning("age correlation of %s averages is undefined (constant data)", column)
        return None


def cohort_report(records, test: str = "mann-whitney") -> CohortReport:
    if test not in TESTS:
        raise InvalidInputError(f"unknown test {test!r}; choose from {TESTS}")
    records = list(records)
    averages = group_averages(group_by_age(records))
    smokers = [r for r in records if r.smoker]
    others = [r for r in records if not r.smoker]
    comparisons = []
    for i in range(N_REGIONS):
        a = [r.region_density[i] for r in others]
        b = [r.region_density[i] for r in smokers]
        p = None
        if a and b:
            try:
                p = two_sample_test(b, a, test)
            except InvalidInputError as exc:
                logger.warning("region %d: %s", REGION_IDS[i], exc)
        comparisons.append(RegionComparison(REGION_IDS[i], _mean(a), _mean(b), p))
    return CohortReport(
        n_subjects=len(records),
        test=test,
        groups=averages,
        correlation_overall=_group_correlation(averages, "overall"),
        correlation_smoker=_group_correlation(averages, "smoker"),
        correlation_nonsmoker=_group_correlation(averages, "nonsmoker"),
        regions=comparisons,
    )
