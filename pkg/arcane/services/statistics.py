from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class SignificanceResult:
    statistic: float | None
    p_value: float | None
    test: str

    def to_dict(self) -> dict:
        return {"test": self.test, "statistic": self.statistic, "p_value": self.p_value}


def welch_t_test(sample_a: Sequence[float], sample_b: Sequence[float]) -> tuple[float, float]:
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("Welch's t-test needs at least two observations per sample.")
    var_a, var_b = a.var(ddof=1), b.var(ddof=1)
    se_a, se_b = var_a / a.size, var_b / b.size
    standard_error = math.sqrt(se_a + se_b)
    if standard_error == 0.0:
        raise ValueError("Welch's t-test is undefined when both samples have zero variance.")

    t_stat = float((a.mean() - b.mean()) / standard_error)
    # Welch-Satterthwaite
    df = (se_a + se_b) ** 2 / (se_a**2 / (a.size - 1) + se_b**2 / (b.size - 1))
    p_value = float(min(1.0, 2.0 * stats.t.sf(abs(t_stat), df)))
    return t_stat, p_value


def critical_z(alpha: float = 0.05) -> float:
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1).")
    return float(stats.norm.ppf(1.0 - alpha / 2.0))


def required_gap(sigma_within: float, campaigns_per_actor: float, alpha: float = 0.05) -> float:
    if campaigns_per_actor <= 0:
        raise ValueError("campaigns_per_actor must be positive.")
    return sigma_within * critical_z(alpha) / math.sqrt(campaigns_per_actor)


def mcnemar_exact(first_correct: Sequence[bool], second_correct: Sequence[bool]) -> SignificanceResult:
    if len(first_correct) != len(second_correct):
        raise ValueError("McNemar's test needs paired outcomes of equal length.")
    only_first = sum(1 for a, b in zip(first_correct, second_correct) if a and not b)
    only_second = sum(1 for a, b in zip(first_correct, second_correct) if b and not a)
    discordant = only_first + only_second
    if discordant == 0:
        return SignificanceResult(statistic=0.0, p_value=1.0, test="mcnemar-exact")
    result = stats.binomtest(only_first, discordant, 0.5)
    return SignificanceResult(statistic=float(only_first - only_second), p_value=float(result.pvalue), test="mcnemar-exact")


def paired_t_test(first: Sequence[float], second: Sequence[float]) -> SignificanceResult:
    if len(first) != len(second):
        raise ValueError("Paired t-test needs samples of equal length.")
    differences = np.asarray(first, dtype=float) - np.asarray(second, dtype=float)
    if differences.size < 2 or float(differences.std(ddof=1)) == 0.0:
        return SignificanceResult(statistic=None, p_value=None, test="paired-t")
    result = stats.ttest_rel(first, second)
    return SignificanceResult(statistic=float(result.statistic), p_value=float(result.pvalue), test="paired-t")


def one_way_anova(groups: Sequence[Sequence[float]]) -> SignificanceResult:
    usable = [list(group) for group in groups if len(group) > 0]
    if len(usable) < 2 or sum(len(group) for group in usable) <= len(usable):
        return SignificanceResult(statistic=None, p_value=None, test="anova-f")
    if all(float(np.var(group)) == 0.0 for group in usable):
        return SignificanceResult(statistic=None, p_value=None, test="anova-f")
    result = stats.f_oneway(*usable)
    return SignificanceResult(statistic=float(result.statistic), p_value=float(result.pvalue), test="anova-f")


def linear_trend(levels: Sequence[float], values: Sequence[float]) -> SignificanceResult:
    x = np.asarray(levels, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.size < 3 or float(np.ptp(x)) == 0.0:
        return SignificanceResult(statistic=None, p_value=None, test="linear-trend")
    result = stats.linregress(x, y)
    p_value = None if math.isnan(result.pvalue) else float(result.pvalue)
    return SignificanceResult(statistic=float(result.slope), p_value=p_value, test="linear-trend")
