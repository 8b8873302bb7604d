"""
Statistics for comparing rating systems window by window.

Two-tailed paired t-test with a 95% confidence interval of the mean
difference; Student-t tails come from the regularized incomplete beta
function.
"""

from __future__ import annotations

import logging
import math
from enum import Enum
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import special
from scipy import stats as sps

from core.errors import StatsError

logger = logging.getLogger(__name__)

CONFIDENCE = 0.95


class PairedTestStatus(str, Enum):
    OK = "ok"
    DEGENERATE = "degenerate"  # zero variance of the differences


class PairedTestResult(BaseModel):
    """Outcome of a paired t-test on ``a - b``."""
    model_config = ConfigDict(frozen=True)

    n: int
    mean_diff: float
    sd_diff: float
    t_statistic: Optional[float] = None
    p_value: Optional[float] = None
    ci_low: float
    ci_high: float
    status: PairedTestStatus = PairedTestStatus.OK

    @model_validator(mode="after")
    def _check(self) -> "PairedTestResult":
        if not self.ci_low <= self.mean_diff <= self.ci_high:
            raise ValueError("confidence interval must contain the mean difference")
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value out of range: {self.p_value}")
        return self

    @property
    def degenerate(self) -> bool:
        return self.status is PairedTestStatus.DEGENERATE

    @property
    def df(self) -> int:
        return self.n - 1


def t_sf_two_tailed(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise StatsError(f"degrees of freedom must be positive, got {df}")
    if math.isinf(t):
        return 0.0
    x = df / (df + t * t)
    return float(min(1.0, max(0.0, special.betainc(df / 2.0, 0.5, x))))


def t_cdf(t: float, df: float) -> float:
    """Student-t CDF via the regularized incomplete beta function."""
    tail = 0.5 * t_sf_two_tailed(t, df)
    return 1.0 - tail if t > 0 else tail


def t_critical(df: float, confidence: float = CONFIDENCE) -> float:
    """Two-sided critical value t_{(1+confidence)/2, df}."""
    return float(sps.t.ppf(0.5 + confidence / 2.0, df))


def _as_array(xs: Sequence[float], label: str) -> np.ndarray:
    arr = np.asarray(xs, dtype=np.float64)
    if arr.ndim != 1:
        raise StatsError(f"{label} must be one-dimensional")
    if not np.isfinite(arr).all():
        raise StatsError(f"{label} contains non-finite values")
    return arr


def paired_t_test(a: Sequence[float], b: Sequence[float], confidence: float = CONFIDENCE) -> PairedTestResult:
    """
    Two-tailed paired t-test on d = a - b.

    t = mean(d) / (sd(d) / sqrt(n)) with the n-1 sample deviation; the CI is
    mean(d) +- t_crit * sd(d) / sqrt(n). Identical differences give a
    ``DEGENERATE`` result with no t or p and a zero-width interval.

    Raises:
        StatsError: lengths differ or n < 2.
    """
    a_arr, b_arr = _as_array(a, "a"), _as_array(b, "b")
    if len(a_arr) != len(b_arr):
        raise StatsError(f"paired samples differ in length: {len(a_arr)} vs {len(b_arr)}")
    n = len(a_arr)
    if n < 2:
        raise StatsError(f"paired t-test needs at least 2 pairs, got {n}")

    d = a_arr - b_arr
    mean = float(np.mean(d))
    sd = float(np.std(d, ddof=1))
    if sd == 0.0:
        logger.warning(f"Paired differences are constant ({mean:g}); t-test is degenerate")
        return PairedTestResult(n=n, mean_diff=mean, sd_diff=0.0, ci_low=mean, ci_high=mean,
                                status=PairedTestStatus.DEGENERATE)

    se = sd / math.sqrt(n)
    t = mean / se
    half = t_critical(n - 1, confidence) * se
    return PairedTestResult(
        n=n,
        mean_diff=mean,
        sd_diff=sd,
        t_statistic=t,
        p_value=t_sf_two_tailed(t, n - 1),
        ci_low=mean - half,
        ci_high=mean + half,
    )


def mean_confidence_interval(xs: Sequence[float], confidence: float = CONFIDENCE) -> tuple[float, float, float]:
    """(mean, low, high) of a t-based interval; a single value has zero width."""
    arr = _as_array(xs, "values")
    if len(arr) == 0:
        raise StatsError("cannot summarise an empty sample")
    mean = float(np.mean(arr))
    if len(arr) == 1:
        return mean, mean, mean
    half = t_critical(len(arr) - 1, confidence) * float(np.std(arr, ddof=1)) / math.sqrt(len(arr))
    return mean, mean - half, mean + half


def spearman(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Spearman rank correlation."""
    x_arr, y_arr = _as_array(xs, "xs"), _as_array(ys, "ys")
    if len(x_arr) != len(y_arr):
        raise StatsError(f"samples differ in length: {len(x_arr)} vs {len(y_arr)}")
    if len(x_arr) < 2:
        raise StatsError("rank correlation needs at least 2 points")
    rho = float(sps.spearmanr(x_arr, y_arr)[0])
    if math.isnan(rho):
        raise StatsError("rank correlation is undefined for a constant sample")
    return rho


__all__ = [
    "PairedTestResult",
    "PairedTestStatus",
    "paired_t_test",
    "mean_confidence_interval",
    "spearman",
    "t_cdf",
    "t_sf_two_tailed",
    "t_critical",
]
