"""Wilcoxon signed-rank comparison of paired scores (e.g. P_m of two models per stock)."""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata, wilcoxon

from app.config import WILCOXON_EXACT_MAX, WILCOXON_MIN_PAIRS
from app.errors import InsufficientDataError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    statistic: float  # W+ - W- of d = y - x; swapping x and y negates it
    n_pairs: int
    n_nonzero: int
    median_x: float
    median_y: float
    favour_x: int
    favour_y: int
    ties: int  # pairs equal to two decimals
    dropped_nonfinite: int
    method: str


def _clean(pairs) -> tuple[np.ndarray, np.ndarray, int]:
    data = np.asarray(list(pairs), dtype=float).reshape(-1, 2)
    finite = np.isfinite(data).all(axis=1)
    dropped = int((~finite).sum())
    if dropped:
        message = f"{dropped} pair(s) with non-finite scores left out of the Wilcoxon test"
        logger.warning(message)
        warnings.warn(message, UserWarning, stacklevel=3)
    return data[finite, 0], data[finite, 1], dropped


def signed_rank_statistic(differences: np.ndarray) -> float:
    nonzero = differences[differences != 0]
    if nonzero.size == 0:
        return 0.0
    ranks = rankdata(np.abs(nonzero))
    return float(np.sum(np.sign(nonzero) * ranks))


def wilcoxon_summary(pairs) -> WilcoxonResult:
    x, y, dropped = _clean(pairs)
    d = y - x
    nonzero = int(np.count_nonzero(d))
    base = dict(
        n_pairs=int(x.size),
        n_nonzero=nonzero,
        median_x=float(np.median(x)) if x.size else math.nan,
        median_y=float(np.median(y)) if y.size else math.nan,
        favour_x=int(np.sum(np.round(x, 2) > np.round(y, 2))),
        favour_y=int(np.sum(np.round(y, 2) > np.round(x, 2))),
        ties=int(np.sum(np.round(x, 2) == np.round(y, 2))),
        dropped_nonfinite=dropped,
    )
    if x.size and nonzero == 0:
        message = "all pairs are tied; Wilcoxon p-value set to 1"
        logger.warning(message)
        warnings.warn(message, UserWarning, stacklevel=2)
        return WilcoxonResult(p_value=1.0, statistic=0.0, method="tied", **base)
    if nonzero < WILCOXON_MIN_PAIRS:
        raise InsufficientDataError(
            f"Wilcoxon test needs at least {WILCOXON_MIN_PAIRS} non-tied pairs, got {nonzero}"
        )
    method = "exact" if nonzero <= WILCOXON_EXACT_MAX else "approx"
    result = wilcoxon(d, zero_method="wilcox", alternative="two-sided", method=method)
    return WilcoxonResult(p_value=float(result.pvalue), statistic=signed_rank_statistic(d),
                          method=method, **base)


def wilcoxon_signed_rank(pairs) -> float:
    """Two-sided p-value for a zero median difference of the (x, y) pairs."""
    return wilcoxon_summary(pairs).p_value
