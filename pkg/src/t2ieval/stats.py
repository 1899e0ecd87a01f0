"""Rank correlation and inter-annotator agreement.

Kendall's tau-b and Spearman's rho are computed by scipy behind the contracts
below; p-values switch from an exact permutation distribution at desk scale
to the usual asymptotic approximations (normal with tie-corrected variance
for tau, t with n-2 degrees of freedom for rho) on larger samples.
Krippendorff's alpha is computed from scratch via the coincidence matrix,
with interval or ordinal distances and tolerance for missing cells.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
import scipy.stats

from .errors import ClampWarning, DegenerateSeries, InsufficientOverlap, InvalidRange

# Full permutation enumeration is the exact test; n! growth caps it here.
# (8! = 40320 arrangements; anything larger uses the asymptotic p-value.)
EXACT_PERMUTATION_MAX_N = 8


@dataclass
class RatingSeries:
    """Aligned per-pair metric scores and aggregated human ratings."""

    pair_ids: list[str]
    metric_scores: list[float]
    human_scores: list[float]

    def __post_init__(self):
        if not (len(self.pair_ids) == len(self.metric_scores) == len(self.human_scores)):
            raise ValueError("pair_ids, metric_scores, human_scores must align")
        if len(self.pair_ids) < 2:
            raise ValueError("a rating series needs at least 2 pairs")


@dataclass
class CorrelationResult:
    tau: float
    rho: float
    p_tau: float | None
    p_rho: float | None
    n: int


@dataclass
class AgreementResult:
    alpha: float
    n_items: int
    n_raters: int
    level: str


def _as_checked_arrays(x: Sequence[float], y: Sequence[float]) -> tuple[np.ndarray, np.ndarray]:
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    if xa.ndim != 1 or xa.shape != ya.shape:
        raise ValueError("x and y must be 1-d sequences of equal length")
    if xa.size < 2:
        raise ValueError("need at least 2 observations")
    if np.all(xa == xa[0]) or np.all(ya == ya[0]):
        raise DegenerateSeries("correlation is undefined when a series is all-tied")
    return xa, ya


@lru_cache(maxsize=16)
def _permutation_indices(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int8)


def _average_ranks(v: np.ndarray) -> np.ndarray:
    """Ranks 1..n with ties assigned their mean rank."""
    order = np.argsort(v, kind="stable")
    ranks = np.empty(len(v), dtype=float)
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and v[order[j + 1]] == v[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def _exact_perm_pvalue_tau(x: np.ndarray, y: np.ndarray, observed_s: float) -> float:
    n = len(x)
    ii, jj = np.triu_indices(n, k=1)
    sx = np.sign(x[ii] - x[jj])
    yp = y[_permutation_indices(n)]
    s = np.sign(yp[:, ii] - yp[:, jj]) @ sx
    return float(np.mean(np.abs(s) >= abs(observed_s) - 1e-9))


def _exact_perm_pvalue_rho(rx: np.ndarray, ry: np.ndarray, observed_r: float) -> float:
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    denom = np.sqrt((cx @ cx) * (cy @ cy))
    r = (cy[_permutation_indices(len(rx))] @ cx) / denom
    return float(np.mean(np.abs(r) >= abs(observed_r) - 1e-12))


def _pair_signs(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    ii, jj = np.triu_indices(len(x), k=1)
    return np.sign(x[ii] - x[jj]), np.sign(y[ii] - y[jj])


def _concordance_sum(x: np.ndarray, y: np.ndarray) -> float:
    dx, dy = _pair_signs(x, y)
    return float(dx @ dy)


def kendall_tau_b(x: Sequence[float], y: Sequence[float], *,
                  variant: str = "b") -> tuple[float, float]:
    """Tie-aware Kendall correlation with a two-sided p-value.

    ``variant="b"`` (default) divides the concordant-minus-discordant count
    by sqrt of the tie-corrected pair counts; ``variant="a"`` divides by
    C(n, 2). Raises :class:`DegenerateSeries` when either input is all-tied.

    The statistic divides by one sqrt of an integer product, so perfect and
    reversed rankings come out exactly as +1.0 and -1.0.
    """
    xa, ya = _as_checked_arrays(x, y)
    n = xa.size

    dx, dy = _pair_signs(xa, ya)
    s = float(dx @ dy)
    if variant == "a":
        tau = s / (n * (n - 1) / 2)
    elif variant == "b":
        # C+D+Tx = pairs not tied in y; C+D+Ty = pairs not tied in x
        tau = s / math.sqrt(float(np.count_nonzero(dy))
                            * float(np.count_nonzero(dx)))
    else:
        raise ValueError(f"unknown tau variant {variant!r}")
    tau = min(1.0, max(-1.0, tau))

    if n <= EXACT_PERMUTATION_MAX_N:
        p = _exact_perm_pvalue_tau(xa, ya, s)
    else:
        # normal approximation with tie-corrected variance
        p = float(scipy.stats.kendalltau(xa, ya, variant="b",
                                         method="asymptotic").pvalue)
    return tau, p


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson correlation of mean-tied ranks with a two-sided p-value.

    The p-value uses the t approximation with n-2 degrees of freedom above
    the exact-permutation range.
    """
    xa, ya = _as_checked_arrays(x, y)
    n = xa.size
    rx = _average_ranks(xa)
    ry = _average_ranks(ya)
    cx = rx - rx.mean()
    cy = ry - ry.mean()
    rho = float(cx @ cy) / math.sqrt(float(cx @ cx) * float(cy @ cy))
    rho = min(1.0, max(-1.0, rho))

    if n <= EXACT_PERMUTATION_MAX_N:
        p = _exact_perm_pvalue_rho(rx, ry, rho)
    elif abs(rho) == 1.0:
        p = 0.0
    else:
        t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = 2.0 * float(scipy.stats.t.sf(abs(t), n - 2))
    return rho, p


def normalize(values: Iterable[float], lo: float, hi: float) -> list[float]:
    """Affine map [lo, hi] -> [0, 1]; out-of-range inputs clamp with a warning."""
    if lo >= hi:
        raise InvalidRange(f"invalid normalization range [{lo}, {hi}]")
    out = []
    for v in values:
        if v < lo or v > hi:
            warnings.warn(f"value {v} outside [{lo}, {hi}]; clamped", ClampWarning,
                          stacklevel=2)
            v = min(max(v, lo), hi)
        out.append((v - lo) / (hi - lo))
    return out


def _coincidence(units: list[list[float]]) -> tuple[np.ndarray, np.ndarray, list[float]]:
    values = sorted({v for unit in units for v in unit})
    index = {v: i for i, v in enumerate(values)}
    k = len(values)
    o = np.zeros((k, k))
    for unit in units:
        m = len(unit)
        for a, b in itertools.permutations(unit, 2):
            o[index[a], index[b]] += 1.0 / (m - 1)
    return o, o.sum(axis=1), values


def _distance_matrix(values: list[float], marginals: np.ndarray, level: str) -> np.ndarray:
    v = np.asarray(values)
    if level == "interval":
        return (v[:, None] - v[None, :]) ** 2
    if level == "ordinal":
        # cumulative marginal mass between the two ranks, ends half-weighted
        cum = np.cumsum(marginals)
        d = np.zeros((len(values), len(values)))
        for c in range(len(values)):
            for kk in range(len(values)):
                lo_i, hi_i = min(c, kk), max(c, kk)
                between = cum[hi_i] - (cum[lo_i - 1] if lo_i > 0 else 0.0)
                d[c, kk] = (between - (marginals[c] + marginals[kk]) / 2.0) ** 2
        return d
    raise ValueError(f"unknown level {level!r}")


def krippendorff_alpha(ratings: Sequence[Sequence[float | None]],
                       level: str = "interval") -> AgreementResult:
    """Chance-corrected agreement over a raters-by-items matrix.

    ``ratings[r][i]`` is rater r's value for item i, None where missing.
    Items rated by fewer than two raters drop out of the coincidence matrix;
    if no item retains two values, raises :class:`InsufficientOverlap`.
    alpha = 1 - D_o/D_e, at most 1, negative when disagreement beats chance.
    """
    n_raters = len(ratings)
    if n_raters < 2:
        raise InsufficientOverlap("agreement needs at least 2 raters")
    n_items = len(ratings[0])
    if any(len(row) != n_items for row in ratings):
        raise ValueError("all rater rows must cover the same items")
    if n_items < 2:
        raise InsufficientOverlap("agreement needs at least 2 items")

    units = []
    for i in range(n_items):
        unit = [float(row[i]) for row in ratings if row[i] is not None]
        if len(unit) >= 2:
            units.append(unit)
    if not units:
        raise InsufficientOverlap("no item carries two or more ratings")

    o, marginals, values = _coincidence(units)
    n = float(marginals.sum())
    delta = _distance_matrix(values, marginals, level)

    d_observed = float((o * delta).sum()) / n
    d_expected = float((np.outer(marginals, marginals) * delta).sum()) / (n * (n - 1))
    alpha = 1.0 if d_expected == 0.0 else 1.0 - d_observed / d_expected
    return AgreementResult(alpha=alpha, n_items=len(units), n_raters=n_raters, level=level)


def aggregate(results: Sequence[CorrelationResult],
              weights: str = "uniform") -> CorrelationResult:
    """Uniform mean of tau and rho across cells; p-values are not averaged."""
    if weights != "uniform":
        raise ValueError("only uniform weighting is supported")
    if not results:
        raise ValueError("nothing to aggregate")
    tau = float(np.mean([r.tau for r in results]))
    rho = float(np.mean([r.rho for r in results]))
    return CorrelationResult(tau=tau, rho=rho, p_tau=None, p_rho=None,
                             n=sum(r.n for r in results))
