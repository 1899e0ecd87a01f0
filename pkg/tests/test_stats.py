from __future__ import annotations

import math
import warnings

import numpy as np
import pytest

from t2ieval.errors import ClampWarning, DegenerateSeries, InsufficientOverlap, InvalidRange
from t2ieval.stats import (
    AgreementResult,
    CorrelationResult,
    RatingSeries,
    aggregate,
    kendall_tau_b,
    krippendorff_alpha,
    normalize,
    spearman_rho,
)

# -- independent oracles -------------------------------------------------------


def tau_b_oracle(x, y):
    """Direct pair enumeration: (C-D)/sqrt((C+D+Tx)(C+D+Ty))."""
    c = d = tx = ty = 0
    n = len(x)
    for i in range(n):
        for j in range(i + 1, n):
            dx = (x[i] > x[j]) - (x[i] < x[j])
            dy = (y[i] > y[j]) - (y[i] < y[j])
            if dx == 0 and dy == 0:
                continue
            if dx == 0:
                tx += 1
            elif dy == 0:
                ty += 1
            elif dx == dy:
                c += 1
            else:
                d += 1
    return (c - d) / math.sqrt((c + d + tx) * (c + d + ty))


def mean_ranks_oracle(v):
    return [sum(1 for u in v if u < w) + (sum(1 for u in v if u == w) + 1) / 2
            for w in v]


def rho_oracle(x, y):
    """Rank both series by hand, then Pearson by the definition."""
    rx = mean_ranks_oracle(x)
    ry = mean_ranks_oracle(y)
    mx = sum(rx) / len(rx)
    my = sum(ry) / len(ry)
    num = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    den = math.sqrt(sum((a - mx) ** 2 for a in rx) * sum((b - my) ** 2 for b in ry))
    return num / den


# -- rank correlation ----------------------------------------------------------


class TestKendall:
    def test_perfect_concordance(self):
        tau, _ = kendall_tau_b([1, 2, 3, 4], [1, 2, 3, 4])
        assert tau == 1.0

    def test_perfect_discordance(self):
        tau, _ = kendall_tau_b([1, 2, 3, 4], [4, 3, 2, 1])
        assert tau == -1.0

    def test_tie_case_against_oracle(self):
        x, y = [1, 2, 2, 3], [1, 3, 2, 3]
        tau, _ = kendall_tau_b(x, y)
        assert tau == pytest.approx(tau_b_oracle(x, y), abs=1e-12)
        assert tau == pytest.approx(0.8, abs=1e-12)

    def test_all_tied_raises(self):
        with pytest.raises(DegenerateSeries):
            kendall_tau_b([5, 5, 5], [1, 2, 3])

    def test_without_ties_tau_a_equals_tau_b(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(3, 9))
            x = rng.permutation(n).tolist()
            y = rng.permutation(n).tolist()
            tau_b, _ = kendall_tau_b(x, y)
            tau_a, _ = kendall_tau_b(x, y, variant="a")
            assert tau_b == pytest.approx(tau_a, abs=1e-12)

    def test_symmetry(self):
        x, y = [1, 2, 2, 4, 3], [2, 1, 4, 4, 5]
        assert kendall_tau_b(x, y)[0] == pytest.approx(kendall_tau_b(y, x)[0],
                                                       abs=1e-12)


class TestSpearman:
    def test_monotone(self):
        rho, _ = spearman_rho([1, 2, 3, 5], [10, 20, 25, 90])
        assert rho == pytest.approx(1.0, abs=1e-12)

    def test_reversed(self):
        rho, _ = spearman_rho([1, 2, 3, 5], [5, 4, 2, 1])
        assert rho == pytest.approx(-1.0, abs=1e-12)

    def test_tie_case_against_oracle(self):
        x, y = [1, 2, 2, 3], [2, 1, 3, 3]
        rho, _ = spearman_rho(x, y)
        assert rho == pytest.approx(rho_oracle(x, y), abs=1e-12)
        assert rho == pytest.approx(0.5, abs=1e-12)

    def test_all_tied_raises(self):
        with pytest.raises(DegenerateSeries):
            spearman_rho([1, 2, 3], [7, 7, 7])


def test_random_vectors_match_oracles():
    rng = np.random.default_rng(1234)
    for _ in range(300):
        n = int(rng.integers(3, 11))
        x = rng.integers(0, 5, size=n).tolist()
        y = rng.integers(0, 5, size=n).tolist()
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        tau, p_tau = kendall_tau_b(x, y)
        rho, p_rho = spearman_rho(x, y)
        assert tau == pytest.approx(tau_b_oracle(x, y), abs=1e-12)
        assert rho == pytest.approx(rho_oracle(x, y), abs=1e-12)
        assert 0.0 <= p_tau <= 1.0 and 0.0 <= p_rho <= 1.0


def test_monotone_transform_invariance():
    rng = np.random.default_rng(99)
    for _ in range(50):
        n = int(rng.integers(4, 11))
        x = rng.integers(0, 6, size=n).tolist()
        y = rng.integers(0, 6, size=n).tolist()
        if len(set(x)) < 2 or len(set(y)) < 2:
            continue
        # random strictly increasing map applied to x
        values = sorted(set(x))
        jumps = np.cumsum(rng.uniform(0.1, 2.0, size=len(values)))
        mapping = dict(zip(values, jumps))
        tx = [mapping[v] for v in x]
        assert kendall_tau_b(tx, y)[0] == pytest.approx(kendall_tau_b(x, y)[0],
                                                        abs=1e-12)
        assert spearman_rho(tx, y)[0] == pytest.approx(spearman_rho(x, y)[0],
                                                       abs=1e-12)


# -- normalization -------------------------------------------------------------


class TestNormalize:
    def test_endpoints(self):
        assert normalize([1, 10], 1, 10) == [0.0, 1.0]

    def test_midpoint(self):
        assert normalize([5.5], 1, 10) == [0.5]

    def test_clamps_with_warning(self):
        with pytest.warns(ClampWarning):
            assert normalize([12], 1, 10) == [1.0]

    def test_invalid_range(self):
        with pytest.raises(InvalidRange):
            normalize([1], 3, 3)

    def test_rank_preserving(self):
        values = [3.0, 1.0, 4.0, 1.0, 5.0]
        normalized = normalize(values, 0, 10)
        assert mean_ranks_oracle(values) == mean_ranks_oracle(normalized)


# -- agreement -----------------------------------------------------------------


class TestKrippendorff:
    def test_identical_raters_alpha_one(self):
        result = krippendorff_alpha([[1, 2, 3, 4, 5], [1, 2, 3, 4, 5]])
        assert result.alpha == 1.0
        assert result.n_raters == 2

    def test_interval_2x4_hand_example(self):
        # units {1,1} {2,2} {3,3} {4,3}: D_o = 2/8, D_e = 126/56 -> 1 - 1/9
        result = krippendorff_alpha([[1, 2, 3, 4], [1, 2, 3, 3]], level="interval")
        assert result.alpha == pytest.approx(8 / 9, abs=1e-9)

    def test_independent_raters_alpha_near_zero(self):
        rng = np.random.default_rng(42)
        rows = [[int(rng.integers(1, 11)) for _ in range(500)] for _ in range(2)]
        assert abs(krippendorff_alpha(rows).alpha) < 0.05

    def test_missing_cells_excluded(self):
        rows = [[1, 2, None, 4], [1, 2, 3, 4], [None, None, 3, None]]
        result = krippendorff_alpha(rows)
        assert result.alpha == 1.0  # every pairable unit agrees exactly
        assert result.n_items == 4

    def test_ordinal_level(self):
        result = krippendorff_alpha([[1, 2, 3, 4], [1, 2, 3, 3]], level="ordinal")
        assert isinstance(result, AgreementResult)
        assert result.level == "ordinal"
        assert result.alpha <= 1.0

    def test_insufficient_overlap(self):
        with pytest.raises(InsufficientOverlap):
            krippendorff_alpha([[1, None], [None, 2]])

    def test_single_rater_rejected(self):
        with pytest.raises(InsufficientOverlap):
            krippendorff_alpha([[1, 2, 3]])

    def test_alpha_can_be_negative(self):
        result = krippendorff_alpha([[1, 5, 1, 5], [5, 1, 5, 1]])
        assert result.alpha < 0.0


# -- aggregation ----------------------------------------------------------------


class TestAggregate:
    def test_uniform_mean(self):
        cells = [CorrelationResult(0.2, 0.3, 0.01, 0.01, 10),
                 CorrelationResult(0.4, 0.5, 0.01, 0.01, 12)]
        summary = aggregate(cells)
        assert summary.tau == pytest.approx(0.3)
        assert summary.rho == pytest.approx(0.4)
        assert summary.p_tau is None and summary.p_rho is None
        assert summary.n == 22

    def test_single_cell_identity(self):
        cell = CorrelationResult(0.37, 0.52, 0.1, 0.2, 8)
        summary = aggregate([cell])
        assert summary.tau == cell.tau and summary.rho == cell.rho

    def test_four_cell_mean_matches_independent_recompute(self):
        taus = [0.1, 0.2, 0.3, 0.4]
        rhos = [0.2, 0.3, 0.4, 0.5]
        cells = [CorrelationResult(t, r, None, None, 5) for t, r in zip(taus, rhos)]
        summary = aggregate(cells)
        assert summary.tau == pytest.approx(sum(taus) / 4, abs=1e-15)
        assert summary.rho == pytest.approx(sum(rhos) / 4, abs=1e-15)


def test_rating_series_validation():
    with pytest.raises(ValueError):
        RatingSeries(["a"], [0.1], [0.2])
    with pytest.raises(ValueError):
        RatingSeries(["a", "b"], [0.1], [0.2, 0.3])
