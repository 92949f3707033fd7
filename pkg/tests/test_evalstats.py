import math

import mpmath
import numpy as np
import pytest

from augmetrics.errors import (
    EmptyMatrixError,
    InvalidInputError,
    LengthMismatchError,
    UnknownLabelError,
)
from augmetrics.evalstats import (
    ConfusionMatrix,
    chi2_sf,
    confusion,
    metrics,
    stuart_maxwell,
)
from augmetrics.rng import make_rng


def mcnemar_chi2(a, b):
    """Independent McNemar oracle for binary labels, no continuity correction."""
    disagree_01 = sum(1 for x, y in zip(a, b) if x == 0 and y == 1)
    disagree_10 = sum(1 for x, y in zip(a, b) if x == 1 and y == 0)
    if disagree_01 + disagree_10 == 0:
        return 0.0
    return (disagree_01 - disagree_10) ** 2 / (disagree_01 + disagree_10)


def metrics_oracle(counts):
    """Brute-force per-class one-vs-rest metrics and R_K, all from scratch."""
    counts = np.asarray(counts, float)
    k = counts.shape[0]
    total = counts.sum()
    acc = np.trace(counts) / total
    prec, rec, f1, spec = [], [], [], []
    for i in range(k):
        tp = counts[i, i]
        fp = counts[:, i].sum() - tp
        fn = counts[i, :].sum() - tp
        tn = total - tp - fp - fn
        p = tp / (tp + fp) if tp + fp > 0 else 0.0
        r = tp / (tp + fn) if tp + fn > 0 else 0.0
        prec.append(p)
        rec.append(r)
        f1.append(2 * p * r / (p + r) if p + r > 0 else 0.0)
        spec.append(tn / (tn + fp) if tn + fp > 0 else 0.0)
    t = counts.sum(axis=1)
    q = counts.sum(axis=0)
    c = np.trace(counts)
    s = total
    num = c * s - q @ t
    den = math.sqrt(s * s - q @ q) * math.sqrt(s * s - t @ t)
    mcc = num / den if den > 0 else 0.0
    return acc, np.mean(prec), np.mean(rec), np.mean(f1), np.mean(spec), mcc


class TestConfusion:
    def test_perfect_diagonal(self):
        cm = confusion([0, 1, 2], [0, 1, 2], k=3)
        assert np.array_equal(cm.counts, np.eye(3, dtype=int))

    def test_antidiagonal(self):
        cm = confusion([0, 1], [1, 0], k=2)
        assert np.array_equal(cm.counts, [[0, 1], [1, 0]])

    def test_hand_tally(self):
        cm = confusion([0, 0, 0], [0, 0, 1], k=2)
        assert np.array_equal(cm.counts, [[2, 1], [0, 0]])

    def test_string_labels(self):
        cm = confusion(["cat", "dog"], ["dog", "dog"], labels=["cat", "dog"])
        assert np.array_equal(cm.counts, [[0, 1], [0, 1]])

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            confusion([0, 1], [0], k=2)

    def test_unknown_label(self):
        with pytest.raises(UnknownLabelError):
            confusion([0, 5], [0, 1], k=2)


class TestMetrics:
    def test_diagonal_all_ones(self):
        report = metrics(ConfusionMatrix(np.diag([5, 3, 7]), ("a", "b", "c")))
        assert report.as_row() == (1.0, 1.0, 1.0, 1.0, 1.0, 1.0)
        assert report.zero_division_flags == ()

    def test_2x2_hand_case(self):
        counts = [[40, 10], [5, 45]]
        report = metrics(ConfusionMatrix(counts, (0, 1)))
        expected = metrics_oracle(counts)
        assert report.accuracy == pytest.approx(0.85)
        for got, want in zip(report.as_row(), expected):
            assert got == pytest.approx(want, abs=1e-12)

    def test_random_matrices_match_oracle(self, rng):
        for _ in range(50):
            k = int(rng.integers(2, 6))
            counts = rng.integers(0, 30, size=(k, k))
            if counts.sum() == 0:
                continue
            report = metrics(ConfusionMatrix(counts, tuple(range(k))))
            for got, want in zip(report.as_row(), metrics_oracle(counts)):
                assert got == pytest.approx(want, abs=1e-12)

    def test_mcc_antidiagonal_is_minus_one(self):
        report = metrics(ConfusionMatrix([[0, 7], [9, 0]], (0, 1)))
        assert report.mcc == pytest.approx(-1.0)

    def test_mcc_uniform_random_near_zero(self):
        r = make_rng(99)
        y_true = r.integers(0, 4, size=4000)
        y_pred = r.integers(0, 4, size=4000)
        report = metrics(confusion(y_true.tolist(), y_pred.tolist(), k=4))
        assert abs(report.mcc) < 0.05

    def test_zero_division_flagged(self):
        # class 1 never occurs and is never predicted
        report = metrics(ConfusionMatrix([[4, 0], [0, 0]], ("a", "b")))
        assert "precision:b" in report.zero_division_flags
        assert "recall:b" in report.zero_division_flags
        assert report.accuracy == 1.0

    def test_label_permutation_invariance(self, rng):
        counts = rng.integers(0, 20, size=(4, 4))
        counts[0, 0] += 1
        perm = rng.permutation(4)
        a = metrics(ConfusionMatrix(counts, tuple(range(4))))
        b = metrics(ConfusionMatrix(counts[np.ix_(perm, perm)], tuple(perm)))
        for x, y in zip(a.as_row(), b.as_row()):
            assert x == pytest.approx(y, abs=1e-12)

    def test_empty_matrix(self):
        with pytest.raises(EmptyMatrixError):
            metrics(ConfusionMatrix(np.zeros((2, 2), int), (0, 1)))


class TestChi2Sf:
    def test_zero_is_one(self):
        for df in (1, 2, 5, 20):
            assert chi2_sf(0.0, df) == 1.0

    def test_df1_five_percent_point(self):
        assert chi2_sf(3.841, 1) == pytest.approx(0.05, abs=1e-3)

    def test_df1_erfc_identity(self):
        for x in (0.5, 1.0, 3.0, 10.0):
            assert chi2_sf(x, 1) == pytest.approx(math.erfc(math.sqrt(x / 2)), abs=1e-14)

    def test_df2_closed_form(self):
        assert chi2_sf(2.0, 2) == pytest.approx(math.exp(-1), abs=1e-12)
        for x in (0.1, 1.0, 7.5, 40.0):
            assert chi2_sf(x, 2) == pytest.approx(math.exp(-x / 2), abs=1e-12)

    def test_against_mpmath_oracle(self):
        mpmath.mp.dps = 30
        for df in (1, 2, 3, 5, 10, 20):
            for x in (0.25, 1.0, 4.0, 25.0, 100.0, 200.0):
                want = float(mpmath.gammainc(df / 2, x / 2, mpmath.inf, regularized=True))
                got = chi2_sf(x, df)
                assert got == pytest.approx(want, rel=1e-12)

    def test_monotone_decreasing(self):
        xs = np.linspace(0, 50, 200)
        vals = [chi2_sf(x, 3) for x in xs]
        assert all(a >= b for a, b in zip(vals, vals[1:]))

    def test_invalid(self):
        with pytest.raises(InvalidInputError):
            chi2_sf(-1.0, 2)
        with pytest.raises(InvalidInputError):
            chi2_sf(1.0, 0)


class TestStuartMaxwell:
    def test_identical_predictions(self):
        a = [0, 1, 2, 1, 0]
        chi2, df, p = stuart_maxwell(a, list(a))
        assert chi2 == 0.0 and p == 1.0

    def test_k2_mcnemar_hand_case(self):
        # b = 6 (A says 0, B says 1), c = 2 -> (6-2)^2/8 = 2.0
        a = [0] * 6 + [1] * 2 + [0] * 5 + [1] * 5
        b = [1] * 6 + [0] * 2 + [0] * 5 + [1] * 5
        chi2, df, p = stuart_maxwell(a, b)
        assert chi2 == pytest.approx(2.0, abs=1e-12)
        assert df == 1
        assert p == pytest.approx(chi2_sf(2.0, 1), abs=1e-15)

    def test_k2_equals_mcnemar_randomized(self):
        r = make_rng(4242)
        for _ in range(1000):
            n = int(r.integers(2, 40))
            a = r.integers(0, 2, size=n).tolist()
            b = r.integers(0, 2, size=n).tolist()
            want = mcnemar_chi2(a, b)
            chi2, df, p = stuart_maxwell(a, b, labels=[0, 1])
            assert chi2 == pytest.approx(want, abs=1e-10)

    def test_swap_symmetry(self):
        r = make_rng(7)
        for _ in range(50):
            n = int(r.integers(5, 60))
            a = r.integers(0, 4, size=n).tolist()
            b = r.integers(0, 4, size=n).tolist()
            c1, df1, p1 = stuart_maxwell(a, b)
            c2, df2, p2 = stuart_maxwell(b, a)
            assert c1 == pytest.approx(c2, abs=1e-10)
            assert df1 == df2

    def test_k4_marginal_shift_significant(self):
        # strong systematic shift: A spreads over classes, B collapses to 0
        a = [0, 1, 2, 3] * 30
        b = [0] * 120
        chi2, df, p = stuart_maxwell(a, b)
        assert df == 3
        assert p < 0.05
        assert p == pytest.approx(chi2_sf(chi2, 3), abs=1e-15)

    def test_degenerate_category_dropped(self):
        # class 2 never involved in disagreement -> df reduces to 1
        a = [0, 0, 1, 2, 2]
        b = [1, 0, 0, 2, 2]
        chi2, df, p = stuart_maxwell(a, b)
        assert df == 1

    def test_statsmodels_cross_check(self):
        # independent oracle: statsmodels implements the same statistic
        sm = pytest.importorskip("statsmodels.stats.contingency_tables")
        r = make_rng(11)
        for _ in range(20):
            n = int(r.integers(30, 120))
            a = r.integers(0, 3, size=n).tolist()
            b = r.integers(0, 3, size=n).tolist()
            table = np.zeros((3, 3))
            for x, y in zip(a, b):
                table[x, y] += 1
            if any(table[i, :].sum() + table[:, i].sum() - 2 * table[i, i] == 0 for i in range(3)):
                continue
            want = sm.SquareTable(table, shift_zeros=False).homogeneity()
            chi2, df, p = stuart_maxwell(a, b, labels=[0, 1, 2])
            assert chi2 == pytest.approx(float(want.statistic), abs=1e-8)
            assert df == int(want.df)

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatchError):
            stuart_maxwell([0, 1], [0])
