"""Multi-class classifier evaluation statistics.

Confusion-matrix metrics (accuracy, macro precision/recall/F1/specificity,
and the multiclass Matthews correlation coefficient R_K) plus the
Stuart-Maxwell marginal-homogeneity test for comparing two classifiers on
the same items, with chi-square upper-tail p-values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

from .errors import (
    EmptyMatrixError,
    InvalidInputError,
    LengthMismatchError,
    SingularCovarianceError,
    UnknownLabelError,
)

METRIC_COLUMNS = ("accuracy", "precision", "recall", "f1", "specificity", "mcc")


@dataclass
class ConfusionMatrix:
    """k x k counts; rows are true classes, columns are predicted classes."""

    counts: np.ndarray
    labels: tuple

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("counts must be a square matrix")
        if (counts < 0).any():
            raise ValueError("counts must be nonnegative")
        labels = tuple(self.labels)
        if len(labels) != counts.shape[0]:
            raise ValueError("labels must match matrix order")
        self.counts = counts
        self.labels = labels

    @property
    def k(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class MetricReport:
    """The six summary metrics plus flags naming any zero-denominator cases."""

    accuracy: float
    precision: float
    recall: float
    f1: float
    specificity: float
    mcc: float
    zero_division_flags: tuple = ()

    def as_row(self) -> tuple:
        return (self.accuracy, self.precision, self.recall, self.f1, self.specificity, self.mcc)


def confusion(y_true, y_pred, k=None, labels=None) -> ConfusionMatrix:
    """Tally (true, predicted) pairs.

    Either pass ``labels`` (ordered category names; entries must belong to
    it) or ``k`` (entries must be integers in [0, k)).
    """
    y_true = list(y_true)
    y_pred = list(y_pred)
    if len(y_true) != len(y_pred):
        raise LengthMismatchError(f"{len(y_true)} truths vs {len(y_pred)} predictions")
    if labels is None:
        if k is None:
            raise InvalidInputError("need k or labels")
        labels = tuple(range(k))
    else:
        labels = tuple(labels)
    index = {lab: i for i, lab in enumerate(labels)}
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    for t, p in zip(y_true, y_pred):
        if t not in index:
            raise UnknownLabelError(f"true label {t!r} not among {labels}")
        if p not in index:
            raise UnknownLabelError(f"predicted label {p!r} not among {labels}")
        counts[index[t], index[p]] += 1
    return ConfusionMatrix(counts, labels)


def metrics(cm: ConfusionMatrix) -> MetricReport:
    """Summary metrics from a confusion matrix.

    Precision, recall, F1 and specificity are unweighted macro averages of
    per-class one-vs-rest values; a per-class value with a zero denominator
    contributes 0 and is named in ``zero_division_flags``. MCC is the
    multiclass R_K coefficient computed from the full matrix.
    """
    c = cm.counts.astype(np.float64)
    total = c.sum()
    if total <= 0:
        raise EmptyMatrixError("confusion matrix holds no observations")

    tp = np.diag(c)
    row = c.sum(axis=1)
    col = c.sum(axis=0)
    fn = row - tp
    fp = col - tp
    tn = total - tp - fn - fp

    flags = []

    def per_class(numer, denom, name):
        vals = np.zeros(cm.k)
        for i in range(cm.k):
            if denom[i] > 0:
                vals[i] = numer[i] / denom[i]
            else:
                flags.append(f"{name}:{cm.labels[i]}")
        return vals

    precision = per_class(tp, tp + fp, "precision")
    recall = per_class(tp, tp + fn, "recall")
    specificity = per_class(tn, tn + fp, "specificity")
    f1 = np.zeros(cm.k)
    for i in range(cm.k):
        s = precision[i] + recall[i]
        if s > 0:
            f1[i] = 2.0 * precision[i] * recall[i] / s
        else:
            flags.append(f"f1:{cm.labels[i]}")

    correct = tp.sum()
    cov = correct * total - float(col @ row)
    denom = np.sqrt(total * total - float(col @ col)) * np.sqrt(total * total - float(row @ row))
    if denom > 0:
        # correlation coefficient; keep rounding noise inside [-1, 1]
        mcc = min(1.0, max(-1.0, cov / denom))
    else:
        mcc = 0.0
        flags.append("mcc")

    return MetricReport(
        accuracy=float(correct / total),
        precision=float(precision.mean()),
        recall=float(recall.mean()),
        f1=float(f1.mean()),
        specificity=float(specificity.mean()),
        mcc=float(mcc),
        zero_division_flags=tuple(flags),
    )


def chi2_sf(x: float, df: int) -> float:
    """Chi-square upper-tail probability Q(df/2, x/2)."""
    if not x >= 0:
        raise InvalidInputError(f"statistic must be >= 0, got {x}")
    if df < 1:
        raise InvalidInputError(f"degrees of freedom must be >= 1, got {df}")
    return float(special.gammaincc(df / 2.0, x / 2.0))


def agreement_table(a, b, labels=None):
    """k x k table of (A's label, B's label) counts over the same items."""
    a = list(a)
    b = list(b)
    if len(a) != len(b):
        raise LengthMismatchError(f"{len(a)} vs {len(b)} predictions")
    if not a:
        raise InvalidInputError("need at least one paired prediction")
    if labels is None:
        labels = sorted(set(a) | set(b))
    cm = confusion(a, b, labels=labels)
    return cm.counts, cm.labels


def stuart_maxwell(a, b, labels=None) -> tuple:
    """Stuart-Maxwell test of marginal homogeneity for paired predictions.

    Builds the k x k agreement table T (rows = classifier A, columns = B),
    drops categories with no off-diagonal involvement (reducing the degrees
    of freedom), and evaluates chi2 = d' S^-1 d over k-1 of the remaining
    marginal differences d_i = row_i - col_i, where S_ii = row_i + col_i -
    2 T_ii and S_ij = -(T_ij + T_ji). Returns (chi2, df, pvalue). At k = 2
    this reduces to McNemar's statistic (b - c)^2 / (b + c).
    """
    T, _ = agreement_table(a, b, labels)
    T = T.astype(np.float64)
    row = T.sum(axis=1)
    col = T.sum(axis=0)

    live = [i for i in range(T.shape[0]) if row[i] + col[i] - 2.0 * T[i, i] > 0]
    m = len(live)
    if m <= 1:
        return 0.0, max(m - 1, 0), 1.0

    keep = live[:-1]
    d = np.array([row[i] - col[i] for i in keep])
    S = np.empty((m - 1, m - 1))
    for r, i in enumerate(keep):
        for cdx, j in enumerate(keep):
            if i == j:
                S[r, cdx] = row[i] + col[i] - 2.0 * T[i, i]
            else:
                S[r, cdx] = -(T[i, j] + T[j, i])

    try:
        x = np.linalg.solve(S, d)
    except np.linalg.LinAlgError as exc:
        raise SingularCovarianceError(
            "covariance matrix is singular after degenerate-category removal"
        ) from exc
    if not np.all(np.isfinite(x)):
        raise SingularCovarianceError("covariance solve produced non-finite values")

    chi2 = float(max(d @ x, 0.0))
    df = m - 1
    return chi2, df, chi2_sf(chi2, df)
