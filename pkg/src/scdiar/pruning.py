"""Per-row affinity sparsification strategies.

Every strategy works row by row on the off-diagonal scores and never
changes a retained value, so the output matrix entries are either 0 or
exactly the input score.  Rows are processed independently.
"""

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .affinity import AffinityMatrix
from .kmeans import split_row_two_clusters
from .model import ScdiarError, StructuralError


class UndefinedStatsError(ScdiarError):
    """Both cluster spreads are zero; the closed-form value is undefined."""


class DegenerateRowWarning(UserWarning):
    """A row had no usable two-cluster split; a fallback retention was applied."""


@dataclass(frozen=True)
class RowGaussianStats:
    """Gaussian summary of one row's within/between score clusters.

    Standard deviations use the population convention (divide by the
    cluster size).  ``delta`` is the score threshold where the two fitted
    Gaussians cross with equal tail mass, ``eer`` the shared tail mass at
    that point.
    """

    mu_w: float
    sigma_w: float
    mu_b: float
    sigma_b: float
    delta: float
    eer: float

    @classmethod
    def from_clusters(cls, cw_scores, cb_scores) -> "RowGaussianStats":
        """Fit both Gaussians from raw cluster scores.

        When both spreads are zero (two distinct constant clusters) the
        threshold degenerates to the within-cluster mean and the error
        rate to 0, the limits of the closed forms as sigma_b -> 0.
        """
        cw = np.asarray(cw_scores, dtype=float)
        cb = np.asarray(cb_scores, dtype=float)
        mu_w = float(cw.mean())
        mu_b = float(cb.mean())
        sigma_w = float(cw.std())
        sigma_b = float(cb.std())
        if sigma_w + sigma_b == 0.0:
            return cls(mu_w=mu_w, sigma_w=sigma_w, mu_b=mu_b, sigma_b=sigma_b,
                       delta=mu_w, eer=0.0)
        partial = cls(mu_w=mu_w, sigma_w=sigma_w, mu_b=mu_b, sigma_b=sigma_b,
                      delta=math.nan, eer=math.nan)
        return cls(mu_w=mu_w, sigma_w=sigma_w, mu_b=mu_b, sigma_b=sigma_b,
                   delta=delta_threshold(partial), eer=eer_from_stats(partial))


def eer_from_stats(stats: RowGaussianStats) -> float:
    """Equal error rate of the two fitted score Gaussians.

    Computed as 0.5 - 0.5 * erf(F / sqrt(2)) where F is the separation
    ratio (mu_w - mu_b) / (sigma_w + sigma_b).

    Raises
    ------
    UndefinedStatsError
        sigma_w + sigma_b == 0.
    """
    denom = stats.sigma_w + stats.sigma_b
    if denom == 0.0:
        raise UndefinedStatsError("sigma_w + sigma_b is zero; separation ratio undefined")
    f_ratio = (stats.mu_w - stats.mu_b) / denom
    return 0.5 - 0.5 * math.erf(f_ratio / math.sqrt(2.0))


def delta_threshold(stats: RowGaussianStats) -> float:
    """Score threshold where the two Gaussians reach equal tail mass.

    Closed form (mu_w * sigma_b + mu_b * sigma_w) / (sigma_w + sigma_b),
    a spread-weighted mean lying between mu_b and mu_w.

    Raises
    ------
    UndefinedStatsError
        sigma_w + sigma_b == 0.
    """
    denom = stats.sigma_w + stats.sigma_b
    if denom == 0.0:
        raise UndefinedStatsError("sigma_w + sigma_b is zero; threshold undefined")
    return (stats.mu_w * stats.sigma_b + stats.mu_b * stats.sigma_w) / denom


@dataclass(frozen=True)
class PrunedAffinity:
    """Sparsified affinity with retention bookkeeping.

    ``retained_mask`` marks the off-diagonal entries that survived;
    ``retained_per_row`` is its row sum.  ``param`` echoes the strategy
    parameter (retention percentage or alpha), None for eer-delta.
    """

    values: np.ndarray
    retained_mask: np.ndarray
    retained_per_row: np.ndarray
    strategy: str
    param: float | None

    def __post_init__(self):
        self.values.setflags(write=False)
        self.retained_mask.setflags(write=False)
        self.retained_per_row.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def write_retained_csv(self, path) -> None:
        """Debug dump: one 'row,retained' line per matrix row."""
        with open(path, "w", newline="") as f:
            f.write("row,retained\n")
            for i, c in enumerate(self.retained_per_row):
                f.write(f"{i},{int(c)}\n")


def _offdiag_columns(n: int, i: int) -> np.ndarray:
    cols = np.arange(n)
    return cols[cols != i]


def _assemble(a: AffinityMatrix, keep_cols_per_row, strategy: str, param) -> PrunedAffinity:
    n = a.n
    values = np.zeros((n, n), dtype=float)
    mask = np.zeros((n, n), dtype=bool)
    counts = np.zeros(n, dtype=np.int64)
    for i, cols in enumerate(keep_cols_per_row):
        values[i, cols] = a.values[i, cols]
        mask[i, cols] = True
        counts[i] = len(cols)
    return PrunedAffinity(values=values, retained_mask=mask, retained_per_row=counts,
                          strategy=strategy, param=param)


def _require_min_size(a: AffinityMatrix, least: int, strategy: str) -> None:
    if a.n < least:
        raise StructuralError(f"{strategy} needs at least {least} rows, got {a.n}")


def prune_eer_delta(a: AffinityMatrix) -> PrunedAffinity:
    """Keep, per row, the off-diagonal scores at or above the row threshold.

    Each row's scores are split into a within cluster (larger center) and
    a between cluster by an exact scalar two-means, Gaussian stats are
    fitted to both, and entries strictly below the crossing threshold are
    zeroed.  Rows whose scores are all equal cannot be split; they are
    retained unchanged and a DegenerateRowWarning is emitted.
    """
    _require_min_size(a, 2, "eer-delta")
    n = a.n
    keep = []
    for i in range(n):
        cols = _offdiag_columns(n, i)
        row = a.values[i, cols]
        if row.size < 2 or np.all(row == row[0]):
            warnings.warn(f"row {i}: all scores equal, retaining the full row",
                          DegenerateRowWarning, stacklevel=2)
            keep.append(cols)
            continue
        split = split_row_two_clusters(row)
        stats = RowGaussianStats.from_clusters(row[split.cw_indices], row[split.cb_indices])
        keep.append(cols[row >= stats.delta])
    return _assemble(a, keep, "eer-delta", None)


def _retention_count(p: float, cw_size: int) -> int:
    # round() guards ceil against float noise in p/100 * size, e.g. 0.2*5.
    return max(1, math.ceil(round(p / 100.0 * cw_size, 9)))


def prune_sc_pna(a: AffinityMatrix, p: float) -> PrunedAffinity:
    """Keep, per row, the strongest p% of the row's within cluster.

    After the exact two-means split of the off-diagonal scores, the
    max(1, ceil(p/100 * |within cluster|)) largest within-cluster scores
    survive; everything else in the row is zeroed.  Ties at the cutoff
    keep the smaller column index.  Rows with all-equal scores fall back
    to retaining a single entry, with a DegenerateRowWarning.

    Arguments
    ---------
    a : AffinityMatrix
    p : float
        Retention percentage in (0, 100].
    """
    _require_min_size(a, 2, "sc-pna")
    if not 0.0 < p <= 100.0:
        raise StructuralError(f"retention percentage must be in (0, 100], got {p}")
    n = a.n
    keep = []
    for i in range(n):
        cols = _offdiag_columns(n, i)
        row = a.values[i, cols]
        if row.size < 2 or np.all(row == row[0]):
            warnings.warn(f"row {i}: all scores equal, retaining a single entry",
                          DegenerateRowWarning, stacklevel=2)
            keep.append(cols[:1])
            continue
        split = split_row_two_clusters(row)
        m_i = _retention_count(p, split.cw_indices.size)
        cw_cols = cols[split.cw_indices]
        cw_scores = row[split.cw_indices]
        # Sort by descending score, then ascending column, so the kept
        # prefix is nested across increasing p.
        order = np.lexsort((cw_cols, -cw_scores))
        keep.append(np.sort(cw_cols[order[:m_i]]))
    return _assemble(a, keep, "sc-pna", float(p))


def prune_csc_alpha(a: AffinityMatrix, alpha: float) -> PrunedAffinity:
    """Zero, per row, a fixed count of the smallest off-diagonal scores.

    The count is floor(n * (1 - alpha)), capped at n - 1.  Ties are
    resolved by zeroing the larger column index first.

    Arguments
    ---------
    a : AffinityMatrix
    alpha : float
        Fraction-style knob in [0, 1]; larger alpha prunes less.
    """
    _require_min_size(a, 2, "csc")
    if not 0.0 <= alpha <= 1.0:
        raise StructuralError(f"alpha must be in [0, 1], got {alpha}")
    n = a.n
    # round() guards floor against float noise in n * (1 - alpha).
    n_zero = min(math.floor(round(n * (1.0 - alpha), 9)), n - 1)
    keep = []
    for i in range(n):
        cols = _offdiag_columns(n, i)
        row = a.values[i, cols]
        # Ascending score; equal scores zeroed starting from the larger column.
        order = np.lexsort((-cols, row))
        keep.append(np.sort(cols[order[n_zero:]]))
    return _assemble(a, keep, "csc-alpha", float(alpha))
