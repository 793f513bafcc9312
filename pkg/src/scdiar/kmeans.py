"""Scalar two-means row splitting and Lloyd's k-means."""

from dataclasses import dataclass

import numpy as np

from .model import Labeling, ScdiarError, StructuralError


class DegenerateRowError(ScdiarError):
    """All scores in a row are equal; a two-cluster split does not exist."""


class InfeasibleError(ScdiarError):
    """Cluster count exceeds the number of points."""


@dataclass(frozen=True)
class RowSplit:
    """Exact two-means partition of one score row.

    Index arrays point into the row vector that was split.  ``cw`` is the
    cluster with the larger center.
    """

    cw_indices: np.ndarray
    cb_indices: np.ndarray
    cw_center: float
    cb_center: float


def split_row_two_clusters(row) -> RowSplit:
    """Optimal 1-D two-means partition of a score row.

    For scalars the two-means optimum is a threshold split of the sorted
    values, so scanning the n-1 split points of the sorted row and
    minimizing the summed within-cluster squared deviation is exact.

    Arguments
    ---------
    row : array-like
        At least two scalars, not all equal.

    Returns
    -------
    RowSplit
        Indices of both clusters and their centers; cw is the side with
        the larger mean.

    Raises
    ------
    DegenerateRowError
        All entries equal.
    StructuralError
        Fewer than two entries.
    """
    values = np.asarray(row, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise StructuralError(f"need a 1-D row with >= 2 entries, got shape {values.shape}")
    if np.all(values == values[0]):
        raise DegenerateRowError("all row entries are equal; no two-cluster split exists")

    order = np.argsort(values, kind="stable")
    s = values[order]
    m = s.size
    csum = np.cumsum(s)
    csq = np.cumsum(s * s)
    t = np.arange(1, m)
    sum_l = csum[t - 1]
    sq_l = csq[t - 1]
    sum_r = csum[-1] - sum_l
    sq_r = csq[-1] - sq_l
    sse = (sq_l - sum_l * sum_l / t) + (sq_r - sum_r * sum_r / (m - t))
    best = int(np.argmin(sse))
    cut = best + 1

    cb_center = float(sum_l[best] / cut)
    cw_center = float(sum_r[best] / (m - cut))
    if not cw_center > cb_center:
        # Unreachable for non-constant data; kept as a hard guard.
        raise DegenerateRowError("cluster centers coincide")
    return RowSplit(
        cw_indices=np.sort(order[cut:]),
        cb_indices=np.sort(order[:cut]),
        cw_center=cw_center,
        cb_center=cb_center,
    )


def _seed_centers(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted seeding: each new center drawn with probability
    proportional to the squared distance to the nearest chosen one."""
    m = points.shape[0]
    chosen = np.empty(k, dtype=np.int64)
    chosen[0] = int(rng.integers(m))
    d2 = np.sum((points - points[chosen[0]]) ** 2, axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # Remaining points coincide with a center; take the lowest unused index.
            used = set(chosen[:j].tolist())
            idx = next(i for i in range(m) if i not in used)
        else:
            idx = int(rng.choice(m, p=d2 / total))
        chosen[j] = idx
        d2 = np.minimum(d2, np.sum((points - points[idx]) ** 2, axis=1))
    return points[chosen].copy()


def _lloyd_single(points: np.ndarray, k: int, rng: np.random.Generator,
                  max_iter: int = 300, rel_tol: float = 1e-9):
    """One seeded Lloyd run. Returns (labels0, sse, sse_history)."""
    m = points.shape[0]
    centers = _seed_centers(points, k, rng)
    prev_labels = None
    prev_sse = None
    history = []
    labels = np.zeros(m, dtype=np.int64)
    for _ in range(max_iter):
        d2 = np.sum((points[:, None, :] - centers[None, :, :]) ** 2, axis=2)
        labels = np.argmin(d2, axis=1)
        counts = np.bincount(labels, minlength=k)
        for empty in np.flatnonzero(counts == 0):
            # Reseed at the point farthest from its center, stealing only
            # from clusters that keep at least one member.
            point_d2 = d2[np.arange(m), labels]
            movable = counts[labels] > 1
            point_d2 = np.where(movable, point_d2, -np.inf)
            idx = int(np.argmax(point_d2))
            counts[labels[idx]] -= 1
            labels[idx] = empty
            counts[empty] += 1
        for c in range(k):
            centers[c] = points[labels == c].mean(axis=0)
        sse = float(np.sum((points - centers[labels]) ** 2))
        history.append(sse)
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        if prev_sse is not None and abs(prev_sse - sse) <= rel_tol * max(prev_sse, 1e-300):
            break
        prev_labels = labels.copy()
        prev_sse = sse
    return labels, history[-1], history


def lloyd_kmeans(points, k: int, seed: int, restarts: int = 10) -> Labeling:
    """Deterministic k-means over point rows.

    Runs ``restarts`` seeded Lloyd iterations (restart r uses seed + r)
    and keeps the assignment with the smallest within-cluster sum of
    squares.  Labels are renumbered 1..k in order of first appearance.

    Arguments
    ---------
    points : array-like
        (m, dim) real matrix, one point per row.
    k : int
        Cluster count, 1 <= k <= m.
    seed : int
        Base RNG seed; identical inputs give identical labels.

    Returns
    -------
    Labeling
        1-based labels, every id used at least once.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.size == 0:
        raise StructuralError(f"points must be a non-empty 2-D array, got shape {pts.shape}")
    m = pts.shape[0]
    if k < 1:
        raise InfeasibleError(f"k must be >= 1, got {k}")
    if k > m:
        raise InfeasibleError(f"cannot form {k} clusters from {m} points")

    best_labels = None
    best_sse = np.inf
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        labels, sse, _ = _lloyd_single(pts, k, rng)
        if sse < best_sse:
            best_sse = sse
            best_labels = labels

    # Renumber by first appearance so the output does not depend on seeding order.
    remap = {}
    out = np.empty(m, dtype=np.int64)
    for i, lab in enumerate(best_labels):
        if lab not in remap:
            remap[lab] = len(remap) + 1
        out[i] = remap[lab]
    return Labeling(labels=out, num_clusters=k)
