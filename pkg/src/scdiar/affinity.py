"""Cosine affinity matrix construction."""

import csv
from dataclasses import dataclass

import numpy as np

from .model import EmbeddingSet, StructuralError


@dataclass(frozen=True)
class AffinityMatrix:
    """Symmetric (n, n) cosine score matrix with a zero diagonal."""

    values: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @classmethod
    def from_values(cls, values, tol: float = 1e-12) -> "AffinityMatrix":
        """Wrap a precomputed score matrix, checking the container invariants."""
        arr = np.array(values, dtype=float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
            raise StructuralError(f"affinity must be square and non-empty, got {arr.shape}")
        if np.max(np.abs(arr - arr.T)) > tol:
            raise StructuralError("affinity must be symmetric")
        if np.any(np.abs(np.diag(arr)) > tol):
            raise StructuralError("affinity diagonal must be zero")
        if np.min(arr) < -1.0 - tol or np.max(arr) > 1.0 + tol:
            raise StructuralError("affinity entries must lie in [-1, 1]")
        return cls(values=arr)

    def write_csv(self, path) -> None:
        """Debug dump, one matrix row per line."""
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            for row in self.values:
                w.writerow([repr(float(v)) for v in row])


def cosine_affinity(emb: EmbeddingSet) -> AffinityMatrix:
    """Pairwise cosine scores of the embedding rows.

    Rows are length-normalized first, so the result is invariant to
    per-row positive rescaling.  The diagonal self-score is set to zero
    and the matrix is symmetrized exactly to cancel float noise from the
    underlying matmul.

    Arguments
    ---------
    emb : EmbeddingSet
        Validated embeddings; row norms are non-zero by construction.

    Returns
    -------
    AffinityMatrix
        values[i, j] in [-1, 1], values[i, i] == 0.
    """
    x = emb.vectors
    normed = x / np.linalg.norm(x, axis=1, keepdims=True)
    a = normed @ normed.T
    a = (a + a.T) / 2.0
    np.clip(a, -1.0, 1.0, out=a)
    np.fill_diagonal(a, 0.0)
    return AffinityMatrix(values=a)
