"""Graph Laplacian, eigengap cluster-count estimation, spectral clustering."""

import json
import threading
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .affinity import cosine_affinity
from .kmeans import lloyd_kmeans
from .model import EmbeddingSet, Labeling, RunConfig, ScdiarError
from .pruning import PrunedAffinity, prune_csc_alpha, prune_eer_delta, prune_sc_pna


class NumericalError(ScdiarError):
    """The eigensolver failed or produced residuals beyond tolerance."""


class CannotEstimateError(ScdiarError):
    """Too few eigenvalues to form a single eigengap."""


class PipelineError(ScdiarError):
    """A pipeline stage failed; ``stage`` names it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause


# Diagnostic instrument: counts eigendecompositions process-wide.
_DECOMP_LOCK = threading.Lock()
_DECOMP_COUNT = 0


def decomposition_count() -> int:
    """Number of eigendecompositions performed since the last reset."""
    with _DECOMP_LOCK:
        return _DECOMP_COUNT


def reset_decomposition_count() -> None:
    global _DECOMP_COUNT
    with _DECOMP_LOCK:
        _DECOMP_COUNT = 0


def _record_decomposition() -> None:
    global _DECOMP_COUNT
    with _DECOMP_LOCK:
        _DECOMP_COUNT += 1


@dataclass(frozen=True)
class Laplacian:
    """Unnormalized graph Laplacian L = diag(d) - W with d_i = sum_j |w_ij|."""

    W: np.ndarray
    D: np.ndarray
    L: np.ndarray

    def __post_init__(self):
        self.W.setflags(write=False)
        self.D.setflags(write=False)
        self.L.setflags(write=False)

    @property
    def n(self) -> int:
        return self.L.shape[0]


def symmetrize(pruned) -> Laplacian:
    """Build the Laplacian of the symmetrized pruned graph.

    W = (P + P^T) / 2, degrees are absolute row sums, L = diag(D) - W.
    Because degrees use absolute values, L is diagonally dominant and
    positive semi-definite even when negative scores survive pruning.

    Arguments
    ---------
    pruned : PrunedAffinity or array-like
        Square score matrix with zero diagonal.
    """
    p = pruned.values if isinstance(pruned, PrunedAffinity) else np.asarray(pruned, dtype=float)
    w = (p + p.T) / 2.0
    d = np.sum(np.abs(w), axis=1)
    lap = np.diag(d) - w
    return Laplacian(W=w, D=d, L=lap)


def smallest_eigenpairs(lap: Laplacian, m: int):
    """The m smallest Laplacian eigenvalues with eigenvectors.

    Uses a full symmetric decomposition, which is exact and cheap for the
    desk scale this targets (n up to a couple thousand); a partial
    shift-invert solver would be the drop-in for much larger graphs.
    Every returned pair is residual-checked against 1e-8 * ||L||.

    Arguments
    ---------
    lap : Laplacian
    m : int
        1 <= m <= n.

    Returns
    -------
    (eigenvalues, eigenvectors)
        Ascending (m,) values and column-aligned (n, m) orthonormal vectors.
    """
    n = lap.n
    if not 1 <= m <= n:
        raise NumericalError(f"requested {m} eigenpairs from a {n}x{n} matrix")
    _record_decomposition()
    try:
        vals, vecs = scipy.linalg.eigh(lap.L)
    except scipy.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    scale = float(np.max(np.abs(vals))) if vals.size else 0.0
    vals = vals[:m]
    vecs = vecs[:, :m]
    residuals = np.linalg.norm(lap.L @ vecs - vecs * vals[None, :], axis=0)
    if np.any(residuals > 1e-8 * max(scale, 1e-300)):
        worst = float(residuals.max())
        raise NumericalError(
            f"eigenpair residual {worst:.3e} exceeds tolerance {1e-8 * scale:.3e}"
        )
    return vals, vecs


def estimate_k(eigenvalues, k_max: int):
    """Cluster count from the largest gap between consecutive eigenvalues.

    Arguments
    ---------
    eigenvalues : array-like
        Ascending eigenvalues; only the first k_max are considered.
    k_max : int

    Returns
    -------
    (gaps, k_hat)
        gaps[j] = lam[j+1] - lam[j]; k_hat is the 1-based position of the
        largest gap, ties resolved toward the smallest position.
    """
    vals = np.asarray(eigenvalues, dtype=float)[:k_max]
    if vals.size < 2:
        raise CannotEstimateError(f"need >= 2 eigenvalues to form a gap, got {vals.size}")
    gaps = np.diff(vals)
    k_hat = int(np.argmax(gaps)) + 1
    return gaps, k_hat


def cluster_spectral(lap: Laplacian, k_hat: int, seed: int) -> Labeling:
    """k-means over the rows of the k_hat smallest eigenvectors."""
    _, vecs = smallest_eigenpairs(lap, k_hat)
    return lloyd_kmeans(vecs, k_hat, seed)


@dataclass(frozen=True)
class SpectralResult:
    """Pipeline output: estimate, labels, and per-stage diagnostics."""

    eigenvalues: np.ndarray
    eigengap: np.ndarray
    k_hat: int
    labels: Labeling
    spectral_embeddings: np.ndarray
    retained_per_row: np.ndarray
    min_eigenvalue: float
    eig_decomp_count: int
    method: str
    param: float | None

    def diagnostics(self) -> dict:
        return {
            "method": self.method,
            "param": self.param,
            "k_hat": self.k_hat,
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "eigengap": [float(v) for v in self.eigengap],
            "retained_per_row": [int(v) for v in self.retained_per_row],
            "min_eigenvalue": self.min_eigenvalue,
            "min_eigenvalue_suspect": bool(self.min_eigenvalue < -1e-6),
            "eig_decomp_count": self.eig_decomp_count,
        }

    def write_diagnostics(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.diagnostics(), f, indent=2, sort_keys=True)
            f.write("\n")


def _finalize(cfg: RunConfig, pruned: PrunedAffinity, lap: Laplacian,
              vals_full: np.ndarray, vecs_full: np.ndarray, m_report: int,
              n_decomp: int, param: float | None) -> SpectralResult:
    vals = vals_full[:m_report]
    if cfg.fixed_k is not None:
        k_hat = cfg.fixed_k
        gaps = np.diff(vals) if vals.size >= 2 else np.zeros(0)
    else:
        try:
            gaps, k_hat = estimate_k(vals, cfg.k_max)
        except CannotEstimateError as exc:
            raise PipelineError("estimate-k", exc) from exc
    if k_hat > vecs_full.shape[1]:
        raise PipelineError(
            "clustering",
            ScdiarError(f"k={k_hat} exceeds the {vecs_full.shape[1]} computed eigenvectors"),
        )
    vecs = vecs_full[:, :k_hat]
    try:
        labels = lloyd_kmeans(vecs, k_hat, cfg.rng_seed)
    except ScdiarError as exc:
        raise PipelineError("clustering", exc) from exc
    return SpectralResult(
        eigenvalues=vals,
        eigengap=gaps,
        k_hat=k_hat,
        labels=labels,
        spectral_embeddings=vecs,
        retained_per_row=pruned.retained_per_row,
        min_eigenvalue=float(vals_full[0]),
        eig_decomp_count=n_decomp,
        method=cfg.method,
        param=param,
    )


def run_pipeline(emb: EmbeddingSet, cfg: RunConfig, asc_grid=None) -> SpectralResult:
    """Full diarization pipeline on one recording.

    Cosine affinity -> per-row pruning (cfg.method) -> symmetrized
    Laplacian -> smallest eigenpairs -> cluster-count estimate (skipped
    when cfg.fixed_k is set, though the eigengap is still reported) ->
    k-means on the spectral embedding.  The direct methods perform
    exactly one eigendecomposition; asc performs one per grid candidate
    and reuses the winner's decomposition for the final labeling.

    Arguments
    ---------
    emb : EmbeddingSet
    cfg : RunConfig
    asc_grid : sequence of float, optional
        Candidate alphas for method 'asc'; defaults to the autotune grid.

    Returns
    -------
    SpectralResult

    Raises
    ------
    PipelineError
        Any stage failure, tagged with the stage name.
    """
    try:
        aff = cosine_affinity(emb)
    except ScdiarError as exc:
        raise PipelineError("affinity", exc) from exc

    n = emb.n
    m_report = min(cfg.k_max, n)
    m_request = min(max(cfg.k_max, cfg.fixed_k or 0), n)

    if cfg.method == "asc":
        from .autotune import evaluate_asc_grid

        try:
            trace, best = evaluate_asc_grid(aff, asc_grid, cfg.k_max, m_request)
        except ScdiarError as exc:
            raise PipelineError("autotune", exc) from exc
        pruned, lap, vals_full, vecs_full = best
        return _finalize(cfg, pruned, lap, vals_full, vecs_full, m_report,
                         n_decomp=len(trace.grid), param=float(trace.chosen))

    try:
        if cfg.method == "sc-pna":
            pruned = prune_sc_pna(aff, cfg.retention_p)
            param = float(cfg.retention_p)
        elif cfg.method == "eer-delta":
            pruned = prune_eer_delta(aff)
            param = None
        else:
            pruned = prune_csc_alpha(aff, cfg.alpha)
            param = float(cfg.alpha)
    except ScdiarError as exc:
        raise PipelineError("pruning", exc) from exc

    lap = symmetrize(pruned)
    try:
        vals_full, vecs_full = smallest_eigenpairs(lap, m_request)
    except ScdiarError as exc:
        raise PipelineError("eigendecomposition", exc) from exc
    return _finalize(cfg, pruned, lap, vals_full, vecs_full, m_report,
                     n_decomp=1, param=param)
