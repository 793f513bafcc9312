"""Pruning-parameter selection: asc proxy search and csc dev-set sweep."""

import csv
import math
from dataclasses import dataclass

import numpy as np

from .affinity import AffinityMatrix
from .model import RunConfig, ScdiarError, StructuralError
from .pruning import prune_csc_alpha
from .spectral import smallest_eigenpairs, symmetrize

# g below this is treated as no usable gap; the candidate gets +inf.
_G_EPS = 1e-12

DEFAULT_ASC_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
DEFAULT_CSC_SWEEP_GRID = tuple(round(0.01 * i, 2) for i in range(0, 101))


class NoViableCandidateError(ScdiarError):
    """Every grid candidate failed or scored +inf."""


@dataclass(frozen=True)
class TuningTrace:
    """Per-candidate objectives of one tuning run, plus the pick."""

    grid: tuple
    objectives: tuple
    chosen: float
    per_candidate_k_hat: tuple

    @classmethod
    def from_candidates(cls, grid, objectives, k_hats) -> "TuningTrace":
        grid = tuple(float(g) for g in grid)
        objectives = tuple(float(o) for o in objectives)
        k_hats = tuple(k_hats)
        if not grid:
            raise StructuralError("candidate grid must be non-empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise StructuralError("candidate grid must be strictly increasing")
        if len(objectives) != len(grid) or len(k_hats) != len(grid):
            raise StructuralError("objectives and k_hats must align with the grid")
        best = None
        for i, obj in enumerate(objectives):
            if math.isfinite(obj) and (best is None or obj < objectives[best]):
                best = i
        if best is None:
            raise NoViableCandidateError("no candidate produced a finite objective")
        return cls(grid=grid, objectives=objectives, chosen=grid[best],
                   per_candidate_k_hat=k_hats)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["candidate", "objective", "k_hat"])
            for g, obj, k in zip(self.grid, self.objectives, self.per_candidate_k_hat):
                w.writerow([repr(g), repr(obj), "" if k is None else repr(k)])


def _proxy_value(alpha: float, vals: np.ndarray, pruning_factor: str) -> tuple:
    """(objective, k_hat) from the candidate's smallest eigenvalues."""
    if pruning_factor not in ("pruned", "retained"):
        raise StructuralError(f"pruning_factor must be 'pruned' or 'retained', got {pruning_factor!r}")
    numerator = (1.0 - alpha) if pruning_factor == "pruned" else alpha
    if vals.size < 2:
        return math.inf, None
    gaps = np.diff(vals)
    k_hat = int(np.argmax(gaps)) + 1
    lam_top = float(vals[-1])
    if lam_top <= _G_EPS:
        return math.inf, k_hat
    g = float(np.max(gaps)) / lam_top
    if g <= _G_EPS:
        return math.inf, k_hat
    return numerator / g, k_hat


def asc_proxy_objective(a: AffinityMatrix, alpha: float, k_max: int,
                        pruning_factor: str = "pruned") -> float:
    """Proxy objective for one csc pruning level.

    Prunes at ``alpha``, decomposes the Laplacian, and returns the
    pruned fraction (1 - alpha) divided by the largest eigengap
    normalized by the largest computed eigenvalue.  ``pruning_factor``
    'retained' switches the numerator to alpha itself, for comparing the
    two knob conventions.  Returns +inf when the normalized gap is below
    1e-12 (no usable spectral structure at this pruning level).
    """
    m = min(k_max, a.n)
    lap = symmetrize(prune_csc_alpha(a, alpha))
    vals, _ = smallest_eigenpairs(lap, m)
    objective, _ = _proxy_value(alpha, vals, pruning_factor)
    return objective


def evaluate_asc_grid(a: AffinityMatrix, grid, k_max: int, m_request: int,
                      pruning_factor: str = "pruned"):
    """Score every candidate alpha and keep the winner's decomposition.

    Returns (trace, (pruned, laplacian, eigenvalues, eigenvectors)) for
    the chosen candidate, so the caller can finish the diarization
    without repeating its eigendecomposition.
    """
    if grid is None:
        grid = DEFAULT_ASC_GRID
    m_report = min(k_max, a.n)
    objectives = []
    k_hats = []
    best = None
    best_obj = math.inf
    for alpha in grid:
        pruned = prune_csc_alpha(a, float(alpha))
        lap = symmetrize(pruned)
        vals, vecs = smallest_eigenpairs(lap, min(m_request, a.n))
        objective, k_hat = _proxy_value(float(alpha), vals[:m_report], pruning_factor)
        objectives.append(objective)
        k_hats.append(k_hat)
        if objective < best_obj:
            best_obj = objective
            best = (pruned, lap, vals, vecs)
    trace = TuningTrace.from_candidates(grid, objectives, k_hats)
    return trace, best


def asc_select(a: AffinityMatrix, grid=None, k_max: int = 10,
               pruning_factor: str = "pruned") -> TuningTrace:
    """Pick the csc pruning level by the eigengap proxy.

    Evaluates asc_proxy_objective on every grid point (default grid
    0.05..0.95, step 0.05) and chooses the minimizer; objective ties go
    to the smallest alpha.
    """
    trace, _ = evaluate_asc_grid(a, grid, k_max, min(k_max, a.n),
                                 pruning_factor=pruning_factor)
    return trace


def csc_dev_sweep(dev_recordings, grid, k_known=None, k_max: int = 10,
                  rng_seed: int = 42, collar: float = 0.0) -> TuningTrace:
    """Choose the csc alpha minimizing mean measured error on a dev set.

    Arguments
    ---------
    dev_recordings : sequence of (EmbeddingSet, Timeline)
        Recordings with their reference timelines.
    grid : sequence of float
        Strictly increasing candidate alphas.
    k_known : sequence of int, optional
        Per-recording true speaker counts; when given, each run clusters
        with that fixed count instead of estimating it.

    A recording that fails under some candidate is dropped from that
    candidate's mean; the candidate itself scores +inf only when every
    recording fails.  per_candidate_k_hat holds the mean estimate across
    the recordings that succeeded.
    """
    from .scoring import compute_der, labels_to_timeline
    from .spectral import run_pipeline

    dev = list(dev_recordings)
    if not dev:
        raise StructuralError("dev set must be non-empty")
    if k_known is not None and len(k_known) != len(dev):
        raise StructuralError("k_known must align with dev_recordings")

    objectives = []
    k_hats = []
    for alpha in grid:
        ders = []
        ks = []
        for i, (emb, ref) in enumerate(dev):
            cfg = RunConfig(method="csc", alpha=float(alpha), k_max=k_max,
                            fixed_k=None if k_known is None else int(k_known[i]),
                            rng_seed=rng_seed)
            try:
                result = run_pipeline(emb, cfg)
                hyp = labels_to_timeline(result.labels, emb.spans)
                ders.append(compute_der(ref, hyp, collar=collar).der)
                ks.append(result.k_hat)
            except ScdiarError:
                continue
        if ders:
            objectives.append(float(np.mean(ders)))
            k_hats.append(float(np.mean(ks)))
        else:
            objectives.append(math.inf)
            k_hats.append(None)
    return TuningTrace.from_candidates(grid, objectives, k_hats)
