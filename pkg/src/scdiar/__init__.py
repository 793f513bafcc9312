"""Self-tuning spectral clustering for speaker diarization.

Per-row affinity sparsification (sc-pna, eer-delta, csc), eigengap
cluster-count estimation, an asc proxy-objective tuner, a region-based
DER scorer, and a synthetic conversation generator.
"""

from .affinity import AffinityMatrix, cosine_affinity
from .autotune import (
    DEFAULT_ASC_GRID,
    DEFAULT_CSC_SWEEP_GRID,
    NoViableCandidateError,
    TuningTrace,
    asc_proxy_objective,
    asc_select,
    csc_dev_sweep,
)
from .kmeans import (
    DegenerateRowError,
    InfeasibleError,
    RowSplit,
    lloyd_kmeans,
    split_row_two_clusters,
)
from .model import (
    ConfigError,
    EmbeddingSet,
    IngestionError,
    Labeling,
    RunConfig,
    ScdiarError,
    SegmentSpan,
    StructuralError,
    read_embedding_set,
    validate_embedding_set,
    write_embedding_set,
)
from .pruning import (
    DegenerateRowWarning,
    PrunedAffinity,
    RowGaussianStats,
    UndefinedStatsError,
    delta_threshold,
    eer_from_stats,
    prune_csc_alpha,
    prune_eer_delta,
    prune_sc_pna,
)
from .scoring import (
    DerBreakdown,
    RttmParseError,
    Timeline,
    Turn,
    UndefinedDerError,
    compute_der,
    labels_to_timeline,
    optimal_speaker_mapping,
    read_rttm,
    write_rttm,
)
from .spectral import (
    CannotEstimateError,
    Laplacian,
    NumericalError,
    PipelineError,
    SpectralResult,
    cluster_spectral,
    decomposition_count,
    estimate_k,
    reset_decomposition_count,
    run_pipeline,
    smallest_eigenpairs,
    symmetrize,
)
from .synth import GenerationError, SynthSpec, generate, speaker_centers

__version__ = "0.1.0"

__all__ = [
    "AffinityMatrix",
    "CannotEstimateError",
    "ConfigError",
    "DEFAULT_ASC_GRID",
    "DEFAULT_CSC_SWEEP_GRID",
    "DegenerateRowError",
    "DegenerateRowWarning",
    "DerBreakdown",
    "EmbeddingSet",
    "GenerationError",
    "InfeasibleError",
    "IngestionError",
    "Labeling",
    "Laplacian",
    "NoViableCandidateError",
    "NumericalError",
    "PipelineError",
    "PrunedAffinity",
    "RowGaussianStats",
    "RowSplit",
    "RttmParseError",
    "RunConfig",
    "ScdiarError",
    "SegmentSpan",
    "SpectralResult",
    "StructuralError",
    "SynthSpec",
    "Timeline",
    "TuningTrace",
    "Turn",
    "UndefinedDerError",
    "UndefinedStatsError",
    "asc_proxy_objective",
    "asc_select",
    "cluster_spectral",
    "compute_der",
    "cosine_affinity",
    "csc_dev_sweep",
    "decomposition_count",
    "delta_threshold",
    "eer_from_stats",
    "estimate_k",
    "generate",
    "labels_to_timeline",
    "lloyd_kmeans",
    "optimal_speaker_mapping",
    "prune_csc_alpha",
    "prune_eer_delta",
    "prune_sc_pna",
    "read_embedding_set",
    "read_rttm",
    "reset_decomposition_count",
    "run_pipeline",
    "smallest_eigenpairs",
    "speaker_centers",
    "split_row_two_clusters",
    "symmetrize",
    "validate_embedding_set",
    "write_embedding_set",
    "write_rttm",
]
