"""Synthetic conversation generator with controllable geometry.

Speaker centers are placed on the unit sphere so that every pair has the
same target cosine, cos(separation).  Feasibility is checked through the
target Gram matrix: it must be positive semi-definite and its rank must
not exceed the embedding dimension, otherwise no such center set exists.
"""

from dataclasses import dataclass

import numpy as np

from .model import (
    SEGMENT_HOP_SECONDS,
    SEGMENT_WINDOW_SECONDS,
    EmbeddingSet,
    Labeling,
    ScdiarError,
    SegmentSpan,
    StructuralError,
    validate_embedding_set,
)
from .scoring import labels_to_timeline

TURN_MODELS = ("round-robin", "random")


class GenerationError(ScdiarError):
    """The requested geometry cannot exist in the given dimension."""


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of one synthetic recording."""

    num_speakers: int
    segments_per_speaker: tuple
    dim: int
    separation: float
    noise_sigma: float
    seed: int
    turn_model: str = "round-robin"
    recording_id: str = "synth"
    window: float = SEGMENT_WINDOW_SECONDS
    hop: float = SEGMENT_HOP_SECONDS

    def __post_init__(self):
        if self.num_speakers < 1:
            raise StructuralError(f"num_speakers must be >= 1, got {self.num_speakers}")
        counts = tuple(int(c) for c in self.segments_per_speaker)
        object.__setattr__(self, "segments_per_speaker", counts)
        if len(counts) != self.num_speakers:
            raise StructuralError(
                f"need one segment count per speaker, got {len(counts)} for {self.num_speakers}"
            )
        if any(c < 1 for c in counts):
            raise StructuralError("every speaker needs at least one segment")
        if self.dim < 1:
            raise StructuralError(f"dim must be >= 1, got {self.dim}")
        if self.separation < 0.0:
            raise StructuralError(f"separation must be >= 0, got {self.separation}")
        if self.noise_sigma < 0.0:
            raise StructuralError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.turn_model not in TURN_MODELS:
            raise StructuralError(
                f"turn_model must be one of {TURN_MODELS}, got {self.turn_model!r}"
            )


def speaker_centers(num_speakers: int, dim: int, separation: float) -> np.ndarray:
    """Unit-norm centers with pairwise cosine cos(separation).

    Factors the target Gram matrix; raises GenerationError when it is
    not positive semi-definite or needs more than ``dim`` dimensions.
    """
    c = float(np.cos(separation))
    k = num_speakers
    gram = np.full((k, k), c)
    np.fill_diagonal(gram, 1.0)
    vals, vecs = np.linalg.eigh(gram)
    tol = 1e-9 * max(1.0, float(np.max(np.abs(vals))))
    if vals[0] < -tol:
        raise GenerationError(
            f"no {k} unit vectors have pairwise cosine {c:.6f} (Gram not PSD)"
        )
    vals = np.clip(vals, 0.0, None)
    rank = int(np.sum(vals > tol))
    if rank > dim:
        raise GenerationError(
            f"{k} centers at pairwise cosine {c:.6f} need {rank} dimensions, have {dim}"
        )
    factors = vecs[:, -rank:] * np.sqrt(vals[-rank:])[None, :]
    centers = np.zeros((k, dim))
    centers[:, :rank] = factors
    centers /= np.linalg.norm(centers, axis=1, keepdims=True)
    return centers


def _speaker_sequence(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    if spec.turn_model == "round-robin":
        remaining = list(spec.segments_per_speaker)
        seq = []
        while any(remaining):
            for spk in range(spec.num_speakers):
                if remaining[spk] > 0:
                    seq.append(spk + 1)
                    remaining[spk] -= 1
        return np.array(seq, dtype=np.int64)
    seq = np.repeat(np.arange(1, spec.num_speakers + 1),
                    np.array(spec.segments_per_speaker, dtype=np.int64))
    rng.shuffle(seq)
    return seq


def generate(spec: SynthSpec):
    """One synthetic recording.

    Each segment embedding is normalize(center + gaussian(0, noise_sigma))
    drawn from a generator seeded with spec.seed, so identical specs give
    bit-identical output.  Segments are consecutive ``window``-second
    sliding windows at ``hop``-second steps.

    Returns
    -------
    (EmbeddingSet, Timeline, Labeling)
        Embeddings, the merged reference timeline, and the true
        per-segment speaker labels.
    """
    centers = speaker_centers(spec.num_speakers, spec.dim, spec.separation)
    rng = np.random.default_rng(spec.seed)
    seq = _speaker_sequence(spec, rng)
    n = seq.size

    vectors = np.empty((n, spec.dim))
    for i, spk in enumerate(seq):
        v = centers[spk - 1] + rng.normal(0.0, spec.noise_sigma, spec.dim)
        norm = np.linalg.norm(v)
        while norm < 1e-12:
            v = centers[spk - 1] + rng.normal(0.0, spec.noise_sigma, spec.dim)
            norm = np.linalg.norm(v)
        vectors[i] = v / norm

    spans = tuple(
        SegmentSpan(onset=i * spec.hop, duration=spec.window, recording_id=spec.recording_id)
        for i in range(n)
    )
    emb = validate_embedding_set(vectors, spans)
    labeling = Labeling(labels=seq, num_clusters=spec.num_speakers)
    reference = labels_to_timeline(labeling, spans, merge=True)
    return emb, reference, labeling
