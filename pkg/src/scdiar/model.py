"""Shared domain types: segment spans, embedding sets, labelings, run configuration.

Embedding files are plain CSV.  The matrix file starts with a two-line
header (column names, then values) describing ``n``, ``d`` and the
recording id, followed by ``n`` rows of ``d`` comma-separated floats.
A sidecar ``<stem>.segments.csv`` carries one ``onset,duration`` row per
embedding.  Floats are written with ``repr`` so a round trip is
bit-exact.
"""

import csv
import os
from dataclasses import dataclass

import numpy as np

# Segmentation convention used throughout: sliding window length and hop, in seconds.
SEGMENT_WINDOW_SECONDS = 3.0
SEGMENT_HOP_SECONDS = 1.5

METHODS = ("csc", "asc", "eer-delta", "sc-pna")


class ScdiarError(Exception):
    """Base class for every error raised by this package."""


class IngestionError(ScdiarError):
    """A single input row is unusable (e.g. zero-norm embedding)."""


class StructuralError(ScdiarError):
    """Inputs are inconsistent with each other or malformed as a whole."""


class ConfigError(ScdiarError):
    """A run configuration is invalid for the requested method."""


@dataclass(frozen=True)
class SegmentSpan:
    """Half-open time interval [onset, onset + duration) within one recording."""

    onset: float
    duration: float
    recording_id: str

    def __post_init__(self):
        if not self.onset >= 0.0:
            raise StructuralError(f"segment onset must be >= 0, got {self.onset}")
        if not self.duration > 0.0:
            raise StructuralError(f"segment duration must be > 0, got {self.duration}")

    @property
    def offset(self) -> float:
        return self.onset + self.duration


@dataclass(frozen=True)
class EmbeddingSet:
    """Immutable (n, d) embedding matrix with one SegmentSpan per row."""

    vectors: np.ndarray
    spans: tuple

    def __post_init__(self):
        self.vectors.setflags(write=False)

    @property
    def n(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]


def validate_embedding_set(raw_vectors, raw_spans) -> EmbeddingSet:
    """Check raw inputs and assemble an EmbeddingSet.

    Arguments
    ---------
    raw_vectors : array-like
        Rectangular (n, d) real matrix, one embedding per row.
    raw_spans : sequence of SegmentSpan
        Exactly one span per embedding row.

    Returns
    -------
    EmbeddingSet
        Validated, immutable container.

    Raises
    ------
    StructuralError
        Non-rectangular input, empty matrix, or span count mismatch.
    IngestionError
        A zero-norm embedding row; the message names the row index.
    """
    try:
        arr = np.array(raw_vectors, dtype=float)
    except (TypeError, ValueError) as exc:
        raise StructuralError(f"embedding matrix is not rectangular: {exc}") from exc
    if arr.ndim != 2 or arr.size == 0:
        raise StructuralError(
            f"embedding matrix must be a non-empty 2-D array, got shape {arr.shape}"
        )
    norms = np.linalg.norm(arr, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise IngestionError(f"zero-norm embedding at row {int(zero[0])}")
    spans = tuple(raw_spans)
    if len(spans) != arr.shape[0]:
        raise StructuralError(
            f"expected one span per embedding, got {len(spans)} spans for {arr.shape[0]} rows"
        )
    for s in spans:
        if not isinstance(s, SegmentSpan):
            raise StructuralError(f"span entries must be SegmentSpan, got {type(s).__name__}")
    return EmbeddingSet(vectors=arr, spans=spans)


@dataclass(frozen=True)
class Labeling:
    """Cluster assignment for n segments; ids are 1-based and contiguous."""

    labels: np.ndarray
    num_clusters: int

    def __post_init__(self):
        labels = np.asarray(self.labels, dtype=np.int64)
        object.__setattr__(self, "labels", labels)
        labels.setflags(write=False)
        if labels.ndim != 1 or labels.size == 0:
            raise StructuralError("labels must be a non-empty 1-D array")
        if self.num_clusters < 1:
            raise StructuralError(f"num_clusters must be >= 1, got {self.num_clusters}")
        present = np.unique(labels)
        expected = np.arange(1, self.num_clusters + 1)
        if present.size != expected.size or not np.array_equal(present, expected):
            raise StructuralError(
                f"labels must use every id in 1..{self.num_clusters} at least once"
            )

    @property
    def n(self) -> int:
        return self.labels.shape[0]


@dataclass(frozen=True)
class RunConfig:
    """Diarization run parameters.

    Only the parameters relevant to ``method`` are required: ``retention_p``
    for sc-pna and ``alpha`` for csc.  Extraneous parameters are ignored.
    """

    method: str
    retention_p: float | None = None
    alpha: float | None = None
    k_max: int = 10
    fixed_k: int | None = None
    rng_seed: int = 42

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}, expected one of {METHODS}")
        if self.k_max < 2:
            raise ConfigError(f"k_max must be >= 2, got {self.k_max}")
        if self.fixed_k is not None and self.fixed_k < 1:
            raise ConfigError(f"fixed_k must be >= 1, got {self.fixed_k}")
        if self.method == "sc-pna":
            if self.retention_p is None:
                raise ConfigError("method sc-pna requires retention_p")
            if not 0.0 < self.retention_p <= 100.0:
                raise ConfigError(f"retention_p must be in (0, 100], got {self.retention_p}")
        if self.method == "csc":
            if self.alpha is None:
                raise ConfigError("method csc requires alpha")
            if not 0.0 <= self.alpha <= 1.0:
                raise ConfigError(f"alpha must be in [0, 1], got {self.alpha}")


def segments_sidecar_path(path) -> str:
    """Path of the segments table that accompanies an embedding CSV."""
    base = str(path)
    if base.endswith(".csv"):
        base = base[: -len(".csv")]
    return base + ".segments.csv"


def write_embedding_set(emb: EmbeddingSet, path) -> None:
    """Write the matrix CSV and its segments sidecar.

    Values go through ``repr(float)`` so reading the files back
    reproduces the original float64 bits.
    """
    rec_id = emb.spans[0].recording_id if emb.spans else ""
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["n", "d", "recording_id"])
        w.writerow([emb.n, emb.dim, rec_id])
        for row in emb.vectors:
            w.writerow([repr(float(v)) for v in row])
    with open(segments_sidecar_path(path), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["onset", "duration"])
        for s in emb.spans:
            w.writerow([repr(float(s.onset)), repr(float(s.duration))])


def _read_rows(path):
    if not os.path.exists(path):
        raise IngestionError(f"no such file: {path}")
    with open(path, newline="") as f:
        return [row for row in csv.reader(f) if row]


def read_embedding_set(path) -> EmbeddingSet:
    """Read an embedding CSV plus its segments sidecar into an EmbeddingSet."""
    rows = _read_rows(path)
    if len(rows) < 3 or rows[0][:3] != ["n", "d", "recording_id"]:
        raise StructuralError(f"{path}: missing 'n,d,recording_id' header")
    try:
        n, d = int(rows[1][0]), int(rows[1][1])
    except (IndexError, ValueError) as exc:
        raise StructuralError(f"{path}: bad header values {rows[1]!r}") from exc
    rec_id = rows[1][2] if len(rows[1]) > 2 else ""
    body = rows[2:]
    if len(body) != n:
        raise StructuralError(f"{path}: header announces {n} rows, found {len(body)}")
    try:
        vectors = [[float(v) for v in row] for row in body]
    except ValueError as exc:
        raise StructuralError(f"{path}: non-numeric matrix entry: {exc}") from exc
    if any(len(row) != d for row in vectors):
        raise StructuralError(f"{path}: expected {d} columns in every row")

    seg_path = segments_sidecar_path(path)
    seg_rows = _read_rows(seg_path)
    if not seg_rows or seg_rows[0][:2] != ["onset", "duration"]:
        raise StructuralError(f"{seg_path}: missing 'onset,duration' header")
    try:
        spans = [
            SegmentSpan(onset=float(r[0]), duration=float(r[1]), recording_id=rec_id)
            for r in seg_rows[1:]
        ]
    except (IndexError, ValueError) as exc:
        raise StructuralError(f"{seg_path}: bad segment row: {exc}") from exc
    return validate_embedding_set(vectors, spans)
