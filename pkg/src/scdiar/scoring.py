"""Diarization error rate scoring and RTTM input/output.

Scoring is region based: the union of all turn boundaries partitions the
time axis into regions with a constant active-speaker set, and missed
speech, false alarm and speaker confusion are accumulated per region in
speaker-seconds.  Overlapping reference speech therefore counts once per
active speaker.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .model import Labeling, ScdiarError, StructuralError


class UndefinedDerError(ScdiarError):
    """No scored reference speech; the rate has no denominator."""


class RttmParseError(ScdiarError):
    """A SPEAKER line could not be parsed; ``line_number`` points at it."""

    def __init__(self, message: str, line_number: int):
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True)
class Turn:
    """One speaker's contiguous speech interval."""

    speaker: str
    onset: float
    duration: float

    def __post_init__(self):
        if not self.onset >= 0.0:
            raise StructuralError(f"turn onset must be >= 0, got {self.onset}")
        if not self.duration > 0.0:
            raise StructuralError(f"turn duration must be > 0, got {self.duration}")

    @property
    def offset(self) -> float:
        return self.onset + self.duration


@dataclass(frozen=True)
class Timeline:
    """All turns of one recording."""

    recording_id: str
    turns: tuple

    def speakers(self) -> list:
        return sorted({t.speaker for t in self.turns})

    @property
    def num_speakers(self) -> int:
        return len({t.speaker for t in self.turns})


@dataclass(frozen=True)
class DerBreakdown:
    """DER components in seconds, plus the rate itself."""

    missed: float
    false_alarm: float
    speaker_error: float
    total_reference: float
    der: float


def _merge_intervals(intervals):
    """Union of [onset, offset) intervals; overlapping or abutting ones fuse."""
    merged = []
    for onset, offset in sorted(intervals):
        if merged and onset <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], offset)
        else:
            merged.append([onset, offset])
    return [(a, b) for a, b in merged]


def _speaker_intervals(timeline: Timeline) -> dict:
    by_speaker = {}
    for t in timeline.turns:
        by_speaker.setdefault(t.speaker, []).append((t.onset, t.offset))
    return {spk: _merge_intervals(ivs) for spk, ivs in by_speaker.items()}


def _intersection_length(a, b) -> float:
    total = 0.0
    i = j = 0
    while i < len(a) and j < len(b):
        lo = max(a[i][0], b[j][0])
        hi = min(a[i][1], b[j][1])
        if hi > lo:
            total += hi - lo
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return total


def optimal_speaker_mapping(ref: Timeline, hyp: Timeline) -> dict:
    """One-to-one hypothesis-to-reference speaker map maximizing overlap.

    Overlap is measured on each speaker's merged interval union, the
    assignment is solved globally over the whole recording, and pairs
    with zero overlap are dropped, so the map can be partial.

    Returns
    -------
    dict
        hypothesis speaker -> reference speaker.
    """
    ref_iv = _speaker_intervals(ref)
    hyp_iv = _speaker_intervals(hyp)
    ref_speakers = sorted(ref_iv)
    hyp_speakers = sorted(hyp_iv)
    if not ref_speakers or not hyp_speakers:
        return {}
    overlap = np.zeros((len(hyp_speakers), len(ref_speakers)))
    for i, h in enumerate(hyp_speakers):
        for j, r in enumerate(ref_speakers):
            overlap[i, j] = _intersection_length(hyp_iv[h], ref_iv[r])
    rows, cols = linear_sum_assignment(-overlap)
    return {
        hyp_speakers[i]: ref_speakers[j]
        for i, j in zip(rows, cols)
        if overlap[i, j] > 0.0
    }


def _covers(intervals, point: float) -> bool:
    return any(a <= point < b for a, b in intervals)


def compute_der(ref: Timeline, hyp: Timeline, collar: float = 0.0,
                ignore_overlap: bool = False) -> DerBreakdown:
    """Diarization error rate of a hypothesis against a reference.

    Arguments
    ---------
    ref, hyp : Timeline
    collar : float
        Half-width in seconds excised around every reference turn
        boundary before scoring.  Default 0.0.
    ignore_overlap : bool
        When True, regions where the reference has two or more active
        speakers are excluded.  Default False: overlap is scored.

    Returns
    -------
    DerBreakdown
        missed + false_alarm + speaker_error over total reference
        speaker-seconds.  Components are additive: der always equals
        their sum divided by total_reference.

    Raises
    ------
    UndefinedDerError
        The reference is empty, or exclusions removed all of it.
    """
    if not ref.turns:
        raise UndefinedDerError("reference timeline has no turns")
    if collar < 0.0:
        raise StructuralError(f"collar must be >= 0, got {collar}")

    mapping = optimal_speaker_mapping(ref, hyp)
    ref_iv = _speaker_intervals(ref)
    hyp_iv = _speaker_intervals(hyp)

    excluded = []
    if collar > 0.0:
        for t in ref.turns:
            excluded.append((max(0.0, t.onset - collar), t.onset + collar))
            excluded.append((max(0.0, t.offset - collar), t.offset + collar))
        excluded = _merge_intervals(excluded)

    events = set()
    for ivs in list(ref_iv.values()) + list(hyp_iv.values()):
        for a, b in ivs:
            events.add(a)
            events.add(b)
    for a, b in excluded:
        events.add(a)
        events.add(b)
    boundaries = sorted(events)

    missed = false_alarm = speaker_error = total_reference = 0.0
    for t0, t1 in zip(boundaries, boundaries[1:]):
        if t1 <= t0:
            continue
        mid = (t0 + t1) / 2.0
        if excluded and _covers(excluded, mid):
            continue
        ref_active = {spk for spk, ivs in ref_iv.items() if _covers(ivs, mid)}
        hyp_active = {spk for spk, ivs in hyp_iv.items() if _covers(ivs, mid)}
        n_ref = len(ref_active)
        n_hyp = len(hyp_active)
        if ignore_overlap and n_ref >= 2:
            continue
        dur = t1 - t0
        total_reference += n_ref * dur
        missed += max(0, n_ref - n_hyp) * dur
        false_alarm += max(0, n_hyp - n_ref) * dur
        matched = sum(1 for h in hyp_active if mapping.get(h) in ref_active)
        speaker_error += (min(n_ref, n_hyp) - matched) * dur

    if total_reference <= 0.0:
        raise UndefinedDerError("no scored reference speech after exclusions")
    return DerBreakdown(
        missed=missed,
        false_alarm=false_alarm,
        speaker_error=speaker_error,
        total_reference=total_reference,
        der=(missed + false_alarm + speaker_error) / total_reference,
    )


def labels_to_timeline(labeling: Labeling, spans, merge: bool = True) -> Timeline:
    """Turn per-segment cluster labels into a speaker timeline.

    Each segment becomes a turn whose speaker is its cluster id.  With
    ``merge`` set, same-speaker segments that overlap or abut are fused
    into single turns (an interval union); distinct speakers never merge.
    """
    spans = tuple(spans)
    if labeling.n != len(spans):
        raise StructuralError(
            f"label count {labeling.n} does not match span count {len(spans)}"
        )
    rec_id = spans[0].recording_id
    turns = []
    if merge:
        per_label = {}
        for lab, span in zip(labeling.labels, spans):
            per_label.setdefault(int(lab), []).append((span.onset, span.offset))
        for lab in sorted(per_label):
            for onset, offset in _merge_intervals(per_label[lab]):
                turns.append(Turn(speaker=str(lab), onset=onset, duration=offset - onset))
    else:
        for lab, span in zip(labeling.labels, spans):
            turns.append(Turn(speaker=str(int(lab)), onset=span.onset, duration=span.duration))
    turns.sort(key=lambda t: (t.onset, t.duration, t.speaker))
    return Timeline(recording_id=rec_id, turns=tuple(turns))


def read_rttm(path) -> list:
    """Parse an RTTM file into one Timeline per recording id.

    Only SPEAKER records are read; other record types are skipped.
    Fields are whitespace separated, so extra spacing is tolerated.

    Raises
    ------
    RttmParseError
        A malformed SPEAKER line; the message and the exception's
        ``line_number`` identify it.
    """
    per_rec = {}
    order = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            parts = raw.split()
            if not parts or parts[0] != "SPEAKER":
                continue
            if len(parts) < 8:
                raise RttmParseError(
                    f"line {lineno}: SPEAKER record has {len(parts)} fields, expected >= 8",
                    lineno,
                )
            rec_id = parts[1]
            try:
                onset = float(parts[3])
                duration = float(parts[4])
            except ValueError as exc:
                raise RttmParseError(
                    f"line {lineno}: non-numeric onset/duration: {exc}", lineno
                ) from exc
            try:
                turn = Turn(speaker=parts[7], onset=onset, duration=duration)
            except StructuralError as exc:
                raise RttmParseError(f"line {lineno}: {exc}", lineno) from exc
            if rec_id not in per_rec:
                per_rec[rec_id] = []
                order.append(rec_id)
            per_rec[rec_id].append(turn)
    return [Timeline(recording_id=rec, turns=tuple(per_rec[rec])) for rec in order]


def write_rttm(timelines, path) -> None:
    """Write timelines as SPEAKER records, sorted for byte stability."""
    if isinstance(timelines, Timeline):
        timelines = [timelines]
    with open(path, "w") as f:
        for tl in timelines:
            for t in sorted(tl.turns, key=lambda t: (t.onset, t.duration, t.speaker)):
                f.write(
                    f"SPEAKER {tl.recording_id} 1 {t.onset:.3f} {t.duration:.3f} "
                    f"<NA> <NA> {t.speaker} <NA> <NA>\n"
                )
