import math

import numpy as np
import pytest

from scdiar import (
    DEFAULT_ASC_GRID,
    NoViableCandidateError,
    RunConfig,
    StructuralError,
    TuningTrace,
    asc_proxy_objective,
    asc_select,
    compute_der,
    cosine_affinity,
    csc_dev_sweep,
    decomposition_count,
    labels_to_timeline,
    reset_decomposition_count,
    run_pipeline,
)
from scdiar.autotune import _proxy_value
from scdiar.synth import SynthSpec, generate
from tests.test_affinity import _emb


def _three_speaker_affinity(seed=0):
    spec = SynthSpec(num_speakers=3, segments_per_speaker=(10, 10, 10), dim=16,
                     separation=np.pi / 2, noise_sigma=0.08, seed=seed)
    emb, ref, _ = generate(spec)
    return cosine_affinity(emb), emb, ref


def test_trace_picks_the_minimum():
    trace = TuningTrace.from_candidates([0.1, 0.2, 0.3], [3.0, 1.0, 2.0], [2, 3, 3])
    assert trace.chosen == 0.2
    assert trace.objectives == (3.0, 1.0, 2.0)


def test_trace_tie_goes_to_smallest_candidate():
    trace = TuningTrace.from_candidates([0.1, 0.2, 0.3], [1.0, 1.0, 2.0], [2, 2, 2])
    assert trace.chosen == 0.1


def test_trace_rejects_bad_grids():
    with pytest.raises(StructuralError):
        TuningTrace.from_candidates([], [], [])
    with pytest.raises(StructuralError):
        TuningTrace.from_candidates([0.2, 0.1], [1.0, 2.0], [2, 2])
    with pytest.raises(StructuralError):
        TuningTrace.from_candidates([0.1, 0.2], [1.0], [2])


def test_trace_all_inf_is_no_viable_candidate():
    with pytest.raises(NoViableCandidateError):
        TuningTrace.from_candidates([0.1, 0.2], [math.inf, math.inf], [None, None])


def test_trace_csv(tmp_path):
    trace = TuningTrace.from_candidates([0.1, 0.2], [3.0, 1.0], [2, 3])
    out = tmp_path / "trace.csv"
    trace.write_csv(out)
    lines = out.read_text().strip().split("\n")
    assert lines[0] == "candidate,objective,k_hat"
    assert lines[2].startswith("0.2,1.0,3")


def test_proxy_prefers_larger_alpha_at_constant_gap():
    vals = np.array([0.0, 0.0, 2.0, 2.5])
    objectives = [_proxy_value(a, vals, "pruned")[0] for a in (0.2, 0.5, 0.8)]
    assert objectives[0] > objectives[1] > objectives[2]


def test_proxy_retained_convention_flips_the_preference():
    vals = np.array([0.0, 0.0, 2.0, 2.5])
    objectives = [_proxy_value(a, vals, "retained")[0] for a in (0.2, 0.5, 0.8)]
    assert objectives[0] < objectives[1] < objectives[2]


def test_proxy_inf_when_no_gap():
    obj, _ = _proxy_value(0.5, np.zeros(4), "pruned")
    assert obj == math.inf


def test_proxy_objective_matches_independent_computation():
    a, _, _ = _three_speaker_affinity(seed=3)
    n = a.n
    k_max = 10
    for alpha in (0.4, 0.6, 0.9):
        # Independent route: plain numpy pruning, symmetrization, eigensolve.
        p = a.values.copy()
        n_zero = int(math.floor(round(n * (1.0 - alpha), 9)))
        for i in range(n):
            cols = np.flatnonzero(np.arange(n) != i)
            smallest = cols[np.argsort(p[i, cols], kind="stable")[:n_zero]]
            p[i, smallest] = 0.0
        w = (p + p.T) / 2.0
        lap = np.diag(np.abs(w).sum(axis=1)) - w
        vals = np.linalg.eigvalsh(lap)[:k_max]
        g = np.max(np.diff(vals)) / vals[-1]
        want = (1.0 - alpha) / g
        got = asc_proxy_objective(a, alpha, k_max)
        assert got == pytest.approx(want, rel=1e-9)


def test_proxy_inf_on_fully_disconnected_graph():
    emb = _emb(np.eye(5))  # orthogonal embeddings: every affinity entry is 0
    a = cosine_affinity(emb)
    assert asc_proxy_objective(a, 0.5, 5) == math.inf


def test_asc_select_finds_three_speakers():
    a, _, _ = _three_speaker_affinity(seed=4)
    trace = asc_select(a, k_max=10)
    assert trace.grid == DEFAULT_ASC_GRID
    idx = trace.grid.index(trace.chosen)
    assert trace.per_candidate_k_hat[idx] == 3
    finite = [o for o in trace.objectives if math.isfinite(o)]
    assert min(finite) == trace.objectives[idx]


def test_asc_select_costs_one_decomposition_per_candidate():
    a, _, _ = _three_speaker_affinity(seed=5)
    reset_decomposition_count()
    asc_select(a, grid=(0.3, 0.6, 0.9), k_max=10)
    assert decomposition_count() == 3


def test_asc_select_reproducible():
    a, _, _ = _three_speaker_affinity(seed=6)
    t1 = asc_select(a, k_max=10)
    t2 = asc_select(a, k_max=10)
    assert t1 == t2


def test_asc_select_no_viable_candidate():
    a = cosine_affinity(_emb(np.eye(4)))
    with pytest.raises(NoViableCandidateError):
        asc_select(a, k_max=4)


def test_dev_sweep_single_candidate():
    a, emb, ref = _three_speaker_affinity(seed=7)
    trace = csc_dev_sweep([(emb, ref)], grid=[0.5], k_known=[3])
    assert trace.chosen == 0.5
    assert len(trace.objectives) == 1


def test_dev_sweep_objectives_match_rerun_scoring():
    _, emb, ref = _three_speaker_affinity(seed=8)
    grid = (0.3, 0.7, 0.9)
    trace = csc_dev_sweep([(emb, ref)], grid=grid, k_known=[3])
    for alpha, objective in zip(trace.grid, trace.objectives):
        cfg = RunConfig(method="csc", alpha=alpha, fixed_k=3)
        result = run_pipeline(emb, cfg)
        hyp = labels_to_timeline(result.labels, emb.spans)
        assert objective == pytest.approx(compute_der(ref, hyp).der, abs=1e-12)
    best = min(range(len(grid)), key=lambda i: trace.objectives[i])
    assert trace.chosen == grid[best]


def test_dev_sweep_picks_lower_error_candidate():
    _, emb, ref = _three_speaker_affinity(seed=9)
    grid = (0.05, 0.9)
    trace = csc_dev_sweep([(emb, ref)], grid=grid, k_known=[3])
    assert trace.objectives[1] <= trace.objectives[0]
    assert trace.chosen == 0.9


def test_dev_sweep_drops_failing_recordings_not_candidates():
    _, emb, ref = _three_speaker_affinity(seed=10)
    # Second recording can never cluster into 50 speakers; it is skipped,
    # the candidate survives on the first recording alone.
    trace = csc_dev_sweep([(emb, ref), (emb, ref)], grid=[0.8], k_known=[3, 50])
    assert math.isfinite(trace.objectives[0])


def test_dev_sweep_all_recordings_failing_kills_the_candidate():
    _, emb, ref = _three_speaker_affinity(seed=11)
    with pytest.raises(NoViableCandidateError):
        csc_dev_sweep([(emb, ref)], grid=[0.5, 0.8], k_known=[50])


def test_dev_sweep_validates_inputs():
    _, emb, ref = _three_speaker_affinity(seed=12)
    with pytest.raises(StructuralError):
        csc_dev_sweep([], grid=[0.5])
    with pytest.raises(StructuralError):
        csc_dev_sweep([(emb, ref)], grid=[0.5], k_known=[3, 3])
