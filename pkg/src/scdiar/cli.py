"""Command line interface: diarize, score, bench, synth.

Exit codes: 0 success, 2 unusable input or configuration, 3 pipeline or
numerical failure.  Every flag can also be set through an environment
variable named SCDIAR_<FLAG> with dashes as underscores, e.g.
SCDIAR_K_MAX=12 or SCDIAR_METHOD=csc; explicit flags win.
"""

import argparse
import csv
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

from .autotune import NoViableCandidateError
from .model import (
    ConfigError,
    IngestionError,
    RunConfig,
    ScdiarError,
    StructuralError,
    read_embedding_set,
    write_embedding_set,
)
from .scoring import (
    RttmParseError,
    Timeline,
    UndefinedDerError,
    compute_der,
    labels_to_timeline,
    read_rttm,
    write_rttm,
)
from .spectral import run_pipeline
from .synth import GenerationError, SynthSpec, generate

ENV_PREFIX = "SCDIAR_"

DEFAULT_P_GRID = "10,15,20,25,30,35,40,45,50"
DEFAULT_ALPHA_GRID = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9"

# Input-side failures exit 2; anything else from the package exits 3.
_INPUT_ERRORS = (
    IngestionError,
    StructuralError,
    ConfigError,
    RttmParseError,
    GenerationError,
    UndefinedDerError,
    NoViableCandidateError,
    OSError,
)


def _env(flag: str):
    return os.environ.get(ENV_PREFIX + flag.upper().replace("-", "_"))


def _default(flag: str, fallback, cast):
    raw = _env(flag)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {ENV_PREFIX}{flag.upper().replace('-', '_')}: {exc}") from exc


def _parse_separation(text: str) -> float:
    """Radians, or degrees with a 'deg' suffix (e.g. '90deg')."""
    text = text.strip()
    if text.lower().endswith("deg"):
        return math.radians(float(text[:-3]))
    return float(text)


def _parse_float_list(text: str):
    return tuple(float(v) for v in text.split(",") if v.strip())


def _parse_int_list(text: str):
    return tuple(int(v) for v in text.split(",") if v.strip())


def _parse_methods(text: str):
    return tuple(m.strip() for m in text.split(",") if m.strip())


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="scdiar",
        description="Self-tuning spectral clustering for speaker diarization.",
        epilog=f"Flags may be preset via {ENV_PREFIX}<FLAG> environment variables.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("diarize", help="cluster one embedding file into speakers")
    d.add_argument("embeddings", help="embedding CSV (with .segments.csv sidecar)")
    d.add_argument("--method", default=_default("method", "sc-pna", str),
                   choices=["csc", "asc", "eer-delta", "sc-pna"])
    d.add_argument("--p", type=float, default=_default("p", 20.0, float),
                   help="sc-pna retention percentage in (0, 100]")
    d.add_argument("--alpha", type=float, default=_default("alpha", None, float),
                   help="csc pruning level in [0, 1]")
    d.add_argument("--k-max", type=int, default=_default("k-max", 10, int))
    d.add_argument("--fixed-k", type=int, default=_default("fixed-k", None, int))
    d.add_argument("--seed", type=int, default=_default("seed", 42, int))
    d.add_argument("--asc-grid", type=_parse_float_list,
                   default=_default("asc-grid", None, _parse_float_list),
                   help="comma-separated candidate alphas for --method asc")
    d.add_argument("--out", default=_default("out", ".", str))
    d.set_defaults(func=cmd_diarize)

    s = sub.add_parser("score", help="score a hypothesis RTTM against a reference")
    s.add_argument("reference")
    s.add_argument("hypothesis")
    s.add_argument("--collar", type=float, default=_default("collar", 0.0, float))
    s.add_argument("--ignore-overlap", action="store_true",
                   default=_default("ignore-overlap", False, lambda v: v == "1"))
    s.add_argument("--out", default=_default("out", None, str),
                   help="directory for score.csv (optional)")
    s.set_defaults(func=cmd_score)

    b = sub.add_parser("bench", help="run a manifest of recordings through method grids")
    b.add_argument("manifest",
                   help="one recording per line: embeddings.csv[,reference.rttm]")
    b.add_argument("--methods", type=_parse_methods,
                   default=_default("methods", ("sc-pna",), _parse_methods))
    b.add_argument("--p-grid", type=_parse_float_list,
                   default=_default("p-grid", _parse_float_list(DEFAULT_P_GRID), _parse_float_list))
    b.add_argument("--alpha-grid", type=_parse_float_list,
                   default=_default("alpha-grid", _parse_float_list(DEFAULT_ALPHA_GRID),
                                    _parse_float_list))
    b.add_argument("--asc-grid", type=_parse_float_list,
                   default=_default("asc-grid", None, _parse_float_list))
    b.add_argument("--k-max", type=int, default=_default("k-max", 10, int))
    b.add_argument("--fixed-k", type=int, default=_default("fixed-k", None, int))
    b.add_argument("--seed", type=int, default=_default("seed", 42, int))
    b.add_argument("--collar", type=float, default=_default("collar", 0.0, float))
    b.add_argument("--jobs", type=int, default=_default("jobs", 1, int))
    b.add_argument("--no-timing", action="store_true",
                   default=_default("no-timing", False, lambda v: v == "1"),
                   help="leave wall_time_ms empty so repeated runs are byte-identical")
    b.add_argument("--out", default=_default("out", ".", str))
    b.set_defaults(func=cmd_bench)

    g = sub.add_parser("synth", help="generate a synthetic recording")
    g.add_argument("--speakers", type=int, default=_default("speakers", 3, int))
    g.add_argument("--segments", type=_parse_int_list,
                   default=_default("segments", (20,), _parse_int_list),
                   help="segments per speaker: one count for all, or a comma list")
    g.add_argument("--dim", type=int, default=_default("dim", 32, int))
    g.add_argument("--separation", type=_parse_separation,
                   default=_default("separation", math.pi / 2.0, _parse_separation),
                   help="pairwise center angle in radians, or degrees as e.g. '90deg'")
    g.add_argument("--noise-sigma", type=float, default=_default("noise-sigma", 0.1, float))
    g.add_argument("--seed", type=int, default=_default("seed", 42, int))
    g.add_argument("--turn-model", default=_default("turn-model", "round-robin", str),
                   choices=["round-robin", "random"])
    g.add_argument("--recording-id", default=_default("recording-id", "synth", str))
    g.add_argument("--out", default=_default("out", ".", str))
    g.set_defaults(func=cmd_synth)

    return parser


def _run_config(args) -> RunConfig:
    return RunConfig(
        method=args.method,
        retention_p=args.p if args.method == "sc-pna" else None,
        alpha=args.alpha if args.method == "csc" else None,
        k_max=args.k_max,
        fixed_k=args.fixed_k,
        rng_seed=args.seed,
    )


def cmd_diarize(args) -> int:
    emb = read_embedding_set(args.embeddings)
    cfg = _run_config(args)
    result = run_pipeline(emb, cfg, asc_grid=args.asc_grid)
    hyp = labels_to_timeline(result.labels, emb.spans)
    os.makedirs(args.out, exist_ok=True)
    rec = hyp.recording_id or "recording"
    rttm_path = os.path.join(args.out, f"{rec}.rttm")
    diag_path = os.path.join(args.out, f"{rec}.diag.json")
    write_rttm(hyp, rttm_path)
    result.write_diagnostics(diag_path)
    print(f"{rec}: n={emb.n} method={cfg.method} k_hat={result.k_hat} -> {rttm_path}")
    return 0


def _breakdown_line(rec: str, b) -> str:
    return (f"{rec}: DER {100.0 * b.der:.2f}% "
            f"(missed {b.missed:.3f}s, false alarm {b.false_alarm:.3f}s, "
            f"speaker error {b.speaker_error:.3f}s, scored {b.total_reference:.3f}s)")


def cmd_score(args) -> int:
    refs = read_rttm(args.reference)
    hyps = {tl.recording_id: tl for tl in read_rttm(args.hypothesis)}
    if not refs:
        raise UndefinedDerError(f"{args.reference}: no SPEAKER records")
    for rec in hyps:
        if rec not in {tl.recording_id for tl in refs}:
            print(f"warning: hypothesis recording {rec!r} has no reference, skipped",
                  file=sys.stderr)

    rows = []
    sums = [0.0, 0.0, 0.0, 0.0]
    for ref in refs:
        hyp = hyps.get(ref.recording_id, Timeline(recording_id=ref.recording_id, turns=()))
        b = compute_der(ref, hyp, collar=args.collar, ignore_overlap=args.ignore_overlap)
        print(_breakdown_line(ref.recording_id, b))
        rows.append([ref.recording_id, repr(b.der), repr(b.missed), repr(b.false_alarm),
                     repr(b.speaker_error), repr(b.total_reference)])
        for i, v in enumerate((b.missed, b.false_alarm, b.speaker_error, b.total_reference)):
            sums[i] += v
    if len(refs) > 1:
        overall = sum(sums[:3]) / sums[3]
        print(f"OVERALL: DER {100.0 * overall:.2f}%")
        rows.append(["OVERALL", repr(overall), repr(sums[0]), repr(sums[1]),
                     repr(sums[2]), repr(sums[3])])
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "score.csv")
        with open(path, "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow(["recording_id", "der", "missed", "false_alarm",
                        "speaker_error", "total_reference"])
            w.writerows(rows)
    return 0


def _read_manifest(path):
    if not os.path.exists(path):
        raise IngestionError(f"no such manifest: {path}")
    entries = []
    with open(path) as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = [p.strip() for p in line.split(",")]
            if len(parts) > 2 or not parts[0]:
                raise StructuralError(f"{path}:{lineno}: expected 'embeddings[,reference]'")
            entries.append((parts[0], parts[1] if len(parts) == 2 and parts[1] else None))
    if not entries:
        raise StructuralError(f"{path}: manifest lists no recordings")
    return entries


def _param_tag(method: str, param) -> str:
    if param is None:
        return ""
    return f"__p{param:g}" if method == "sc-pna" else f"__a{param:g}"


def _bench_cell(args, emb_path: str, ref_path, method: str, param):
    """One (recording, method, parameter) run. Returns a report row."""
    stem = os.path.basename(emb_path)
    if stem.endswith(".csv"):
        stem = stem[: -len(".csv")]
    row = {"recording_id": stem, "method": method, "parameter": "", "k_hat": "",
           "k_true": "", "der": "", "missed": "", "false_alarm": "",
           "speaker_error": "", "wall_time_ms": "", "eig_decomp_count": "", "error": ""}
    if param is not None:
        row["parameter"] = f"{param:g}"
    try:
        emb = read_embedding_set(emb_path)
        rec = emb.spans[0].recording_id or os.path.basename(emb_path)
        row["recording_id"] = rec
        cfg = RunConfig(
            method=method,
            retention_p=param if method == "sc-pna" else None,
            alpha=param if method == "csc" else None,
            k_max=args.k_max,
            fixed_k=args.fixed_k,
            rng_seed=args.seed,
        )
        start = time.perf_counter()
        result = run_pipeline(emb, cfg, asc_grid=args.asc_grid)
        elapsed_ms = (time.perf_counter() - start) * 1000.0
        hyp = labels_to_timeline(result.labels, emb.spans)
        tag = _param_tag(method, param)
        if method == "asc" and result.param is not None:
            row["parameter"] = f"{result.param:g}"
        write_rttm(hyp, os.path.join(args.out, f"{rec}__{method}{tag}.rttm"))
        row["k_hat"] = str(result.k_hat)
        row["eig_decomp_count"] = str(result.eig_decomp_count)
        if not args.no_timing:
            row["wall_time_ms"] = f"{elapsed_ms:.3f}"
        if ref_path is not None:
            ref_timelines = [tl for tl in read_rttm(ref_path) if tl.recording_id == rec]
            if not ref_timelines:
                raise StructuralError(f"{ref_path}: no reference for recording {rec!r}")
            b = compute_der(ref_timelines[0], hyp, collar=args.collar)
            row["k_true"] = str(ref_timelines[0].num_speakers)
            row["der"] = repr(b.der)
            row["missed"] = repr(b.missed)
            row["false_alarm"] = repr(b.false_alarm)
            row["speaker_error"] = repr(b.speaker_error)
    except ScdiarError as exc:
        row["error"] = str(exc).replace("\n", " ")
    return row


def cmd_bench(args) -> int:
    entries = _read_manifest(args.manifest)
    for method in args.methods:
        if method not in ("csc", "asc", "eer-delta", "sc-pna"):
            raise ConfigError(f"unknown method {method!r} in --methods")
    os.makedirs(args.out, exist_ok=True)

    cells = []
    for emb_path, ref_path in entries:
        for method in args.methods:
            if method == "sc-pna":
                params = args.p_grid
            elif method == "csc":
                params = args.alpha_grid
            else:
                params = (None,)
            for param in params:
                cells.append((emb_path, ref_path, method, param))

    jobs = max(1, args.jobs)
    if jobs == 1:
        rows = [_bench_cell(args, *cell) for cell in cells]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_bench_cell, args, *cell) for cell in cells]
            rows = [f.result() for f in futures]

    report_path = os.path.join(args.out, "benchmark.csv")
    fields = ["recording_id", "method", "parameter", "k_hat", "k_true", "der",
              "missed", "false_alarm", "speaker_error", "wall_time_ms",
              "eig_decomp_count", "error"]
    with open(report_path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
    failures = sum(1 for r in rows if r["error"])
    print(f"wrote {report_path} ({len(rows)} rows, {failures} failed cells)")
    return 0


def cmd_synth(args) -> int:
    counts = args.segments
    if len(counts) == 1:
        counts = counts * args.speakers
    spec = SynthSpec(
        num_speakers=args.speakers,
        segments_per_speaker=counts,
        dim=args.dim,
        separation=args.separation,
        noise_sigma=args.noise_sigma,
        seed=args.seed,
        turn_model=args.turn_model,
        recording_id=args.recording_id,
    )
    emb, reference, _ = generate(spec)
    os.makedirs(args.out, exist_ok=True)
    emb_path = os.path.join(args.out, f"{spec.recording_id}.csv")
    ref_path = os.path.join(args.out, f"{spec.recording_id}.ref.rttm")
    write_embedding_set(emb, emb_path)
    write_rttm(reference, ref_path)
    print(f"{spec.recording_id}: {emb.n} segments, {spec.num_speakers} speakers "
          f"-> {emb_path}, {ref_path}")
    return 0


def main(argv=None) -> int:
    try:
        parser = build_parser()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ScdiarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


def entrypoint() -> None:
    sys.exit(main())
