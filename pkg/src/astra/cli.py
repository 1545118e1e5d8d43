"""Command-line entry point.

Subcommands: run, validate, replay, audit, gen-corpus, serve-studio.
Exit codes: 0 success, 1 runtime failure, 2 usage error, 3 validation
findings. Service endpoints come from ASTRA_OCR_URL / ASTRA_VLM_URL /
ASTRA_ASR_URL / ASTRA_TTS_URL; unset services use the built-in mocks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from astra import clients as clients_mod
from astra.clients import (
    AsrClient,
    ClientSet,
    HttpTransport,
    MockAsrTransport,
    MockVlmTransport,
    OcrClient,
    ServiceEndpoint,
    TokenLedger,
    TranscriptSpeaker,
    TtsClient,
    VlmClient,
)
from astra.config import load_game_config, validate_bundle
from astra.frames import SequenceSource, TraceSource, load_input_events
from astra.harness import (
    gen_card_corpus,
    load_truth,
    make_sim,
    replay_detections,
    run_scenario,
    score_detections,
    sim_clients,
    SimBackend,
)
from astra.orchestrator import MODES, run_session

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_USAGE = 2
EXIT_FINDINGS = 3


def _env_transport(var: str):
    url = os.environ.get(var)
    if not url:
        return None
    return HttpTransport(ServiceEndpoint(base_url=url))


def build_clients(speech_log: Path | None) -> ClientSet:
    """Env-configured clients; every unset service is a deterministic mock."""
    ledger = TokenLedger()
    ocr_t = _env_transport("ASTRA_OCR_URL")
    vlm_t = _env_transport("ASTRA_VLM_URL")
    asr_t = _env_transport("ASTRA_ASR_URL")
    tts_t = _env_transport("ASTRA_TTS_URL")
    speaker = TtsClient(tts_t, ledger) if tts_t else TranscriptSpeaker(speech_log)
    return ClientSet(
        ocr=OcrClient(ocr_t or clients_mod.MockOcrTransport(), ledger),
        vlm=VlmClient(vlm_t or MockVlmTransport(), ledger),
        asr=AsrClient(asr_t or MockAsrTransport(), ledger=ledger),
        speaker=speaker,
        ledger=ledger,
    )


def _cmd_validate(args) -> int:
    report = validate_bundle(args.bundle)
    for finding in report.findings:
        print(f"{finding.severity.upper()} {finding.code} at {finding.pointer}: "
              f"{finding.message}")
    print(f"{len(report.errors)} errors, {len(report.warnings)} warnings")
    return EXIT_FINDINGS if report.errors else EXIT_OK


def _cmd_run(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = args.source
    inputs = []
    backend = None
    if spec.startswith("trace:"):
        source = TraceSource(spec[len("trace:"):])
        inputs = load_input_events(spec[len("trace:"):])
        clients = build_clients(out_dir / "speech.jsonl")
    elif spec.startswith("sim:"):
        sim = make_sim(spec[len("sim:"):])
        frames, _ = sim.timeline()
        source = SequenceSource(frames)
        backend = SimBackend(sim.width, sim.height)
        clients = sim_clients(out_dir / "speech.jsonl")
    elif spec == "live":
        print("no live capture adapter is wired into this build; "
              "use trace:<dir> or sim:<game>", file=sys.stderr)
        return EXIT_RUNTIME
    else:
        print(f"unknown source {spec!r}", file=sys.stderr)
        return EXIT_USAGE
    config = load_game_config(args.bundle)
    session_log = run_session(config, args.profile, args.mode, source, clients,
                              backend=backend, inputs=inputs, out_dir=out_dir)
    print(f"{len(session_log.records)} log records -> {out_dir / 'session.jsonl'}")
    return EXIT_OK


def _cmd_replay(args) -> int:
    config = load_game_config(args.bundle)
    predictions = replay_detections(args.trace, config)
    report: dict = {"frames": len(predictions),
                    "detections": sum(len(p) for p in predictions)}
    truth_path = _find_truth(Path(args.trace))
    if truth_path is not None:
        truth = load_truth(truth_path)
        first = TraceSource(args.trace).next_frame()
        metrics = score_detections(predictions, truth,
                                   (first.width, first.height))
        report["metrics"] = metrics.to_dict()
        print(metrics.table())
    else:
        print(f"{report['frames']} frames, {report['detections']} detections "
              "(no truth.json found; skipping scoring)")
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2), encoding="utf-8")
    return EXIT_OK


def _find_truth(trace_dir: Path) -> Path | None:
    for candidate in (trace_dir / "truth.json", trace_dir.parent / "truth.json"):
        if candidate.is_file():
            return candidate
    return None


def _cmd_audit(args) -> int:
    spec = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    with tempfile.TemporaryDirectory() as tmp:
        report = run_scenario(spec, tmp)
    print(f"scenario {spec.get('game')} mode={report['mode']}: "
          f"{report['completed']}/{report['total']} steps completed")
    for step in report["steps"]:
        print(f"  [{'ok' if step['ok'] else 'FAIL'}] {step['kind']} {step['detail']}")
    if args.report:
        Path(args.report).write_text(json.dumps(report, indent=2, ensure_ascii=False),
                                     encoding="utf-8")
    return EXIT_OK if report["completed"] == report["total"] else EXIT_RUNTIME


def _cmd_gen_corpus(args) -> int:
    corpus = gen_card_corpus(args.n, args.seed, args.out, jitter=args.jitter == "on")
    print(f"{corpus.frame_count} frames -> {corpus.trace_dir}")
    print(f"bundle -> {corpus.bundle_dir}")
    print(f"truth -> {corpus.truth_path}")
    return EXIT_OK


def _cmd_serve_studio(args) -> int:
    from astra.studio_server import serve_studio

    serve_studio(port=args.port, studio_root=args.studio_root,
                 export_dir=args.export_dir)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="astra", description="Accessibility runtime for 2D non-twitch games")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a session over a frame source")
    p_run.add_argument("--bundle", required=True)
    p_run.add_argument("--profile", choices=["blind", "low_vision"], default="blind")
    p_run.add_argument("--mode", choices=list(MODES), default="full")
    p_run.add_argument("--source", required=True,
                       help="live | trace:<dir> | sim:<game>")
    p_run.add_argument("--out-dir", default=".")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="validate a config bundle")
    p_val.add_argument("--bundle", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_rep = sub.add_parser("replay", help="replay a trace through detection")
    p_rep.add_argument("--trace", required=True)
    p_rep.add_argument("--bundle", required=True)
    p_rep.add_argument("--report", default=None)
    p_rep.set_defaults(func=_cmd_replay)

    p_aud = sub.add_parser("audit", help="run a scenario script")
    p_aud.add_argument("--scenario", required=True)
    p_aud.add_argument("--report", default=None)
    p_aud.set_defaults(func=_cmd_audit)

    p_gen = sub.add_parser("gen-corpus", help="generate a detection corpus")
    p_gen.add_argument("--game", choices=["card"], default="card")
    p_gen.add_argument("--n", type=int, default=119)
    p_gen.add_argument("--seed", type=int, default=7)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--jitter", choices=["on", "off"], default="on")
    p_gen.set_defaults(func=_cmd_gen_corpus)

    p_srv = sub.add_parser("serve-studio", help="host the annotation studio")
    p_srv.add_argument("--port", type=int, default=8777)
    p_srv.add_argument("--studio-root", default=None)
    p_srv.add_argument("--export-dir", default="studio_exports")
    p_srv.set_defaults(func=_cmd_serve_studio)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # surfaced as a runtime failure with context
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
