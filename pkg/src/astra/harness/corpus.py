"""Synthetic detection corpora: randomized card hands rendered to traces
with per-frame ground truth, optionally jittered the way live capture is."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from astra.frames import Frame, SequenceSource, record_trace
from astra.harness.simgames import CARD_COLORS, CARD_RANKS, CardSim

JITTER_PX = 2
JITTER_BRIGHTNESS = 0.03


@dataclass
class Corpus:
    trace_dir: Path
    bundle_dir: Path
    truth_path: Path
    frame_count: int


def gen_card_corpus(n: int, seed: int, out_dir: str | Path,
                    jitter: bool = True) -> Corpus:
    """Render ``n`` frames of randomized dealt hands plus ground truth.

    Jitter, when on, offsets each card by up to +-2 px and scales its
    brightness by up to +-3%, mirroring capture noise.
    """
    if n < 1:
        raise ValueError("corpus needs at least one frame")
    out = Path(out_dir)
    sim = CardSim(seed)
    bundle_dir = out / "bundle"
    sim.make_bundle(bundle_dir)

    rng = np.random.default_rng(seed)
    deck = [(c, r) for c in CARD_COLORS for r in CARD_RANKS]
    frames: list[Frame] = []
    truth_records = []
    for i in range(n):
        hand_size = int(rng.integers(5, 9))
        picks = rng.choice(len(deck), size=hand_size, replace=True)
        hand = [deck[p] for p in picks]
        brightness = 1.0 + (float(rng.uniform(-1, 1)) * JITTER_BRIGHTNESS if jitter else 0.0)
        # Hand-only frames: the replay sweep covers the hand strip, so the
        # truth must not list instances outside it.
        pixels, truth = sim.game_frame(hand=hand, jitter_rng=rng if jitter else None,
                                       brightness=brightness, include_discard=False)
        frames.append(Frame(pixels=pixels, t_ms=i * 100))
        truth_records.append({
            "i": i + 1,
            "items": [{"name": name, "box": list(box)} for name, box in truth.items],
        })

    trace_dir = out / "trace"
    record_trace(SequenceSource(frames), [], trace_dir)
    truth_path = out / "truth.json"
    truth_path.write_text(json.dumps(truth_records, indent=1), encoding="utf-8")
    return Corpus(trace_dir=trace_dir, bundle_dir=bundle_dir, truth_path=truth_path,
                  frame_count=n)


def load_truth(truth_path: str | Path) -> list[list[dict]]:
    records = json.loads(Path(truth_path).read_text(encoding="utf-8"))
    return [record["items"] for record in records]
