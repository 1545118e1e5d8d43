"""Deterministic simulators, corpora, and scorers for offline evaluation."""

from astra.harness.corpus import Corpus, gen_card_corpus, load_truth
from astra.harness.scoring import (
    Metrics,
    MisalignedCorpus,
    UnknownTarget,
    replay_detections,
    run_action_audit,
    run_lag_audit,
    run_navigation_audit,
    run_scenario,
    score_detections,
)
from astra.harness.simgames import (
    CardSim,
    DialogSim,
    MergeSim,
    PixelFontOcrTransport,
    SimBackend,
    make_sim,
    sim_clients,
)

__all__ = [
    "Corpus",
    "gen_card_corpus",
    "load_truth",
    "Metrics",
    "MisalignedCorpus",
    "UnknownTarget",
    "replay_detections",
    "run_action_audit",
    "run_lag_audit",
    "run_navigation_audit",
    "run_scenario",
    "score_detections",
    "CardSim",
    "DialogSim",
    "MergeSim",
    "PixelFontOcrTransport",
    "SimBackend",
    "make_sim",
    "sim_clients",
]
