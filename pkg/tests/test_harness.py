import hashlib
import json

import numpy as np
import pytest

from astra.detect import ItemDetection
from astra.frames import trace_digest
from astra.geometry import NormalizedBlock
from astra.harness import (
    CardSim,
    DialogSim,
    MergeSim,
    MisalignedCorpus,
    UnknownTarget,
    gen_card_corpus,
    load_truth,
    replay_detections,
    run_action_audit,
    run_lag_audit,
    run_navigation_audit,
    run_scenario,
    score_detections,
)
from astra.harness import pixelfont


class TestPixelFont:
    def test_every_glyph_round_trips(self):
        text = "ABCDEFGHIJKLMNOPQRSTUVWXYZ 0123456789 .,!?:-'/"
        canvas = np.zeros((60, 2000, 3), dtype=np.uint8)
        canvas[:] = (40, 40, 40)
        pixelfont.draw_text_box(canvas, 10, 10, text, scale=2)
        items = pixelfont.decode_text_boxes(canvas)
        assert len(items) == 1
        assert items[0]["text"] == text

    def test_boxes_carry_pixel_coords(self):
        canvas = np.zeros((100, 300, 3), dtype=np.uint8)
        rect = pixelfont.draw_text_box(canvas, 17, 23, "HI", scale=3)
        items = pixelfont.decode_text_boxes(canvas)
        assert items[0]["box"] == list(rect)
        assert rect[0] == 17 and rect[1] == 23

    def test_plain_art_invisible(self):
        canvas = np.zeros((50, 50, 3), dtype=np.uint8)
        pixelfont.draw_text(canvas, 5, 5, "SECRET", 1, (255, 255, 255))
        assert pixelfont.decode_text_boxes(canvas) == []


class TestSimDeterminism:
    @pytest.mark.parametrize("sim_cls,seed", [(CardSim, 7), (MergeSim, 11),
                                              (DialogSim, 3)])
    def test_frame_sequence_hash_reproducible(self, sim_cls, seed):
        def digest(sim):
            h = hashlib.sha256()
            frames, truths = sim.timeline()
            for frame in frames:
                h.update(frame.pixels.tobytes())
            h.update(repr([(t.state, t.items, t.texts) for t in truths]).encode())
            return h.hexdigest()

        assert digest(sim_cls(seed)) == digest(sim_cls(seed))

    def test_corpus_same_seed_identical_trace(self, tmp_path):
        first = gen_card_corpus(6, seed=21, out_dir=tmp_path / "a")
        second = gen_card_corpus(6, seed=21, out_dir=tmp_path / "b")
        assert trace_digest(first.trace_dir) == trace_digest(second.trace_dir)
        assert (first.truth_path.read_text() == second.truth_path.read_text())

    def test_corpus_frame_count(self, tmp_path):
        corpus = gen_card_corpus(1, seed=3, out_dir=tmp_path / "c")
        assert corpus.frame_count == 1
        assert len(load_truth(corpus.truth_path)) == 1

    def test_corpus_rejects_zero(self, tmp_path):
        with pytest.raises(ValueError):
            gen_card_corpus(0, seed=3, out_dir=tmp_path / "c")


def det(name, box, frame_size=(960, 540), score=0.95):
    width, height = frame_size
    return ItemDetection(template_name=name, score=score, timestamp=0,
                         block=NormalizedBlock(box[0] / width, box[1] / height,
                                               box[2] / width, box[3] / height))


class TestScoreDetections:
    TRUTH = [[{"name": "card_red_5", "box": [100, 100, 156, 180]},
              {"name": "card_blue_3", "box": [300, 100, 356, 180]}]]

    def test_perfect(self):
        preds = [[det("card_red_5", (100, 100, 156, 180)),
                  det("card_blue_3", (300, 100, 356, 180))]]
        metrics = score_detections(preds, self.TRUTH, (960, 540))
        assert metrics.detection_accuracy == 1.0
        assert metrics.false_positives == 0

    def test_one_mislabel_counts_against_accuracy(self):
        preds = [[det("card_red_5", (100, 100, 156, 180)),
                  det("card_blue_8", (300, 100, 356, 180))]]  # wrong rank
        metrics = score_detections(preds, self.TRUTH, (960, 540))
        assert metrics.detection_correct == 1
        assert metrics.detection_total == 2
        assert metrics.false_positives == 1

    def test_118_of_119_mirrors_paper_scale(self):
        truth = [[{"name": "c", "box": [10, 10, 20, 20]}] for _ in range(119)]
        preds = [[det("c", (10, 10, 20, 20), (100, 100))] for _ in range(119)]
        preds[57] = [det("wrong", (10, 10, 20, 20), (100, 100))]
        metrics = score_detections(preds, truth, (100, 100))
        assert metrics.detection_correct == 118
        assert metrics.detection_accuracy == pytest.approx(118 / 119)

    def test_spurious_box_is_fp_only(self):
        preds = [[det("card_red_5", (100, 100, 156, 180)),
                  det("card_blue_3", (300, 100, 356, 180)),
                  det("card_red_5", (700, 300, 756, 380))]]
        metrics = score_detections(preds, self.TRUTH, (960, 540))
        assert metrics.detection_accuracy == 1.0
        assert metrics.false_positives == 1

    def test_permutation_symmetric(self):
        preds = [[det("card_blue_3", (300, 100, 356, 180)),
                  det("card_red_5", (100, 100, 156, 180))]]
        a = score_detections(preds, self.TRUTH, (960, 540))
        b = score_detections([list(reversed(preds[0]))], self.TRUTH, (960, 540))
        assert (a.detection_correct, a.false_positives) == (
            b.detection_correct, b.false_positives)

    def test_misaligned_rejected(self):
        with pytest.raises(MisalignedCorpus):
            score_detections([[]], self.TRUTH + self.TRUTH, (960, 540))


class TestReplayPipeline:
    def test_clean_corpus_is_perfect(self, tmp_path):
        corpus = gen_card_corpus(8, seed=5, out_dir=tmp_path, jitter=False)
        from astra.config import load_game_config

        config = load_game_config(corpus.bundle_dir)
        preds = replay_detections(corpus.trace_dir, config)
        metrics = score_detections(preds, load_truth(corpus.truth_path), (960, 540))
        assert metrics.detection_accuracy == 1.0
        assert metrics.false_positives == 0


class TestNavigationAudit:
    def test_homepage_full_mode_coverage(self, card_bundle):
        _, config, _ = card_bundle
        metrics = run_navigation_audit("card", "homepage", config, "full")
        assert metrics.nav_total == 4
        assert metrics.navigation_coverage == 1.0

    def test_homepage_baseline_zero_coverage(self, card_bundle):
        _, config, _ = card_bundle
        metrics = run_navigation_audit("card", "homepage", config, "baseline_ocr")
        assert metrics.nav_total == 4
        assert metrics.nav_visited == 0

    def test_game_scene_includes_hand(self, card_bundle):
        _, config, _ = card_bundle
        metrics = run_navigation_audit("card", "game", config, "full")
        assert metrics.nav_total == 9  # 7 hand cards + 2 buttons
        assert metrics.navigation_coverage == 1.0


class TestActionAudit:
    def test_homepage_targets_all_hit(self, card_bundle):
        _, config, _ = card_bundle
        metrics = run_action_audit("card", "homepage", config,
                                   ["LOCAL MODE", "ONLINE MODE", "SETTINGS", "HELP"])
        assert metrics.action_attempts == 4
        assert metrics.action_success == 1.0

    def test_unknown_target_rejected(self, card_bundle):
        _, config, _ = card_bundle
        with pytest.raises(UnknownTarget):
            run_action_audit("card", "homepage", config, ["NOPE"])

    def test_lag_scenario_misses(self, tmp_path):
        sim = MergeSim(11)
        config = sim.make_bundle(tmp_path / "merge_bundle")
        metrics = run_lag_audit(config, lag_frames=3)
        assert metrics.action_attempts == 1
        assert metrics.action_hits == 0
        assert any("missed moving target" in note for note in metrics.notes)


class TestScenarios:
    @pytest.mark.parametrize("name,expected_steps", [
        ("uno_full", 6), ("suika_full", 4), ("novel_full", 5)])
    def test_full_mode_scenarios_complete(self, tmp_path, name, expected_steps):
        from pathlib import Path

        spec = json.loads((Path(__file__).resolve().parents[1] / "scenarios" /
                           f"{name}.json").read_text())
        report = run_scenario(spec, tmp_path)
        assert report["total"] == expected_steps
        assert report["completed"] == expected_steps
