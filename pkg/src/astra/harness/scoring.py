"""Scorers and audits recreating the desk-scale evaluations: detection
accuracy against ground truth, navigation coverage by exhaustive arrow-key
traversal, and action success against the simulator's hit ledger."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from astra.clients import ClientSet
from astra.config import GameConfig
from astra.detect import ItemDetection, match_templates
from astra.frames import Frame, InputEvent, TraceSource
from astra.geometry import denormalize, pixel_iou
from astra.harness.simgames import FrameTruth, SimBackend, make_sim, sim_clients
from astra.orchestrator import Session

MATCH_IOU = 0.5


class MisalignedCorpus(ValueError):
    pass


class UnknownTarget(KeyError):
    pass


@dataclass
class Metrics:
    detection_correct: int = 0
    detection_total: int = 0
    false_positives: int = 0
    nav_visited: int = 0
    nav_total: int = 0
    action_hits: int = 0
    action_attempts: int = 0
    notes: list[str] = field(default_factory=list)

    @property
    def detection_accuracy(self) -> float:
        if self.detection_total <= 0:
            raise ValueError("no ground-truth detections to score")
        return self.detection_correct / self.detection_total

    @property
    def navigation_coverage(self) -> float:
        if self.nav_total <= 0:
            raise ValueError("no interactive elements to cover")
        return self.nav_visited / self.nav_total

    @property
    def action_success(self) -> float:
        if self.action_attempts <= 0:
            raise ValueError("no activations attempted")
        return self.action_hits / self.action_attempts

    def merge(self, other: "Metrics") -> "Metrics":
        return Metrics(
            detection_correct=self.detection_correct + other.detection_correct,
            detection_total=self.detection_total + other.detection_total,
            false_positives=self.false_positives + other.false_positives,
            nav_visited=self.nav_visited + other.nav_visited,
            nav_total=self.nav_total + other.nav_total,
            action_hits=self.action_hits + other.action_hits,
            action_attempts=self.action_attempts + other.action_attempts,
            notes=self.notes + other.notes,
        )

    def to_dict(self) -> dict:
        out: dict = {
            "detection": {"correct": self.detection_correct,
                          "total": self.detection_total,
                          "false_positives": self.false_positives},
            "navigation": {"visited": self.nav_visited, "total": self.nav_total},
            "actions": {"hits": self.action_hits, "attempts": self.action_attempts},
            "notes": self.notes,
        }
        if self.detection_total:
            out["detection"]["accuracy"] = self.detection_accuracy
        if self.nav_total:
            out["navigation"]["coverage"] = self.navigation_coverage
        if self.action_attempts:
            out["actions"]["success"] = self.action_success
        return out

    def table(self) -> str:
        rows = []
        if self.detection_total:
            rows.append(("detection accuracy",
                         f"{self.detection_accuracy:.4f} "
                         f"({self.detection_correct}/{self.detection_total})"))
            rows.append(("false positives", str(self.false_positives)))
        if self.nav_total:
            rows.append(("navigation coverage",
                         f"{self.navigation_coverage:.4f} "
                         f"({self.nav_visited}/{self.nav_total})"))
        if self.action_attempts:
            rows.append(("action success",
                         f"{self.action_success:.4f} "
                         f"({self.action_hits}/{self.action_attempts})"))
        for note in self.notes:
            rows.append(("note", note))
        width = max((len(k) for k, _ in rows), default=10)
        return "\n".join(f"{k.ljust(width)}  {v}" for k, v in rows)


def score_detections(predicted: list[list[ItemDetection]], truth: list[list[dict]],
                     frame_size: tuple[int, int]) -> Metrics:
    """A prediction is correct iff its template name matches and its box
    overlaps the truth box with IoU >= 0.5."""
    if len(predicted) != len(truth):
        raise MisalignedCorpus(f"{len(predicted)} prediction frames vs "
                               f"{len(truth)} truth frames")
    width, height = frame_size
    metrics = Metrics()
    for frame_preds, frame_truth in zip(predicted, truth):
        metrics.detection_total += len(frame_truth)
        boxes = [(p, denormalize(p.block, width, height)) for p in frame_preds]
        used = [False] * len(boxes)
        for entry in frame_truth:
            best_index, best_iou = -1, MATCH_IOU
            for i, (pred, box) in enumerate(boxes):
                if used[i] or pred.template_name != entry["name"]:
                    continue
                overlap = pixel_iou(box, tuple(entry["box"]))
                if overlap >= best_iou:
                    best_index, best_iou = i, overlap
            if best_index >= 0:
                used[best_index] = True
                metrics.detection_correct += 1
        metrics.false_positives += used.count(False)
    return metrics


def replay_detections(trace_dir: str | Path, config: GameConfig,
                      ) -> list[list[ItemDetection]]:
    """Run the template-matching pass over every trace frame."""
    predictions = []
    for frame in TraceSource(trace_dir):
        blocks = config.change.blocks or (None,)
        frame_preds: list[ItemDetection] = []
        for block in blocks:
            frame_preds.extend(match_templates(frame, config.templates,
                                               tau=config.detect.tau, search=block,
                                               nms_iou=config.detect.nms_iou))
        predictions.append(frame_preds)
    return predictions


# ---------------------------------------------------------------------------
# Session-driven audits


def _warm_session(config: GameConfig, mode: str, scene_pixels, clients: ClientSet,
                  backend: SimBackend, repeats: int | None = None) -> Session:
    """Feed the scene frame until detections confirm and the grid settles."""
    session = Session(config, "blind", mode, clients, backend)
    repeats = repeats if repeats is not None else config.detect.debounce_n + 2
    for i in range(repeats):
        session.process_frame(Frame(pixels=scene_pixels.copy(), t_ms=i * 100))
    return session


def _press(session: Session, key: str) -> None:
    session.handle_input(InputEvent(t_ms=session.log.records[-1].t_ms + 1
                                    if session.log.records else 0, kind="key", key=key))


def traverse_grid(session: Session) -> set[tuple]:
    """Exhaustive arrow-key traversal; returns identities of visited elements."""
    grid = session.state.grid
    visited: set[tuple] = set()
    if grid is None:
        return visited
    for _ in range(grid.row_count):
        _press(session, "up")
    widest = max(grid.row_width(r + 1) for r in range(grid.row_count))
    for _ in range(widest):
        _press(session, "left")
    for row in range(1, grid.row_count + 1):
        for _ in range(widest):
            _press(session, "left")
        element = grid.element_at(session.state.cursor)
        visited.add((element.content, element.block))
        for _ in range(grid.row_width(row) - 1):
            _press(session, "right")
            element = grid.element_at(session.state.cursor)
            visited.add((element.content, element.block))
        if row < grid.row_count:
            _press(session, "down")
    return visited


def run_navigation_audit(game: str, scene: str, config: GameConfig, mode: str,
                         clients: ClientSet | None = None) -> Metrics:
    """Coverage of ground-truth interactive elements by arrow-key traversal."""
    sim = make_sim(game)
    pixels, truth = sim.scene(scene)
    metrics = Metrics(nav_total=len(truth.interactive))
    if not truth.interactive:
        metrics.notes.append(f"{game}/{scene}: display-only scene, audit skipped")
        return metrics
    clients = clients if clients is not None else sim_clients()
    backend = SimBackend(sim.width, sim.height)
    session = _warm_session(config, mode, pixels, clients, backend)
    visited = traverse_grid(session)
    visited_contents = {content for content, _ in visited}
    metrics.nav_visited = sum(1 for label in truth.interactive
                              if label in visited_contents)
    return metrics


def _navigate_to(session: Session, content: str) -> bool:
    grid = session.state.grid
    if grid is None:
        return False
    target = grid.find(content)
    if target is None:
        return False
    guard = 0
    while session.state.cursor.row != target.row and guard < 200:
        _press(session, "up" if session.state.cursor.row > target.row else "down")
        guard += 1
    while session.state.cursor.col != target.col and guard < 400:
        _press(session, "left" if session.state.cursor.col > target.col else "right")
        guard += 1
    focused = grid.element_at(session.state.cursor)
    return focused.content == content


def run_action_audit(game: str, scene: str, config: GameConfig, targets: list[str],
                     mode: str = "full", clients: ClientSet | None = None) -> Metrics:
    """Navigate to each target and activate it; a hit is a click recorded
    inside the ground-truth rect."""
    sim = make_sim(game)
    pixels, truth = sim.scene(scene)
    for target in targets:
        if target not in truth.interactive:
            raise UnknownTarget(f"{target!r} not in {game}/{scene} ground truth")
    metrics = Metrics()
    clients = clients if clients is not None else sim_clients()
    backend = SimBackend(sim.width, sim.height)
    session = _warm_session(config, mode, pixels, clients, backend)
    for target in targets:
        metrics.action_attempts += 1
        if not _navigate_to(session, target):
            metrics.notes.append(f"{target}: unreachable")
            continue
        clicks_before = len(backend.clicks)
        _press(session, "space")
        if len(backend.clicks) == clicks_before:
            metrics.notes.append(f"{target}: no click registered")
            continue
        x, y = backend.clicks[-1]
        x1, y1, x2, y2 = truth.interactive[target]
        if x1 <= x < x2 and y1 <= y < y2:
            metrics.action_hits += 1
        else:
            metrics.notes.append(f"{target}: click ({x},{y}) outside rect")
    return metrics


def run_lag_audit(config: GameConfig, lag_frames: int = 3,
                  clients: ClientSet | None = None) -> Metrics:
    """Moving-target scenario: the session stops seeing updates ``lag_frames``
    before the click lands, so stale coordinates miss the true rect."""
    sim = make_sim("merge")
    frames, truths = sim.moving_frames()
    clients = clients if clients is not None else sim_clients()
    backend = SimBackend(sim.width, sim.height)
    session = Session(config, "blind", "full", clients, backend)
    seen = len(frames) - lag_frames
    for frame in frames[:seen]:
        session.process_frame(frame)
    metrics = Metrics(action_attempts=1)
    if not _navigate_to(session, "Lemon"):
        metrics.notes.append("moving lemon never confirmed into the grid")
        return metrics
    _press(session, "space")
    if not backend.clicks:
        metrics.notes.append("no click registered")
        return metrics
    x, y = backend.clicks[-1]
    true_rect = dict(truths[-1].items)["fruit_lemon"]
    if true_rect[0] <= x < true_rect[2] and true_rect[1] <= y < true_rect[3]:
        metrics.action_hits += 1
    else:
        metrics.notes.append(
            f"stale click ({x},{y}) missed moving target at {true_rect}")
    return metrics


# ---------------------------------------------------------------------------
# Scenario scripts


def run_scenario(spec: dict, bundle_root: str | Path) -> dict:
    """Execute one scenario file: build the sim + bundle, run the session
    over the sim timeline, then perform the scripted steps."""
    game = spec["game"]
    sim = make_sim(game, spec.get("seed"))
    bundle_dir = Path(bundle_root) / f"{game}_bundle"
    config = sim.make_bundle(bundle_dir)
    mode = spec.get("mode", "full")
    clients = sim_clients()
    backend = SimBackend(sim.width, sim.height)
    session = Session(config, spec.get("profile", "blind"), mode, clients, backend)
    frames, truths = sim.timeline()
    for frame in frames:
        session.process_frame(frame)
    final_truth: FrameTruth = truths[-1]

    results = []
    for step in spec.get("steps", []):
        kind = step["kind"]
        ok = False
        detail = ""
        if kind == "navigate":
            ok = _navigate_to(session, step["target"])
            detail = step["target"]
        elif kind == "activate":
            target = step["target"]
            detail = target
            if _navigate_to(session, target):
                before = len(backend.clicks)
                _press(session, "space")
                if len(backend.clicks) > before and target in final_truth.interactive:
                    x, y = backend.clicks[-1]
                    x1, y1, x2, y2 = final_truth.interactive[target]
                    ok = x1 <= x < x2 and y1 <= y < y2
        elif kind == "hotkey":
            detail = step["key"]
            before = len(session.log.records)
            _press(session, step["key"])
            ok = len(session.log.records) > before
        elif kind == "ask":
            detail = step["utterance"]
            before = len(session.log.of_kind("speech"))
            session.handle_input(InputEvent(
                t_ms=frames[-1].t_ms + 500, kind="utterance",
                audio=step["utterance"].encode("utf-8")))
            ok = len(session.log.of_kind("speech")) > before
        else:
            detail = f"unknown step kind {kind!r}"
        results.append({"kind": kind, "detail": detail, "ok": ok})

    return {
        "game": game,
        "mode": mode,
        "steps": results,
        "completed": sum(1 for r in results if r["ok"]),
        "total": len(results),
        "speech": session.log.speech_texts(),
    }


def save_report(report: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report, indent=2, ensure_ascii=False),
                          encoding="utf-8")
