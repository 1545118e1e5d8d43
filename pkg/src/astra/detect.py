"""Detect agent: cue-based state classification, template matching for
items, OCR integration, and debouncing of raw sightings into events.

All built-in scoring is zero-mean normalized cross-correlation on luma
grayscale; constant regions score 0, so scores are invariant under
positive affine brightness changes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy.ndimage import maximum_filter

from astra import kernels
from astra.config import VisualCue
from astra.frames import Frame, crop
from astra.geometry import NormalizedBlock, denormalize, pixel_iou

UNKNOWN_STATE = "unknown"


class TemplateTooLarge(ValueError):
    pass


@dataclass(frozen=True)
class StateClassification:
    state_id: str
    score: float
    timestamp: int


@dataclass(frozen=True)
class ItemDetection:
    template_name: str
    block: NormalizedBlock
    score: float
    timestamp: int


@dataclass(frozen=True)
class TextDetection:
    text: str
    block: NormalizedBlock
    confidence: float
    timestamp: int

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError("text detections must carry non-empty text")


@dataclass(frozen=True)
class DetectionEvent:
    kind: str  # state_changed | item_appeared | item_vanished | text_changed
    payload: object
    first_seen: int
    confirmed_at: int


def _as_gray(image: Frame | np.ndarray) -> np.ndarray:
    pixels = image.pixels if isinstance(image, Frame) else image
    return kernels.gray(pixels)


def ncc_score(image: Frame | np.ndarray, template: Frame | np.ndarray,
              at: tuple[int, int] = (0, 0)) -> float:
    """Zero-mean NCC of ``template`` against ``image`` at pixel offset ``at``."""
    img = _as_gray(image)
    tpl = _as_gray(template)
    x, y = at
    if y + tpl.shape[0] > img.shape[0] or x + tpl.shape[1] > img.shape[1] or x < 0 or y < 0:
        raise TemplateTooLarge(
            f"template {tpl.shape[1]}x{tpl.shape[0]} does not fit in "
            f"{img.shape[1]}x{img.shape[0]} at offset {at}")
    return float(kernels.ncc_at(img, tpl, x, y))


def match_templates(frame: Frame, templates: Mapping[str, np.ndarray], tau: float = 0.85,
                    search: NormalizedBlock | None = None,
                    nms_iou: float = 0.3) -> list[ItemDetection]:
    """All template instances scoring >= tau, after greedy NMS, best first."""
    if not (0.0 < tau <= 1.0):
        raise ValueError(f"tau must be in (0, 1], got {tau}")
    width, height = frame.width, frame.height
    if search is not None:
        offset_left, offset_top, right, bottom = denormalize(search, width, height)
        region = frame.pixels[offset_top:bottom, offset_left:right]
    else:
        offset_left = offset_top = 0
        region = frame.pixels
    img = kernels.gray(region)

    usable = [(name, kernels.gray(template)) for name, template in templates.items()
              if template.shape[0] <= img.shape[0] and template.shape[1] <= img.shape[1]]
    score_maps = kernels.ncc_map_many(img, [tpl for _, tpl in usable]) if usable else []

    candidates: list[tuple[float, str, tuple[int, int, int, int]]] = []
    for (name, tpl), scores in zip(usable, score_maps):
        th, tw = tpl.shape
        scores = np.asarray(scores)
        # Peaks only: a strong match produces a plateau of near-threshold
        # scores around it that NMS alone would not always kill.
        peaks = (scores >= tau) & (scores >= maximum_filter(scores, size=3))
        for y, x in zip(*np.nonzero(peaks)):
            rect = (offset_left + int(x), offset_top + int(y),
                    offset_left + int(x) + tw, offset_top + int(y) + th)
            candidates.append((float(scores[y, x]), name, rect))

    candidates.sort(key=lambda c: -c[0])
    kept: list[tuple[float, str, tuple[int, int, int, int]]] = []
    for cand in candidates:
        if all(pixel_iou(cand[2], k[2]) <= nms_iou for k in kept):
            kept.append(cand)

    return [
        ItemDetection(
            template_name=name,
            block=NormalizedBlock(rect[0] / width, rect[1] / height,
                                  rect[2] / width, rect[3] / height),
            score=score,
            timestamp=frame.t_ms,
        )
        for score, name, rect in kept
    ]


def _cue_score(frame_gray_region: np.ndarray, cue_image: np.ndarray) -> float:
    """Best-alignment NCC between a cropped frame region and a cue exemplar.

    Off-by-a-few sizing from resolution rounding is tolerated by center-
    cropping the larger array and searching the remaining slack.
    """
    cue = kernels.gray(cue_image)
    region = frame_gray_region
    ch, cw = cue.shape
    rh, rw = region.shape
    if ch > rh:
        trim = (ch - rh) // 2
        cue = cue[trim:trim + rh, :]
        ch = cue.shape[0]
    if cw > rw:
        trim = (cw - rw) // 2
        cue = cue[:, trim:trim + rw]
        cw = cue.shape[1]
    scores = np.asarray(kernels.ncc_map(region, cue))
    return float(scores.max())


def classify_state(frame: Frame, cues: Sequence[VisualCue], accept: float = 0.60,
                   ) -> StateClassification:
    """Best-matching cue (declaration order breaks ties) or "unknown"."""
    if not cues:
        raise ValueError("classify_state requires at least one cue")
    best_id = UNKNOWN_STATE
    best_score = -1.0
    for cue in cues:
        region = kernels.gray(crop(frame, cue.region).pixels)
        score = _cue_score(region, cue.image)
        if score > best_score:
            best_score = score
            best_id = cue.event_id
    if best_score < accept:
        return StateClassification(UNKNOWN_STATE, best_score, frame.t_ms)
    return StateClassification(best_id, best_score, frame.t_ms)


def _quantize(block: NormalizedBlock, steps: int = 32) -> tuple[int, int, int, int]:
    return (round(block.x1 * steps), round(block.y1 * steps),
            round(block.x2 * steps), round(block.y2 * steps))


@dataclass
class _ItemTrack:
    present_streak: int = 0
    absent_streak: int = 0
    confirmed: bool = False
    streak_start: int = 0
    absence_start: int = 0
    last: ItemDetection | None = None


@dataclass
class _TextTrack:
    committed: frozenset[str] = frozenset()
    pending: frozenset[str] | None = None
    streak: int = 0
    pending_start: int = 0


class Debouncer:
    """Turns per-frame sightings into edge-triggered, time-stamped events.

    A sighting must persist for ``debounce_n`` consecutive observations
    before its event is emitted; an emitted event does not repeat while the
    condition holds. Single-owner object, driven by the poll loop.
    """

    def __init__(self, debounce_n: int = 2):
        if debounce_n < 1:
            raise ValueError("debounce_n must be >= 1")
        self.debounce_n = debounce_n
        self._last_emitted_state: str | None = None
        self._state_candidate: str | None = None
        self._state_streak = 0
        self._state_start = 0
        self._state_last: StateClassification | None = None
        self._items: dict[tuple, _ItemTrack] = {}
        self._texts: dict[str, _TextTrack] = {}
        self._last_t: int | None = None

    def update(self, t_ms: int, state: StateClassification | None = None,
               items: Iterable[ItemDetection] = (),
               texts: Mapping[str, Sequence[TextDetection]] | None = None,
               ) -> list[DetectionEvent]:
        if self._last_t is not None and t_ms < self._last_t:
            raise ValueError(f"timestamps must be non-decreasing ({t_ms} < {self._last_t})")
        self._last_t = t_ms
        events: list[DetectionEvent] = []
        if state is not None:
            events.extend(self._update_state(state, t_ms))
        events.extend(self._update_items(list(items), t_ms))
        if texts is not None:
            for region_key, detections in texts.items():
                events.extend(self._update_text(region_key, detections, t_ms))
        return events

    def _update_state(self, state: StateClassification, t_ms: int) -> list[DetectionEvent]:
        if state.state_id != self._state_candidate:
            self._state_candidate = state.state_id
            self._state_streak = 1
            self._state_start = t_ms
        else:
            self._state_streak += 1
        self._state_last = state
        if (self._state_streak >= self.debounce_n
                and state.state_id != self._last_emitted_state):
            self._last_emitted_state = state.state_id
            return [DetectionEvent("state_changed", state, self._state_start, t_ms)]
        return []

    def _update_items(self, items: list[ItemDetection], t_ms: int) -> list[DetectionEvent]:
        events = []
        present: dict[tuple, ItemDetection] = {}
        for det in items:
            present[(det.template_name, _quantize(det.block))] = det
        for key, det in present.items():
            track = self._items.setdefault(key, _ItemTrack())
            if track.present_streak == 0:
                track.streak_start = t_ms
            track.present_streak += 1
            track.absent_streak = 0
            track.last = det
            if not track.confirmed and track.present_streak >= self.debounce_n:
                track.confirmed = True
                events.append(DetectionEvent("item_appeared", det, track.streak_start, t_ms))
        for key, track in self._items.items():
            if key in present:
                continue
            track.present_streak = 0
            if not track.confirmed:
                continue
            if track.absent_streak == 0:
                track.absence_start = t_ms
            track.absent_streak += 1
            if track.absent_streak >= self.debounce_n:
                track.confirmed = False
                track.absent_streak = 0
                events.append(DetectionEvent("item_vanished", track.last,
                                             track.absence_start, t_ms))
        return events

    def _update_text(self, region_key: str, detections: Sequence[TextDetection],
                     t_ms: int) -> list[DetectionEvent]:
        track = self._texts.setdefault(region_key, _TextTrack())
        current = frozenset(d.text for d in detections)
        if current == track.committed:
            track.pending = None
            track.streak = 0
            return []
        if current != track.pending:
            track.pending = current
            track.streak = 1
            track.pending_start = t_ms
        else:
            track.streak += 1
        if track.streak < self.debounce_n:
            return []
        added = sorted(current - track.committed)
        track.committed = current
        track.pending = None
        track.streak = 0
        if not added:
            # Pure removals update the set silently; nothing worth speaking.
            return []
        payload = tuple(sorted((d for d in detections if d.text in added),
                               key=lambda d: (d.block.y1, d.block.x1)))
        return [DetectionEvent("text_changed", payload, track.pending_start, t_ms)]


def ocr_region(frame: Frame, region: NormalizedBlock, client) -> list[TextDetection]:
    """OCR one region; result blocks are renormalized to full-frame coords."""
    left, top, right, bottom = denormalize(region, frame.width, frame.height)
    patch = frame.pixels[top:bottom, left:right]
    results = client.recognize(patch)
    detections = []
    for item in results:
        bx1, by1, bx2, by2 = item["box"]
        detections.append(TextDetection(
            text=item["text"],
            block=NormalizedBlock((left + bx1) / frame.width, (top + by1) / frame.height,
                                  (left + bx2) / frame.width, (top + by2) / frame.height),
            confidence=float(item.get("conf", 1.0)),
            timestamp=frame.t_ms,
        ))
    return detections
