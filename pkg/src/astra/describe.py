"""Describe agent: change-gated narration routing, rich-description cache,
the prioritized speech queue, and spatial-audio parameterization.

Inter-frame change is Delta = 1 - mean SSIM, a dissimilarity in [0, 1].
Delta below threshold1 stays silent, below threshold2 yields brief
feedback, at or above it triggers a rich (model-generated) description.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

import numpy as np

from astra import kernels
from astra.clients import ClientError
from astra.config import ChangeConfig, GameConfig, label_or
from astra.detect import DetectionEvent
from astra.frames import Frame, crop
from astra.geometry import NormalizedBlock

log = logging.getLogger(__name__)

PAN_EXPONENT = 0.6
PITCH_MAX_SEMITONES = 4.0
DELAY_MAX_MS = 30.0
HISTORY_SIZE = 32

FALLBACK_LABEL_KEY = "description_unavailable"
FALLBACK_TEXT = "Description unavailable"


class DimensionMismatch(ValueError):
    pass


class TooSmall(ValueError):
    pass


class EmptyHistory(LookupError):
    pass


class CacheIoError(IOError):
    pass


@dataclass(frozen=True)
class SpatialAudioParams:
    gain_left: float
    gain_right: float
    pitch_shift: float  # semitones, positive = higher
    onset_delay: float  # ms


@dataclass(frozen=True)
class SpeechItem:
    text: str
    priority: str = "normal"  # critical | normal | low
    spatial: SpatialAudioParams | None = None
    origin: str = "event"  # event | navigation | description | answer


@dataclass(frozen=True)
class ChangeAssessment:
    delta: float
    route: str  # silent | brief | rich
    per_region: tuple[float, ...] = ()


@dataclass(frozen=True)
class Description:
    text: str
    source: str  # vlm | cache | preset
    image_key: str
    prompt_key: str
    created_at: int


def ssim_mean(a: Frame, b: Frame) -> float:
    """Mean windowed SSIM of two equal-sized frames (grayscale luma)."""
    if (a.width, a.height) != (b.width, b.height):
        raise DimensionMismatch(f"{a.width}x{a.height} vs {b.width}x{b.height}")
    if min(a.width, a.height) < kernels.SSIM_WIN:
        raise TooSmall(f"frames must be at least {kernels.SSIM_WIN} px per side")
    return float(kernels.ssim_mean(kernels.gray(a.pixels), kernels.gray(b.pixels)))


def _delta(a: Frame, b: Frame) -> float:
    return min(1.0, max(0.0, 1.0 - ssim_mean(a, b)))


def route_for_delta(delta: float, cfg: ChangeConfig) -> str:
    if delta < cfg.threshold1:
        return "silent"
    if delta < cfg.threshold2:
        return "brief"
    return "rich"


def assess_change(prev: Frame, cur: Frame, cfg: ChangeConfig) -> ChangeAssessment:
    """Dissimilarity and feedback route between consecutive frames.

    With monitor blocks configured, each block is compared separately and
    the worst (largest) delta decides the route.
    """
    if not cfg.enabled:
        raise ValueError("change comparison is disabled in this config")
    if cfg.blocks:
        per_region = tuple(_delta(crop(prev, b), crop(cur, b)) for b in cfg.blocks)
        delta = max(per_region)
    else:
        per_region = ()
        delta = _delta(prev, cur)
    return ChangeAssessment(delta=delta, route=route_for_delta(delta, cfg),
                            per_region=per_region)


def image_key(pixels: np.ndarray) -> str:
    """Content hash of a frame region: FNV-1a over dimensions + raw pixels."""
    h, w = pixels.shape[:2]
    header = w.to_bytes(4, "little") + h.to_bytes(4, "little")
    return f"{kernels.fnv1a64(header + pixels.tobytes()):016x}"


class DescriptionCache:
    """Append-only store of generated descriptions, keyed by
    (image_key, prompt_key); persists as JSON lines."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[tuple[str, str], str] = {}
        self._lock = threading.Lock()
        if self.path is not None and self.path.is_file():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                    self._entries[(record["k"], record["p"])] = record["t"]
                except (json.JSONDecodeError, KeyError):
                    log.warning("skipping corrupt cache line in %s", self.path)

    def get(self, key: str, prompt_key: str) -> str | None:
        with self._lock:
            return self._entries.get((key, prompt_key))

    def put(self, key: str, prompt_key: str, text: str, at_ms: int) -> None:
        with self._lock:
            self._entries[(key, prompt_key)] = text
        if self.path is None:
            return
        record = json.dumps({"k": key, "p": prompt_key, "t": text, "at": at_ms},
                            ensure_ascii=False)
        try:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(record + "\n")
        except OSError as exc:
            raise CacheIoError(str(exc))

    def __len__(self) -> int:
        return len(self._entries)


class _SafeDict(dict):
    def __missing__(self, key):
        return ""


def fill_prompt(template: str, **values: str) -> str:
    return template.format_map(_SafeDict(values))


def describe_rich(region: Frame, prompt_key: str, config: GameConfig,
                  cache: DescriptionCache, vlm, language: str = "en",
                  previous: str = "") -> Description:
    """Rich description of a frame region, served from cache when the same
    pixels were described with the same prompt before."""
    if prompt_key not in config.prompts:
        raise KeyError(f"prompt {prompt_key!r} not in bundle prompts")
    key = image_key(region.pixels)
    now = int(time.time() * 1000)
    cached = cache.get(key, prompt_key)
    if cached is not None:
        return Description(text=cached, source="cache", image_key=key,
                           prompt_key=prompt_key, created_at=now)
    prompt = fill_prompt(config.prompts[prompt_key], previous=previous)
    try:
        text = vlm.describe(region.pixels, prompt)
    except ClientError:
        fallback = label_or(config, FALLBACK_LABEL_KEY, language, FALLBACK_TEXT)
        return Description(text=fallback, source="preset", image_key=key,
                           prompt_key=prompt_key, created_at=now)
    try:
        cache.put(key, prompt_key, text, now)
    except CacheIoError as exc:
        log.warning("description cache write failed (%s); continuing uncached", exc)
    return Description(text=text, source="vlm", image_key=key,
                       prompt_key=prompt_key, created_at=now)


def spatial_params_at(cx: float, cy: float) -> SpatialAudioParams:
    """Constant-power stereo pan plus pitch/delay cues for a screen point.

    Horizontal: pan p = 2*cx - 1 sharpened by |p|^0.6 (sign kept), then
    constant-power gains. Vertical: higher on screen sounds higher-pitched
    and earlier.
    """
    p = 2.0 * cx - 1.0
    sharpened = np.sign(p) * abs(p) ** PAN_EXPONENT
    gain_left = float(np.sqrt((1.0 - sharpened) / 2.0))
    gain_right = float(np.sqrt((1.0 + sharpened) / 2.0))
    return SpatialAudioParams(
        gain_left=gain_left,
        gain_right=gain_right,
        pitch_shift=PITCH_MAX_SEMITONES * (1.0 - 2.0 * cy),
        onset_delay=DELAY_MAX_MS * cy,
    )


def spatial_params(block: NormalizedBlock) -> SpatialAudioParams:
    return spatial_params_at(*block.center)


def brief_feedback(events: Iterable[DetectionEvent], config: GameConfig,
                   language: str = "en") -> list[SpeechItem]:
    """One concise utterance per detection event, using bundle labels."""
    items: list[SpeechItem] = []
    for event in events:
        if event.kind == "state_changed":
            state_id = event.payload.state_id
            cue = config.cue_by_id(state_id)
            if cue is not None:
                text = label_or(config, state_id, language, cue.message)
                priority = "critical" if cue.severity == "critical" else "normal"
                items.append(SpeechItem(text=text, priority=priority,
                                        spatial=spatial_params(cue.region), origin="event"))
            else:
                text = label_or(config, "unknown_state", language, "Unknown screen")
                items.append(SpeechItem(text=text, priority="normal", origin="event"))
        elif event.kind == "item_appeared":
            det = event.payload
            label = label_or(config, det.template_name, language, det.template_name)
            items.append(SpeechItem(text=label, priority="normal",
                                    spatial=spatial_params(det.block), origin="event"))
        elif event.kind == "item_vanished":
            det = event.payload
            label = label_or(config, det.template_name, language, det.template_name)
            gone = label_or(config, "gone", language, "gone")
            items.append(SpeechItem(text=f"{label} {gone}", priority="normal",
                                    spatial=spatial_params(det.block), origin="event"))
        elif event.kind == "text_changed":
            for det in event.payload:
                items.append(SpeechItem(text=det.text, priority="normal",
                                        spatial=spatial_params(det.block), origin="event"))
    return items


def ask_question(transcript: str, frame: Frame, config: GameConfig, vlm,
                 language: str = "en") -> SpeechItem:
    """Answer a vocal query about the current frame via the VLM."""
    if not transcript:
        raise ValueError("transcript must be non-empty")
    template = config.prompts.get(
        "question", "Answer the player's question about this game frame: {question}")
    prompt = fill_prompt(template, question=transcript)
    try:
        answer = vlm.describe(frame.pixels, prompt)
    except ClientError:
        answer = label_or(config, FALLBACK_LABEL_KEY, language, FALLBACK_TEXT)
    return SpeechItem(text=answer, priority="normal", origin="answer")


@dataclass
class HistoryEntry:
    item: SpeechItem
    status: str  # pending | spoken | dropped
    t_ms: int


class SpeechHistory:
    """Ring buffer of the last K submitted items, newest first on retrieval;
    dropped (suppressed) items stay reviewable."""

    def __init__(self, capacity: int = HISTORY_SIZE):
        self._entries: deque[HistoryEntry] = deque(maxlen=capacity)

    def record(self, item: SpeechItem, status: str, t_ms: int) -> HistoryEntry:
        entry = HistoryEntry(item=item, status=status, t_ms=t_ms)
        self._entries.append(entry)
        return entry

    def recent(self) -> list[HistoryEntry]:
        return list(reversed(self._entries))

    def last_replayable(self) -> SpeechItem:
        for entry in reversed(self._entries):
            if entry.item.origin != "navigation":
                return entry.item
        raise EmptyHistory("no replayable utterance yet")

    def __len__(self) -> int:
        return len(self._entries)


# submit() outcomes
SPOKEN_NOW = "spoken_now"
QUEUED = "queued"
PREEMPTED_CURRENT = "preempted_current"
DROPPED = "dropped"


class SpeechQueue:
    """Serialization point for all utterances.

    Critical items interrupt the current utterance (which is re-queued at
    the front); normal items are FIFO; low items are superseded by newer
    ones of the same origin while still pending. Thread-safe submission,
    one consumer.
    """

    def __init__(self, speaker, history: SpeechHistory | None = None, clock=None):
        self._speaker = speaker
        self.history = history if history is not None else SpeechHistory()
        self._clock = clock if clock is not None else lambda: int(time.monotonic() * 1000)
        self._lock = threading.RLock()
        self._front: deque[HistoryEntry] = deque()
        self._criticals: deque[HistoryEntry] = deque()
        self._normals: deque[HistoryEntry] = deque()
        self._lows: deque[HistoryEntry] = deque()
        self._current: HistoryEntry | None = None
        self._paused = False
        self._running = True

    @property
    def paused(self) -> bool:
        return self._paused

    def pending_count(self) -> int:
        with self._lock:
            return (len(self._front) + len(self._criticals) + len(self._normals)
                    + len(self._lows))

    def submit(self, item: SpeechItem) -> str:
        with self._lock:
            now = self._clock()
            entry = self.history.record(item, "pending", now)
            if item.priority == "critical":
                effect = self._submit_critical(entry)
            elif item.priority == "low":
                effect = self._submit_low(entry)
            else:
                self._normals.append(entry)
                effect = QUEUED
            self._drain()
            if effect == QUEUED and entry.status == "spoken":
                effect = SPOKEN_NOW
            return effect

    def _submit_critical(self, entry: HistoryEntry) -> str:
        if self._paused:
            self._criticals.append(entry)
            return QUEUED
        if self._current is not None or self._speaker.busy():
            interrupted = self._current
            self._speaker.stop()
            if interrupted is not None:
                interrupted.status = "pending"
                self._front.appendleft(interrupted)
            self._current = None
            self._speak(entry)
            self._finish_if_done()
            return PREEMPTED_CURRENT
        self._criticals.append(entry)
        return QUEUED

    def _submit_low(self, entry: HistoryEntry) -> str:
        stale = [e for e in self._lows if e.item.origin == entry.item.origin]
        for old in stale:
            self._lows.remove(old)
            old.status = "dropped"
        self._lows.append(entry)
        return QUEUED

    def _next_entry(self) -> HistoryEntry | None:
        for queue in (self._criticals, self._front, self._normals, self._lows):
            if queue:
                return queue.popleft()
        return None

    def _speak(self, entry: HistoryEntry) -> None:
        self._current = entry
        entry.status = "spoken"
        self._speaker.speak(entry.item, self._clock())

    def _finish_if_done(self) -> None:
        if self._current is not None and not self._speaker.busy():
            self._current = None

    def _drain(self) -> bool:
        spoke = False
        while self._running and not self._paused and self._current is None:
            if self._speaker.busy():
                break
            entry = self._next_entry()
            if entry is None:
                break
            self._speak(entry)
            spoke = True
            self._finish_if_done()
        return spoke

    def on_utterance_end(self) -> None:
        """Callback for asynchronous speakers when an utterance finishes."""
        with self._lock:
            self._current = None
            self._drain()

    def pause(self) -> None:
        with self._lock:
            self._paused = True
            if self._current is not None or self._speaker.busy():
                interrupted = self._current
                self._speaker.stop()
                if interrupted is not None:
                    interrupted.status = "pending"
                    self._front.appendleft(interrupted)
                self._current = None

    def resume(self) -> None:
        with self._lock:
            self._paused = False
            self._drain()

    def toggle_pause(self) -> bool:
        with self._lock:
            if self._paused:
                self.resume()
            else:
                self.pause()
            return self._paused

    def stop(self) -> None:
        with self._lock:
            self._running = False
            self._speaker.stop()

    def snapshot(self) -> list[SpeechItem]:
        with self._lock:
            return [e.item for q in (self._criticals, self._front, self._normals, self._lows)
                    for e in q]


def replay_last(queue: SpeechQueue, history: SpeechHistory | None = None) -> SpeechItem:
    """Re-submit the most recent non-navigation utterance at normal priority."""
    source = history if history is not None else queue.history
    item = replace(source.last_replayable(), priority="normal")
    queue.submit(item)
    return item
