"""Session orchestration: the detect poll loop, event routing into speech,
state-driven grid/hotkey swaps, operating modes, and the game-adapter
fallback for unconfigured games.

The desk build runs as one deterministic loop merging the frame stream and
the input-event stream by timestamp; that loop is the ordered event bus,
and all session-state mutation happens on it.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace as dc_replace
from pathlib import Path

from astra import act, describe
from astra.act import (
    ActionResult,
    BackendUnavailable,
    DetectionsView,
    HotkeyServices,
    HoverAnnouncer,
    NavCursor,
    NavigationGrid,
    NoInteractiveElements,
    OutputBackend,
)
from astra.clients import ClientError, ClientSet
from astra.config import (
    Element,
    ElementMap,
    GameConfig,
    Profile,
    label_or,
    validate_config,
    with_prompts,
)
from astra.describe import (
    DescriptionCache,
    SpeechItem,
    SpeechQueue,
    ask_question,
    brief_feedback,
    fill_prompt,
)
from astra.detect import (
    Debouncer,
    DetectionEvent,
    ItemDetection,
    StateClassification,
    TextDetection,
    classify_state,
    match_templates,
    ocr_region,
)
from astra.frames import Frame, FrameSource, InputEvent
from astra.geometry import FULL_FRAME, NormalizedBlock

log = logging.getLogger(__name__)

MODES = ("baseline_ocr", "general", "auto_adaptive", "full")

_MODE_CAPABILITIES = {
    "baseline_ocr": frozenset({"ocr_text", "hover"}),
    "general": frozenset({"ocr_text", "hover", "change_routing", "vlm", "questions"}),
    "auto_adaptive": frozenset({"ocr_text", "hover", "change_routing", "vlm",
                                "questions", "game_adapter"}),
    "full": frozenset({"ocr_text", "hover", "change_routing", "vlm", "questions",
                       "game_adapter", "cues", "templates", "element_maps", "hotkeys"}),
}

SCENE_PROMPT_KEY = "describe_scene"
SCENE_PROMPT_DEFAULT = (
    "Describe what changed on this game screen for a blind player, skipping "
    "anything already covered by: {previous}"
)
ADAPTER_PROMPT = (
    "You are adapting the game window titled {title!r} for a blind player. "
    "Reply with a JSON object of the form "
    '{{"prompts": {{"describe_scene": "..."}}}} tuned to this game.'
)

ARROW_KEYS = {"up", "down", "left", "right"}


class InvalidFragment(ValueError):
    pass


def mode_capabilities(mode: str) -> frozenset[str]:
    if mode not in _MODE_CAPABILITIES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    return _MODE_CAPABILITIES[mode]


@dataclass
class SessionState:
    mode: str
    profile: Profile
    capabilities: frozenset[str]
    current_state_id: str = "unknown"
    grid: NavigationGrid | None = None
    cursor: NavCursor = NavCursor()
    active_hotkeys: tuple = ()
    latest: DetectionsView = field(default_factory=DetectionsView)
    latest_map: ElementMap | None = None  # hover hit-testing surface


def set_mode(state: SessionState, mode: str) -> SessionState:
    state.mode = mode
    state.capabilities = mode_capabilities(mode)
    return state


@dataclass
class LogRecord:
    t_ms: int
    kind: str  # event | speech | action | warning | state | adapter
    data: dict


class SessionLog:
    """Append-only, time-ordered session record; persists as JSONL."""

    def __init__(self) -> None:
        self.records: list[LogRecord] = []

    def append(self, t_ms: int, kind: str, **data) -> None:
        if self.records and t_ms < self.records[-1].t_ms:
            t_ms = self.records[-1].t_ms
        self.records.append(LogRecord(t_ms=t_ms, kind=kind, data=data))

    def of_kind(self, kind: str) -> list[LogRecord]:
        return [r for r in self.records if r.kind == kind]

    def speech_texts(self) -> list[str]:
        return [r.data["text"] for r in self.of_kind("speech")]

    def save(self, path: str | Path) -> None:
        lines = [json.dumps({"t_ms": r.t_ms, "kind": r.kind, **r.data}, ensure_ascii=False)
                 for r in self.records]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def adapt_game(frame: Frame, window_title: str, llm, validator=validate_config,
               base: GameConfig | None = None) -> GameConfig:
    """Ask the LLM for a temporary config fragment; only validated fragments
    are returned. Raises ClientError or InvalidFragment on failure."""
    base = base if base is not None else GameConfig(game_id=window_title or "adapted")
    prompt = fill_prompt(ADAPTER_PROMPT, title=window_title)
    raw = llm.describe(frame.pixels, prompt)
    try:
        fragment = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InvalidFragment(f"adapter reply is not JSON: {exc}")
    if not isinstance(fragment, dict) or not isinstance(fragment.get("prompts"), dict):
        raise InvalidFragment("adapter fragment requires a prompts object")
    prompts = {str(k): str(v) for k, v in fragment["prompts"].items()}
    adapted = with_prompts(base, prompts)
    if isinstance(fragment.get("labels"), dict):
        labels = dict(adapted.labels)
        lang = adapted.default_language
        table = dict(labels.get(lang, {}))
        table.update({str(k): str(v) for k, v in fragment["labels"].items()})
        labels[lang] = table
        adapted = dc_replace(adapted, labels=labels)
    report = validator(adapted)
    if not report.ok:
        raise InvalidFragment(
            "; ".join(f"{f.code}: {f.message}" for f in report.errors))
    return adapted


class Session:
    """One game session: owns the debouncer, speech queue, grid and log.

    ``process_frame`` and ``handle_input`` are the two bus entry points;
    ``run`` merges a frame source and an input list by timestamp.
    """

    def __init__(self, config: GameConfig, profile: Profile | str, mode: str,
                 clients: ClientSet, backend: OutputBackend | None = None,
                 language: str | None = None, cache: DescriptionCache | None = None,
                 window_title: str = ""):
        if isinstance(profile, str):
            profile = config.profiles[profile]
        self.config = config
        self.base_config = config
        self.clients = clients
        self.backend = backend
        self.language = language or config.default_language
        self.window_title = window_title
        self.state = SessionState(mode=mode, profile=profile,
                                  capabilities=mode_capabilities(mode))
        self.log = SessionLog()
        self.cache = cache if cache is not None else DescriptionCache()
        self._now = 0
        self.queue = SpeechQueue(clients.speaker, clock=lambda: self._now)
        self.debouncer = Debouncer(debounce_n=config.detect.debounce_n)
        self.hover = HoverAnnouncer()
        self._prev_frame: Frame | None = None
        self._last_frame: Frame | None = None
        self._ocr_map: dict[str, list[TextDetection]] = {}
        self._ocr_followup: dict[str, tuple[NormalizedBlock, int]] = {}
        self._confirmed_items: dict[tuple, ItemDetection] = {}
        self._adapted = False
        self._last_description = ""

    # -- helpers -----------------------------------------------------------

    def _can(self, capability: str) -> bool:
        return capability in self.state.capabilities

    def _say(self, item: SpeechItem) -> None:
        self.log.append(self._now, "speech", text=item.text, priority=item.priority,
                        origin=item.origin)
        self.queue.submit(item)

    def _warn(self, message: str, **data) -> None:
        log.warning("%s", message)
        self.log.append(self._now, "warning", message=message, **data)

    def _ocr(self, frame: Frame, block: NormalizedBlock) -> list[TextDetection]:
        try:
            return ocr_region(frame, block, self.clients.ocr)
        except ClientError as exc:
            self._warn(f"OCR unavailable: {exc}")
            return []

    def _region_key(self, block: NormalizedBlock) -> str:
        return f"{block.x1:.4f},{block.y1:.4f},{block.x2:.4f},{block.y2:.4f}"

    # -- the detect poll ----------------------------------------------------

    def process_frame(self, frame: Frame) -> list[DetectionEvent]:
        self._now = frame.t_ms
        if (self._can("game_adapter") and not self._adapted
                and not (self.config.cues or self.config.element_maps)):
            # Adapter is the fallback for unconfigured games only; a
            # contributed bundle always wins.
            self._run_adapter(frame)

        classification: StateClassification | None = None
        if self._can("cues") and self.config.cues:
            classification = classify_state(frame, self.config.cues,
                                            accept=self.config.detect.accept)

        detections: list[ItemDetection] = []
        if self._can("templates") and self.config.templates:
            detections = self._match_items(frame)

        assessment: describe.ChangeAssessment | None = None
        if (self._can("change_routing") and self.config.change.enabled
                and self._prev_frame is not None
                and self._prev_frame.pixels.shape == frame.pixels.shape):
            assessment = describe.assess_change(self._prev_frame, frame,
                                                self.config.change)

        texts: dict[str, list[TextDetection]] | None = self._collect_ocr(frame, assessment)
        if texts and not self._can("element_maps"):
            # Without bundle maps the hover surface is the OCR text layer.
            ocr_texts = [t for dets in self._ocr_map.values() for t in dets]
            self.state.latest_map = act.merge_element_sources([], [], ocr_texts)

        events = self.debouncer.update(frame.t_ms, state=classification,
                                       items=detections, texts=texts)
        self._update_latest(classification, detections, texts)
        for event in events:
            self.on_event(event, frame)
        if assessment is not None and assessment.route == "rich" and self._can("vlm"):
            self._describe_scene(frame)

        self._prev_frame = frame
        self._last_frame = frame
        return events

    def _match_items(self, frame: Frame) -> list[ItemDetection]:
        blocks = self.config.change.blocks or (None,)
        detections: list[ItemDetection] = []
        for block in blocks:
            detections.extend(match_templates(
                frame, self.config.templates, tau=self.config.detect.tau,
                search=block, nms_iou=self.config.detect.nms_iou))
        # Reading order so announcements enumerate left-to-right, top-down.
        detections.sort(key=lambda d: (d.block.y1, d.block.x1))
        return detections

    def _collect_ocr(self, frame: Frame,
                     assessment: describe.ChangeAssessment | None,
                     ) -> dict[str, list[TextDetection]] | None:
        """OCR runs every frame in baseline mode; otherwise on brief routes
        (changed monitored blocks, or the full frame without them).

        A sampled region stays sampled for the next debounce_n frames so
        the text debouncer can see the change persist and confirm it.
        """
        regions: dict[str, NormalizedBlock] = {}
        if self.state.mode == "baseline_ocr":
            regions[self._region_key(FULL_FRAME)] = FULL_FRAME
        elif assessment is not None and assessment.route == "brief":
            changed = ([b for b, d in zip(self.config.change.blocks,
                                          assessment.per_region)
                        if d >= self.config.change.threshold1]
                       if self.config.change.blocks else [FULL_FRAME])
            for block in changed:
                self._ocr_followup[self._region_key(block)] = (
                    block, self.config.detect.debounce_n)
        for key, (block, remaining) in list(self._ocr_followup.items()):
            regions[key] = block
            if remaining <= 1:
                del self._ocr_followup[key]
            else:
                self._ocr_followup[key] = (block, remaining - 1)
        if not regions:
            return None
        texts: dict[str, list[TextDetection]] = {}
        for key, block in regions.items():
            detections = self._ocr(frame, block)
            texts[key] = detections
            self._ocr_map[key] = detections
        return texts

    def _update_latest(self, classification, detections, texts) -> None:
        latest = self.state.latest
        if classification is not None and classification.state_id != "unknown":
            latest.state_id = classification.state_id
        if detections:
            latest.items = list(detections)
        if texts:
            merged: dict[str, TextDetection] = {
                self._region_key(t.block): t for t in latest.texts}
            for dets in texts.values():
                for det in dets:
                    merged[self._region_key(det.block)] = det
            latest.texts = list(merged.values())

    def _describe_scene(self, frame: Frame) -> None:
        config = self.config
        if SCENE_PROMPT_KEY not in config.prompts:
            config = with_prompts(config, {SCENE_PROMPT_KEY: SCENE_PROMPT_DEFAULT})
        description = describe.describe_rich(
            frame, SCENE_PROMPT_KEY, config, self.cache, self.clients.vlm,
            language=self.language, previous=self._last_description)
        self._last_description = description.text
        self.log.append(self._now, "description", text=description.text,
                        source=description.source)
        self._say(SpeechItem(text=description.text, priority="normal",
                             origin="description"))

    # -- event routing -----------------------------------------------------

    def on_event(self, event: DetectionEvent, frame: Frame | None = None) -> None:
        self.log.append(event.confirmed_at, "event", event=event.kind,
                        **_event_payload(event))
        if event.kind == "state_changed":
            self._enter_state(event.payload.state_id, frame)
        elif event.kind in ("item_appeared", "item_vanished"):
            self._track_item(event)
            if self._can("element_maps"):
                self._rebuild_grid(frame)
        for item in brief_feedback([event], self.config, self.language):
            self._say(item)

    def _track_item(self, event: DetectionEvent) -> None:
        det = event.payload
        key = (det.template_name, round(det.block.x1 * 32), round(det.block.y1 * 32))
        if event.kind == "item_appeared":
            self._confirmed_items[key] = det
        else:
            self._confirmed_items.pop(key, None)

    def _enter_state(self, state_id: str, frame: Frame | None) -> None:
        self.state.current_state_id = state_id
        self.state.latest.state_id = state_id
        if self._can("hotkeys"):
            self.state.active_hotkeys = tuple(
                b for b in self.config.hotkeys
                if not b.active_states or state_id in b.active_states)
        if self._can("element_maps"):
            # One-shot OCR so dynamic text (scores, names) lands in the grid;
            # follow-up sampling lets the debouncer announce the entry texts.
            if frame is not None:
                detections = self._ocr(frame, FULL_FRAME)
                self._ocr_map[self._region_key(FULL_FRAME)] = detections
                self._ocr_followup[self._region_key(FULL_FRAME)] = (
                    FULL_FRAME, self.config.detect.debounce_n)
            self._rebuild_grid(frame)
        self.log.append(self._now, "state", state_id=state_id,
                        grid_rows=0 if self.state.grid is None else
                        self.state.grid.row_count)

    def _rebuild_grid(self, frame: Frame | None) -> None:
        state_id = self.state.current_state_id
        emap = self.config.element_maps.get(state_id)
        if emap is None and state_id != "unknown":
            self._warn(f"no element map for state {state_id!r}; navigation is empty",
                       state_id=state_id)
        parser = [e for e in (emap.elements if emap else ()) if e.provenance == "parser"]
        parser.extend(self._detection_elements())
        manual = [e for e in (emap.elements if emap else ()) if e.provenance != "parser"]
        ocr_texts = [t for dets in self._ocr_map.values() for t in dets]
        merged = act.merge_element_sources(parser, manual, ocr_texts, state_id=state_id)
        self.state.latest_map = merged
        try:
            grid = act.build_grid(merged)
        except NoInteractiveElements:
            self.state.grid = None
            self.state.cursor = NavCursor()
            return
        previous = None
        if self.state.grid is not None:
            previous = self.state.grid.element_at(self.state.cursor).content
        self.state.grid = grid
        kept = grid.find(previous) if previous else None
        self.state.cursor = kept if kept is not None else NavCursor()

    def _detection_elements(self) -> list[Element]:
        elements = []
        for det in self._confirmed_items.values():
            label = label_or(self.config, det.template_name, self.language,
                             det.template_name)
            elements.append(Element(block=det.block, content=label, interactivity=True,
                                    provenance="parser"))
        return elements

    def _run_adapter(self, frame: Frame) -> None:
        self._adapted = True
        try:
            adapted = adapt_game(frame, self.window_title, self.clients.vlm,
                                 base=self.base_config)
        except (ClientError, InvalidFragment) as exc:
            self._warn(f"game adapter failed ({exc}); continuing in general behavior")
            return
        self.config = adapted
        self.log.append(self._now, "adapter", prompts=sorted(adapted.prompts))

    # -- input routing -----------------------------------------------------

    def handle_input(self, event: InputEvent) -> None:
        self._now = max(self._now, event.t_ms)
        if event.kind == "key":
            self._handle_key(event)
        elif event.kind == "mouse_move":
            self._handle_hover(event)
        elif event.kind == "mouse_click":
            self._handle_click(event)
        elif event.kind == "utterance":
            self._handle_utterance(event)

    def _handle_key(self, event: InputEvent) -> None:
        key = (event.key or "").lower()
        if key in ARROW_KEYS:
            self._move(key)
            return
        if key == "space":
            self._activate()
            return
        if self._can("hotkeys") and self.state.active_hotkeys:
            binding = act.dispatch_hotkey(self.state.active_hotkeys, key,
                                          self.state.current_state_id)
            if binding is None:
                return
            self._execute_binding(binding)

    def _move(self, direction: str) -> None:
        if self.state.grid is None:
            self._warn("navigation unavailable: no interactive elements in this state")
            return
        self.state.cursor, announcement = act.move_cursor(
            self.state.grid, self.state.cursor, direction, self.language, self.config)
        self._say(announcement)

    def _activate(self) -> None:
        if self.state.grid is None:
            self._warn("activation unsupported: no annotated interactive elements",
                       mode=self.state.mode)
            self._say(SpeechItem(
                text=label_or(self.config, "not_supported", self.language,
                              "Not supported here"),
                priority="normal", origin="event"))
            return
        if self.backend is None:
            self._warn("no output backend; activation dropped")
            return
        try:
            result = act.activate(self.state.grid, self.state.cursor, self.backend)
        except BackendUnavailable as exc:
            self._warn(f"output backend unavailable: {exc}")
            return
        self.log.append(self._now, "action", action="click",
                        target=result.target.content if result.target else None,
                        x=result.point[0], y=result.point[1])

    def _execute_binding(self, binding) -> None:
        if self.backend is None and binding.kind == "click_block":
            self._warn("no output backend; hotkey click dropped")
            return
        services = HotkeyServices(queue=self.queue, cache=self.cache,
                                  vlm=self.clients.vlm, backend=self.backend,
                                  latest=self.state.latest, language=self.language)
        frame = self._last_frame
        if frame is None:
            self._warn(f"hotkey {binding.id!r} before first frame; ignored")
            return
        try:
            outcome = act.execute_hotkey(binding, frame, self.config, services)
        except BackendUnavailable as exc:
            self._warn(f"output backend unavailable: {exc}")
            return
        self.log.append(self._now, "action", action="hotkey", id=binding.id,
                        hotkey_kind=binding.kind)
        if isinstance(outcome, SpeechItem) and binding.kind != "replay_last":
            self._say(outcome)
        elif isinstance(outcome, ActionResult) and outcome.point is not None:
            self.log.append(self._now, "action", action="click", target=None,
                            x=outcome.point[0], y=outcome.point[1])

    def _handle_hover(self, event: InputEvent) -> None:
        if not (self._can("hover") and self.state.profile.ocr_hover_enabled):
            return
        emap = self.state.latest_map
        if emap is None or event.x is None or event.y is None:
            return
        announcement = self.hover.update(emap, event.x, event.y, self.language,
                                         self.config)
        if announcement is not None:
            self._say(announcement)

    def _handle_click(self, event: InputEvent) -> None:
        if self.backend is None or event.x is None or event.y is None:
            return
        x = int(event.x * self.backend.width)
        y = int(event.y * self.backend.height)
        try:
            self.backend.click(x, y)
        except BackendUnavailable as exc:
            self._warn(f"output backend unavailable: {exc}")
            return
        self.log.append(self._now, "action", action="click", target=None, x=x, y=y)

    def _handle_utterance(self, event: InputEvent) -> None:
        if not self._can("vlm"):
            self._warn("vocal queries need the describe model; unavailable in this mode")
            return
        if not event.audio or self._last_frame is None:
            return
        try:
            transcript = self.clients.asr.transcribe(event.audio)
        except ClientError as exc:
            self._warn(f"ASR unavailable: {exc}")
            return
        if not transcript:
            return
        self.log.append(self._now, "transcript", text=transcript)
        answer = ask_question(transcript, self._last_frame, self.config,
                              self.clients.vlm, self.language)
        self._say(answer)

    # -- main loop ----------------------------------------------------------

    def run(self, source: FrameSource, inputs: list[InputEvent] = (),
            stop=None) -> SessionLog:
        pending = sorted(inputs, key=lambda e: e.t_ms)
        cursor = 0
        for frame in source:
            while cursor < len(pending) and pending[cursor].t_ms <= frame.t_ms:
                self.handle_input(pending[cursor])
                cursor += 1
            self.process_frame(frame)
            if stop is not None and stop.is_set():
                break
        while cursor < len(pending):
            self.handle_input(pending[cursor])
            cursor += 1
        return self.log


def run_session(config: GameConfig, profile: Profile | str, mode: str,
                source: FrameSource, clients: ClientSet,
                backend: OutputBackend | None = None,
                inputs: list[InputEvent] = (), language: str | None = None,
                cache: DescriptionCache | None = None, window_title: str = "",
                out_dir: str | Path | None = None, stop=None) -> SessionLog:
    """Run a full session over a frame source; see Session for the loop."""
    session = Session(config, profile, mode, clients, backend, language=language,
                      cache=cache, window_title=window_title)
    session_log = session.run(source, inputs, stop=stop)
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        session_log.save(out / "session.jsonl")
    return session_log


def _event_payload(event: DetectionEvent) -> dict:
    payload = event.payload
    if isinstance(payload, StateClassification):
        return {"state_id": payload.state_id, "score": round(payload.score, 4)}
    if isinstance(payload, ItemDetection):
        return {"template": payload.template_name, "score": round(payload.score, 4)}
    if isinstance(payload, tuple):
        return {"texts": [t.text for t in payload]}
    return {}
