"""Act agent: element-source merging, 2D grid navigation with positional
announcements, mouse-hover hit testing, and context-gated hotkeys.

The grid preserves the on-screen layout: interactive elements cluster into
rows by vertical center, rows read top to bottom, columns left to right.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace as dc_replace
from typing import Iterable, Sequence

from astra.config import (
    Element,
    ElementMap,
    GameConfig,
    HotkeyBinding,
    canonicalize_chord,
    label_or,
    with_prompts,
)
from astra.describe import (
    DescriptionCache,
    EmptyHistory,
    SpeechItem,
    SpeechQueue,
    describe_rich,
    fill_prompt,
    replay_last,
    spatial_params,
)
from astra.detect import ItemDetection, TextDetection
from astra.frames import Frame, crop
from astra.geometry import NormalizedBlock, denormalize, iou

log = logging.getLogger(__name__)

ROW_TOLERANCE = 0.5  # fraction of the smaller block height
OVERRIDE_IOU = 0.5

NAV_FORMAT_KEY = "nav_position"
NAV_FORMAT_DEFAULT = "{content}, Row {r} of {R}, Column {c} of {C}"
EDGE_KEY = "edge_notice"
EDGE_DEFAULT = "Edge"
DEFAULT_REGION_PROMPT = (
    "Describe this interface region concisely for a blind player. {previous}"
)


class NoInteractiveElements(LookupError):
    pass


class BackendUnavailable(RuntimeError):
    pass


class OutputBackend:
    """Delivers pointer/key actions; simulator in tests, OS adapter live."""

    width: int = 0
    height: int = 0

    def click(self, x_px: int, y_px: int) -> None:
        raise NotImplementedError

    def key(self, sequence: str) -> None:
        raise NotImplementedError


@dataclass(frozen=True)
class NavigationGrid:
    state_id: str
    rows: tuple[tuple[Element, ...], ...]

    @property
    def row_count(self) -> int:
        return len(self.rows)

    def row_width(self, row: int) -> int:
        return len(self.rows[row - 1])

    def element_at(self, cursor: "NavCursor") -> Element:
        return self.rows[cursor.row - 1][cursor.col - 1]

    def find(self, content: str) -> "NavCursor | None":
        for r, row in enumerate(self.rows, start=1):
            for c, element in enumerate(row, start=1):
                if element.content == content:
                    return NavCursor(r, c)
        return None


@dataclass(frozen=True)
class NavCursor:
    row: int = 1
    col: int = 1


@dataclass(frozen=True)
class ActionResult:
    kind: str  # clicked | announced | no_op
    target: Element | None = None
    point: tuple[int, int] | None = None


def merge_element_sources(parser: Sequence[Element], manual: Sequence[Element],
                          ocr: Sequence[TextDetection],
                          state_id: str = "unknown") -> ElementMap:
    """Merge the three element sources into one per-state map.

    Manual entries override parser entries they overlap (IoU > 0.5); OCR
    texts fill empty content of overlapping elements and otherwise join as
    non-interactive text elements. Output ordered by (y, x) centers.
    """
    merged: list[Element] = [dc_replace(e, provenance="parser") if e.provenance != "parser"
                             else e for e in parser]
    for entry in manual:
        merged = [e for e in merged if iou(e.block, entry.block) <= OVERRIDE_IOU]
        merged.append(dc_replace(entry, provenance="manual")
                      if entry.provenance != "manual" else entry)
    for text in ocr:
        best_index, best_overlap = -1, OVERRIDE_IOU
        for i, element in enumerate(merged):
            if element.content:
                continue
            overlap = iou(element.block, text.block)
            if overlap > best_overlap:
                best_index, best_overlap = i, overlap
        if best_index >= 0:
            merged[best_index] = dc_replace(merged[best_index], content=text.text)
        else:
            merged.append(Element(block=text.block, content=text.text,
                                  interactivity=False, provenance="ocr"))
    ordered = sorted(merged, key=lambda e: (e.block.center[1], e.block.center[0]))
    seen: set[tuple] = set()
    unique = []
    for element in ordered:
        key = (element.block, element.content)
        if key in seen:
            continue
        seen.add(key)
        unique.append(element)
    return ElementMap(state_id=state_id, elements=tuple(unique))


def build_grid(emap: ElementMap, row_tolerance: float = ROW_TOLERANCE) -> NavigationGrid:
    """Cluster interactive elements into navigation rows.

    Two elements share a row iff their vertical centers differ by less than
    ``row_tolerance`` times the smaller block height; rows are the
    transitive closure of that relation.
    """
    interactive = [e for e in emap.elements if e.interactivity]
    if not interactive:
        raise NoInteractiveElements(f"state {emap.state_id!r} has no interactive elements")
    n = len(interactive)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            a, b = interactive[i], interactive[j]
            limit = row_tolerance * min(a.block.height, b.block.height)
            if abs(a.block.center[1] - b.block.center[1]) < limit:
                parent[find(i)] = find(j)

    clusters: dict[int, list[Element]] = {}
    for i, element in enumerate(interactive):
        clusters.setdefault(find(i), []).append(element)
    rows = sorted(clusters.values(),
                  key=lambda row: sum(e.block.center[1] for e in row) / len(row))
    ordered_rows = tuple(tuple(sorted(row, key=lambda e: e.block.center[0]))
                         for row in rows)
    return NavigationGrid(state_id=emap.state_id, rows=ordered_rows)


def _position_text(grid: NavigationGrid, cursor: NavCursor, language: str,
                   config: GameConfig | None) -> str:
    element = grid.element_at(cursor)
    template = NAV_FORMAT_DEFAULT
    if config is not None:
        template = label_or(config, NAV_FORMAT_KEY, language, NAV_FORMAT_DEFAULT)
    return fill_prompt(template, content=element.content, r=str(cursor.row),
                       R=str(grid.row_count), c=str(cursor.col),
                       C=str(grid.row_width(cursor.row)))


def announce_position(grid: NavigationGrid, cursor: NavCursor, language: str = "en",
                      config: GameConfig | None = None, edge: bool = False) -> SpeechItem:
    element = grid.element_at(cursor)
    text = _position_text(grid, cursor, language, config)
    if edge:
        notice = EDGE_DEFAULT
        if config is not None:
            notice = label_or(config, EDGE_KEY, language, EDGE_DEFAULT)
        text = f"{notice}. {text}"
    return SpeechItem(text=text, priority="low", spatial=spatial_params(element.block),
                      origin="navigation")


def _nearest_column(row: Sequence[Element], target_cx: float) -> int:
    best_col, best_distance = 1, float("inf")
    for index, element in enumerate(row, start=1):
        distance = abs(element.block.center[0] - target_cx)
        if distance < best_distance - 1e-12:
            best_col, best_distance = index, distance
    return best_col


def move_cursor(grid: NavigationGrid, cursor: NavCursor, direction: str,
                language: str = "en", config: GameConfig | None = None,
                ) -> tuple[NavCursor, SpeechItem]:
    """Arrow-key move with clamped edges and a positional announcement."""
    row_width = grid.row_width(cursor.row)
    moved = cursor
    if direction == "left" and cursor.col > 1:
        moved = NavCursor(cursor.row, cursor.col - 1)
    elif direction == "right" and cursor.col < row_width:
        moved = NavCursor(cursor.row, cursor.col + 1)
    elif direction in ("up", "down"):
        target_row = cursor.row - 1 if direction == "up" else cursor.row + 1
        if 1 <= target_row <= grid.row_count:
            current_cx = grid.element_at(cursor).block.center[0]
            moved = NavCursor(target_row, _nearest_column(grid.rows[target_row - 1],
                                                          current_cx))
    edge = moved == cursor
    return moved, announce_position(grid, moved, language, config, edge=edge)


def activate(grid: NavigationGrid, cursor: NavCursor,
             backend: OutputBackend) -> ActionResult:
    """Primary click at the center pixel of the focused element."""
    element = grid.element_at(cursor)
    left, top, right, bottom = denormalize(element.block, backend.width, backend.height)
    point = ((left + right) // 2, (top + bottom) // 2)
    backend.click(*point)
    return ActionResult(kind="clicked", target=element, point=point)


def hit_test(emap: ElementMap, x: float, y: float) -> Element | None:
    """Topmost (last-declared) element containing a normalized point."""
    if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
        raise ValueError(f"point ({x}, {y}) outside [0,1]^2")
    for element in reversed(emap.elements):
        if element.block.contains(x, y):
            return element
    return None


class HoverAnnouncer:
    """Mouse-exploration helper: re-announce only when the hit element changes."""

    def __init__(self) -> None:
        self._last: tuple | None = None

    def update(self, emap: ElementMap, x: float, y: float, language: str = "en",
               config: GameConfig | None = None) -> SpeechItem | None:
        element = hit_test(emap, x, y)
        key = None if element is None else (element.block, element.content)
        if key == self._last:
            return None
        self._last = key
        if element is None or not element.content:
            return None
        return SpeechItem(text=element.content, priority="low",
                          spatial=spatial_params(element.block), origin="navigation")


def dispatch_hotkey(bindings: Iterable[HotkeyBinding], chord: str,
                    current_state: str) -> HotkeyBinding | None:
    """First binding matching the chord whose active states admit the
    current state (empty set admits all)."""
    canonical = canonicalize_chord(chord)
    matches = [b for b in bindings if b.key == canonical
               and (not b.active_states or current_state in b.active_states)]
    if len(matches) > 1:
        log.warning("ambiguous hotkey %s in state %s; first declared (%s) wins",
                    canonical, current_state, matches[0].id)
    return matches[0] if matches else None


@dataclass
class DetectionsView:
    """Latest confirmed detections, cached for state-query hotkeys."""

    state_id: str = "unknown"
    items: list[ItemDetection] = field(default_factory=list)
    texts: list[TextDetection] = field(default_factory=list)

    def text_in(self, block: NormalizedBlock | None) -> str | None:
        candidates = [t for t in self.texts
                      if block is None or block.contains(*t.block.center)]
        if candidates:
            ordered = sorted(candidates, key=lambda t: (t.block.y1, t.block.x1))
            return ", ".join(t.text for t in ordered)
        labels = [i.template_name for i in self.items
                  if block is None or block.contains(*i.block.center)]
        if labels:
            return ", ".join(labels)
        return None


@dataclass
class HotkeyServices:
    queue: SpeechQueue
    cache: DescriptionCache
    vlm: object
    backend: OutputBackend
    latest: DetectionsView
    language: str = "en"


def execute_hotkey(binding: HotkeyBinding, frame: Frame, config: GameConfig,
                   services: HotkeyServices) -> ActionResult | SpeechItem | None:
    """Run a dispatched binding; the return value is the primary effect."""
    if binding.kind == "describe_region":
        prompt_key = binding.options.prompt or "describe_region"
        effective = config
        if prompt_key not in config.prompts:
            effective = with_prompts(config, {prompt_key: DEFAULT_REGION_PROMPT})
        region = crop(frame, binding.options.block)
        description = describe_rich(region, prompt_key, effective, services.cache,
                                    services.vlm, language=services.language)
        return SpeechItem(text=description.text, priority="normal",
                          spatial=spatial_params(binding.options.block),
                          origin="description")
    if binding.kind == "click_block":
        left, top, right, bottom = denormalize(binding.options.block,
                                               services.backend.width,
                                               services.backend.height)
        point = ((left + right) // 2, (top + bottom) // 2)
        services.backend.click(*point)
        return ActionResult(kind="clicked", target=None, point=point)
    if binding.kind == "state_query":
        found = services.latest.text_in(binding.options.block)
        if found is None:
            text = label_or(config, "nothing_cached", services.language,
                            "No information yet")
        else:
            template = "{text}"
            if binding.options.label:
                template = label_or(config, binding.options.label, services.language,
                                    "{text}")
            text = fill_prompt(template, text=found)
        return SpeechItem(text=text, priority="normal", origin="answer")
    if binding.kind == "replay_last":
        try:
            return replay_last(services.queue)
        except EmptyHistory:
            return None
    if binding.kind == "pause_resume":
        services.queue.toggle_pause()
        return None
    raise ValueError(f"unknown hotkey kind {binding.kind!r}")
