import json
from pathlib import Path

import numpy as np
import pytest

from astra.act import (
    ActionResult,
    BackendUnavailable,
    DetectionsView,
    HotkeyServices,
    HoverAnnouncer,
    NavCursor,
    NoInteractiveElements,
    OutputBackend,
    activate,
    announce_position,
    build_grid,
    dispatch_hotkey,
    execute_hotkey,
    hit_test,
    merge_element_sources,
    move_cursor,
)
from astra.config import (
    Element,
    ElementMap,
    GameConfig,
    HotkeyBinding,
    HotkeyOptions,
)
from astra.describe import DescriptionCache, SpeechQueue
from astra.detect import ItemDetection, TextDetection
from astra.geometry import NormalizedBlock

from conftest import element, make_frame
from test_describe import CountingVlm, SyncSpeaker

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures" / "grid" / "cases.json"


def text_det(value, x1, y1, x2, y2):
    return TextDetection(text=value, block=NormalizedBlock(x1, y1, x2, y2),
                         confidence=0.9, timestamp=0)


class TestMergeElementSources:
    def test_manual_overrides_overlapping_parser(self):
        parser = [element(0.1, 0.1, 0.3, 0.2, "settings", provenance="parser")]
        manual = [element(0.1, 0.1, 0.3, 0.2, "settings", interactive=True)]
        merged = merge_element_sources(parser, manual, [])
        assert len(merged.elements) == 1
        assert merged.elements[0].provenance == "manual"

    def test_ocr_fills_empty_content(self):
        parser = [element(0.1, 0.1, 0.3, 0.2, "", provenance="parser")]
        ocr = [text_det("Local Mode", 0.1, 0.1, 0.3, 0.2)]
        merged = merge_element_sources(parser, [], ocr)
        assert merged.elements[0].content == "Local Mode"
        assert merged.elements[0].interactivity is True

    def test_disjoint_sources_concatenate_sorted(self):
        parser = [element(0.6, 0.6, 0.7, 0.7, "P")]
        manual = [element(0.1, 0.1, 0.2, 0.2, "M")]
        ocr = [text_det("T", 0.4, 0.1, 0.5, 0.2)]
        merged = merge_element_sources(parser, manual, ocr)
        assert [e.content for e in merged.elements] == ["M", "T", "P"]
        assert merged.elements[1].interactivity is False  # OCR joins non-interactive

    def test_deterministic_order_by_y_then_x(self):
        manual = [element(0.5, 0.5, 0.6, 0.6, "D"), element(0.1, 0.5, 0.2, 0.6, "C"),
                  element(0.5, 0.1, 0.6, 0.2, "B"), element(0.1, 0.1, 0.2, 0.2, "A")]
        merged = merge_element_sources([], manual, [])
        assert [e.content for e in merged.elements] == ["A", "B", "C", "D"]


def load_fixtures():
    return json.loads(FIXTURES.read_text(encoding="utf-8"))


class TestBuildGrid:
    @pytest.mark.parametrize("case", load_fixtures(), ids=lambda c: c["name"])
    def test_fixture_rows(self, case):
        elements = tuple(
            Element(block=NormalizedBlock(*e["block"]), content=e["content"],
                    interactivity=e["interactivity"])
            for e in case["elements"])
        emap = ElementMap(state_id="s", elements=elements)
        grid = build_grid(emap)
        got = [[e.content for e in row] for row in grid.rows]
        assert got == case["expected_rows"]

    def test_no_interactive_elements(self):
        emap = ElementMap(state_id="s", elements=(
            element(0.1, 0.1, 0.9, 0.3, "banner", interactive=False),))
        with pytest.raises(NoInteractiveElements):
            build_grid(emap)

    def test_completeness_and_ordering_fuzz(self):
        rng = np.random.default_rng(31)
        for trial in range(300):
            count = int(rng.integers(1, 13))
            elements = []
            for i in range(count):
                x1 = float(rng.uniform(0, 0.85))
                y1 = float(rng.uniform(0, 0.85))
                w = float(rng.uniform(0.03, 0.14))
                h = float(rng.uniform(0.03, 0.14))
                elements.append(element(x1, y1, min(1, x1 + w), min(1, y1 + h),
                                        f"e{i}"))
            grid = build_grid(ElementMap(state_id="s", elements=tuple(elements)))
            flattened = [e for row in grid.rows for e in row]
            assert len(flattened) == count  # no loss, no duplication
            assert {e.content for e in flattened} == {e.content for e in elements}
            for row in grid.rows:
                xs = [e.block.center[0] for e in row]
                assert xs == sorted(xs)
            row_centers = [sum(e.block.center[1] for e in row) / len(row)
                           for row in grid.rows]
            assert row_centers == sorted(row_centers)


def demo_grid(rows_spec):
    """rows_spec: list of lists of (content, cx). Heights uniform."""
    elements = []
    for r, row in enumerate(rows_spec):
        cy = 0.1 + r * 0.2
        for content, cx in row:
            elements.append(element(cx - 0.04, cy - 0.05, cx + 0.04, cy + 0.05,
                                    content))
    return build_grid(ElementMap(state_id="s", elements=tuple(elements)))


class TestMoveCursor:
    def test_golden_announcement_format(self):
        grid = demo_grid([[(f"r1c{i}", 0.1 * i) for i in range(1, 9)]] +
                         [[(f"r{r}c{i}", 0.1 * i) for i in range(1, 9)]
                          for r in range(2, 6)])
        cursor = NavCursor(3, 2)
        moved, item = move_cursor(grid, cursor, "right")
        assert moved == NavCursor(3, 3)
        assert item.text == "r3c3, Row 3 of 5, Column 3 of 8"
        assert item.priority == "low"
        assert item.origin == "navigation"

    def test_announce_position_golden(self):
        grid = demo_grid([[(f"c{i}", 0.1 * i) for i in range(1, 9)]] * 1 +
                         [[(f"d{i}", 0.1 * i) for i in range(1, 9)]] * 4)
        text = announce_position(grid, NavCursor(3, 2)).text
        assert text.endswith("Row 3 of 5, Column 2 of 8")

    def test_single_cell_grid_clamps_with_edge_notice(self):
        grid = demo_grid([[("only", 0.5)]])
        for direction in ("up", "down", "left", "right"):
            moved, item = move_cursor(grid, NavCursor(1, 1), direction)
            assert moved == NavCursor(1, 1)
            assert item.text == "Edge. only, Row 1 of 1, Column 1 of 1"

    def test_down_picks_nearest_horizontal_center(self):
        grid = demo_grid([
            [("a1", 0.2), ("a2", 0.4), ("a3", 0.6), ("a4", 0.9)],
            [("b1", 0.25), ("b2", 0.5), ("b3", 0.85)],
        ])
        moved, _ = move_cursor(grid, NavCursor(1, 4), "down")
        assert grid.element_at(moved).content == "b3"

    def test_nearest_tie_prefers_smaller_index(self):
        grid = demo_grid([
            [("top", 0.5)],
            [("left", 0.4), ("right", 0.6)],
        ])
        moved, _ = move_cursor(grid, NavCursor(1, 1), "down")
        assert grid.element_at(moved).content == "left"

    def test_cursor_fuzz_always_valid(self):
        rng = np.random.default_rng(77)
        grid = demo_grid([
            [("a", 0.1), ("b", 0.4), ("c", 0.7)],
            [("d", 0.3), ("e", 0.8)],
            [("f", 0.2), ("g", 0.5), ("h", 0.6), ("i", 0.9)],
        ])
        cursor = NavCursor(1, 1)
        directions = ("up", "down", "left", "right")
        for _ in range(10_000):
            cursor, _ = move_cursor(grid, cursor, directions[rng.integers(0, 4)])
            assert 1 <= cursor.row <= grid.row_count
            assert 1 <= cursor.col <= grid.row_width(cursor.row)


class RecordingBackend(OutputBackend):
    def __init__(self, width=1000, height=1000, available=True):
        self.width = width
        self.height = height
        self.available = available
        self.clicks = []

    def click(self, x, y):
        if not self.available:
            raise BackendUnavailable("down")
        self.clicks.append((x, y))


class TestActivate:
    def test_click_at_center(self):
        grid = build_grid(ElementMap(state_id="s", elements=(
            element(0.4, 0.4, 0.6, 0.6, "play"),)))
        backend = RecordingBackend()
        result = activate(grid, NavCursor(1, 1), backend)
        assert result.point == (500, 500)
        assert backend.clicks == [(500, 500)]
        assert result.target.content == "play"

    def test_backend_down(self):
        grid = build_grid(ElementMap(state_id="s", elements=(
            element(0.4, 0.4, 0.6, 0.6, "play"),)))
        backend = RecordingBackend(available=False)
        with pytest.raises(BackendUnavailable):
            activate(grid, NavCursor(1, 1), backend)
        assert backend.clicks == []

    def test_click_always_inside_block(self):
        rng = np.random.default_rng(13)
        for _ in range(500):
            x1 = float(rng.uniform(0, 0.9))
            y1 = float(rng.uniform(0, 0.9))
            block = NormalizedBlock(x1, y1, min(1, x1 + float(rng.uniform(0.01, 0.2))),
                                    min(1, y1 + float(rng.uniform(0.01, 0.2))))
            width = int(rng.integers(100, 3000))
            height = int(rng.integers(100, 3000))
            grid = build_grid(ElementMap(state_id="s", elements=(
                Element(block=block, content="t", interactivity=True),)))
            backend = RecordingBackend(width, height)
            result = activate(grid, NavCursor(1, 1), backend)
            from astra.geometry import denormalize
            left, top, right, bottom = denormalize(block, width, height)
            assert left <= result.point[0] < right
            assert top <= result.point[1] < bottom


class TestHitTest:
    def emap(self):
        return ElementMap(state_id="s", elements=(
            element(0.1, 0.1, 0.5, 0.5, "outer"),
            element(0.2, 0.2, 0.4, 0.4, "inner"),
            element(0.6, 0.6, 0.9, 0.9, "other"),
        ))

    def test_center_hit(self):
        assert hit_test(self.emap(), 0.75, 0.75).content == "other"

    def test_margin_miss(self):
        assert hit_test(self.emap(), 0.55, 0.05) is None

    def test_nested_prefers_later_declared(self):
        assert hit_test(self.emap(), 0.3, 0.3).content == "inner"

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            hit_test(self.emap(), 1.5, 0.5)

    def test_hover_dedup(self):
        hover = HoverAnnouncer()
        first = hover.update(self.emap(), 0.3, 0.3)
        assert first.text == "inner"
        assert hover.update(self.emap(), 0.31, 0.31) is None  # same element
        moved = hover.update(self.emap(), 0.75, 0.75)
        assert moved.text == "other"
        assert hover.update(self.emap(), 0.05, 0.05) is None  # empty margin


def binding(key="<alt>+f", id="b", kind="replay_last", states=(), options=None):
    return HotkeyBinding(key=key, id=id, kind=kind,
                         options=options or HotkeyOptions(),
                         active_states=frozenset(states))


class TestDispatchHotkey:
    def test_state_gated_dispatch(self):
        bindings = [binding(id="get-current-score", kind="state_query",
                            states=("game",),
                            options=HotkeyOptions(block=NormalizedBlock(0, 0, 1, 1)))]
        assert dispatch_hotkey(bindings, "<alt>+f", "game").id == "get-current-score"
        assert dispatch_hotkey(bindings, "<alt>+f", "homepage") is None

    def test_empty_states_match_everywhere(self):
        bindings = [binding(key="<alt>+w", id="replay")]
        for state in ("homepage", "game", "unknown"):
            assert dispatch_hotkey(bindings, "<alt>+w", state).id == "replay"

    def test_chord_canonicalization_on_dispatch(self):
        bindings = [binding(key="<alt>+<ctrl>+f", id="x")]
        assert dispatch_hotkey(bindings, "<CTRL>+<ALT>+F", "any").id == "x"

    def test_first_declared_wins_on_ambiguity(self):
        bindings = [binding(id="first"), binding(id="second")]
        assert dispatch_hotkey(bindings, "<alt>+f", "any").id == "first"

    def test_gating_never_fires_in_other_state(self):
        rng = np.random.default_rng(5)
        bindings = [binding(id="gated", states=("S",))]
        for _ in range(100):
            state = f"other{rng.integers(0, 50)}"
            assert dispatch_hotkey(bindings, "<alt>+f", state) is None


class TestExecuteHotkey:
    def services(self, backend=None):
        queue = SpeechQueue(SyncSpeaker())
        return HotkeyServices(queue=queue, cache=DescriptionCache(),
                              vlm=CountingVlm("A cluttered table."),
                              backend=backend or RecordingBackend(),
                              latest=DetectionsView(), language="en")

    def frame(self):
        rng = np.random.default_rng(3)
        return make_frame(rng.integers(0, 255, (200, 200, 3)))

    def test_describe_region(self):
        config = GameConfig(game_id="g", prompts={"describe_region": "Say it."})
        b = binding(kind="describe_region",
                    options=HotkeyOptions(block=NormalizedBlock(0.122, 0.053,
                                                                0.38, 0.21),
                                          prompt="describe_region"))
        outcome = execute_hotkey(b, self.frame(), config, self.services())
        assert outcome.text == "A cluttered table."
        assert outcome.origin == "description"

    def test_state_query_formats_cached_text(self):
        services = self.services()
        services.latest.texts = [TextDetection(
            "Yellow 4", NormalizedBlock(0.55, 0.19, 0.74, 0.24), 0.9, 0)]
        config = GameConfig(game_id="g", labels={
            "en": {"last_discard": "Last discard: {text}."}})
        b = binding(kind="state_query",
                    options=HotkeyOptions(block=NormalizedBlock(0.5, 0.1, 0.8, 0.3),
                                          label="last_discard"))
        outcome = execute_hotkey(b, self.frame(), config, services)
        assert outcome.text == "Last discard: Yellow 4."

    def test_click_block_clicks_center(self):
        backend = RecordingBackend(width=1000, height=1000)
        b = binding(kind="click_block",
                    options=HotkeyOptions(block=NormalizedBlock(0.2, 0.2, 0.4, 0.4)))
        outcome = execute_hotkey(b, self.frame(), GameConfig(game_id="g"),
                                 self.services(backend))
        assert isinstance(outcome, ActionResult)
        assert backend.clicks == [(300, 300)]

    def test_click_block_backend_down(self):
        backend = RecordingBackend(available=False)
        b = binding(kind="click_block",
                    options=HotkeyOptions(block=NormalizedBlock(0.2, 0.2, 0.4, 0.4)))
        with pytest.raises(BackendUnavailable):
            execute_hotkey(b, self.frame(), GameConfig(game_id="g"),
                           self.services(backend))

    def test_state_query_without_data(self):
        config = GameConfig(game_id="g")
        b = binding(kind="state_query", options=HotkeyOptions())
        outcome = execute_hotkey(b, self.frame(), config, self.services())
        assert outcome.text == "No information yet"
