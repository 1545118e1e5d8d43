import json

import numpy as np
import pytest

from astra.clients import MockVlmTransport, encode_image, _image_hash
from astra.config import GameConfig, validate_config
from astra.frames import Frame, InputEvent, SequenceSource
from astra.harness import CardSim, DialogSim, SimBackend, sim_clients
from astra.orchestrator import (
    InvalidFragment,
    Session,
    SessionLog,
    adapt_game,
    mode_capabilities,
    run_session,
    set_mode,
)

from conftest import make_frame


@pytest.fixture
def card_session(card_bundle):
    sim, config, _ = card_bundle

    def build(mode="full", profile="blind", vlm=None, cache=None):
        clients = sim_clients(vlm=vlm)
        backend = SimBackend(sim.width, sim.height)
        session = Session(config, profile, mode, clients, backend, cache=cache)
        return sim, session, clients, backend

    return build


class TestSessionFlow:
    def test_homepage_event_then_announcement(self, card_session):
        sim, session, _, _ = card_session()
        frames, _ = sim.timeline()
        for frame in frames[:3]:
            session.process_frame(frame)
        kinds = [(r.kind, r.data.get("event") or r.data.get("text"))
                 for r in session.log.records]
        state_idx = kinds.index(("event", "state_changed"))
        speech_idx = kinds.index(("speech", "You are in homepage!"))
        assert state_idx < speech_idx

    def test_card_deal_enumerates_hand_in_order(self, card_session):
        sim, session, _, _ = card_session()
        frames, _ = sim.timeline()
        for frame in frames[:8]:
            session.process_frame(frame)
        speech = session.log.speech_texts()
        deal_start = speech.index("You are in game!") + 1
        assert speech[deal_start:deal_start + 7] == [
            "Red 5", "Green Skip", "Yellow 5", "Blue 3", "Blue Skip", "Red 8",
            "Green 3"]

    def test_critical_turn_announcement(self, card_session):
        sim, session, _, _ = card_session()
        frames, _ = sim.timeline()
        for frame in frames:
            session.process_frame(frame)
        turn = [r for r in session.log.of_kind("speech")
                if r.data["text"] == "It is your turn."]
        assert turn and turn[0].data["priority"] == "critical"

    def test_empty_trace_valid_log(self, card_bundle):
        _, config, _ = card_bundle
        log = run_session(config, "blind", "full", SequenceSource([]), sim_clients())
        assert log.records == []

    def test_grid_state_coherence(self, card_session):
        sim, session, _, _ = card_session()
        frames, _ = sim.timeline()
        for frame in frames:
            session.process_frame(frame)
            if session.state.grid is not None:
                assert session.state.grid.state_id == session.state.current_state_id

    def test_hotkeys_swap_with_state(self, card_session):
        sim, session, _, _ = card_session()
        frames, _ = sim.timeline()
        for frame in frames[:3]:
            session.process_frame(frame)
        homepage_ids = {b.id for b in session.state.active_hotkeys}
        assert "start-local" in homepage_ids
        assert "last-discard" not in homepage_ids
        for frame in frames[3:8]:
            session.process_frame(frame)
        game_ids = {b.id for b in session.state.active_hotkeys}
        assert "last-discard" in game_ids
        assert "start-local" not in game_ids

    def test_state_query_hotkey_uses_cached_text(self, card_session):
        sim, session, _, backend = card_session()
        frames, _ = sim.timeline()
        for frame in frames[:8]:
            session.process_frame(frame)
        session.handle_input(InputEvent(t_ms=1000, kind="key", key="<alt>+d"))
        assert "Last discard: YELLOW 3." in session.log.speech_texts()

    def test_click_block_hotkey_hits_button(self, card_session):
        sim, session, _, backend = card_session()
        frames, _ = sim.timeline()
        for frame in frames[:3]:
            session.process_frame(frame)
        session.handle_input(InputEvent(t_ms=500, kind="key", key="<alt>+s"))
        assert len(backend.clicks) == 1
        x, y = backend.clicks[0]
        x1, y1, x2, y2 = sim.MODE_BUTTONS["LOCAL MODE"]
        assert x1 <= x < x2 and y1 <= y < y2

    def test_arrow_navigation_announces_positions(self, card_session):
        sim, session, _, _ = card_session()
        frames, _ = sim.timeline()
        for frame in frames[:3]:
            session.process_frame(frame)
        session.handle_input(InputEvent(t_ms=500, kind="key", key="right"))
        last = session.log.of_kind("speech")[-1].data["text"]
        assert "Row 1 of 1" in last and "Column 2 of 4" in last

    def test_unmapped_state_warns_and_empties_grid(self, tmp_path, card_bundle):
        sim, config, bundle_path = card_bundle
        (bundle_path / "maps" / "homepage.json").unlink()
        from astra.config import load_game_config

        try:
            reloaded = load_game_config(bundle_path)
            clients = sim_clients()
            session = Session(reloaded, "blind", "full", clients,
                              SimBackend(sim.width, sim.height))
            frames, _ = sim.timeline()
            for frame in frames[:3]:
                session.process_frame(frame)
            assert session.state.grid is None
            assert any("no element map" in r.data["message"]
                       for r in session.log.of_kind("warning"))
        finally:
            sim.make_bundle(bundle_path)  # restore for other tests

    def test_run_session_persists_jsonl(self, card_bundle, tmp_path):
        sim, config, _ = card_bundle
        frames, _ = sim.timeline()
        run_session(config, "blind", "full", SequenceSource(frames[:3]),
                    sim_clients(), backend=SimBackend(sim.width, sim.height),
                    out_dir=tmp_path)
        lines = (tmp_path / "session.jsonl").read_text().splitlines()
        records = [json.loads(line) for line in lines]
        assert all("t_ms" in r and "kind" in r for r in records)
        stamps = [r["t_ms"] for r in records]
        assert stamps == sorted(stamps)


class TestModes:
    def test_capability_monotonicity(self):
        ladder = ["baseline_ocr", "general", "auto_adaptive", "full"]
        for lower, higher in zip(ladder, ladder[1:]):
            assert mode_capabilities(lower) <= mode_capabilities(higher)

    def test_set_mode_updates_capabilities(self, card_bundle):
        sim, config, _ = card_bundle
        session = Session(config, "blind", "baseline_ocr", sim_clients())
        assert "vlm" not in session.state.capabilities
        set_mode(session.state, "full")
        assert "vlm" in session.state.capabilities

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            mode_capabilities("turbo")

    def test_baseline_announces_zero_elements_on_icon_homepage(self, card_session):
        sim, session, clients, _ = card_session(mode="baseline_ocr")
        pixels, _ = sim.homepage_frame()
        for i in range(4):
            session.process_frame(Frame(pixels=pixels.copy(), t_ms=i * 100))
        assert session.log.speech_texts() == []
        assert session.state.grid is None
        assert clients.ledger.call_count("vlm") == 0

    def test_baseline_never_calls_vlm_on_full_timeline(self, card_session):
        sim, session, clients, _ = card_session(mode="baseline_ocr")
        frames, _ = sim.timeline()
        for frame in frames:
            session.process_frame(frame)
        session.handle_input(InputEvent(t_ms=5000, kind="utterance",
                                        audio=b"describe the scene"))
        assert clients.ledger.call_count("vlm") == 0

    def test_baseline_reads_text_when_present(self, card_session):
        sim, session, _, _ = card_session(mode="baseline_ocr")
        pixels, _ = sim.game_frame()
        for i in range(3):
            session.process_frame(Frame(pixels=pixels.copy(), t_ms=i * 100))
        spoken = set(session.log.speech_texts())
        assert "GOLDBERG" in spoken and "YELLOW 3" in spoken

    def test_general_mode_activation_unsupported(self, card_session):
        sim, session, _, backend = card_session(mode="general")
        pixels, _ = sim.homepage_frame()
        for i in range(3):
            session.process_frame(Frame(pixels=pixels.copy(), t_ms=i * 100))
        session.handle_input(InputEvent(t_ms=400, kind="key", key="space"))
        assert backend.clicks == []
        assert any("unsupported" in r.data["message"]
                   for r in session.log.of_kind("warning"))

    def test_low_vision_hover_announces_on_change_only(self, card_session):
        sim, session, _, _ = card_session(profile="low_vision")
        frames, _ = sim.timeline()
        for frame in frames[:3]:
            session.process_frame(frame)
        cx = (120 + 240) / 2 / sim.width
        cy = (300 + 380) / 2 / sim.height
        session.handle_input(InputEvent(t_ms=400, kind="mouse_move", x=cx, y=cy))
        session.handle_input(InputEvent(t_ms=450, kind="mouse_move", x=cx + 0.01,
                                        y=cy))
        hovers = [r.data["text"] for r in session.log.of_kind("speech")
                  if r.data["origin"] == "navigation"]
        assert hovers == ["LOCAL MODE"]

    def test_blind_profile_ignores_hover(self, card_session):
        sim, session, _, _ = card_session(profile="blind")
        frames, _ = sim.timeline()
        for frame in frames[:3]:
            session.process_frame(frame)
        session.handle_input(InputEvent(t_ms=400, kind="mouse_move", x=0.19, y=0.63))
        hovers = [r for r in session.log.of_kind("speech")
                  if r.data["origin"] == "navigation"]
        assert hovers == []


class TestAskQuestionFlow:
    def test_vocal_query_answered(self, card_session):
        canned_vlm = MockVlmTransport()
        sim, session, clients, _ = card_session(vlm=canned_vlm)
        frames, _ = sim.timeline()
        for frame in frames[:8]:
            session.process_frame(frame)
        before = clients.ledger.call_count("vlm")
        session.handle_input(InputEvent(t_ms=2000, kind="utterance",
                                        audio="What should I play?".encode()))
        assert clients.ledger.call_count("vlm") == before + 1
        answers = [r for r in session.log.of_kind("speech")
                   if r.data["origin"] == "answer"]
        assert answers


class TestAdaptGame:
    def frame(self):
        rng = np.random.default_rng(8)
        return make_frame(rng.integers(0, 255, (64, 64, 3)))

    def test_valid_fragment_applied(self):
        frame = self.frame()
        fragment = json.dumps({"prompts": {"describe_scene": "Focus on the cards."}})
        vlm_transport = MockVlmTransport()
        key = (_image_hash(encode_image(frame.pixels)),)
        # canned answer for any prompt over this frame: patch via subclass
        class Canned(MockVlmTransport):
            def respond(self, path, payload):
                self.call_count += 1
                return json.dumps({"text": fragment,
                                   "usage": {"in": 1, "out": 1}}).encode()

        from astra.clients import VlmClient

        adapted = adapt_game(frame, "Sim Game", VlmClient(Canned()))
        assert adapted.prompts["describe_scene"] == "Focus on the cards."
        assert validate_config(adapted).ok

    def test_malformed_json_rejected(self):
        class Bad(MockVlmTransport):
            def respond(self, path, payload):
                return json.dumps({"text": "not json at all",
                                   "usage": {"in": 1, "out": 1}}).encode()

        from astra.clients import VlmClient

        with pytest.raises(InvalidFragment):
            adapt_game(self.frame(), "X", VlmClient(Bad()))

    def test_fragment_without_prompts_rejected(self):
        class Bad(MockVlmTransport):
            def respond(self, path, payload):
                return json.dumps({"text": json.dumps({"labels": {}}),
                                   "usage": {"in": 1, "out": 1}}).encode()

        from astra.clients import VlmClient

        with pytest.raises(InvalidFragment):
            adapt_game(self.frame(), "X", VlmClient(Bad()))

    def test_session_survives_adapter_failure(self, card_bundle):
        class Bad(MockVlmTransport):
            def respond(self, path, payload):
                return json.dumps({"text": "garbage",
                                   "usage": {"in": 1, "out": 1}}).encode()

        config = GameConfig(game_id="bare")  # no bundle assets -> adapter runs
        clients = sim_clients(vlm=Bad())
        session = Session(config, "blind", "auto_adaptive", clients)
        rng = np.random.default_rng(0)
        session.process_frame(make_frame(rng.integers(0, 255, (64, 64, 3))))
        warnings = [r.data["message"] for r in session.log.of_kind("warning")]
        assert any("game adapter failed" in w for w in warnings)

    def test_auto_adaptive_applies_fragment_in_session(self):
        fragment = json.dumps({"prompts": {"describe_scene": "Be terse."}})

        class Canned(MockVlmTransport):
            def respond(self, path, payload):
                return json.dumps({"text": fragment,
                                   "usage": {"in": 1, "out": 1}}).encode()

        config = GameConfig(game_id="bare")
        clients = sim_clients(vlm=Canned())
        session = Session(config, "blind", "auto_adaptive", clients,
                          window_title="Mystery Game")
        rng = np.random.default_rng(0)
        session.process_frame(make_frame(rng.integers(0, 255, (64, 64, 3))))
        assert session.config.prompts["describe_scene"] == "Be terse."
        assert session.log.of_kind("adapter")


class TestSessionLogStructure:
    def test_append_only_non_decreasing(self):
        log = SessionLog()
        log.append(100, "event", event="x")
        log.append(50, "speech", text="y")  # clamped up, never backwards
        stamps = [r.t_ms for r in log.records]
        assert stamps == sorted(stamps)
