"""Deterministic simulated games with ground-truth ledgers.

Three desk-scale stand-ins: a card game (hand of matchable cards), a merge
game (fruits in a field, one moving-target scenario), and a dialog scene
(visual novel with line changes and a character sprite). Identical
seed + script always renders byte-identical frames.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from astra.act import BackendUnavailable, OutputBackend
from astra.clients import (
    ClientSet,
    MockAsrTransport,
    MockTransport,
    MockVlmTransport,
    OcrClient,
    TokenLedger,
    TranscriptSpeaker,
    VlmClient,
    AsrClient,
    decode_image,
)
from astra.config import GameConfig, load_game_config
from astra.frames import Frame
from astra.geometry import NormalizedBlock
from astra.harness import pixelfont

import json


@dataclass
class FrameTruth:
    state: str
    items: list[tuple[str, tuple[int, int, int, int]]] = field(default_factory=list)
    texts: list[tuple[str, tuple[int, int, int, int]]] = field(default_factory=list)
    interactive: dict[str, tuple[int, int, int, int]] = field(default_factory=dict)


class SimBackend(OutputBackend):
    """Records clicks into a hit ledger instead of driving an OS."""

    def __init__(self, width: int, height: int, available: bool = True):
        self.width = width
        self.height = height
        self.available = available
        self.clicks: list[tuple[int, int]] = []
        self.keys: list[str] = []

    def click(self, x_px: int, y_px: int) -> None:
        if not self.available:
            raise BackendUnavailable("simulated backend is down")
        self.clicks.append((x_px, y_px))

    def key(self, sequence: str) -> None:
        if not self.available:
            raise BackendUnavailable("simulated backend is down")
        self.keys.append(sequence)


class PixelFontOcrTransport(MockTransport):
    """Offline OCR service that really reads the simulators' pixel text."""

    def respond(self, path: str, payload: dict) -> bytes:
        items = pixelfont.decode_text_boxes(decode_image(payload["image_b64"]))
        return json.dumps({"items": items}, sort_keys=True).encode("utf-8")


def sim_clients(speech_log=None, vlm: MockVlmTransport | None = None,
                asr: MockAsrTransport | None = None) -> ClientSet:
    """Offline ClientSet whose OCR actually decodes simulator text."""
    ledger = TokenLedger()
    return ClientSet(
        ocr=OcrClient(PixelFontOcrTransport(), ledger),
        vlm=VlmClient(vlm or MockVlmTransport(), ledger),
        asr=AsrClient(asr or MockAsrTransport(), ledger=ledger),
        speaker=TranscriptSpeaker(speech_log),
        ledger=ledger,
    )


def _norm(rect: tuple[int, int, int, int], width: int, height: int) -> NormalizedBlock:
    return NormalizedBlock(rect[0] / width, rect[1] / height,
                           rect[2] / width, rect[3] / height)


def _fill(canvas: np.ndarray, rect: tuple[int, int, int, int], color) -> None:
    canvas[rect[1]:rect[3], rect[0]:rect[2]] = color


def _checker(canvas: np.ndarray, rect: tuple[int, int, int, int], a, b, cell=10) -> None:
    x1, y1, x2, y2 = rect
    ys, xs = np.mgrid[y1:y2, x1:x2]
    mask = ((ys - y1) // cell + (xs - x1) // cell) % 2 == 0
    region = canvas[y1:y2, x1:x2]
    region[mask] = a
    region[~mask] = b


def _stripes(canvas: np.ndarray, rect: tuple[int, int, int, int], a, b, period=8,
             vertical=False) -> None:
    x1, y1, x2, y2 = rect
    ys, xs = np.mgrid[y1:y2, x1:x2]
    coords = xs if vertical else ys
    mask = (coords // period) % 2 == 0
    region = canvas[y1:y2, x1:x2]
    region[mask] = a
    region[~mask] = b


def _dots(canvas: np.ndarray, rect: tuple[int, int, int, int], a, b, period=12) -> None:
    x1, y1, x2, y2 = rect
    _fill(canvas, rect, b)
    ys, xs = np.mgrid[y1:y2, x1:x2]
    mask = ((ys % period) < period // 2) & ((xs % period) < period // 2)
    canvas[y1:y2, x1:x2][mask] = a


def _disc(canvas: np.ndarray, cx: int, cy: int, radius: int, color) -> None:
    ys, xs = np.mgrid[cy - radius:cy + radius + 1, cx - radius:cx + radius + 1]
    mask = (ys - cy) ** 2 + (xs - cx) ** 2 <= radius * radius
    canvas[cy - radius:cy + radius + 1, cx - radius:cx + radius + 1][mask] = color


def _write_bundle_common(bundle: Path, manifest: dict, cues: list[tuple[str, np.ndarray, str]],
                         templates: dict[str, np.ndarray],
                         maps: dict[str, list[dict]], hotkeys: list[dict],
                         labels: dict[str, dict[str, str]], prompts: dict[str, str]) -> None:
    from PIL import Image

    bundle.mkdir(parents=True, exist_ok=True)
    (bundle / "game.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    cue_dir = bundle / "cues"
    cue_dir.mkdir(exist_ok=True)
    for event_id, image, message in cues:
        Image.fromarray(image, mode="RGB").save(cue_dir / f"{event_id}.png")
        (cue_dir / f"{event_id}.txt").write_text(message, encoding="utf-8")
    tpl_dir = bundle / "templates"
    tpl_dir.mkdir(exist_ok=True)
    for name, image in templates.items():
        Image.fromarray(image, mode="RGB").save(tpl_dir / f"{name}.png")
    maps_dir = bundle / "maps"
    maps_dir.mkdir(exist_ok=True)
    for state_id, elements in maps.items():
        (maps_dir / f"{state_id}.json").write_text(
            json.dumps({"state_id": state_id, "elements": elements}, indent=2),
            encoding="utf-8")
    (bundle / "hotkeys.json").write_text(json.dumps(hotkeys, indent=2), encoding="utf-8")
    labels_dir = bundle / "labels"
    labels_dir.mkdir(exist_ok=True)
    for tag, table in labels.items():
        (labels_dir / f"label_{tag}.json").write_text(
            json.dumps(table, indent=2, ensure_ascii=False, sort_keys=True),
            encoding="utf-8")
    prompts_dir = bundle / "prompts"
    prompts_dir.mkdir(exist_ok=True)
    for key, text in prompts.items():
        (prompts_dir / f"{key}.txt").write_text(text, encoding="utf-8")
    (bundle / "profile_blind.json").write_text(json.dumps(
        {"mode": "blind", "input": "keyboard", "verbosity": "brief",
         "ocr_hover_enabled": False}, indent=2), encoding="utf-8")
    (bundle / "profile_low_vision.json").write_text(json.dumps(
        {"mode": "low_vision", "input": "mouse+keyboard", "verbosity": "rich",
         "ocr_hover_enabled": True}, indent=2), encoding="utf-8")


# ---------------------------------------------------------------------------
# Card game (Uno-like)


CARD_W, CARD_H = 56, 80
CARD_COLORS = {
    "red": (200, 40, 40),
    "green": (60, 180, 70),
    "blue": (70, 90, 210),
    "yellow": (230, 210, 60),
}
CARD_RANKS = ("3", "5", "8", "skip")
_RANK_GLYPH = {"3": "3", "5": "5", "8": "8", "skip": "S"}


def make_card(color: str, rank: str) -> np.ndarray:
    """Card face: white frame, color-textured field, rank glyph.

    Each color gets a distinct texture so faces stay separable after the
    luma grayscale conversion, not just in hue.
    """
    card = np.zeros((CARD_H, CARD_W, 3), dtype=np.uint8)
    card[:] = (245, 245, 245)
    base = np.array(CARD_COLORS[color], dtype=np.int16)
    dark = tuple(int(v) for v in np.clip(base - 60, 0, 255))
    rect = (3, 3, CARD_W - 3, CARD_H - 3)
    if color == "red":
        _fill(card, rect, tuple(int(v) for v in base))
    elif color == "green":
        _stripes(card, rect, tuple(int(v) for v in base), dark, period=6)
    elif color == "blue":
        _stripes(card, rect, tuple(int(v) for v in base), dark, period=6, vertical=True)
    else:
        _checker(card, rect, tuple(int(v) for v in base), dark, cell=7)
    glyph_scale = 6
    gw = pixelfont.GLYPH_W * glyph_scale
    gh = pixelfont.GLYPH_H * glyph_scale
    pixelfont.draw_glyph(card, (CARD_W - gw) // 2, (CARD_H - gh) // 2,
                         _RANK_GLYPH[rank], glyph_scale, (10, 10, 10))
    return card


class CardSim:
    """Uno-like simulator: icon-only homepage, then a game page with a
    dealt hand, a discard pile, and a turn indicator."""

    width, height = 960, 540
    BANNER = (280, 20, 680, 120)
    AVATAR = (60, 200, 160, 300)
    HAND_STRIP = (60, 370, 910, 540)
    HAND_Y = 420
    HAND_X0, HAND_DX = 120, 96
    DISCARD_AT = (420, 170)
    DISCARD_TEXT_AT = (560, 200)
    NAME_AT = (710, 40)
    MODE_BUTTONS = {
        "LOCAL MODE": (120, 300, 240, 380),
        "ONLINE MODE": (340, 300, 460, 380),
        "SETTINGS": (560, 300, 680, 380),
        "HELP": (780, 300, 900, 380),
    }
    GAME_BUTTONS = {
        "DRAW PILE": (820, 180, 920, 300),
        "UNO BUTTON": (820, 60, 920, 120),
    }

    def __init__(self, seed: int = 7):
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.templates = {f"card_{c}_{r}": make_card(c, r)
                          for c in CARD_COLORS for r in CARD_RANKS}
        self.default_hand = [("red", "5"), ("green", "skip"), ("yellow", "5"),
                             ("blue", "3"), ("blue", "skip"), ("red", "8"),
                             ("green", "3")]
        self.discard = ("yellow", "3")

    # -- rendering -----------------------------------------------------------

    def _base(self) -> np.ndarray:
        canvas = np.zeros((self.height, self.width, 3), dtype=np.uint8)
        canvas[:] = (30, 30, 36)
        return canvas

    def _banner(self, canvas: np.ndarray, state: str) -> None:
        if state == "homepage":
            _checker(canvas, self.BANNER, (210, 205, 110), (60, 70, 120))
        elif state == "game":
            _stripes(canvas, self.BANNER, (110, 190, 160), (40, 60, 70))
        else:  # your_turn
            _dots(canvas, self.BANNER, (235, 220, 90), (70, 40, 90))

    def _icon(self, canvas: np.ndarray, rect, shape: str) -> None:
        _fill(canvas, rect, (70, 70, 80))
        x1, y1, x2, y2 = rect
        cx, cy = (x1 + x2) // 2, (y1 + y2) // 2
        if shape == "triangle":
            for i in range(24):
                canvas[cy + 12 - i, cx - i:cx + i + 1] = (240, 240, 240)
        elif shape == "square":
            _fill(canvas, (cx - 18, cy - 18, cx + 18, cy + 18), (240, 240, 240))
        elif shape == "circle":
            _disc(canvas, cx, cy, 18, (240, 240, 240))
        else:  # diamond
            for i in range(18):
                canvas[cy - i, cx - (18 - i):cx + (18 - i) + 1] = (240, 240, 240)
                canvas[cy + i, cx - (18 - i):cx + (18 - i) + 1] = (240, 240, 240)

    def homepage_frame(self) -> tuple[np.ndarray, FrameTruth]:
        canvas = self._base()
        self._banner(canvas, "homepage")
        for (content, rect), shape in zip(self.MODE_BUTTONS.items(),
                                          ("triangle", "square", "circle", "diamond")):
            self._icon(canvas, rect, shape)
        truth = FrameTruth(state="homepage", interactive=dict(self.MODE_BUTTONS))
        return canvas, truth

    def game_frame(self, hand=None, turn: bool = False, jitter_rng=None,
                   brightness: float = 1.0,
                   include_discard: bool = True) -> tuple[np.ndarray, FrameTruth]:
        hand = self.default_hand if hand is None else hand
        canvas = self._base()
        self._banner(canvas, "your_turn" if turn else "game")
        _fill(canvas, self.AVATAR, (90, 90, 110))
        _disc(canvas, (self.AVATAR[0] + self.AVATAR[2]) // 2,
              (self.AVATAR[1] + self.AVATAR[3]) // 2, 30, (180, 160, 140))
        if turn:
            x1, y1, x2, y2 = self.AVATAR
            canvas[y1 - 8:y1, x1 - 8:x2 + 8] = (250, 230, 80)
            canvas[y2:y2 + 8, x1 - 8:x2 + 8] = (250, 230, 80)
            canvas[y1:y2, x1 - 8:x1] = (250, 230, 80)
            canvas[y1:y2, x2:x2 + 8] = (250, 230, 80)
        for content, rect in self.GAME_BUTTONS.items():
            _fill(canvas, rect, (80, 75, 95))
            _stripes(canvas, (rect[0] + 6, rect[1] + 6, rect[2] - 6, rect[3] - 6),
                     (140, 135, 160), (80, 75, 95), period=5)
        truth = FrameTruth(state="your_turn" if turn else "game",
                           interactive=dict(self.GAME_BUTTONS))

        if include_discard:
            discard_img = self.templates[f"card_{self.discard[0]}_{self.discard[1]}"]
            dx, dy = self.DISCARD_AT
            canvas[dy:dy + CARD_H, dx:dx + CARD_W] = discard_img
            truth.items.append((f"card_{self.discard[0]}_{self.discard[1]}",
                                (dx, dy, dx + CARD_W, dy + CARD_H)))
            box = pixelfont.draw_text_box(
                canvas, *self.DISCARD_TEXT_AT,
                f"{self.discard[0]} {self.discard[1]}".upper(), 2)
            truth.texts.append((f"{self.discard[0]} {self.discard[1]}".upper(), box))
        name_box = pixelfont.draw_text_box(canvas, *self.NAME_AT, "GOLDBERG", 2)
        truth.texts.append(("GOLDBERG", name_box))

        for i, (color, rank) in enumerate(hand):
            x = self.HAND_X0 + i * self.HAND_DX
            y = self.HAND_Y
            if jitter_rng is not None:
                x += int(jitter_rng.integers(-2, 3))
                y += int(jitter_rng.integers(-2, 3))
            face = self.templates[f"card_{color}_{rank}"]
            if brightness != 1.0:
                face = np.clip(face.astype(np.float64) * brightness, 0, 255
                               ).astype(np.uint8)
            canvas[y:y + CARD_H, x:x + CARD_W] = face
            name = f"card_{color}_{rank}"
            rect = (x, y, x + CARD_W, y + CARD_H)
            truth.items.append((name, rect))
            truth.interactive[_card_label(color, rank)] = rect
        return canvas, truth

    # -- timeline -------------------------------------------------------------

    def timeline(self) -> tuple[list[Frame], list[FrameTruth]]:
        frames, truths = [], []
        home, home_truth = self.homepage_frame()
        game, game_truth = self.game_frame()
        turn, turn_truth = self.game_frame(turn=True)
        script = [(home, home_truth)] * 3 + [(game, game_truth)] * 5 + \
                 [(turn, turn_truth)] * 5
        for i, (pixels, truth) in enumerate(script):
            frames.append(Frame(pixels=pixels.copy(), t_ms=i * 100))
            truths.append(truth)
        return frames, truths

    def scene(self, name: str) -> tuple[np.ndarray, FrameTruth]:
        if name == "homepage":
            return self.homepage_frame()
        if name == "game":
            return self.game_frame()
        if name == "your_turn":
            return self.game_frame(turn=True)
        raise KeyError(name)

    # -- bundle ---------------------------------------------------------------

    def make_bundle(self, bundle_dir: str | Path) -> GameConfig:
        bundle = Path(bundle_dir)
        home, _ = self.homepage_frame()
        game, _ = self.game_frame()
        turn, _ = self.game_frame(turn=True)
        b = self.BANNER
        banner_crop = lambda canvas: canvas[b[1]:b[3], b[0]:b[2]].copy()
        banner_region = _norm(b, self.width, self.height).to_list()
        manifest = {
            "game_id": "uno_sim",
            "default_language": "en",
            "change": {
                "enabled": True,
                "threshold1": 0.3,
                "threshold2": 0.7,
                "blocks": [_norm(self.HAND_STRIP, self.width, self.height).to_list()],
            },
            "detect": {"tau": 0.85, "accept": 0.6, "debounce_n": 2, "nms_iou": 0.3},
            "cues": [
                {"event_id": "homepage", "region": banner_region, "severity": "normal"},
                {"event_id": "game", "region": banner_region, "severity": "normal"},
                {"event_id": "your_turn", "region": banner_region, "severity": "critical"},
            ],
        }
        cues = [
            ("homepage", banner_crop(home), "You are in homepage!"),
            ("game", banner_crop(game), "You are in game!"),
            ("your_turn", banner_crop(turn), "It is your turn."),
        ]
        maps = {
            "homepage": [
                {"block": _norm(rect, self.width, self.height).to_list(),
                 "content": content, "interactivity": True, "provenance": "manual"}
                for content, rect in self.MODE_BUTTONS.items()
            ],
            "game": [
                {"block": _norm(rect, self.width, self.height).to_list(),
                 "content": content, "interactivity": True, "provenance": "manual"}
                for content, rect in self.GAME_BUTTONS.items()
            ],
        }
        maps["your_turn"] = maps["game"]
        discard_text_region = _norm((550, 190, 740, 240), self.width, self.height)
        hotkeys = [
            {"key": "<alt>+d", "id": "last-discard", "kind": "state_query",
             "options": {"block": discard_text_region.to_list(), "label": "last_discard"},
             "active_states": ["game", "your_turn"]},
            {"key": "<alt>+f", "id": "describe-table", "kind": "describe_region",
             "options": {"block": [0.122, 0.053, 0.38, 0.21], "prompt": "describe_region"},
             "active_states": ["game", "your_turn"]},
            {"key": "<alt>+s", "id": "start-local", "kind": "click_block",
             "options": {"block": _norm(self.MODE_BUTTONS["LOCAL MODE"], self.width,
                                        self.height).to_list()},
             "active_states": ["homepage"]},
            {"key": "<alt>+w", "id": "replay-last", "kind": "replay_last"},
            {"key": "<alt>+p", "id": "pause-resume", "kind": "pause_resume"},
        ]
        labels = {
            "en": {
                **{f"card_{c}_{r}": _card_label(c, r)
                   for c in CARD_COLORS for r in CARD_RANKS},
                "last_discard": "Last discard: {text}.",
                "gone": "gone",
                "not_supported": "Not supported here",
                "description_unavailable": "Description unavailable",
            },
            "zh_cn": {"card_red_5": "红5"},
        }
        prompts = {
            "describe_scene": "Describe the card table for a blind player. "
                              "Skip what was already said: {previous}",
            "describe_region": "Describe this part of the card table. {previous}",
            "question": "Answer the player's question about the card game: {question}",
        }
        _write_bundle_common(bundle, manifest, cues, self.templates, maps, hotkeys,
                             labels, prompts)
        return load_game_config(bundle)


def _card_label(color: str, rank: str) -> str:
    rank_word = {"3": "3", "5": "5", "8": "8", "skip": "Skip"}[rank]
    return f"{color.capitalize()} {rank_word}"


# ---------------------------------------------------------------------------
# Merge game (MySuika-like)


FRUITS = {
    "fruit_cherry": {"radius": 14, "color": (210, 60, 70)},
    "fruit_lemon": {"radius": 20, "color": (230, 215, 80)},
    "fruit_melon": {"radius": 30, "color": (90, 190, 100)},
}


def make_fruit(name: str) -> np.ndarray:
    spec = FRUITS[name]
    radius = spec["radius"]
    size = radius * 2 + 4
    img = np.zeros((size, size, 3), dtype=np.uint8)
    img[:] = (24, 26, 34)  # field background
    _disc(img, size // 2, size // 2, radius, spec["color"])
    if name == "fruit_cherry":
        img[2:size // 2, size // 2 - 1:size // 2 + 1] = (90, 60, 30)
    elif name == "fruit_lemon":
        img[size // 2 - 1:size // 2 + 1, 4:size - 4] = (150, 130, 40)
    else:
        _stripes(img, (4, 4, size - 4, size - 4), spec["color"], (50, 120, 60), period=5)
        _disc(img, size // 2, size // 2, radius // 2, spec["color"])
    return img


class MergeSim:
    """Suika-like simulator: fruits in a field, drop buttons, a score box,
    and a constant-velocity moving fruit for the stale-coordinate scenario."""

    width, height = 480, 360
    BANNER = (140, 10, 340, 60)
    FIELD = (10, 130, 470, 350)
    SCORE_AT = (16, 70)
    BUTTONS = {
        "DROP LEFT": (30, 80, 130, 120),
        "DROP CENTER": (190, 80, 290, 120),
        "DROP RIGHT": (350, 80, 450, 120),
    }
    RESTING = [("fruit_cherry", 80, 300), ("fruit_lemon", 200, 290),
               ("fruit_melon", 360, 280)]

    def __init__(self, seed: int = 11):
        self.seed = seed
        self.templates = {name: make_fruit(name) for name in FRUITS}

    def _base(self) -> np.ndarray:
        canvas = np.zeros((self.height, self.width, 3), dtype=np.uint8)
        canvas[:] = (40, 42, 52)
        _fill(canvas, self.FIELD, (24, 26, 34))
        return canvas

    def _banner(self, canvas: np.ndarray, state: str) -> None:
        if state == "field":
            _checker(canvas, self.BANNER, (120, 200, 150), (40, 70, 60), cell=8)
        else:  # game_over
            _stripes(canvas, self.BANNER, (220, 90, 90), (60, 30, 30), period=6)

    def _buttons(self, canvas: np.ndarray) -> None:
        for i, rect in enumerate(self.BUTTONS.values()):
            _fill(canvas, rect, (70, 70, 85))
            x1, y1, x2, y2 = rect
            cx = (x1 + x2) // 2
            canvas[y1 + 10:y2 - 10, cx - 3 + (i - 1) * 20:cx + 3 + (i - 1) * 20] = \
                (230, 230, 230)

    def _place(self, canvas: np.ndarray, truth: FrameTruth, name: str,
               cx: int, cy: int) -> None:
        img = self.templates[name]
        h, w = img.shape[:2]
        x, y = cx - w // 2, cy - h // 2
        canvas[y:y + h, x:x + w] = img
        truth.items.append((name, (x, y, x + w, y + h)))
        truth.interactive[_fruit_label(name)] = (x, y, x + w, y + h)

    RESTART_BUTTON = (190, 80, 290, 120)

    def field_frame(self, score: int = 10, fruits=None,
                    state: str = "field") -> tuple[np.ndarray, FrameTruth]:
        canvas = self._base()
        self._banner(canvas, state)
        if state == "game_over":
            # Only the restart control stays live after the game ends.
            _fill(canvas, self.RESTART_BUTTON, (120, 60, 60))
            x1, y1, x2, y2 = self.RESTART_BUTTON
            _disc(canvas, (x1 + x2) // 2, (y1 + y2) // 2, 14, (240, 220, 220))
            truth = FrameTruth(state=state,
                               interactive={"RESTART": self.RESTART_BUTTON})
        else:
            self._buttons(canvas)
            truth = FrameTruth(state=state, interactive=dict(self.BUTTONS))
        box = pixelfont.draw_text_box(canvas, *self.SCORE_AT, f"SCORE {score}", 2)
        truth.texts.append((f"SCORE {score}", box))
        for name, cx, cy in (fruits if fruits is not None else self.RESTING):
            self._place(canvas, truth, name, cx, cy)
        return canvas, truth

    def moving_frames(self, count: int = 12, speed_px: int = 8,
                      ) -> tuple[list[Frame], list[FrameTruth]]:
        """A lemon crossing the field at constant speed, 10 fps timestamps."""
        frames, truths = [], []
        for i in range(count):
            fruits = list(self.RESTING[:1]) + [("fruit_lemon", 120 + i * speed_px, 200)]
            pixels, truth = self.field_frame(score=10, fruits=fruits)
            frames.append(Frame(pixels=pixels, t_ms=i * 100))
            truths.append(truth)
        return frames, truths

    def timeline(self) -> tuple[list[Frame], list[FrameTruth]]:
        frames, truths = [], []
        base, base_truth = self.field_frame(score=10)
        merged, merged_truth = self.field_frame(
            score=25, fruits=[("fruit_melon", 140, 290), ("fruit_melon", 360, 280)])
        over, over_truth = self.field_frame(score=25, state="game_over")
        script = [(base, base_truth)] * 4 + [(merged, merged_truth)] * 4 + \
                 [(over, over_truth)] * 4
        for i, (pixels, truth) in enumerate(script):
            frames.append(Frame(pixels=pixels.copy(), t_ms=i * 100))
            truths.append(truth)
        return frames, truths

    def scene(self, name: str) -> tuple[np.ndarray, FrameTruth]:
        if name == "field":
            return self.field_frame()
        if name == "merged":
            return self.field_frame(score=25,
                                    fruits=[("fruit_melon", 140, 290),
                                            ("fruit_melon", 360, 280)])
        if name == "game_over":
            return self.field_frame(score=25, state="game_over")
        raise KeyError(name)

    def make_bundle(self, bundle_dir: str | Path) -> GameConfig:
        bundle = Path(bundle_dir)
        field_px, _ = self.field_frame()
        over_px, _ = self.field_frame(state="game_over")
        b = self.BANNER
        banner_region = _norm(b, self.width, self.height).to_list()
        manifest = {
            "game_id": "suika_sim",
            "default_language": "en",
            "change": {
                "enabled": True,
                "threshold1": 0.3,
                "threshold2": 0.7,
                "blocks": [_norm(self.FIELD, self.width, self.height).to_list(),
                           _norm((10, 62, 300, 100), self.width, self.height).to_list()],
            },
            "cues": [
                {"event_id": "field", "region": banner_region, "severity": "normal"},
                {"event_id": "game_over", "region": banner_region,
                 "severity": "critical"},
            ],
        }
        cues = [
            ("field", field_px[b[1]:b[3], b[0]:b[2]].copy(), "Field ready."),
            ("game_over", over_px[b[1]:b[3], b[0]:b[2]].copy(), "Game over!"),
        ]
        maps = {
            "field": [
                {"block": _norm(rect, self.width, self.height).to_list(),
                 "content": content, "interactivity": True, "provenance": "manual"}
                for content, rect in self.BUTTONS.items()
            ],
        }
        maps["game_over"] = [
            {"block": _norm((190, 80, 290, 120), self.width, self.height).to_list(),
             "content": "RESTART", "interactivity": True, "provenance": "manual"},
        ]
        score_region = _norm((10, 62, 300, 100), self.width, self.height)
        hotkeys = [
            {"key": "<alt>+f", "id": "get-current-score", "kind": "state_query",
             "options": {"block": score_region.to_list(), "label": "score"},
             "active_states": ["field", "game_over"]},
            {"key": "<alt>+w", "id": "replay-last", "kind": "replay_last"},
        ]
        labels = {
            "en": {
                **{name: _fruit_label(name) for name in FRUITS},
                "score": "Score: {text}.",
                "gone": "gone",
                "merged": "Successfully merged!",
                "description_unavailable": "Description unavailable",
            },
        }
        prompts = {
            "describe_scene": "Describe the fruit field for a blind player. "
                              "Previously: {previous}",
            "question": "Answer the player's question about the merge game: {question}",
        }
        _write_bundle_common(bundle, manifest, cues, self.templates, maps, hotkeys,
                             labels, prompts)
        return load_game_config(bundle)


def _fruit_label(name: str) -> str:
    return name.removeprefix("fruit_").capitalize()


# ---------------------------------------------------------------------------
# Dialog scene (visual-novel-like)


class DialogSim:
    """Visual-novel simulator: a menu, a street scene, dialog line changes
    (small change), and a character sprite appearing (major change)."""

    width, height = 640, 360
    BANNER = (200, 8, 440, 48)
    DIALOG_MONITOR = (30, 290, 620, 350)
    SPRITE_MONITOR = (390, 70, 580, 300)
    DIALOG_AT = (40, 300)
    START_BUTTON = (270, 200, 370, 240)
    NEXT_BUTTON = (560, 300, 620, 340)
    LINES = ("NO REASON TO STAND AROUND", "A QUIET SUNLIT STREET")

    def __init__(self, seed: int = 3):
        self.seed = seed

    def _base(self) -> np.ndarray:
        canvas = np.zeros((self.height, self.width, 3), dtype=np.uint8)
        ys = np.arange(self.height, dtype=np.float64)
        gradient = (60 + ys * 0.3).astype(np.uint8)
        canvas[:, :, 0] = gradient[:, None]
        canvas[:, :, 1] = gradient[:, None] + 10
        canvas[:, :, 2] = gradient[:, None] + 30
        rng = np.random.default_rng(self.seed)
        for i in range(8):  # deterministic skyline
            x = 20 + i * 78
            h = int(rng.integers(60, 160))
            _fill(canvas, (x, 220 - h, x + 54, 220), (70 + i * 8, 60 + i * 6, 80))
        return canvas

    def _banner(self, canvas: np.ndarray, state: str) -> None:
        if state == "menu":
            _dots(canvas, self.BANNER, (200, 170, 220), (50, 40, 70), period=10)
        else:
            _stripes(canvas, self.BANNER, (170, 200, 230), (50, 60, 90), period=7)

    def menu_frame(self) -> tuple[np.ndarray, FrameTruth]:
        canvas = self._base()
        _fill(canvas, (0, 0, self.width, self.height), (35, 30, 50))
        self._banner(canvas, "menu")
        _fill(canvas, self.START_BUTTON, (90, 80, 120))
        x1, y1, x2, y2 = self.START_BUTTON
        for i in range(16):
            canvas[(y1 + y2) // 2 - 16 + 2 * i, (x1 + x2) // 2 - i:(x1 + x2) // 2 + i] = \
                (240, 240, 240)
        return canvas, FrameTruth(state="menu",
                                  interactive={"START": self.START_BUTTON})

    def scene_frame(self, line: str, sprite: bool) -> tuple[np.ndarray, FrameTruth]:
        canvas = self._base()
        self._banner(canvas, "scene")
        truth = FrameTruth(state="scene", interactive={"NEXT": self.NEXT_BUTTON})
        if sprite:
            x1, y1, x2, y2 = 410, 90, 560, 290
            _fill(canvas, (x1, y1, x2, y2), (235, 200, 120))  # kimono
            _checker(canvas, (x1 + 10, y1 + 60, x2 - 10, y2 - 10),
                     (235, 200, 120), (200, 150, 90), cell=9)
            _disc(canvas, (x1 + x2) // 2, y1 + 26, 24, (240, 170, 190))  # pink hair
            truth.items.append(("sprite", (x1, y1, x2, y2)))
        box = pixelfont.draw_text_box(canvas, *self.DIALOG_AT, line, 2)
        truth.texts.append((line, box))
        _fill(canvas, self.NEXT_BUTTON, (80, 90, 110))
        _disc(canvas, (self.NEXT_BUTTON[0] + self.NEXT_BUTTON[2]) // 2,
              (self.NEXT_BUTTON[1] + self.NEXT_BUTTON[3]) // 2, 12, (230, 230, 230))
        return canvas, truth

    def timeline(self) -> tuple[list[Frame], list[FrameTruth]]:
        frames, truths = [], []
        menu, menu_truth = self.menu_frame()
        quiet, quiet_truth = self.scene_frame(self.LINES[0], sprite=False)
        sprite, sprite_truth = self.scene_frame(self.LINES[0], sprite=True)
        line2, line2_truth = self.scene_frame(self.LINES[1], sprite=True)
        script = [(menu, menu_truth)] * 3 + [(quiet, quiet_truth)] * 3 + \
                 [(sprite, sprite_truth)] * 3 + [(line2, line2_truth)] * 3
        for i, (pixels, truth) in enumerate(script):
            frames.append(Frame(pixels=pixels.copy(), t_ms=i * 100))
            truths.append(truth)
        return frames, truths

    def scene(self, name: str) -> tuple[np.ndarray, FrameTruth]:
        if name == "menu":
            return self.menu_frame()
        if name == "quiet":
            return self.scene_frame(self.LINES[0], sprite=False)
        if name == "sprite":
            return self.scene_frame(self.LINES[0], sprite=True)
        if name == "line2":
            return self.scene_frame(self.LINES[1], sprite=True)
        raise KeyError(name)

    def make_bundle(self, bundle_dir: str | Path) -> GameConfig:
        bundle = Path(bundle_dir)
        menu, _ = self.menu_frame()
        scene, _ = self.scene_frame(self.LINES[0], sprite=False)
        b = self.BANNER
        banner_region = _norm(b, self.width, self.height).to_list()
        manifest = {
            "game_id": "novel_sim",
            "default_language": "en",
            # Calibrated for this renderer: a full line swap measures ~0.17
            # within the dialog block, a sprite appearance ~0.52 in the scene
            # block, so 0.10/0.45 routes them brief and rich respectively.
            "change": {
                "enabled": True,
                "threshold1": 0.10,
                "threshold2": 0.45,
                "blocks": [_norm(self.DIALOG_MONITOR, self.width, self.height).to_list(),
                           _norm(self.SPRITE_MONITOR, self.width, self.height).to_list()],
            },
            "cues": [
                {"event_id": "menu", "region": banner_region, "severity": "normal"},
                {"event_id": "scene", "region": banner_region, "severity": "normal"},
            ],
        }
        cues = [
            ("menu", menu[b[1]:b[3], b[0]:b[2]].copy(), "Main menu."),
            ("scene", scene[b[1]:b[3], b[0]:b[2]].copy(), "Story scene."),
        ]
        maps = {
            "menu": [
                {"block": _norm(self.START_BUTTON, self.width, self.height).to_list(),
                 "content": "START", "interactivity": True, "provenance": "manual"},
            ],
            "scene": [
                {"block": _norm(self.NEXT_BUTTON, self.width, self.height).to_list(),
                 "content": "NEXT", "interactivity": True, "provenance": "manual"},
            ],
        }
        hotkeys = [
            {"key": "<alt>+f", "id": "describe-character", "kind": "describe_region",
             "options": {"block": _norm(self.SPRITE_MONITOR, self.width,
                                        self.height).to_list(),
                         "prompt": "describe_region"},
             "active_states": ["scene"]},
            {"key": "<alt>+w", "id": "replay-last", "kind": "replay_last"},
        ]
        labels = {"en": {
            "gone": "gone",
            "description_unavailable": "Description unavailable",
        }}
        prompts = {
            "describe_scene": "Describe this story scene vividly. Previously: {previous}",
            "describe_region": "Describe the character in this region. {previous}",
            "question": "Answer the player's question about the story: {question}",
        }
        _write_bundle_common(bundle, manifest, cues, {}, maps, hotkeys, labels, prompts)
        return load_game_config(bundle)


SIMS = {"card": CardSim, "merge": MergeSim, "dialog": DialogSim}


def make_sim(game: str, seed: int | None = None):
    if game not in SIMS:
        raise KeyError(f"unknown sim game {game!r}; choose from {sorted(SIMS)}")
    return SIMS[game]() if seed is None else SIMS[game](seed)
