"""Config bundles: the no-code unit that adapts the runtime to one game.

A bundle is a directory: ``game.json`` manifest, cue pairs under ``cues/``
(``<event_id>.png`` + ``<event_id>.txt``), template images under
``templates/``, per-state element maps under ``maps/``, ``hotkeys.json``,
prompt texts under ``prompts/``, language files under ``labels/`` and the
two player profiles. Everything is validated at load; a loaded GameConfig
is immutable and shareable.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
import numpy as np
from PIL import Image

from astra.geometry import FULL_FRAME, BadBlock, NormalizedBlock, denormalize

__all__ = [
    "Element",
    "ElementMap",
    "VisualCue",
    "HotkeyBinding",
    "HotkeyOptions",
    "Profile",
    "ChangeConfig",
    "DetectConfig",
    "GameConfig",
    "Finding",
    "ValidationReport",
    "ConfigError",
    "MissingFile",
    "SchemaViolation",
    "DanglingStateRef",
    "BadBlock",
    "UnknownLabelKey",
    "load_game_config",
    "validate_bundle",
    "validate_config",
    "save_game_config",
    "resolve_label",
    "label_or",
    "canonicalize_chord",
    "denormalize",
    "structurally_equal",
]

log = logging.getLogger(__name__)

UNKNOWN_STATE = "unknown"
DEFAULT_LANGUAGE = "en"

HOTKEY_KINDS = ("describe_region", "click_block", "state_query", "replay_last", "pause_resume")
PROVENANCES = ("parser", "manual", "ocr")
MODIFIERS = ("<alt>", "<ctrl>", "<shift>")


class ConfigError(Exception):
    """Base for bundle loading failures; carries a JSON-pointer-ish locator."""

    def __init__(self, message: str, pointer: str = ""):
        super().__init__(f"{pointer}: {message}" if pointer else message)
        self.pointer = pointer


class MissingFile(ConfigError):
    pass


class SchemaViolation(ConfigError):
    pass


class DanglingStateRef(ConfigError):
    pass


class UnknownLabelKey(KeyError):
    pass


def canonicalize_chord(chord: str) -> str:
    """Normalize a key chord to sorted-modifier lowercase form.

    Grammar: ``(<ctrl>|<alt>|<shift>)*+<key>``, e.g. ``<alt>+f``.
    """
    parts = [p.strip().lower() for p in chord.split("+") if p.strip()]
    mods = sorted(p for p in parts if p in MODIFIERS)
    keys = [p for p in parts if p not in MODIFIERS]
    if len(keys) != 1 or not keys[0]:
        raise SchemaViolation(f"chord {chord!r} must contain exactly one non-modifier key")
    return "+".join(mods + keys)


@dataclass(frozen=True)
class Element:
    block: NormalizedBlock
    content: str
    interactivity: bool
    provenance: str = "manual"


@dataclass(frozen=True)
class ElementMap:
    state_id: str
    elements: tuple[Element, ...]


@dataclass(eq=False)
class VisualCue:
    event_id: str
    image: np.ndarray  # HxWx3 uint8 exemplar
    region: NormalizedBlock
    message: str
    severity: str = "normal"  # critical | normal


@dataclass(frozen=True)
class HotkeyOptions:
    block: NormalizedBlock | None = None
    prompt: str | None = None
    label: str | None = None


@dataclass(frozen=True)
class HotkeyBinding:
    key: str  # canonical chord
    id: str
    kind: str
    options: HotkeyOptions = HotkeyOptions()
    active_states: frozenset[str] = frozenset()  # empty = all states


@dataclass(frozen=True)
class Profile:
    mode: str  # blind | low_vision
    input: str  # keyboard | mouse+keyboard
    verbosity: str = "brief"  # brief | rich
    ocr_hover_enabled: bool = False


DEFAULT_PROFILES = {
    "blind": Profile(mode="blind", input="keyboard", verbosity="brief"),
    "low_vision": Profile(
        mode="low_vision", input="mouse+keyboard", verbosity="rich", ocr_hover_enabled=True
    ),
}


@dataclass(frozen=True)
class ChangeConfig:
    enabled: bool = True
    threshold1: float = 0.3
    threshold2: float = 0.7
    blocks: tuple[NormalizedBlock, ...] = ()


@dataclass(frozen=True)
class DetectConfig:
    tau: float = 0.85  # template match acceptance
    accept: float = 0.60  # cue classification acceptance
    debounce_n: int = 2
    nms_iou: float = 0.3


@dataclass(eq=False)
class GameConfig:
    game_id: str
    cues: tuple[VisualCue, ...] = ()
    templates: dict[str, np.ndarray] = field(default_factory=dict)
    element_maps: dict[str, ElementMap] = field(default_factory=dict)
    hotkeys: tuple[HotkeyBinding, ...] = ()
    prompts: dict[str, str] = field(default_factory=dict)
    labels: dict[str, dict[str, str]] = field(default_factory=dict)  # lang -> key -> text
    change: ChangeConfig = ChangeConfig()
    detect: DetectConfig = DetectConfig()
    profiles: dict[str, Profile] = field(default_factory=lambda: dict(DEFAULT_PROFILES))
    default_language: str = DEFAULT_LANGUAGE

    def state_ids(self) -> frozenset[str]:
        return frozenset(c.event_id for c in self.cues) | {UNKNOWN_STATE}

    def cue_by_id(self, event_id: str) -> VisualCue | None:
        for cue in self.cues:
            if cue.event_id == event_id:
                return cue
        return None


@dataclass(frozen=True)
class Finding:
    code: str
    severity: str  # error | warning
    pointer: str
    message: str


@dataclass
class ValidationReport:
    findings: list[Finding] = field(default_factory=list)

    @property
    def errors(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list[Finding]:
        return [f for f in self.findings if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, code: str, severity: str, pointer: str, message: str) -> None:
        self.findings.append(Finding(code, severity, pointer, message))


_ERROR_TYPES = {
    "MissingFile": MissingFile,
    "SchemaViolation": SchemaViolation,
    "DanglingStateRef": DanglingStateRef,
    "BadBlock": BadBlock,
}


def _raise_first(report: ValidationReport) -> None:
    if report.ok:
        return
    first = report.errors[0]
    exc_type = _ERROR_TYPES.get(first.code, SchemaViolation)
    if exc_type is BadBlock:
        raise BadBlock(f"{first.pointer}: {first.message}")
    raise exc_type(first.message, pointer=first.pointer)


def _read_json(path: Path, report: ValidationReport, pointer: str):
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        report.add("MissingFile", "error", pointer, f"missing file {path.name}")
    except json.JSONDecodeError as exc:
        report.add("SchemaViolation", "error", pointer, f"invalid JSON in {path.name}: {exc}")
    return None


def _read_image(path: Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def _parse_block(raw, report: ValidationReport, pointer: str) -> NormalizedBlock | None:
    try:
        return NormalizedBlock.from_list(raw)
    except BadBlock as exc:
        report.add("BadBlock", "error", pointer, str(exc))
        return None


def _parse_element(raw, report: ValidationReport, pointer: str) -> Element | None:
    if not isinstance(raw, dict):
        report.add("SchemaViolation", "error", pointer, "element must be an object")
        return None
    block = _parse_block(raw.get("block"), report, pointer + "/block")
    if block is None:
        return None
    content = raw.get("content", "")
    if not isinstance(content, str):
        report.add("SchemaViolation", "error", pointer + "/content", "content must be a string")
        return None
    interactivity = raw.get("interactivity", False)
    if not isinstance(interactivity, bool):
        report.add(
            "SchemaViolation", "error", pointer + "/interactivity",
            "interactivity must be true or false",
        )
        return None
    provenance = raw.get("provenance", "manual")
    if provenance not in PROVENANCES:
        report.add(
            "SchemaViolation", "error", pointer + "/provenance",
            f"provenance must be one of {PROVENANCES}",
        )
        return None
    return Element(block=block, content=content, interactivity=interactivity,
                   provenance=provenance)


def _parse_hotkey(raw, report: ValidationReport, pointer: str) -> HotkeyBinding | None:
    if not isinstance(raw, dict):
        report.add("SchemaViolation", "error", pointer, "hotkey must be an object")
        return None
    try:
        key = canonicalize_chord(str(raw.get("key", "")))
    except SchemaViolation as exc:
        report.add("SchemaViolation", "error", pointer + "/key", str(exc))
        return None
    kind = raw.get("kind")
    if kind not in HOTKEY_KINDS:
        report.add("SchemaViolation", "error", pointer + "/kind",
                   f"kind must be one of {HOTKEY_KINDS}, got {kind!r}")
        return None
    opts_raw = raw.get("options", {}) or {}
    block = None
    if "block" in opts_raw:
        block = _parse_block(opts_raw["block"], report, pointer + "/options/block")
        if block is None:
            return None
    if kind in ("click_block", "describe_region") and block is None:
        report.add("SchemaViolation", "error", pointer + "/options/block",
                   f"kind {kind} requires options.block")
        return None
    options = HotkeyOptions(block=block, prompt=opts_raw.get("prompt"),
                            label=opts_raw.get("label"))
    states = raw.get("active_states", [])
    if not isinstance(states, list) or not all(isinstance(s, str) for s in states):
        report.add("SchemaViolation", "error", pointer + "/active_states",
                   "active_states must be a list of state ids")
        return None
    return HotkeyBinding(key=key, id=str(raw.get("id", "")), kind=kind, options=options,
                         active_states=frozenset(states))


def _parse_profile(raw, report: ValidationReport, pointer: str) -> Profile | None:
    mode = raw.get("mode")
    if mode not in ("blind", "low_vision"):
        report.add("SchemaViolation", "error", pointer + "/mode",
                   "mode must be blind or low_vision")
        return None
    input_kind = raw.get("input", "keyboard")
    if input_kind not in ("keyboard", "mouse+keyboard"):
        report.add("SchemaViolation", "error", pointer + "/input",
                   "input must be keyboard or mouse+keyboard")
        return None
    if mode == "blind" and input_kind != "keyboard":
        report.add("SchemaViolation", "error", pointer + "/input",
                   "blind profile requires keyboard input")
        return None
    verbosity = raw.get("verbosity", "brief")
    if verbosity not in ("brief", "rich"):
        report.add("SchemaViolation", "error", pointer + "/verbosity",
                   "verbosity must be brief or rich")
        return None
    return Profile(mode=mode, input=input_kind, verbosity=verbosity,
                   ocr_hover_enabled=bool(raw.get("ocr_hover_enabled", mode == "low_vision")))


def _load_bundle(bundle_path: str | Path, report: ValidationReport) -> GameConfig | None:
    bundle = Path(bundle_path)
    manifest_path = bundle / "game.json"
    if not bundle.is_dir() or not manifest_path.is_file():
        report.add("MissingFile", "error", "/game.json", f"no manifest at {manifest_path}")
        return None
    manifest = _read_json(manifest_path, report, "/game.json")
    if manifest is None:
        return None
    if not isinstance(manifest, dict) or not isinstance(manifest.get("game_id"), str):
        report.add("SchemaViolation", "error", "/game.json/game_id",
                   "manifest requires a string game_id")
        return None

    game_id = manifest["game_id"]
    default_language = manifest.get("default_language", DEFAULT_LANGUAGE)

    change_raw = manifest.get("change", {})
    blocks = []
    for i, b in enumerate(change_raw.get("blocks", []) or []):
        block = _parse_block(b, report, f"/game.json/change/blocks/{i}")
        if block is not None:
            blocks.append(block)
    t1 = float(change_raw.get("threshold1", 0.3))
    t2 = float(change_raw.get("threshold2", 0.7))
    if not (0.0 <= t1 <= t2 <= 1.0):
        report.add("SchemaViolation", "error", "/game.json/change/threshold1",
                   f"need 0 <= threshold1 <= threshold2 <= 1, got {t1}, {t2}")
        t1, t2 = 0.3, 0.7
    change = ChangeConfig(enabled=bool(change_raw.get("enabled", True)),
                          threshold1=t1, threshold2=t2, blocks=tuple(blocks))

    detect_raw = manifest.get("detect", {})
    detect = DetectConfig(
        tau=float(detect_raw.get("tau", 0.85)),
        accept=float(detect_raw.get("accept", 0.60)),
        debounce_n=int(detect_raw.get("debounce_n", 2)),
        nms_iou=float(detect_raw.get("nms_iou", 0.3)),
    )

    # Cues: manifest entries carry region/severity; bare file pairs dropped
    # into cues/ are accepted with a full-frame region.
    cues: list[VisualCue] = []
    seen_ids: set[str] = set()
    cue_dir = bundle / "cues"
    manifest_cues = manifest.get("cues", [])
    for i, raw in enumerate(manifest_cues):
        pointer = f"/game.json/cues/{i}"
        event_id = raw.get("event_id") if isinstance(raw, dict) else None
        if not event_id:
            report.add("SchemaViolation", "error", pointer, "cue requires event_id")
            continue
        if event_id in seen_ids:
            report.add("SchemaViolation", "error", pointer,
                       f"duplicate cue event_id {event_id!r}")
            continue
        region = FULL_FRAME
        if "region" in raw:
            parsed = _parse_block(raw["region"], report, pointer + "/region")
            if parsed is None:
                continue
            region = parsed
        severity = raw.get("severity", "normal")
        if severity not in ("critical", "normal"):
            report.add("SchemaViolation", "error", pointer + "/severity",
                       "severity must be critical or normal")
            continue
        png, txt = cue_dir / f"{event_id}.png", cue_dir / f"{event_id}.txt"
        if not png.is_file() or not txt.is_file():
            report.add("MissingFile", "error", pointer,
                       f"cue {event_id!r} requires paired files {png.name} and {txt.name}")
            continue
        message = txt.read_text(encoding="utf-8").strip()
        if not message:
            report.add("SchemaViolation", "error", pointer, f"cue {event_id!r} message is empty")
            continue
        cues.append(VisualCue(event_id=event_id, image=_read_image(png), region=region,
                              message=message, severity=severity))
        seen_ids.add(event_id)
    if cue_dir.is_dir():
        for png in sorted(cue_dir.glob("*.png")):
            event_id = png.stem
            if event_id in seen_ids:
                continue
            txt = cue_dir / f"{event_id}.txt"
            if not txt.is_file():
                report.add("MissingFile", "error", f"/cues/{event_id}",
                           f"cue image {png.name} has no paired {txt.name}")
                continue
            message = txt.read_text(encoding="utf-8").strip()
            if not message:
                report.add("SchemaViolation", "error", f"/cues/{event_id}",
                           f"cue {event_id!r} message is empty")
                continue
            cues.append(VisualCue(event_id=event_id, image=_read_image(png),
                                  region=FULL_FRAME, message=message))
            seen_ids.add(event_id)

    templates: dict[str, np.ndarray] = {}
    tpl_dir = bundle / "templates"
    if tpl_dir.is_dir():
        for png in sorted(tpl_dir.glob("*.png")):
            templates[png.stem] = _read_image(png)

    element_maps: dict[str, ElementMap] = {}
    maps_dir = bundle / "maps"
    if maps_dir.is_dir():
        for map_path in sorted(maps_dir.glob("*.json")):
            state_id = map_path.stem
            raw = _read_json(map_path, report, f"/maps/{map_path.name}")
            if raw is None:
                continue
            raw_elements = raw.get("elements", raw if isinstance(raw, list) else [])
            elements = []
            for i, e in enumerate(raw_elements):
                parsed = _parse_element(e, report, f"/maps/{map_path.name}/elements/{i}")
                if parsed is not None:
                    elements.append(parsed)
            element_maps[state_id] = ElementMap(state_id=state_id, elements=tuple(elements))

    hotkeys: list[HotkeyBinding] = []
    hotkeys_path = bundle / "hotkeys.json"
    if hotkeys_path.is_file():
        raw = _read_json(hotkeys_path, report, "/hotkeys.json")
        if raw is not None:
            if not isinstance(raw, list):
                report.add("SchemaViolation", "error", "/hotkeys.json",
                           "hotkeys.json must hold a list")
            else:
                for i, h in enumerate(raw):
                    parsed = _parse_hotkey(h, report, f"/hotkeys.json/{i}")
                    if parsed is not None:
                        hotkeys.append(parsed)

    prompts: dict[str, str] = {}
    prompts_dir = bundle / "prompts"
    if prompts_dir.is_dir():
        for txt in sorted(prompts_dir.glob("*.txt")):
            prompts[txt.stem] = txt.read_text(encoding="utf-8")

    labels: dict[str, dict[str, str]] = {}
    labels_dir = bundle / "labels"
    if labels_dir.is_dir():
        for label_path in sorted(labels_dir.glob("label_*.json")):
            tag = label_path.stem[len("label_"):]
            raw = _read_json(label_path, report, f"/labels/{label_path.name}")
            if isinstance(raw, dict):
                labels[tag] = {str(k): str(v) for k, v in raw.items()}

    profiles = dict(DEFAULT_PROFILES)
    for mode in ("blind", "low_vision"):
        prof_path = bundle / f"profile_{mode}.json"
        if prof_path.is_file():
            raw = _read_json(prof_path, report, f"/profile_{mode}.json")
            if raw is not None:
                parsed = _parse_profile(raw, report, f"/profile_{mode}.json")
                if parsed is not None:
                    profiles[mode] = parsed

    config = GameConfig(
        game_id=game_id,
        cues=tuple(cues),
        templates=templates,
        element_maps=element_maps,
        hotkeys=tuple(hotkeys),
        prompts=prompts,
        labels=labels,
        change=change,
        detect=detect,
        profiles=profiles,
        default_language=default_language,
    )
    _semantic_checks(config, report)
    return config


def _semantic_checks(config: GameConfig, report: ValidationReport) -> None:
    states = config.state_ids()
    for i, binding in enumerate(config.hotkeys):
        for state in sorted(binding.active_states):
            if state not in states:
                report.add("DanglingStateRef", "error", f"/hotkeys.json/{i}/active_states",
                           f"hotkey {binding.id!r} references undeclared state {state!r}")
    for state_id in config.element_maps:
        if state_id not in states:
            report.add("DanglingStateRef", "error", f"/maps/{state_id}.json",
                       f"element map references undeclared state {state_id!r}")
    for state_id, emap in config.element_maps.items():
        seen: set[tuple] = set()
        for i, element in enumerate(emap.elements):
            key = (element.block, element.content)
            if key in seen:
                report.add("DuplicateElement", "error",
                           f"/maps/{state_id}.json/elements/{i}",
                           f"duplicate element {element.content!r} at {element.block.to_list()}")
            seen.add(key)
            if element.interactivity and not element.content:
                report.add("EmptyContent", "warning",
                           f"/maps/{state_id}.json/elements/{i}",
                           "interactive element has no content yet (OCR may fill it)")
    # Same chord + overlapping activation states cannot be dispatched uniquely.
    for i, a in enumerate(config.hotkeys):
        for j in range(i + 1, len(config.hotkeys)):
            b = config.hotkeys[j]
            if a.key != b.key:
                continue
            overlap = (not a.active_states or not b.active_states
                       or a.active_states & b.active_states)
            if overlap:
                report.add("AmbiguousBinding", "error", f"/hotkeys.json/{j}",
                           f"hotkeys {a.id!r} and {b.id!r} share chord {a.key!r} "
                           "in overlapping states")
    if not config.cues:
        report.add("NoCues", "warning", "/game.json/cues",
                   "bundle declares no visual cues (general-mode-only bundle)")


def load_game_config(bundle_path: str | Path) -> GameConfig:
    """Load and fully validate a bundle; raise the first error found."""
    report = ValidationReport()
    config = _load_bundle(bundle_path, report)
    _raise_first(report)
    assert config is not None
    return config


def validate_bundle(bundle_path: str | Path) -> ValidationReport:
    """Like load, but collect findings instead of raising."""
    report = ValidationReport()
    _load_bundle(bundle_path, report)
    return report


def validate_config(config: GameConfig) -> ValidationReport:
    """Pure semantic validation of an in-memory config."""
    report = ValidationReport()
    _semantic_checks(config, report)
    return report


def resolve_label(config: GameConfig, key: str, language: str) -> str:
    """Localized text for ``key``: requested language, then the bundle
    default, then the key itself as a literal (with a warning)."""
    if not any(key in table for table in config.labels.values()):
        raise UnknownLabelKey(key)
    table = config.labels.get(language)
    if table and key in table:
        return table[key]
    table = config.labels.get(config.default_language)
    if table and key in table:
        return table[key]
    log.warning("label %r missing for %r and default %r; using key literal",
                key, language, config.default_language)
    return key


def label_or(config: GameConfig, key: str, language: str, default_text: str) -> str:
    """resolve_label variant for built-in keys a bundle may omit."""
    try:
        return resolve_label(config, key, language)
    except UnknownLabelKey:
        return default_text


def _write_image(path: Path, image: np.ndarray) -> None:
    Image.fromarray(image, mode="RGB").save(path)


def save_game_config(config: GameConfig, bundle_path: str | Path) -> None:
    """Write a bundle directory that loads back structurally equal."""
    bundle = Path(bundle_path)
    bundle.mkdir(parents=True, exist_ok=True)
    manifest = {
        "game_id": config.game_id,
        "default_language": config.default_language,
        "change": {
            "enabled": config.change.enabled,
            "threshold1": config.change.threshold1,
            "threshold2": config.change.threshold2,
            "blocks": [b.to_list() for b in config.change.blocks],
        },
        "detect": {
            "tau": config.detect.tau,
            "accept": config.detect.accept,
            "debounce_n": config.detect.debounce_n,
            "nms_iou": config.detect.nms_iou,
        },
        "cues": [
            {"event_id": c.event_id, "region": c.region.to_list(), "severity": c.severity}
            for c in config.cues
        ],
    }
    (bundle / "game.json").write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    cue_dir = bundle / "cues"
    cue_dir.mkdir(exist_ok=True)
    for cue in config.cues:
        _write_image(cue_dir / f"{cue.event_id}.png", cue.image)
        (cue_dir / f"{cue.event_id}.txt").write_text(cue.message, encoding="utf-8")
    if config.templates:
        tpl_dir = bundle / "templates"
        tpl_dir.mkdir(exist_ok=True)
        for name, image in config.templates.items():
            _write_image(tpl_dir / f"{name}.png", image)
    if config.element_maps:
        maps_dir = bundle / "maps"
        maps_dir.mkdir(exist_ok=True)
        for state_id, emap in config.element_maps.items():
            payload = {
                "state_id": state_id,
                "elements": [
                    {
                        "block": e.block.to_list(),
                        "content": e.content,
                        "interactivity": e.interactivity,
                        "provenance": e.provenance,
                    }
                    for e in emap.elements
                ],
            }
            (maps_dir / f"{state_id}.json").write_text(json.dumps(payload, indent=2),
                                                       encoding="utf-8")
    if config.hotkeys:
        payload = []
        for b in config.hotkeys:
            entry: dict = {"key": b.key, "id": b.id, "kind": b.kind}
            options = {}
            if b.options.block is not None:
                options["block"] = b.options.block.to_list()
            if b.options.prompt is not None:
                options["prompt"] = b.options.prompt
            if b.options.label is not None:
                options["label"] = b.options.label
            if options:
                entry["options"] = options
            if b.active_states:
                entry["active_states"] = sorted(b.active_states)
            payload.append(entry)
        (bundle / "hotkeys.json").write_text(json.dumps(payload, indent=2), encoding="utf-8")
    if config.prompts:
        prompts_dir = bundle / "prompts"
        prompts_dir.mkdir(exist_ok=True)
        for key, text in config.prompts.items():
            (prompts_dir / f"{key}.txt").write_text(text, encoding="utf-8")
    if config.labels:
        labels_dir = bundle / "labels"
        labels_dir.mkdir(exist_ok=True)
        for tag, table in config.labels.items():
            (labels_dir / f"label_{tag}.json").write_text(
                json.dumps(table, indent=2, ensure_ascii=False, sort_keys=True),
                encoding="utf-8")
    for mode, profile in config.profiles.items():
        (bundle / f"profile_{mode}.json").write_text(
            json.dumps(
                {
                    "mode": profile.mode,
                    "input": profile.input,
                    "verbosity": profile.verbosity,
                    "ocr_hover_enabled": profile.ocr_hover_enabled,
                },
                indent=2,
            ),
            encoding="utf-8")


def structurally_equal(a: GameConfig, b: GameConfig) -> bool:
    """Field-wise equality, comparing images by pixel content."""
    if (a.game_id, a.default_language, a.change, a.detect) != (
            b.game_id, b.default_language, b.change, b.detect):
        return False
    if a.hotkeys != b.hotkeys or a.element_maps != b.element_maps:
        return False
    if a.prompts != b.prompts or a.labels != b.labels or a.profiles != b.profiles:
        return False
    if len(a.cues) != len(b.cues) or set(a.templates) != set(b.templates):
        return False
    for ca, cb in zip(sorted(a.cues, key=lambda c: c.event_id),
                      sorted(b.cues, key=lambda c: c.event_id)):
        if (ca.event_id, ca.region, ca.message, ca.severity) != (
                cb.event_id, cb.region, cb.message, cb.severity):
            return False
        if not np.array_equal(ca.image, cb.image):
            return False
    for name in a.templates:
        if not np.array_equal(a.templates[name], b.templates[name]):
            return False
    return True


def with_prompts(config: GameConfig, prompts: dict[str, str]) -> GameConfig:
    """Copy of ``config`` with ``prompts`` merged in (adapter fragments)."""
    merged = dict(config.prompts)
    merged.update(prompts)
    return replace(config, prompts=merged)
