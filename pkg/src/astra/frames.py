"""Timestamped frames and frame sources (traces, simulators, live adapters).

Traces are bit-exact recordings: lossless PNGs plus JSONL manifests, so a
replayed session reproduces the original byte for byte.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np
from PIL import Image

from astra.geometry import NormalizedBlock, denormalize


class SourceClosed(RuntimeError):
    pass


class DecodeError(RuntimeError):
    def __init__(self, index: int, message: str):
        super().__init__(f"frame {index}: {message}")
        self.index = index


@dataclass(frozen=True)
class Frame:
    pixels: np.ndarray  # HxWx3 uint8, row-major RGB
    t_ms: int

    def __post_init__(self) -> None:
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3 or self.pixels.dtype != np.uint8:
            raise ValueError(f"frame pixels must be HxWx3 uint8, got "
                             f"{self.pixels.shape} {self.pixels.dtype}")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]


@dataclass(frozen=True)
class InputEvent:
    t_ms: int
    kind: str  # key | mouse_move | mouse_click | utterance
    key: str | None = None
    x: float | None = None  # normalized coordinates for mouse kinds
    y: float | None = None
    button: str | None = None
    audio: bytes | None = None  # raw samples for utterance events


def crop(frame: Frame, block: NormalizedBlock) -> Frame:
    """Sub-image of the denormalized rect; timestamp preserved."""
    left, top, right, bottom = denormalize(block, frame.width, frame.height)
    return Frame(pixels=np.ascontiguousarray(frame.pixels[top:bottom, left:right]),
                 t_ms=frame.t_ms)


class FrameSource:
    """Base frame source: iterate frames in strictly increasing timestamp order."""

    kind = "live"
    nominal_rate: float = 10.0

    def __init__(self) -> None:
        self._closed = False
        self._last_t: int | None = None

    def _produce(self) -> Frame | None:
        raise NotImplementedError

    def next_frame(self) -> Frame | None:
        """Next frame, or None at end of stream."""
        if self._closed:
            raise SourceClosed("source is closed")
        frame = self._produce()
        if frame is None:
            return None
        if self._last_t is not None and frame.t_ms <= self._last_t:
            raise ValueError(f"timestamps must strictly increase "
                             f"({frame.t_ms} after {self._last_t})")
        self._last_t = frame.t_ms
        return frame

    def close(self) -> None:
        self._closed = True

    def __iter__(self) -> Iterator[Frame]:
        while True:
            frame = self.next_frame()
            if frame is None:
                return
            yield frame


class SequenceSource(FrameSource):
    """Replays a fixed frame list (simulator output, tests)."""

    kind = "simulator"

    def __init__(self, frames: list[Frame], nominal_rate: float = 10.0):
        super().__init__()
        self._frames = list(frames)
        self._pos = 0
        self.nominal_rate = nominal_rate

    def _produce(self) -> Frame | None:
        if self._pos >= len(self._frames):
            return None
        frame = self._frames[self._pos]
        self._pos += 1
        return frame


@dataclass
class Trace:
    directory: Path
    frame_count: int
    timestamps: list[int] = field(default_factory=list)
    input_events: list[InputEvent] = field(default_factory=list)


class TraceSource(FrameSource):
    """Replays a recorded trace directory bit-exactly."""

    kind = "trace"

    def __init__(self, directory: str | Path):
        super().__init__()
        self.directory = Path(directory)
        manifest = self.directory / "manifest.jsonl"
        if not manifest.is_file():
            raise FileNotFoundError(f"no manifest.jsonl in {self.directory}")
        self._records = [json.loads(line) for line in
                         manifest.read_text(encoding="utf-8").splitlines() if line.strip()]
        self._pos = 0

    def _produce(self) -> Frame | None:
        if self._pos >= len(self._records):
            return None
        record = self._records[self._pos]
        self._pos += 1
        index, t_ms = record["i"], record["t_ms"]
        path = self.directory / "frames" / f"{index:06d}.png"
        try:
            with Image.open(path) as img:
                pixels = np.asarray(img.convert("RGB"), dtype=np.uint8)
        except FileNotFoundError:
            raise DecodeError(index, f"missing image {path.name}")
        except Exception as exc:
            raise DecodeError(index, f"cannot decode {path.name}: {exc}")
        return Frame(pixels=pixels, t_ms=t_ms)

    @property
    def input_events(self) -> list[InputEvent]:
        return load_input_events(self.directory)


def load_input_events(directory: str | Path) -> list[InputEvent]:
    path = Path(directory) / "inputs.jsonl"
    if not path.is_file():
        return []
    events = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        raw = json.loads(line)
        audio = bytes.fromhex(raw["audio_hex"]) if "audio_hex" in raw else None
        events.append(InputEvent(t_ms=raw["t_ms"], kind=raw["kind"], key=raw.get("key"),
                                 x=raw.get("x"), y=raw.get("y"), button=raw.get("button"),
                                 audio=audio))
    return events


def record_trace(source: FrameSource, events: list[InputEvent],
                 directory: str | Path) -> Trace:
    """Drain ``source`` into a replayable trace directory."""
    directory = Path(directory)
    frames_dir = directory / "frames"
    try:
        frames_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IOError(f"cannot create trace directory {directory}: {exc}")
    if not _writable(directory):
        raise IOError(f"trace directory {directory} is not writable")

    timestamps = []
    manifest_lines = []
    for index, frame in enumerate(source, start=1):
        Image.fromarray(frame.pixels, mode="RGB").save(frames_dir / f"{index:06d}.png")
        manifest_lines.append(json.dumps({"i": index, "t_ms": frame.t_ms}))
        timestamps.append(frame.t_ms)
    (directory / "manifest.jsonl").write_text("\n".join(manifest_lines) + "\n",
                                              encoding="utf-8")
    input_lines = []
    for event in events:
        record = {"t_ms": event.t_ms, "kind": event.kind}
        if event.key is not None:
            record["key"] = event.key
        if event.x is not None:
            record["x"] = event.x
        if event.y is not None:
            record["y"] = event.y
        if event.button is not None:
            record["button"] = event.button
        if event.audio is not None:
            record["audio_hex"] = event.audio.hex()
        input_lines.append(json.dumps(record))
    (directory / "inputs.jsonl").write_text(
        "\n".join(input_lines) + ("\n" if input_lines else ""), encoding="utf-8")
    return Trace(directory=directory, frame_count=len(timestamps), timestamps=timestamps,
                 input_events=list(events))


def _writable(directory: Path) -> bool:
    probe = directory / ".write_probe"
    try:
        probe.write_bytes(b"")
        probe.unlink()
        return True
    except OSError:
        return False


def trace_digest(directory: str | Path) -> str:
    """SHA-256 over all replayed frame bytes; replay-determinism check."""
    digest = hashlib.sha256()
    for frame in TraceSource(directory):
        digest.update(frame.t_ms.to_bytes(8, "little"))
        digest.update(frame.pixels.tobytes())
    return digest.hexdigest()
