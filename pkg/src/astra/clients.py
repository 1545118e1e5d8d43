"""Wire-protocol clients for the external services (OCR, object detector,
VLM, ASR, TTS) plus deterministic in-process mocks for offline runs.

One protocol fits all: HTTP POST with a JSON body, images as base64 PNG.
Mocks implement the same transport interface at the request-bytes level,
so identical request bytes always produce identical response bytes.
"""

from __future__ import annotations

import base64
import hashlib
import io
import json
import logging
import threading
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)


class ClientError(RuntimeError):
    pass


class ClientUnavailable(ClientError):
    pass


class Timeout(ClientError):
    pass


class HttpError(ClientError):
    def __init__(self, status: int, message: str = ""):
        super().__init__(f"HTTP {status}{f': {message}' if message else ''}")
        self.status = status


class MalformedResponse(ClientError):
    pass


@dataclass(frozen=True)
class ServiceEndpoint:
    base_url: str
    timeout_ms: int = 3000
    retries: int = 1

    def __post_init__(self) -> None:
        if self.timeout_ms <= 0:
            raise ValueError("timeout_ms must be > 0")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


class TokenLedger:
    """Thread-safe cumulative usage counters per service."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._usage: dict[str, dict[str, int]] = {}

    def record(self, service: str, input_tokens: int = 0, output_tokens: int = 0) -> None:
        with self._lock:
            entry = self._usage.setdefault(
                service, {"input_tokens": 0, "output_tokens": 0, "call_count": 0})
            entry["input_tokens"] += input_tokens
            entry["output_tokens"] += output_tokens
            entry["call_count"] += 1

    def totals(self, service: str) -> dict[str, int]:
        with self._lock:
            return dict(self._usage.get(
                service, {"input_tokens": 0, "output_tokens": 0, "call_count": 0}))

    def call_count(self, service: str) -> int:
        return self.totals(service)["call_count"]


def encode_image(pixels: np.ndarray) -> str:
    """Base64 of a lossless PNG encoding of an RGB array."""
    buf = io.BytesIO()
    Image.fromarray(np.asarray(pixels, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def decode_image(b64: str) -> np.ndarray:
    with Image.open(io.BytesIO(base64.b64decode(b64))) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


class Transport:
    """Takes serialized request bytes, returns response bytes."""

    def post(self, path: str, body: bytes) -> bytes:
        raise NotImplementedError


class HttpTransport(Transport):
    def __init__(self, endpoint: ServiceEndpoint, bearer_token: str | None = None):
        self.endpoint = endpoint
        self.bearer_token = bearer_token

    def post(self, path: str, body: bytes) -> bytes:
        url = self.endpoint.base_url.rstrip("/") + path
        headers = {"Content-Type": "application/json"}
        if self.bearer_token:
            headers["Authorization"] = f"Bearer {self.bearer_token}"
        last_error: ClientError | None = None
        for _ in range(self.endpoint.retries + 1):
            request = urllib.request.Request(url, data=body, headers=headers, method="POST")
            try:
                with urllib.request.urlopen(
                        request, timeout=self.endpoint.timeout_ms / 1000.0) as response:
                    return response.read()
            except urllib.error.HTTPError as exc:
                last_error = HttpError(exc.code, exc.reason)
                if exc.code < 500:
                    break
            except urllib.error.URLError as exc:
                if isinstance(exc.reason, TimeoutError) or "timed out" in str(exc.reason):
                    last_error = Timeout(str(exc.reason))
                else:
                    last_error = ClientUnavailable(str(exc.reason))
                    break
            except TimeoutError as exc:
                last_error = Timeout(str(exc))
        assert last_error is not None
        raise last_error


def _parse_json(raw: bytes) -> dict:
    try:
        payload = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedResponse(f"response is not JSON: {exc}")
    if not isinstance(payload, dict):
        raise MalformedResponse("response must be a JSON object")
    return payload


class OcrClient:
    """POST /ocr {"image_b64": ...} -> {"items": [{"text", "box", "conf"}]}"""

    path = "/ocr"
    service = "ocr"

    def __init__(self, transport: Transport, ledger: TokenLedger | None = None):
        self.transport = transport
        self.ledger = ledger

    def recognize(self, pixels: np.ndarray) -> list[dict]:
        if pixels.size == 0:
            raise ValueError("image must be non-empty")
        body = json.dumps({"image_b64": encode_image(pixels)}).encode("utf-8")
        payload = _parse_json(self.transport.post(self.path, body))
        items = payload.get("items")
        if not isinstance(items, list):
            raise MalformedResponse("OCR response lacks items list")
        for item in items:
            if not isinstance(item, dict) or "text" not in item or "box" not in item:
                raise MalformedResponse(f"bad OCR item {item!r}")
        if self.ledger is not None:
            self.ledger.record(self.service)
        return items


class DetectorClient(OcrClient):
    """Optional external object detector; OCR response shape plus a class name."""

    path = "/detect"
    service = "detector"

    def recognize(self, pixels: np.ndarray) -> list[dict]:
        items = super().recognize(pixels)
        for item in items:
            if "class" not in item:
                raise MalformedResponse(f"detector item lacks class: {item!r}")
        return items


class VlmClient:
    """POST /vlm {"image_b64", "prompt"} -> {"text", "usage": {"in", "out"}}"""

    path = "/vlm"
    service = "vlm"

    def __init__(self, transport: Transport, ledger: TokenLedger | None = None):
        self.transport = transport
        self.ledger = ledger

    def describe(self, pixels: np.ndarray, prompt: str) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        body = json.dumps({"image_b64": encode_image(pixels),
                           "prompt": prompt}).encode("utf-8")
        payload = _parse_json(self.transport.post(self.path, body))
        usage = payload.get("usage")
        if ("text" not in payload or not isinstance(usage, dict)
                or "in" not in usage or "out" not in usage):
            raise MalformedResponse("VLM response requires text and usage.in/usage.out")
        if self.ledger is not None:
            self.ledger.record(self.service, int(usage["in"]), int(usage["out"]))
        return str(payload["text"])


class AsrClient:
    """POST /asr {"audio_b64", "hotwords"} -> {"text"}"""

    path = "/asr"
    service = "asr"

    def __init__(self, transport: Transport, hotwords: list[str] | None = None,
                 ledger: TokenLedger | None = None):
        self.transport = transport
        self.hotwords = list(hotwords or [])
        self.ledger = ledger

    def transcribe(self, audio: bytes) -> str:
        if not audio:
            raise ValueError("audio must be non-empty")
        body = json.dumps({"audio_b64": base64.b64encode(audio).decode("ascii"),
                           "hotwords": self.hotwords}).encode("utf-8")
        payload = _parse_json(self.transport.post(self.path, body))
        if "text" not in payload:
            raise MalformedResponse("ASR response lacks text")
        if self.ledger is not None:
            self.ledger.record(self.service)
        return str(payload["text"])


class TtsClient:
    """POST /tts {"text", "gl", "gr", "pitch_st", "delay_ms"} -> {"ok": true}

    Implements the Speaker interface consumed by the speech queue. A timed-out
    utterance is retried once, then dropped with a warning.
    """

    path = "/tts"
    service = "tts"

    def __init__(self, transport: Transport, ledger: TokenLedger | None = None):
        self.transport = transport
        self.ledger = ledger
        self.dropped: list[str] = []

    def speak(self, item, t_ms: int) -> None:
        spatial = item.spatial
        body = json.dumps({
            "text": item.text,
            "gl": spatial.gain_left if spatial else 0.7071067811865476,
            "gr": spatial.gain_right if spatial else 0.7071067811865476,
            "pitch_st": spatial.pitch_shift if spatial else 0.0,
            "delay_ms": spatial.onset_delay if spatial else 0.0,
        }).encode("utf-8")
        for attempt in range(2):
            try:
                payload = _parse_json(self.transport.post(self.path, body))
                if payload.get("ok") is not True:
                    raise MalformedResponse("TTS response lacks ok=true")
                if self.ledger is not None:
                    self.ledger.record(self.service)
                return
            except Timeout:
                if attempt == 1:
                    self.dropped.append(item.text)
                    log.warning("TTS timed out twice; dropping utterance %r", item.text)

    def busy(self) -> bool:
        return False

    def stop(self) -> None:
        pass


# ---------------------------------------------------------------------------
# Deterministic mocks


def _image_hash(b64: str) -> str:
    return hashlib.sha256(base64.b64decode(b64)).hexdigest()[:16]


class MockTransport(Transport):
    """Base for in-process mocks; records request bytes per path."""

    def __init__(self) -> None:
        self.requests: list[tuple[str, bytes]] = []

    def post(self, path: str, body: bytes) -> bytes:
        self.requests.append((path, body))
        return self.respond(path, json.loads(body.decode("utf-8")))

    def respond(self, path: str, payload: dict) -> bytes:
        raise NotImplementedError


class MockOcrTransport(MockTransport):
    """Serves canned OCR items keyed by image content hash; empty otherwise."""

    def __init__(self, by_image_hash: dict[str, list[dict]] | None = None):
        super().__init__()
        self.by_image_hash = by_image_hash or {}

    def respond(self, path: str, payload: dict) -> bytes:
        items = self.by_image_hash.get(_image_hash(payload["image_b64"]), [])
        return json.dumps({"items": items}, sort_keys=True).encode("utf-8")


class MockVlmTransport(MockTransport):
    """Canned VLM: text keyed by (image hash, prompt), with declared usage.

    Unknown pairs get a deterministic synthesized description so sessions
    never stall offline.
    """

    def __init__(self, canned: dict[tuple[str, str], str] | None = None,
                 usage_in: int = 100, usage_out: int = 20):
        super().__init__()
        self.canned = canned or {}
        self.usage_in = usage_in
        self.usage_out = usage_out
        self.call_count = 0
        self.served_in = 0
        self.served_out = 0

    def respond(self, path: str, payload: dict) -> bytes:
        image_hash = _image_hash(payload["image_b64"])
        text = self.canned.get((image_hash, payload["prompt"]))
        if text is None:
            text = f"Scene {image_hash[:8]}."
        self.call_count += 1
        self.served_in += self.usage_in
        self.served_out += self.usage_out
        return json.dumps(
            {"text": text, "usage": {"in": self.usage_in, "out": self.usage_out}},
            sort_keys=True).encode("utf-8")


class MockAsrTransport(MockTransport):
    """Returns transcripts from a script, keyed by audio content hash when
    provided, else in submission order."""

    def __init__(self, script: list[str] | None = None,
                 by_audio_hash: dict[str, str] | None = None):
        super().__init__()
        self.script = list(script or [])
        self.by_audio_hash = by_audio_hash or {}
        self._cursor = 0

    def respond(self, path: str, payload: dict) -> bytes:
        audio = base64.b64decode(payload["audio_b64"])
        audio_hash = hashlib.sha256(audio).hexdigest()[:16]
        if audio_hash in self.by_audio_hash:
            text = self.by_audio_hash[audio_hash]
        elif self._cursor < len(self.script):
            text = self.script[self._cursor]
            self._cursor += 1
        else:
            # Harness convention: scripted utterances carry their own text
            # as the audio payload.
            try:
                text = audio.decode("utf-8")
            except UnicodeDecodeError:
                text = ""
        return json.dumps({"text": text}, sort_keys=True).encode("utf-8")


class MockTtsTransport(MockTransport):
    def respond(self, path: str, payload: dict) -> bytes:
        return b'{"ok": true}'


class TranscriptSpeaker:
    """Test speech backend: appends one JSONL record per utterance instead
    of synthesizing audio. Implements the Speaker interface."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path is not None else None
        self.records: list[dict] = []

    def speak(self, item, t_ms: int) -> None:
        spatial = item.spatial
        record = {
            "t_ms": t_ms,
            "text": item.text,
            "priority": item.priority,
            "gl": spatial.gain_left if spatial else 0.7071067811865476,
            "gr": spatial.gain_right if spatial else 0.7071067811865476,
            "pitch": spatial.pitch_shift if spatial else 0.0,
            "delay": spatial.onset_delay if spatial else 0.0,
        }
        self.records.append(record)
        if self.path is not None:
            with self.path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")

    def busy(self) -> bool:
        return False

    def stop(self) -> None:
        pass


@dataclass
class ClientSet:
    """The service clients a session needs, bundled with the shared ledger."""

    ocr: OcrClient
    vlm: VlmClient
    asr: AsrClient
    speaker: object  # Speaker interface (TtsClient or TranscriptSpeaker)
    ledger: TokenLedger = field(default_factory=TokenLedger)
    detector: DetectorClient | None = None


def offline_clients(speech_log: str | Path | None = None,
                    ocr_transport: Transport | None = None,
                    vlm_transport: Transport | None = None,
                    asr_transport: Transport | None = None) -> ClientSet:
    """ClientSet wired entirely to deterministic mocks (no network)."""
    ledger = TokenLedger()
    return ClientSet(
        ocr=OcrClient(ocr_transport or MockOcrTransport(), ledger),
        vlm=VlmClient(vlm_transport or MockVlmTransport(), ledger),
        asr=AsrClient(asr_transport or MockAsrTransport(), ledger=ledger),
        speaker=TranscriptSpeaker(speech_log),
        ledger=ledger,
    )
