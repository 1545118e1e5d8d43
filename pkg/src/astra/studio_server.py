"""Static hosting plus the bundle-export endpoint for the annotation studio.

POST /export takes the bundle as a multipart payload (one part per bundle
file, part name = relative path), writes it under the export directory,
validates it, and answers with the findings as JSON.
"""

from __future__ import annotations

import base64
import json
import logging
from email.parser import BytesParser
from email.policy import default as _email_policy
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from astra.config import validate_bundle

log = logging.getLogger(__name__)

SAFE_SUFFIXES = {".json", ".png", ".txt"}


def parse_multipart(content_type: str, body: bytes) -> dict[str, bytes]:
    """Part name (or filename) -> raw bytes."""
    header = f"Content-Type: {content_type}\r\n\r\n".encode("ascii")
    message = BytesParser(policy=_email_policy).parsebytes(header + body)
    files: dict[str, bytes] = {}
    for part in message.iter_parts():
        name = part.get_param("name", header="content-disposition") or part.get_filename()
        if not name:
            continue
        payload = part.get_payload(decode=True)
        if payload is not None:
            files[name] = payload
    return files


def write_export(files: dict[str, bytes], export_dir: Path) -> Path:
    """Write exported bundle files, refusing path escapes and odd types."""
    export_dir.mkdir(parents=True, exist_ok=True)
    root = export_dir.resolve()
    for rel_path, data in files.items():
        target = (export_dir / rel_path).resolve()
        if not str(target).startswith(str(root)):
            raise ValueError(f"refusing path escape {rel_path!r}")
        if target.suffix not in SAFE_SUFFIXES:
            raise ValueError(f"refusing file type {rel_path!r}")
        target.parent.mkdir(parents=True, exist_ok=True)
        target.write_bytes(data)
    return export_dir


def make_handler(studio_root: Path, export_dir: Path):
    class StudioHandler(SimpleHTTPRequestHandler):
        def __init__(self, *args, **kwargs):
            super().__init__(*args, directory=str(studio_root), **kwargs)

        def log_message(self, fmt, *args):  # quiet by default
            log.debug("studio: " + fmt, *args)

        def _reply_json(self, status: int, payload: dict) -> None:
            data = json.dumps(payload, ensure_ascii=False).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(data)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(data)

        def do_OPTIONS(self):  # noqa: N802 (http.server naming)
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "POST, GET, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.end_headers()

        def do_POST(self):  # noqa: N802
            if self.path.rstrip("/") != "/export":
                self._reply_json(404, {"error": "unknown endpoint"})
                return
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length)
            content_type = self.headers.get("Content-Type", "")
            try:
                if content_type.startswith("multipart/"):
                    files = parse_multipart(content_type, body)
                else:
                    raw = json.loads(body.decode("utf-8"))
                    files = {name: text.encode("utf-8")
                             for name, text in raw.get("files", {}).items()}
                    for name, b64 in raw.get("files_b64", {}).items():
                        files[name] = base64.b64decode(b64)
                if not files:
                    raise ValueError("export contained no files")
                bundle_dir = write_export(files, export_dir)
            except (ValueError, json.JSONDecodeError) as exc:
                self._reply_json(400, {"error": str(exc)})
                return
            report = validate_bundle(bundle_dir)
            self._reply_json(200, {
                "bundle": str(bundle_dir),
                "ok": report.ok,
                "findings": [
                    {"code": f.code, "severity": f.severity, "pointer": f.pointer,
                     "message": f.message}
                    for f in report.findings
                ],
            })

    return StudioHandler


def default_studio_root() -> Path:
    package_root = Path(__file__).resolve().parents[2]
    for candidate in (package_root / "frontend" / "dist",
                      package_root / "frontend" / "public"):
        if candidate.is_dir():
            return candidate
    return package_root


def make_server(port: int, studio_root: str | Path | None = None,
                export_dir: str | Path = "studio_exports") -> ThreadingHTTPServer:
    root = Path(studio_root) if studio_root else default_studio_root()
    handler = make_handler(root, Path(export_dir))
    return ThreadingHTTPServer(("127.0.0.1", port), handler)


def serve_studio(port: int, studio_root: str | Path | None = None,
                 export_dir: str | Path = "studio_exports") -> None:
    server = make_server(port, studio_root, export_dir)
    print(f"studio at http://127.0.0.1:{port}/ (export endpoint POST /export)")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
