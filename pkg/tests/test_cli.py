import json
import threading
import urllib.request

import pytest

from astra.cli import main
from astra.studio_server import make_server, parse_multipart


class TestExitCodes:
    def test_validate_clean_bundle(self, card_bundle, capsys):
        _, _, bundle = card_bundle
        assert main(["validate", "--bundle", str(bundle)]) == 0
        assert "0 errors" in capsys.readouterr().out

    def test_validate_dangling_ref_exit_3(self, tmp_path, capsys):
        from test_config import write_minimal_bundle

        bundle = write_minimal_bundle(tmp_path / "b", hotkeys=[
            {"key": "<alt>+f", "id": "x", "kind": "replay_last",
             "active_states": ["casino"]}])
        assert main(["validate", "--bundle", str(bundle)]) == 3
        out = capsys.readouterr().out
        assert "DanglingStateRef" in out
        assert "/hotkeys.json/0" in out

    def test_usage_error_exit_2(self, capsys):
        assert main(["frobnicate"]) == 2

    def test_missing_bundle_runtime_failure(self, tmp_path):
        assert main(["run", "--bundle", str(tmp_path / "nope"),
                     "--source", "sim:card"]) == 1

    def test_live_source_unavailable(self, card_bundle):
        _, _, bundle = card_bundle
        assert main(["run", "--bundle", str(bundle), "--source", "live"]) == 1


class TestPipelines:
    def test_gen_corpus_then_replay(self, tmp_path, capsys):
        out = tmp_path / "corpus"
        assert main(["gen-corpus", "--game", "card", "--n", "5", "--seed", "3",
                     "--out", str(out), "--jitter", "off"]) == 0
        report = tmp_path / "report.json"
        assert main(["replay", "--trace", str(out / "trace"),
                     "--bundle", str(out / "bundle"),
                     "--report", str(report)]) == 0
        data = json.loads(report.read_text())
        assert data["metrics"]["detection"]["accuracy"] == 1.0
        assert data["metrics"]["detection"]["false_positives"] == 0

    def test_gen_corpus_idempotent(self, tmp_path):
        for _ in range(2):
            assert main(["gen-corpus", "--n", "3", "--seed", "9",
                         "--out", str(tmp_path / "c")]) == 0
        from astra.frames import trace_digest

        digest = trace_digest(tmp_path / "c" / "trace")
        assert main(["gen-corpus", "--n", "3", "--seed", "9",
                     "--out", str(tmp_path / "c")]) == 0
        assert trace_digest(tmp_path / "c" / "trace") == digest

    def test_run_sim_session_writes_logs(self, card_bundle, tmp_path):
        _, _, bundle = card_bundle
        assert main(["run", "--bundle", str(bundle), "--source", "sim:card",
                     "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "session.jsonl").is_file()
        assert (tmp_path / "speech.jsonl").is_file()
        speech = [json.loads(line) for line in
                  (tmp_path / "speech.jsonl").read_text().splitlines()]
        assert any(r["text"] == "It is your turn." for r in speech)

    def test_run_trace_session(self, card_bundle, tmp_path):
        _, _, bundle = card_bundle
        corpus_dir = tmp_path / "c"
        main(["gen-corpus", "--n", "3", "--seed", "2", "--out", str(corpus_dir)])
        assert main(["run", "--bundle", str(bundle),
                     "--source", f"trace:{corpus_dir / 'trace'}",
                     "--out-dir", str(tmp_path / "out")]) == 0
        assert (tmp_path / "out" / "session.jsonl").is_file()

    def test_audit_scenario(self, tmp_path, capsys):
        from pathlib import Path

        scenario = Path(__file__).resolve().parents[1] / "scenarios" / "uno_full.json"
        report = tmp_path / "audit.json"
        assert main(["audit", "--scenario", str(scenario),
                     "--report", str(report)]) == 0
        data = json.loads(report.read_text())
        assert data["completed"] == data["total"] == 6


class TestStudioServer:
    def test_multipart_parse(self):
        boundary = "XBOUND"
        body = (
            f"--{boundary}\r\n"
            'Content-Disposition: form-data; name="game.json"; filename="game.json"\r\n'
            "Content-Type: application/json\r\n\r\n"
            '{"game_id": "x"}\r\n'
            f"--{boundary}--\r\n"
        ).encode()
        files = parse_multipart(f'multipart/form-data; boundary="{boundary}"', body)
        assert files == {"game.json": b'{"game_id": "x"}'}

    def test_export_endpoint_round_trip(self, tmp_path):
        from astra.harness import CardSim

        bundle_dir = tmp_path / "exported"
        server = make_server(0, studio_root=tmp_path, export_dir=bundle_dir)
        port = server.server_address[1]
        thread = threading.Thread(target=server.serve_forever, daemon=True)
        thread.start()
        try:
            sim = CardSim(7)
            source = tmp_path / "source_bundle"
            sim.make_bundle(source)
            files = {}
            for path in sorted(source.rglob("*")):
                if path.is_file():
                    files[str(path.relative_to(source))] = path.read_bytes()
            boundary = "BNDRY"
            parts = []
            for name, data in files.items():
                parts.append(f"--{boundary}\r\n"
                             f'Content-Disposition: form-data; name="{name}"; '
                             f'filename="{name}"\r\n'
                             "Content-Type: application/octet-stream\r\n"
                             "Content-Transfer-Encoding: binary\r\n\r\n".encode()
                             + data + b"\r\n")
            body = b"".join(parts) + f"--{boundary}--\r\n".encode()
            request = urllib.request.Request(
                f"http://127.0.0.1:{port}/export", data=body,
                headers={"Content-Type":
                         f"multipart/form-data; boundary={boundary}"},
                method="POST")
            with urllib.request.urlopen(request, timeout=10) as response:
                payload = json.loads(response.read())
            assert payload["ok"] is True
            assert main(["validate", "--bundle", str(bundle_dir)]) == 0
        finally:
            server.shutdown()

    def test_export_refuses_path_escape(self, tmp_path):
        from astra.studio_server import write_export

        with pytest.raises(ValueError):
            write_export({"../evil.json": b"{}"}, tmp_path / "safe")
