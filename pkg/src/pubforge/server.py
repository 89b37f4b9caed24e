"""HTTP service: browse stored reports, edit synonyms, re-run checks.

Read endpoints are safe under concurrency because every file in the
reports directory and the synonym store is only ever replaced whole
via atomic rename. Synonym writes are serialized behind a single
lock; reports are immutable except through a recheck.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from importlib import resources
from pathlib import Path
from urllib.parse import parse_qs, urlsplit

from .matcher import SynonymDB, SynonymEntry, normalize
from .proofcheck import ReportSources, atomic_write_text, run_compare
from .report import write_report

__all__ = ["ServeError", "make_server", "serve"]

_LOG = logging.getLogger("pubforge.server")

_SAFE_NAME = re.compile(r"^[A-Za-z0-9._-]+$")

SYNONYM_KINDS = ("institute", "author")


class ServeError(Exception):
    """The service cannot start with the given paths or bind address."""


@dataclass
class _State:
    reports_dir: Path
    synonyms_path: Path
    ui_dir: object
    synonyms_lock: threading.Lock


def _report_index_entry(path: Path) -> dict | None:
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError, UnicodeDecodeError):
        return None
    if not isinstance(raw, dict):
        return None
    return {
        "name": path.stem,
        "ref_code": raw.get("ref_code", ""),
        "filename": raw.get("filename", ""),
        "creation_date": raw.get("creation_date", ""),
    }


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    server: "ReportServer"

    # --- plumbing ---

    def log_message(self, format: str, *args) -> None:
        _LOG.debug("%s " + format, self.address_string(), *args)

    def _send(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _send_json(self, status: int, payload: object) -> None:
        body = (json.dumps(payload, ensure_ascii=False, indent=2) + "\n").encode(
            "utf-8"
        )
        self._send(status, body, "application/json; charset=utf-8")

    def _error(self, status: int, message: str) -> None:
        self._send_json(status, {"error": message})

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length") or 0)
        return self.rfile.read(length) if length > 0 else b""

    def _report_path(self, name: str) -> Path | None:
        if not _SAFE_NAME.match(name) or name.endswith(".sources"):
            return None
        return self.server.state.reports_dir / f"{name}.json"

    def _load_synonyms(self) -> SynonymDB:
        return SynonymDB.from_json(
            self.server.state.synonyms_path.read_text(encoding="utf-8")
        )

    # --- routes ---

    def do_GET(self) -> None:
        parsed = urlsplit(self.path)
        segments = [part for part in parsed.path.split("/") if part]
        if parsed.path == "/api/reports":
            self._get_report_index()
        elif len(segments) == 3 and segments[:2] == ["api", "reports"]:
            self._get_report(segments[2])
        elif parsed.path == "/api/synonyms":
            self._get_synonyms(parse_qs(parsed.query).get("q", [""])[0])
        elif segments[:1] == ["api"]:
            self._error(404, f"no such endpoint: {parsed.path}")
        else:
            self._get_static(parsed.path)

    def do_POST(self) -> None:
        parsed = urlsplit(self.path)
        segments = [part for part in parsed.path.split("/") if part]
        if parsed.path == "/api/synonyms":
            self._post_synonym()
        elif len(segments) == 3 and segments[:2] == ["api", "recheck"]:
            self._post_recheck(segments[2])
        else:
            self._error(404, f"no such endpoint: {parsed.path}")

    # --- reports ---

    def _get_report_index(self) -> None:
        entries = []
        for path in sorted(self.server.state.reports_dir.glob("*.json")):
            if path.name.endswith(".sources.json"):
                continue
            entry = _report_index_entry(path)
            if entry is not None:
                entries.append(entry)
        self._send_json(200, {"reports": entries})

    def _get_report(self, name: str) -> None:
        path = self._report_path(name)
        if path is None or not path.is_file():
            self._error(404, f"no report named {name!r}")
            return
        self._send(
            200, path.read_bytes(), "application/json; charset=utf-8"
        )

    # --- synonyms ---

    def _get_synonyms(self, query: str) -> None:
        try:
            database = self._load_synonyms()
        except Exception as error:
            self._error(500, f"synonym store unreadable: {error}")
            return
        needle = normalize(query)

        def matches(entry: SynonymEntry) -> bool:
            if not needle:
                return True
            if needle in normalize(entry.original):
                return True
            return any(needle in normalize(s) for s in entry.synonyms)

        payload = {
            "institutes": [
                {"id": e.id, "original": e.original, "synonyms": list(e.synonyms)}
                for e in database.institutes
                if matches(e)
            ],
            "authors": [
                {
                    "original": e.original,
                    "inspire": e.inspire,
                    "foafName": e.foaf_name,
                    "synonyms": list(e.synonyms),
                }
                for e in database.authors
                if matches(e)
            ],
        }
        self._send_json(200, payload)

    def _post_synonym(self) -> None:
        errors: dict[str, str] = {}
        try:
            raw = json.loads(self._read_body().decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._send_json(400, {"errors": {"body": "not valid JSON"}})
            return
        if not isinstance(raw, dict):
            self._send_json(400, {"errors": {"body": "must be a JSON object"}})
            return
        kind = raw.get("kind")
        if kind not in SYNONYM_KINDS:
            errors["kind"] = 'must be "institute" or "author"'
        original = raw.get("original")
        if not isinstance(original, str) or not original.strip():
            errors["original"] = "required non-empty string"
        synonym = raw.get("synonym")
        if not isinstance(synonym, str) or not synonym.strip():
            errors["synonym"] = "required non-empty string"
        if errors:
            self._send_json(400, {"errors": errors})
            return
        if normalize(synonym) == normalize(original):
            self._error(409, "synonym equals the original spelling")
            return

        state = self.server.state
        with state.synonyms_lock:
            try:
                database = self._load_synonyms()
            except Exception as error:
                self._error(500, f"synonym store unreadable: {error}")
                return
            if kind == "institute":
                entry = database.find_institute(original)
            else:
                entry = database.find_author(original)
            if entry is not None and entry.accepts(synonym):
                self._error(
                    409, f"synonym already registered for {entry.original!r}"
                )
                return
            if entry is None:
                if kind == "institute":
                    numeric = [
                        int(e.id) for e in database.institutes if e.id.isdigit()
                    ]
                    entry = SynonymEntry(
                        original=original,
                        synonyms=[synonym],
                        id=str(max(numeric, default=0) + 1),
                    )
                    database.institutes.append(entry)
                else:
                    entry = SynonymEntry(original=original, synonyms=[synonym])
                    database.authors.append(entry)
            else:
                entry.synonyms.append(synonym)
            atomic_write_text(state.synonyms_path, database.to_json())

        payload = {"kind": kind, "original": entry.original, "synonyms": list(entry.synonyms)}
        if kind == "institute":
            payload["id"] = entry.id
        self._send_json(201, payload)

    # --- recheck ---

    def _post_recheck(self, name: str) -> None:
        path = self._report_path(name)
        if path is None or not path.is_file():
            self._error(404, f"no report named {name!r}")
            return
        sources_path = self.server.state.reports_dir / f"{name}.sources.json"
        if not sources_path.is_file():
            self._error(409, f"report {name!r} has no recorded sources")
            return
        try:
            sources = ReportSources.from_json(
                sources_path.read_text(encoding="utf-8")
            )
            synonyms = self._load_synonyms()
            report = run_compare(sources, synonyms)
        except Exception as error:
            self._error(500, f"recheck failed: {error}")
            return
        text = write_report(report)
        atomic_write_text(path, text)
        self._send(200, text.encode("utf-8"), "application/json; charset=utf-8")

    # --- static UI ---

    def _get_static(self, path: str) -> None:
        relative = path.lstrip("/") or "index.html"
        segments = relative.split("/")
        if not all(
            _SAFE_NAME.match(part) and part not in (".", "..") for part in segments
        ):
            self._error(404, "not found")
            return
        node = self.server.state.ui_dir
        for part in segments:
            node = node.joinpath(part) if hasattr(node, "joinpath") else node / part
        if not node.is_file():
            self._error(404, "not found")
            return
        content_type = mimetypes.guess_type(relative)[0] or "application/octet-stream"
        if content_type.startswith("text/") or content_type in (
            "application/javascript", "application/json",
        ):
            content_type += "; charset=utf-8"
        self._send(200, node.read_bytes(), content_type)


class ReportServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address: tuple[str, int], state: _State):
        self.state = state
        super().__init__(address, _Handler)


def _parse_bind(bind: str) -> tuple[str, int]:
    host, separator, port = bind.rpartition(":")
    if not separator or not host:
        raise ServeError(f"bind address must be host:port, got {bind!r}")
    try:
        return host, int(port)
    except ValueError:
        raise ServeError(f"bind port must be an integer, got {port!r}")


def make_server(
    reports_dir: str | Path,
    synonyms_path: str | Path,
    bind: str = "127.0.0.1:8765",
    ui_dir: str | Path | None = None,
) -> ReportServer:
    """Validate inputs and construct the server without starting it."""
    reports_dir = Path(reports_dir)
    if not reports_dir.is_dir():
        raise ServeError(f"reports directory {reports_dir} does not exist")
    synonyms_path = Path(synonyms_path)
    if not synonyms_path.is_file():
        raise ServeError(f"synonym store {synonyms_path} does not exist")
    try:
        SynonymDB.from_json(synonyms_path.read_text(encoding="utf-8"))
    except Exception as error:
        raise ServeError(f"synonym store does not parse: {error}")
    if ui_dir is None:
        ui = resources.files("pubforge").joinpath("data", "ui")
    else:
        ui = Path(ui_dir)
        if not ui.is_dir():
            raise ServeError(f"UI directory {ui} does not exist")
    state = _State(
        reports_dir=reports_dir,
        synonyms_path=synonyms_path,
        ui_dir=ui,
        synonyms_lock=threading.Lock(),
    )
    return ReportServer(_parse_bind(bind), state)


def serve(
    reports_dir: str | Path,
    synonyms_path: str | Path,
    bind: str = "127.0.0.1:8765",
    ui_dir: str | Path | None = None,
) -> None:
    """Run the service until interrupted."""
    server = make_server(reports_dir, synonyms_path, bind, ui_dir)
    host, port = server.server_address[:2]
    _LOG.info("serving reports on http://%s:%s/", host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
