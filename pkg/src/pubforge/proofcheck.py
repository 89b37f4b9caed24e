"""End-to-end proof checking against a stored reports directory.

Ties extraction, segmentation, and matching together and owns the
on-disk layout: one <name>.json report per proof version plus a
<name>.sources.json sidecar carrying every input needed to re-run the
comparison after the synonym store changes.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass
from datetime import date
from pathlib import Path

from .authorlist import load_agencies, parse_author_list
from .matcher import MatchThresholds, SynonymDB, compare
from .pdfextract import PageText, extract_text, load_pretokenized
from .proofparse import SegmentMarkers, parse_proof
from .report import DiscrepancyReport, write_report

__all__ = [
    "ReportSources",
    "SourcesError",
    "atomic_write_text",
    "dump_pretokenized",
    "proof_pages",
    "report_name",
    "run_compare",
    "store_report",
]

PDF_MAGIC = b"%PDF-"

_UNSAFE = re.compile(r"[^A-Za-z0-9._-]")


class SourcesError(ValueError):
    """The stored comparison inputs are missing or malformed."""


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a sibling temp file and rename; readers never see a
    truncated file."""
    handle, temp_name = tempfile.mkstemp(
        dir=str(path.parent), prefix=path.name, suffix=".tmp"
    )
    try:
        with os.fdopen(handle, "w", encoding="utf-8") as stream:
            stream.write(text)
        os.replace(temp_name, path)
    except BaseException:
        if os.path.exists(temp_name):
            os.unlink(temp_name)
        raise


def proof_pages(data: bytes) -> list[PageText]:
    """Dispatch on content: %PDF- magic selects the binary extractor,
    anything else is read as pretokenized text."""
    if data.startswith(PDF_MAGIC):
        return extract_text(data)
    return load_pretokenized(data.decode("utf-8"))


def dump_pretokenized(pages: list[PageText]) -> str:
    """Serialize pages to the plain-text format load_pretokenized reads.

    Loading the result reproduces the pages (y positions are already
    quantized after any load or extraction).
    """
    chunks: list[str] = []
    for index, page in enumerate(pages):
        if index:
            chunks.append("\f\n")
        for y, text in page.lines:
            chunks.append(f"y={y:g}|{text}\n")
    return "".join(chunks)


@dataclass(frozen=True)
class ReportSources:
    """Everything a comparison consumed, minus the synonym store.

    The synonym store is deliberately absent: a recheck re-reads the
    live store, which is the whole point of storing sources.
    """

    reference_xml: str
    proof_text: str
    markers_json: str
    agencies_json: str
    thresholds: MatchThresholds
    publisher: str = ""
    document: str = ""
    filename: str = ""
    creation_date: str = ""

    def to_json(self) -> str:
        payload = {
            "reference_xml": self.reference_xml,
            "proof_text": self.proof_text,
            "markers": json.loads(self.markers_json),
            "agencies": json.loads(self.agencies_json),
            "thresholds": {
                "author_distance": self.thresholds.author_distance,
                "close_similarity": self.thresholds.close_similarity,
            },
            "publisher": self.publisher,
            "document": self.document,
            "filename": self.filename,
            "creation_date": self.creation_date,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ReportSources":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as error:
            raise SourcesError(f"sources file is not valid JSON: {error}")
        if not isinstance(raw, dict):
            raise SourcesError("sources file must be a JSON object")
        missing = [
            key
            for key in ("reference_xml", "proof_text", "markers", "agencies")
            if key not in raw
        ]
        if missing:
            raise SourcesError("sources file lacks: " + ", ".join(missing))
        thresholds = raw.get("thresholds", {})
        return cls(
            reference_xml=raw["reference_xml"],
            proof_text=raw["proof_text"],
            markers_json=json.dumps(raw["markers"]),
            agencies_json=json.dumps(raw["agencies"]),
            thresholds=MatchThresholds(
                author_distance=int(
                    thresholds.get("author_distance", MatchThresholds().author_distance)
                ),
                close_similarity=float(
                    thresholds.get("close_similarity", MatchThresholds().close_similarity)
                ),
            ),
            publisher=raw.get("publisher", ""),
            document=raw.get("document", ""),
            filename=raw.get("filename", ""),
            creation_date=raw.get("creation_date", ""),
        )


def run_compare(sources: ReportSources, synonyms: SynonymDB) -> DiscrepancyReport:
    """Re-run the full comparison from stored inputs and live synonyms."""
    reference = parse_author_list(sources.reference_xml)
    markers = SegmentMarkers.from_json(sources.markers_json)
    proof = parse_proof(load_pretokenized(sources.proof_text), markers)
    agencies = load_agencies(sources.agencies_json)
    if sources.creation_date:
        creation = date.fromisoformat(sources.creation_date)
    else:
        creation = date.today()
    return compare(
        reference,
        proof,
        synonyms,
        agencies,
        sources.thresholds,
        publisher=sources.publisher,
        document=sources.document,
        filename=sources.filename,
        creation_date=creation,
    )


def report_name(ref_code: str, filename: str) -> str:
    """One report file per proof version: <ref_code>_<filename>."""
    return _UNSAFE.sub("_", f"{ref_code}_{filename}")


def store_report(
    reports_dir: str | Path,
    report: DiscrepancyReport,
    sources: ReportSources | None = None,
) -> Path:
    """Write the report (and its sources sidecar) into the directory."""
    reports_dir = Path(reports_dir)
    reports_dir.mkdir(parents=True, exist_ok=True)
    name = report_name(report.ref_code, report.filename)
    path = reports_dir / f"{name}.json"
    atomic_write_text(path, write_report(report))
    if sources is not None:
        atomic_write_text(reports_dir / f"{name}.sources.json", sources.to_json())
    return path
