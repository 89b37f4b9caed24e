"""Discrepancy report model, canonical JSON serialization, HTML rendering.

A report is the output of one proof reconciliation run: six header fields
describing the run followed by eleven discrepancy categories. Key order
and spelling are part of the on-disk contract and must not drift, since
downstream tooling addresses categories by these exact names.
"""

from __future__ import annotations

import html
import json
from dataclasses import dataclass, field
from datetime import date


class ReportError(ValueError):
    """Raised when report JSON does not follow the expected shape."""


_MONTHS = ("Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec")

HEADER_FIELDS = (
    "ref_code",
    "ref_date",
    "creation_date",
    "publisher",
    "document",
    "filename",
)

# Category order and the doubled "puntuation"/"founding" spellings are
# load-bearing: existing reports and consumers use them verbatim.
CATEGORY_FIELDS = (
    "authors_missing_skip",
    "authors_missing_list",
    "authors_puntuation_list",
    "institutes_missing_pdf_list",
    "institutes_missing_pdf_skip",
    "authors_mismatched_list",
    "authors_not_deceased_list",
    "authors_deceased_list",
    "institutes_close_matches_list",
    "founding_agencies_missing",
    "founding_agencies_wrong",
)

SKIP_CATEGORIES = ("authors_missing_skip", "institutes_missing_pdf_skip")

CATEGORY_TITLES = {
    "authors_missing_skip": "Authors missing (skipped by synonym)",
    "authors_missing_list": "Authors missing from proof",
    "authors_puntuation_list": "Authors with initials punctuation differences",
    "institutes_missing_pdf_list": "Institutes missing from proof",
    "institutes_missing_pdf_skip": "Institutes missing (skipped by synonym)",
    "authors_mismatched_list": "Authors with mismatched affiliations",
    "authors_not_deceased_list": "Authors marked deceased only in proof",
    "authors_deceased_list": "Deceased authors unmarked in proof",
    "institutes_close_matches_list": "Institutes with close-match spellings",
    "founding_agencies_missing": "Funding agencies missing from acknowledgements",
    "founding_agencies_wrong": "Funding sentences naming no known agency",
}


@dataclass
class ReportEntry:
    """One discrepancy: the reference-side value, what the proof printed,
    the edit distance where meaningful, and a human-readable detail."""

    reference: str
    printed: str | None = None
    distance: int | None = None
    detail: str = ""

    def to_json(self) -> dict:
        payload: dict = {"reference": self.reference}
        if self.printed is not None:
            payload["printed"] = self.printed
        if self.distance is not None:
            payload["distance"] = self.distance
        payload["detail"] = self.detail
        return payload

    @classmethod
    def from_json(cls, raw: object, category: str) -> "ReportEntry":
        if not isinstance(raw, dict):
            raise ReportError(f"{category}: entry must be an object, got {type(raw).__name__}")
        if "reference" not in raw or not isinstance(raw["reference"], str):
            raise ReportError(f"{category}: entry needs a string 'reference'")
        printed = raw.get("printed")
        if printed is not None and not isinstance(printed, str):
            raise ReportError(f"{category}: 'printed' must be a string when present")
        distance = raw.get("distance")
        if distance is not None and (isinstance(distance, bool) or not isinstance(distance, int)):
            raise ReportError(f"{category}: 'distance' must be an integer when present")
        detail = raw.get("detail", "")
        if not isinstance(detail, str):
            raise ReportError(f"{category}: 'detail' must be a string")
        unknown = set(raw) - {"reference", "printed", "distance", "detail"}
        if unknown:
            raise ReportError(f"{category}: unknown entry keys {sorted(unknown)}")
        return cls(reference=raw["reference"], printed=printed, distance=distance, detail=detail)


@dataclass
class DiscrepancyReport:
    """Everything one reconciliation run found, ready to serialize."""

    ref_code: str = ""
    ref_date: str = ""
    creation_date: date = field(default_factory=date.today)
    publisher: str = ""
    document: str = ""
    filename: str = ""
    authors_missing_skip: list[ReportEntry] = field(default_factory=list)
    authors_missing_list: list[ReportEntry] = field(default_factory=list)
    authors_puntuation_list: list[ReportEntry] = field(default_factory=list)
    institutes_missing_pdf_list: list[ReportEntry] = field(default_factory=list)
    institutes_missing_pdf_skip: list[ReportEntry] = field(default_factory=list)
    authors_mismatched_list: list[ReportEntry] = field(default_factory=list)
    authors_not_deceased_list: list[ReportEntry] = field(default_factory=list)
    authors_deceased_list: list[ReportEntry] = field(default_factory=list)
    institutes_close_matches_list: list[ReportEntry] = field(default_factory=list)
    founding_agencies_missing: list[ReportEntry] = field(default_factory=list)
    founding_agencies_wrong: list[ReportEntry] = field(default_factory=list)

    def categories(self) -> dict[str, list[ReportEntry]]:
        return {name: getattr(self, name) for name in CATEGORY_FIELDS}

    def total_discrepancies(self) -> int:
        return sum(len(entries) for entries in self.categories().values())


def format_report_date(value: date) -> str:
    """Day-Month-Year with an English month abbreviation: 29-Oct-2018."""
    return f"{value.day:02d}-{_MONTHS[value.month - 1]}-{value.year:04d}"


def parse_report_date(text: str) -> date:
    parts = text.split("-")
    if len(parts) != 3:
        raise ReportError(f"bad creation_date {text!r}, expected DD-Mon-YYYY")
    day, month_name, year = parts
    if month_name not in _MONTHS:
        raise ReportError(f"bad month {month_name!r} in creation_date {text!r}")
    try:
        return date(int(year), _MONTHS.index(month_name) + 1, int(day))
    except ValueError as exc:
        raise ReportError(f"bad creation_date {text!r}: {exc}") from exc


def write_report(report: DiscrepancyReport) -> str:
    """Canonical JSON text: fixed key order, two-space indent, trailing
    newline. Byte-stable for identical report content."""
    payload: dict = {
        "ref_code": report.ref_code,
        "ref_date": report.ref_date,
        "creation_date": format_report_date(report.creation_date),
        "publisher": report.publisher,
        "document": report.document,
        "filename": report.filename,
    }
    for name in CATEGORY_FIELDS:
        payload[name] = [entry.to_json() for entry in getattr(report, name)]
    return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def parse_report(text: str) -> DiscrepancyReport:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ReportError(f"report is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ReportError("report must be a JSON object")

    expected = set(HEADER_FIELDS) | set(CATEGORY_FIELDS)
    missing = expected - set(raw)
    if missing:
        raise ReportError(f"report missing keys: {sorted(missing)}")
    unknown = set(raw) - expected
    if unknown:
        raise ReportError(f"report has unknown keys: {sorted(unknown)}")

    for name in HEADER_FIELDS:
        if not isinstance(raw[name], str):
            raise ReportError(f"header field {name!r} must be a string")

    report = DiscrepancyReport(
        ref_code=raw["ref_code"],
        ref_date=raw["ref_date"],
        creation_date=parse_report_date(raw["creation_date"]),
        publisher=raw["publisher"],
        document=raw["document"],
        filename=raw["filename"],
    )
    for name in CATEGORY_FIELDS:
        entries = raw[name]
        if not isinstance(entries, list):
            raise ReportError(f"category {name!r} must be a list")
        getattr(report, name).extend(ReportEntry.from_json(e, name) for e in entries)
    return report


def _entry_rows(entries: list[ReportEntry]) -> str:
    rows = []
    for entry in entries:
        printed = "" if entry.printed is None else entry.printed
        distance = "" if entry.distance is None else str(entry.distance)
        rows.append(
            "<tr>"
            f"<td>{html.escape(entry.reference)}</td>"
            f"<td>{html.escape(printed)}</td>"
            f"<td>{html.escape(distance)}</td>"
            f"<td>{html.escape(entry.detail)}</td>"
            "</tr>"
        )
    return "".join(rows)


def render_html(report: DiscrepancyReport) -> str:
    """Self-contained HTML view of a report.

    Skip categories render collapsed behind a "Skipped +" summary so the
    noise suppressed by synonyms stays out of the way.
    """
    head_rows = "".join(
        f"<tr><th>{html.escape(name)}</th><td>{html.escape(value)}</td></tr>"
        for name, value in (
            ("ref_code", report.ref_code),
            ("ref_date", report.ref_date),
            ("creation_date", format_report_date(report.creation_date)),
            ("publisher", report.publisher),
            ("document", report.document),
            ("filename", report.filename),
        )
    )
    sections = []
    for name in CATEGORY_FIELDS:
        entries = getattr(report, name)
        title = CATEGORY_TITLES[name]
        table = (
            "<table><thead><tr><th>Reference</th><th>Printed</th><th>Distance</th>"
            "<th>Detail</th></tr></thead><tbody>"
            f"{_entry_rows(entries)}</tbody></table>"
            if entries
            else "<p class=\"empty\">none</p>"
        )
        if name in SKIP_CATEGORIES:
            sections.append(
                f"<details class=\"skip\" data-category=\"{name}\">"
                f"<summary>Skipped + {len(entries)} &mdash; {html.escape(title)}</summary>"
                f"{table}</details>"
            )
        else:
            sections.append(
                f"<section data-category=\"{name}\">"
                f"<h2>{html.escape(title)} ({len(entries)})</h2>{table}</section>"
            )
    body = "".join(sections)
    return (
        "<!DOCTYPE html>\n"
        "<html lang=\"en\"><head><meta charset=\"utf-8\">"
        f"<title>Proof check {html.escape(report.ref_code)}</title>"
        "<style>"
        "body{font-family:sans-serif;margin:2rem;}"
        "table{border-collapse:collapse;margin:0.5rem 0;}"
        "td,th{border:1px solid #999;padding:0.25rem 0.5rem;text-align:left;}"
        "details.skip{margin:1rem 0;}"
        ".empty{color:#666;}"
        "</style></head><body>"
        f"<h1>Proof check {html.escape(report.ref_code)}</h1>"
        f"<table>{head_rows}</table>"
        f"{body}"
        "</body></html>\n"
    )


__all__ = [
    "CATEGORY_FIELDS",
    "CATEGORY_TITLES",
    "DiscrepancyReport",
    "HEADER_FIELDS",
    "ReportEntry",
    "ReportError",
    "SKIP_CATEGORIES",
    "format_report_date",
    "parse_report",
    "parse_report_date",
    "render_html",
    "write_report",
]
