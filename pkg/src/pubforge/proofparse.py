"""Segmentation of extracted proof text into authors, institutes, funding.

Journal proofs arrive as loosely structured text. A publisher profile
supplies the landmarks (collaboration banner, acknowledgements heading,
watermark patterns, deceased markers); this module strips page artifacts
and cuts the text into the three blocks the matcher compares. Anything
surprising is recorded as a diagnostic instead of silently guessed.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .matcher import normalize
from .pdfextract import PageText


class ProofParseError(ValueError):
    """Raised when a proof cannot be segmented at all."""


@dataclass(frozen=True)
class SegmentMarkers:
    """Publisher-specific landmarks used to cut a proof into blocks."""

    banner: str
    ack_heading: str = ""
    watermarks: tuple[str, ...] = ()
    deceased_markers: tuple[str, ...] = ("†", "*")
    publisher_name: str = ""

    @classmethod
    def from_json(cls, text: str) -> "SegmentMarkers":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ProofParseError(f"publisher profile is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict) or not isinstance(raw.get("banner"), str):
            raise ProofParseError("publisher profile needs a string 'banner'")
        watermarks = raw.get("watermarks", [])
        markers = raw.get("deceased_markers", ["†", "*"])
        for name, value in (("watermarks", watermarks), ("deceased_markers", markers)):
            if not isinstance(value, list) or any(not isinstance(v, str) for v in value):
                raise ProofParseError(f"publisher profile {name!r} must be a list of strings")
        return cls(
            banner=raw["banner"],
            ack_heading=str(raw.get("ack_heading", "")),
            watermarks=tuple(watermarks),
            deceased_markers=tuple(markers),
            publisher_name=str(raw.get("name", "")),
        )


@dataclass(frozen=True)
class ProofAuthor:
    """One author parsed from the proof's author block."""

    name: str
    affiliation_indices: tuple[int, ...] = ()
    deceased_marker: bool = False


@dataclass(frozen=True)
class ProofInstitute:
    """One numbered entry from the proof's institute list."""

    index: int
    name: str


@dataclass
class ProofSegments:
    """The three comparable blocks plus everything odd seen on the way."""

    authors: tuple[ProofAuthor, ...] = ()
    institutes: tuple[ProofInstitute, ...] = ()
    funding_text: str = ""
    diagnostics: list[str] = field(default_factory=list)


_STANDALONE_INT = re.compile(r"^\s*\d+\s*$")
_LEADING_INT = re.compile(r"^\s*(\d+)\s+(\S.*)$")

# Fraction of lines (or pages) that turns a recurring feature into an
# artifact: a +1 integer run covering this much of the document is line
# numbering even if it starts at 1, and a line repeating on this share of
# pages is a running header or footer.
_COVERAGE_THRESHOLD = 0.8


def strip_artifacts(
    pages: list[PageText],
    markers: SegmentMarkers | None = None,
    diagnostics: list[str] | None = None,
) -> list[PageText]:
    """Remove proof production artifacts, reporting every removal.

    Three artifact classes: watermark lines matching a configured pattern,
    identical lines repeating on at least 80% of pages (two-page minimum),
    and proof line numbers. Standalone integer lines always count as line
    numbers. Leading integer tokens are stripped when they increase by
    exactly 1 over two or more consecutive lines, unless the run starts at
    1 and covers less than 80% of the document, which is the shape of an
    institute index list and must survive untouched.
    """
    if diagnostics is None:
        diagnostics = []
    watermark_patterns = [re.compile(p) for p in (markers.watermarks if markers else ())]

    # page index, original y, current text, alive flag
    rows: list[list] = []
    for page_index, page in enumerate(pages):
        for y, text in page.lines:
            rows.append([page_index, y, text, True])

    for row in rows:
        for pattern in watermark_patterns:
            if pattern.search(row[2]):
                diagnostics.append(
                    f"page {row[0] + 1}: removed watermark line {row[2]!r} "
                    f"(pattern {pattern.pattern!r})"
                )
                row[3] = False
                break

    if len(pages) >= 2:
        appears_on: dict[str, set[int]] = {}
        for row in rows:
            if row[3] and row[2].strip():
                appears_on.setdefault(row[2], set()).add(row[0])
        repeated = {
            text
            for text, page_set in appears_on.items()
            if len(page_set) >= _COVERAGE_THRESHOLD * len(pages) and len(page_set) >= 2
        }
        for text in sorted(repeated):
            diagnostics.append(
                f"removed repeated header/footer {text!r} "
                f"(on {len(appears_on[text])} of {len(pages)} pages)"
            )
        for row in rows:
            if row[3] and row[2] in repeated:
                row[3] = False

    for row in rows:
        if row[3] and _STANDALONE_INT.match(row[2]):
            diagnostics.append(f"page {row[0] + 1}: removed standalone number line {row[2]!r}")
            row[3] = False

    alive = [row for row in rows if row[3]]
    values: list[int | None] = []
    for row in alive:
        match = _LEADING_INT.match(row[2])
        values.append(int(match.group(1)) if match else None)

    total_alive = len(alive)
    start = 0
    while start < total_alive:
        if values[start] is None:
            start += 1
            continue
        end = start + 1
        while (
            end < total_alive
            and values[end] is not None
            and values[end] == values[end - 1] + 1
        ):
            end += 1
        run_length = end - start
        if run_length >= 2 and (
            values[start] != 1 or run_length >= _COVERAGE_THRESHOLD * total_alive
        ):
            for position in range(start, end):
                row = alive[position]
                match = _LEADING_INT.match(row[2])
                diagnostics.append(
                    f"page {row[0] + 1}: stripped line number {match.group(1)} "
                    f"from {row[2]!r}"
                )
                row[2] = match.group(2)
        start = end

    result: list[PageText] = []
    row_position = 0
    for page_index, page in enumerate(pages):
        kept: list[tuple[float, str]] = []
        for _ in page.lines:
            row = rows[row_position]
            row_position += 1
            if row[3]:
                kept.append((row[1], row[2]))
        result.append(PageText(page_number=page.page_number, lines=tuple(kept)))
    return result


_TRAILING_INDICES = re.compile(r"^(.*?)((?:\s+\d+)+)$")


def _parse_author_block(
    author_lines: list[str],
    deceased_markers: tuple[str, ...],
    diagnostics: list[str],
) -> tuple[ProofAuthor, ...]:
    builders: list[dict] = []
    for piece in re.split(r"[,\n]", "\n".join(author_lines)):
        flagged = False
        for marker in deceased_markers:
            if marker and marker in piece:
                flagged = True
                piece = piece.replace(marker, "")
        piece = piece.strip()
        if not piece:
            if flagged:
                if builders:
                    builders[-1]["deceased"] = True
                else:
                    diagnostics.append("deceased marker found before any author name")
            continue
        if piece.isdigit():
            if builders:
                builders[-1]["indices"].append(int(piece))
                if flagged:
                    builders[-1]["deceased"] = True
            else:
                diagnostics.append(f"affiliation index {piece!r} found before any author name")
            continue
        match = _TRAILING_INDICES.match(piece)
        if match and match.group(1).strip():
            name = match.group(1).strip()
            indices = [int(v) for v in match.group(2).split()]
        else:
            name = piece
            indices = []
        builders.append({"name": name, "indices": indices, "deceased": flagged})

    return tuple(
        ProofAuthor(
            name=b["name"],
            affiliation_indices=tuple(b["indices"]),
            deceased_marker=b["deceased"],
        )
        for b in builders
    )


def segment_proof(
    pages: list[PageText],
    markers: SegmentMarkers,
    diagnostics: list[str] | None = None,
) -> ProofSegments:
    """Cut artifact-stripped pages into author, institute, funding blocks.

    The author block runs from the collaboration banner to the first
    institute-index line (an integer 1 followed by text). Institute lines
    follow while they keep the "<integer> <name>" shape; broken ascending
    order is recorded but parsing continues. The funding text is
    everything after the acknowledgements heading.
    """
    if diagnostics is None:
        diagnostics = []
    banner_key = normalize(markers.banner)
    if not banner_key:
        raise ProofParseError("publisher profile has an empty banner marker")
    ack_key = normalize(markers.ack_heading)

    state = "preamble"
    author_lines: list[str] = []
    institutes: list[ProofInstitute] = []
    funding_parts: list[str] = []
    previous_index = 0

    for page in pages:
        for _, text in page.lines:
            line_key = normalize(text)
            if state == "preamble":
                if banner_key in line_key:
                    state = "authors"
                continue
            if state == "authors":
                match = _LEADING_INT.match(text)
                if match and int(match.group(1)) == 1:
                    state = "institutes"
                    previous_index = 1
                    institutes.append(ProofInstitute(index=1, name=match.group(2).strip()))
                    continue
                if ack_key and ack_key in line_key:
                    diagnostics.append("acknowledgements heading before any institute list")
                    state = "funding"
                    continue
                author_lines.append(text)
                continue
            if state == "institutes":
                match = _LEADING_INT.match(text)
                if match:
                    index = int(match.group(1))
                    if index != previous_index + 1:
                        diagnostics.append(
                            f"institute index {index} follows {previous_index}; "
                            "list is not ascending by 1"
                        )
                    previous_index = index
                    institutes.append(ProofInstitute(index=index, name=match.group(2).strip()))
                    continue
                state = "between"
                # fall through to the between/funding checks for this line
            if state == "between":
                if ack_key and ack_key in line_key:
                    state = "funding"
                continue
            if state == "funding":
                funding_parts.append(text)

    if state == "preamble":
        raise ProofParseError(
            f"collaboration banner {markers.banner!r} not found; author block undetected"
        )
    if not institutes:
        diagnostics.append("no institute list found after the author block")
    if ack_key and state != "funding" and not funding_parts:
        diagnostics.append(f"acknowledgements heading {markers.ack_heading!r} not found")

    authors = _parse_author_block(author_lines, markers.deceased_markers, diagnostics)
    if not authors:
        diagnostics.append("author block is empty")

    return ProofSegments(
        authors=authors,
        institutes=tuple(institutes),
        funding_text=" ".join(part.strip() for part in funding_parts if part.strip()),
        diagnostics=diagnostics,
    )


def parse_proof(pages: list[PageText], markers: SegmentMarkers) -> ProofSegments:
    """strip_artifacts followed by segment_proof, diagnostics merged."""
    diagnostics: list[str] = []
    stripped = strip_artifacts(pages, markers, diagnostics)
    return segment_proof(stripped, markers, diagnostics)
