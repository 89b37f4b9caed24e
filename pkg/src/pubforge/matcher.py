"""Fuzzy matching of names against journal proofs.

Edit-distance machinery (Levenshtein, normalization, initials-pattern
classification, synonym suppression) plus the category-by-category
comparison of a canonical author list against a parsed proof, producing
a DiscrepancyReport.
"""

from __future__ import annotations

import enum
import json
import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date
from typing import TYPE_CHECKING, Callable, Iterable, NamedTuple, Sequence

from .report import DiscrepancyReport, ReportEntry

if TYPE_CHECKING:
    from .authorlist import Author, AuthorList, FundingAgency
    from .proofparse import ProofSegments


class MatchError(ValueError):
    """Raised for unusable matcher inputs (empty candidate sets, bad config)."""


class SynonymError(ValueError):
    """Raised when a synonym store violates its shape or uniqueness rules."""


_WS = re.compile(r"\s+")


def normalize(text: str, fold_accents: bool = False) -> str:
    """Canonical comparison form: NFKD, collapsed whitespace, casefolded.

    With fold_accents=True combining marks left over from decomposition
    are dropped, so accented and plain spellings compare equal.
    """
    text = unicodedata.normalize("NFKD", text)
    if fold_accents:
        text = "".join(ch for ch in text if not unicodedata.combining(ch))
    return _WS.sub(" ", text).strip().casefold()


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits turning a into b."""
    if a == b:
        return 0
    if not a:
        return len(b)
    if not b:
        return len(a)
    if len(b) > len(a):
        a, b = b, a
    previous = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        current = [i]
        append = current.append
        for j, cb in enumerate(b, 1):
            if ca == cb:
                append(previous[j - 1])
            else:
                append(1 + min(previous[j], previous[j - 1], current[j - 1]))
        previous = current
    return previous[-1]


def similarity(a: str, b: str, distance: int | None = None) -> float:
    """Length-relative closeness in [0, 1]; 1.0 for two empty strings."""
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    if distance is None:
        distance = levenshtein(a, b)
    return 1.0 - distance / longest


def best_match(query: str, candidates: Sequence[str]) -> tuple[int, int]:
    """Index and distance of the closest candidate under normalize().

    Ties go to the lowest index. Raises MatchError on an empty candidate
    sequence.
    """
    if not candidates:
        raise MatchError("no candidates to match against")
    return _best(normalize(query), [normalize(c) for c in candidates])


def _best(target: str, candidates: Sequence[str]) -> tuple[int, int]:
    best_index = 0
    best_distance = levenshtein(target, candidates[0])
    for index in range(1, len(candidates)):
        if best_distance == 0:
            break
        d = levenshtein(target, candidates[index])
        if d < best_distance:
            best_index, best_distance = index, d
    return best_index, best_distance


class InitialsPattern(enum.Enum):
    DOT = "DOT"
    DOTDOT = "DOTDOT"
    DOT_HYPHEN = "DOT_HYPHEN"
    HYPHEN_DOT = "HYPHEN_DOT"
    OTHER = "OTHER"


class InitialsShape(NamedTuple):
    pattern: InitialsPattern
    spaced: bool


_LETTER = r"[^\W\d_]"
_SHAPE_RULES = (
    (re.compile(rf"{_LETTER}\.\Z"), InitialsPattern.DOT),
    (re.compile(rf"(?:{_LETTER}\.){{2,}}\Z"), InitialsPattern.DOTDOT),
    (re.compile(rf"{_LETTER}\.(?:-{_LETTER}\.)+\Z"), InitialsPattern.DOT_HYPHEN),
    (re.compile(rf"{_LETTER}(?:-{_LETTER})*-{_LETTER}\.\Z"), InitialsPattern.HYPHEN_DOT),
)


def classify_initials(initials: str) -> InitialsShape:
    """Punctuation shape of an initials string plus an internal-space flag.

    "J." -> DOT, "J.B." -> DOTDOT, "J.-B." -> DOT_HYPHEN, "J-B." ->
    HYPHEN_DOT; anything else (including empty) is OTHER. The spaced flag
    records whether the trimmed input contained internal whitespace, so
    "J. B." and "J.B." classify alike but compare different.
    """
    trimmed = initials.strip()
    spaced = bool(re.search(r"\s", trimmed))
    compact = _WS.sub("", trimmed)
    for rule, pattern in _SHAPE_RULES:
        if rule.match(compact):
            return InitialsShape(pattern, spaced)
    return InitialsShape(InitialsPattern.OTHER, spaced)


@dataclass
class SynonymEntry:
    """One canonical spelling plus the alternates accepted for it."""

    original: str
    synonyms: list[str] = field(default_factory=list)
    id: str = ""
    inspire: str = ""
    foaf_name: str = ""

    def accepts(self, printed: str) -> bool:
        target = normalize(printed)
        if target == normalize(self.original):
            return True
        return any(target == normalize(s) for s in self.synonyms)


def apply_synonyms(printed: str, entry: SynonymEntry) -> bool:
    """True when printed matches the entry's original or any synonym.

    Comparison is under normalize() without accent folding: distinct
    accented spellings are distinct synonyms and must be registered as
    such.
    """
    return entry.accepts(printed)


def _check_no_duplicates(entries: Iterable[SynonymEntry], kind: str) -> None:
    seen: set[str] = set()
    for entry in entries:
        key = normalize(entry.original)
        if key in seen:
            raise SynonymError(f"duplicate {kind} synonym entry for {entry.original!r}")
        seen.add(key)
        inner: set[str] = set()
        for synonym in entry.synonyms:
            skey = normalize(synonym)
            if skey in inner:
                raise SynonymError(
                    f"duplicate synonym {synonym!r} under {kind} entry {entry.original!r}"
                )
            inner.add(skey)


@dataclass
class SynonymDB:
    """Accepted alternate spellings for institutes and authors."""

    institutes: list[SynonymEntry] = field(default_factory=list)
    authors: list[SynonymEntry] = field(default_factory=list)

    def validate(self) -> None:
        _check_no_duplicates(self.institutes, "institute")
        _check_no_duplicates(self.authors, "author")

    @classmethod
    def from_json(cls, text: str) -> "SynonymDB":
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise SynonymError(f"synonym store is not valid JSON: {exc}") from exc
        if not isinstance(raw, dict):
            raise SynonymError("synonym store must be a JSON object")
        db = cls(
            institutes=[_entry_from_json(e, "institute") for e in raw.get("institutes", [])],
            authors=[_entry_from_json(e, "author") for e in raw.get("authors", [])],
        )
        db.validate()
        return db

    def to_json(self) -> str:
        payload = {
            "institutes": [
                {"id": e.id, "original": e.original, "synonyms": list(e.synonyms)}
                for e in self.institutes
            ],
            "authors": [
                {
                    "original": e.original,
                    "inspire": e.inspire,
                    "foafName": e.foaf_name,
                    "synonyms": list(e.synonyms),
                }
                for e in self.authors
            ],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"

    def find_institute(self, name: str, institute_id: str = "") -> SynonymEntry | None:
        if institute_id:
            for entry in self.institutes:
                if entry.id and entry.id == institute_id:
                    return entry
        key = normalize(name)
        for entry in self.institutes:
            if normalize(entry.original) == key:
                return entry
        return None

    def find_author(self, display: str, inspire_id: str = "") -> SynonymEntry | None:
        if inspire_id:
            for entry in self.authors:
                if entry.inspire and entry.inspire == inspire_id:
                    return entry
        key = normalize(display)
        for entry in self.authors:
            if normalize(entry.original) == key:
                return entry
        return None


def _entry_from_json(raw: object, kind: str) -> SynonymEntry:
    if not isinstance(raw, dict):
        raise SynonymError(f"{kind} synonym entry must be an object, got {type(raw).__name__}")
    original = raw.get("original")
    if not isinstance(original, str) or not original.strip():
        raise SynonymError(f"{kind} synonym entry needs a non-empty 'original'")
    synonyms = raw.get("synonyms", [])
    if not isinstance(synonyms, list) or any(not isinstance(s, str) for s in synonyms):
        raise SynonymError(f"{kind} entry {original!r}: 'synonyms' must be a list of strings")
    return SynonymEntry(
        original=original,
        synonyms=list(synonyms),
        id=str(raw.get("id", "")),
        inspire=str(raw.get("inspire", "")),
        foaf_name=str(raw.get("foafName", "")),
    )


@dataclass(frozen=True)
class MatchThresholds:
    """Tunable bounds for proof reconciliation."""

    author_distance: int = 2
    close_similarity: float = 0.80

    @classmethod
    def from_json(cls, text: str) -> "MatchThresholds":
        raw = json.loads(text)
        if not isinstance(raw, dict):
            raise MatchError("thresholds must be a JSON object")
        thresholds = cls(
            author_distance=int(raw.get("author_distance", cls.author_distance)),
            close_similarity=float(raw.get("close_similarity", cls.close_similarity)),
        )
        if thresholds.author_distance < 0:
            raise MatchError("author_distance must be >= 0")
        if not 0.0 <= thresholds.close_similarity <= 1.0:
            raise MatchError("close_similarity must be within [0, 1]")
        return thresholds

    def to_json(self) -> str:
        payload = {
            "author_distance": self.author_distance,
            "close_similarity": self.close_similarity,
        }
        return json.dumps(payload, indent=2) + "\n"


@dataclass(frozen=True)
class MatchResult:
    """Outcome of matching one reference name against the printed side.

    target_index is None exactly when the name was classified missing;
    suppressed_by_synonym marks names rescued by a registered synonym.
    """

    reference_index: int
    target_index: int | None
    distance: int
    similarity: float
    suppressed_by_synonym: bool = False


def match_names(
    reference_names: Sequence[str],
    printed_names: Sequence[str],
    max_distance: int,
    synonym_for: Callable[[int], SynonymEntry | None] | None = None,
) -> list[MatchResult]:
    """Match each reference name against the printed names.

    Matching happens in accent-folded normalized space. A reference name
    whose best candidate lies within max_distance matches it; otherwise a
    synonym lookup (by reference index) may rescue it, and failing that it
    is missing (target_index None). Exact hits are resolved through a hash
    lookup so large runs stay cheap.
    """
    folded_printed = [normalize(n, fold_accents=True) for n in printed_names]
    first_seen: dict[str, int] = {}
    for index, name in enumerate(folded_printed):
        first_seen.setdefault(name, index)

    results: list[MatchResult] = []
    for ri, reference_name in enumerate(reference_names):
        folded = normalize(reference_name, fold_accents=True)
        target = first_seen.get(folded)
        if target is not None:
            distance = 0
        elif folded_printed:
            target, distance = _best(folded, folded_printed)
        else:
            target, distance = None, len(folded)

        if target is not None and distance <= max_distance:
            results.append(
                MatchResult(ri, target, distance, similarity(folded, folded_printed[target], distance))
            )
            continue

        entry = synonym_for(ri) if synonym_for is not None else None
        accepted = None
        if entry is not None:
            for pi, printed in enumerate(printed_names):
                if entry.accepts(printed):
                    accepted = pi
                    break
        if accepted is not None:
            d = levenshtein(folded, folded_printed[accepted])
            results.append(
                MatchResult(ri, accepted, d, similarity(folded, folded_printed[accepted], d), True)
            )
        else:
            other = folded_printed[target] if target is not None else ""
            results.append(MatchResult(ri, None, distance, similarity(folded, other, distance)))
    return results


def author_display(author: "Author") -> str:
    """Proof-style rendering of a reference author: initials then family name."""
    return f"{author.initials} {author.family_name}".strip()


def split_printed_name(name: str) -> tuple[str, str]:
    """Split a printed author name into (initials part, family part).

    Leading tokens count as initials while they contain a dot or are a
    single letter; the remainder is the family name.
    """
    tokens = name.split()
    initials: list[str] = []
    for token in tokens:
        bare = token.rstrip(",")
        if "." in bare or (len(bare) == 1 and bare.isalpha()):
            initials.append(bare)
        else:
            break
    family = " ".join(tokens[len(initials):])
    return " ".join(initials), family


def resolve_affiliation_index(index: int, institute_count: int) -> int | None:
    """Map a printed affiliation index into range, shedding glued digits.

    Proof line numbers occasionally fuse with a superscript index (line 17
    before index 1 prints as 171). An out-of-range value is retried with
    leading digits stripped one at a time; the first value landing in
    1..institute_count wins. None when nothing resolves.
    """
    text = str(index)
    for start in range(len(text)):
        value = int(text[start:])
        if 1 <= value <= institute_count:
            return value
    return None


def _entry(
    reference: str,
    printed: str | None = None,
    distance: int | None = None,
    detail: str = "",
) -> ReportEntry:
    return ReportEntry(reference=reference, printed=printed, distance=distance, detail=detail)


_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


def _split_sentences(text: str) -> list[str]:
    return [s.strip() for s in _SENTENCE_SPLIT.split(text) if s.strip()]


def compare(
    reference: "AuthorList",
    proof: "ProofSegments",
    synonyms: SynonymDB,
    agencies: Sequence["FundingAgency"],
    thresholds: MatchThresholds,
    *,
    publisher: str = "",
    document: str = "",
    filename: str = "",
    creation_date: date | None = None,
) -> DiscrepancyReport:
    """Reconcile a parsed proof against the canonical author list.

    Every discrepancy lands in exactly one report category. Authors whose
    best distance is within thresholds.author_distance count as matched
    and get punctuation, affiliation and deceased sub-checks; otherwise a
    registered synonym moves them to the skip list and anything else is
    missing. Institutes match only exactly; non-exact ones are skipped by
    synonym, listed as close matches at or above
    thresholds.close_similarity, or reported missing. Funding agencies
    active at the reference date must appear in the funding text, and
    every funding sentence must name a known agency.
    """
    report = DiscrepancyReport(
        ref_code=reference.header.get("ref_code", ""),
        ref_date=reference.header.get("ref_date", ""),
        creation_date=creation_date or date.today(),
        publisher=publisher,
        document=document,
        filename=filename,
    )

    _compare_authors(reference, proof, synonyms, thresholds, report)
    _compare_institutes(reference, proof, synonyms, thresholds, report)
    _compare_funding(reference, proof.funding_text, synonyms, agencies, report)
    return report


def _compare_authors(
    reference: "AuthorList",
    proof: "ProofSegments",
    synonyms: SynonymDB,
    thresholds: MatchThresholds,
    report: DiscrepancyReport,
) -> None:
    displays = [author_display(a) for a in reference.authors]
    printed_names = [pa.name for pa in proof.authors]
    results = match_names(
        displays,
        printed_names,
        thresholds.author_distance,
        lambda ri: synonyms.find_author(displays[ri], reference.authors[ri].inspire_id),
    )

    institute_count = len(reference.institutes)
    positions = {inst.id: pos for pos, inst in enumerate(reference.institutes, 1)}

    for result in results:
        display = displays[result.reference_index]
        if result.target_index is None:
            report.authors_missing_list.append(
                _entry(display, detail="no close spelling in proof")
            )
            continue
        printed = proof.authors[result.target_index]
        if result.suppressed_by_synonym:
            report.authors_missing_skip.append(
                _entry(
                    display,
                    printed=printed.name,
                    distance=result.distance,
                    detail="accepted by registered synonym",
                )
            )
            continue
        author = reference.authors[result.reference_index]
        _check_matched_author(
            author, display, printed, result.distance, positions, institute_count, report
        )


def _check_matched_author(
    author: "Author",
    display: str,
    printed,
    distance: int,
    positions: dict[str, int],
    institute_count: int,
    report: DiscrepancyReport,
) -> None:
    printed_initials, _ = split_printed_name(printed.name)
    reference_shape = classify_initials(author.initials)
    printed_shape = classify_initials(printed_initials)
    if reference_shape != printed_shape:
        report.authors_puntuation_list.append(
            _entry(
                display,
                printed=printed.name,
                distance=distance,
                detail=(
                    f"initials {author.initials!r} ({_describe(reference_shape)}) vs "
                    f"{printed_initials!r} ({_describe(printed_shape)})"
                ),
            )
        )

    expected = {positions[inst_id] for inst_id in author.affiliations}
    actual: set[int] = set()
    unresolved: list[int] = []
    for raw_index in printed.affiliation_indices:
        resolved = resolve_affiliation_index(raw_index, institute_count)
        if resolved is None:
            unresolved.append(raw_index)
        else:
            actual.add(resolved)
    if actual != expected or unresolved:
        detail = f"proof affiliations {sorted(actual)} vs reference {sorted(expected)}"
        if unresolved:
            detail += f"; unresolvable indices {unresolved}"
        report.authors_mismatched_list.append(_entry(display, printed=printed.name, detail=detail))

    if author.deceased and not printed.deceased_marker:
        report.authors_deceased_list.append(
            _entry(display, printed=printed.name, detail="deceased in reference, unmarked in proof")
        )
    elif printed.deceased_marker and not author.deceased:
        report.authors_not_deceased_list.append(
            _entry(display, printed=printed.name, detail="marked deceased in proof only")
        )


def _describe(shape: InitialsShape) -> str:
    spacing = "spaced" if shape.spaced else "unspaced"
    return f"{shape.pattern.value}/{spacing}"


def _compare_institutes(
    reference: "AuthorList",
    proof: "ProofSegments",
    synonyms: SynonymDB,
    thresholds: MatchThresholds,
    report: DiscrepancyReport,
) -> None:
    printed_names = [pi.name for pi in proof.institutes]
    folded_names = [normalize(n, fold_accents=True) for n in printed_names]
    first_seen: dict[str, int] = {}
    for index, name in enumerate(folded_names):
        first_seen.setdefault(name, index)

    for institute in reference.institutes:
        folded = normalize(institute.name, fold_accents=True)
        if folded in first_seen:
            continue
        if folded_names:
            target, distance = _best(folded, folded_names)
        else:
            target, distance = None, len(folded)

        entry = synonyms.find_institute(institute.name, institute.id)
        accepted = None
        if entry is not None:
            for name in printed_names:
                if entry.accepts(name):
                    accepted = name
                    break
        if accepted is not None:
            report.institutes_missing_pdf_skip.append(
                _entry(
                    institute.name,
                    printed=accepted,
                    distance=levenshtein(normalize(institute.name), normalize(accepted)),
                    detail="accepted by registered synonym",
                )
            )
            continue

        if target is not None:
            closeness = similarity(folded, folded_names[target], distance)
            if closeness >= thresholds.close_similarity:
                report.institutes_close_matches_list.append(
                    _entry(
                        institute.name,
                        printed=printed_names[target],
                        distance=distance,
                        detail=f"similarity {closeness:.4f}",
                    )
                )
                continue
        report.institutes_missing_pdf_list.append(
            _entry(institute.name, detail="no close spelling in proof")
        )


def _agency_names(agency: "FundingAgency", synonyms: SynonymDB) -> list[str]:
    names = [agency.name]
    entry = synonyms.find_institute(agency.name)
    if entry is not None:
        names.extend(entry.synonyms)
    return names


def _compare_funding(
    reference: "AuthorList",
    funding_text: str,
    synonyms: SynonymDB,
    agencies: Sequence["FundingAgency"],
    report: DiscrepancyReport,
) -> None:
    folded_text = normalize(funding_text, fold_accents=True)
    try:
        reference_date = date.fromisoformat(reference.header.get("ref_date", ""))
    except ValueError:
        reference_date = None

    known_names: list[str] = []
    for agency in agencies:
        names = _agency_names(agency, synonyms)
        known_names.extend(names)
        if reference_date is not None and not agency.active_on(reference_date):
            continue
        if not any(normalize(n, fold_accents=True) in folded_text for n in names if n.strip()):
            report.founding_agencies_missing.append(
                _entry(agency.name, detail="active agency absent from funding text")
            )

    if not funding_text.strip():
        return
    folded_known = [normalize(n, fold_accents=True) for n in known_names if n.strip()]
    for sentence in _split_sentences(funding_text):
        folded_sentence = normalize(sentence, fold_accents=True)
        if not any(name in folded_sentence for name in folded_known):
            report.founding_agencies_wrong.append(
                _entry("", printed=sentence, detail="sentence names no known agency")
            )
