"""Canonical author list: snapshot from the membership database, XML and
TeX rendering, XML parsing, and acknowledgements text.

The XML dialect has three blocks (Header, Institutes, Authors) and is the
interchange format between the membership snapshot, the proof checker and
the submission tooling. Rendering is byte-deterministic so the same list
always produces the same file.
"""

from __future__ import annotations

import json
import logging
import re
import unicodedata
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import date

logger = logging.getLogger(__name__)


class AuthorListError(ValueError):
    """Raised for invalid author-list content or unusable inputs."""


class AuthorListParseError(AuthorListError):
    """Raised when author-list XML cannot be parsed; names the element path."""


_ORCID = re.compile(r"\d{4}-\d{4}-\d{4}-\d{3}[\dX]\Z")
_WS = re.compile(r"\s+")

HEADER_TITLE = "title"
HEADER_REF_CODE = "ref_code"
HEADER_REF_DATE = "ref_date"


def _fold_accents(text: str) -> str:
    decomposed = unicodedata.normalize("NFKD", text)
    return "".join(ch for ch in decomposed if not unicodedata.combining(ch))


@dataclass(frozen=True)
class Institute:
    """One institution, keyed by a stable id used in affiliations."""

    id: str
    name: str
    inspire_ref: str = ""
    country: str = ""


@dataclass(frozen=True)
class Author:
    """One author with resolved affiliations and identity records."""

    family_name: str
    initials: str
    affiliations: tuple[str, ...]
    foaf_name: str = ""
    inspire_id: str = ""
    orcid: str = ""
    deceased: bool = False
    membership_start: date | None = None
    membership_end: date | None = None

    def sort_key(self) -> tuple[str, str]:
        return (_fold_accents(self.family_name), _fold_accents(self.initials))


@dataclass
class AuthorList:
    """Header fields plus ordered institutes and authors."""

    header: dict[str, str] = field(default_factory=dict)
    institutes: tuple[Institute, ...] = ()
    authors: tuple[Author, ...] = ()

    def validate(self) -> None:
        seen_ids: set[str] = set()
        for institute in self.institutes:
            if not institute.id.strip():
                raise AuthorListError(f"institute {institute.name!r} has an empty id")
            if institute.id in seen_ids:
                raise AuthorListError(f"duplicate institute id {institute.id!r}")
            seen_ids.add(institute.id)
            if not _WS.sub("", institute.name):
                raise AuthorListError(f"institute {institute.id!r} has an empty name")
        for author in self.authors:
            label = f"{author.initials} {author.family_name}".strip() or "<unnamed>"
            if not _WS.sub("", author.family_name):
                raise AuthorListError(f"author {label!r} has an empty family name")
            if not author.affiliations:
                raise AuthorListError(f"author {label!r} has no affiliations")
            for ref in author.affiliations:
                if ref not in seen_ids:
                    raise AuthorListError(
                        f"author {label!r} references undeclared institute {ref!r}"
                    )
            if author.orcid and not _ORCID.match(author.orcid):
                raise AuthorListError(f"author {label!r} has malformed ORCID {author.orcid!r}")
        ref_date = self.header.get(HEADER_REF_DATE)
        if ref_date is not None:
            try:
                date.fromisoformat(ref_date)
            except ValueError as exc:
                raise AuthorListError(f"header ref_date {ref_date!r} is not an ISO date") from exc


@dataclass(frozen=True)
class FundingAgency:
    """A funding agency with its period of applicability."""

    name: str
    active_from: date
    active_to: date | None = None

    def active_on(self, when: date) -> bool:
        if when < self.active_from:
            return False
        return self.active_to is None or when <= self.active_to


def _parse_date(value: object, context: str) -> date:
    if not isinstance(value, str):
        raise AuthorListError(f"{context}: expected an ISO date string, got {value!r}")
    try:
        return date.fromisoformat(value)
    except ValueError as exc:
        raise AuthorListError(f"{context}: bad date {value!r}") from exc


def load_member_db(text: str) -> dict:
    """Parse and shape-check a membership database export."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AuthorListError(f"member db is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise AuthorListError("member db must be a JSON object")
    for key in ("institutes", "members"):
        if not isinstance(raw.get(key), list):
            raise AuthorListError(f"member db needs a list under {key!r}")
    return raw


def load_agencies(text: str) -> list[FundingAgency]:
    """Parse the funding-agency roster, enforcing unique normalized names."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise AuthorListError(f"agency roster is not valid JSON: {exc}") from exc
    if isinstance(raw, dict):
        raw = raw.get("agencies", [])
    if not isinstance(raw, list):
        raise AuthorListError("agency roster must be a list or an object with 'agencies'")
    agencies: list[FundingAgency] = []
    seen: set[str] = set()
    for item in raw:
        if not isinstance(item, dict) or not isinstance(item.get("name"), str):
            raise AuthorListError("each agency needs a string 'name'")
        name = item["name"]
        key = _WS.sub(" ", name).strip().casefold()
        if key in seen:
            raise AuthorListError(f"duplicate agency name {name!r}")
        seen.add(key)
        active_to = item.get("active_to")
        agencies.append(
            FundingAgency(
                name=name,
                active_from=_parse_date(item.get("active_from"), f"agency {name!r}"),
                active_to=None if active_to in (None, "") else _parse_date(active_to, f"agency {name!r}"),
            )
        )
    return agencies


def snapshot_author_list(member_db: dict, reference_date: date, paper_header: dict[str, str]) -> AuthorList:
    """Freeze the author list for a paper at its reference date.

    Members qualify when their membership covers the reference date. The
    result is sorted by family name then initials, with accents folded for
    ordering only, and institutes keep only those actually referenced, in
    first-use order.
    """
    institutes_by_id: dict[str, Institute] = {}
    for raw in member_db.get("institutes", []):
        if not isinstance(raw, dict) or not isinstance(raw.get("id"), str):
            raise AuthorListError("each institute needs a string 'id'")
        institute = Institute(
            id=raw["id"],
            name=str(raw.get("name", "")),
            inspire_ref=str(raw.get("inspire_ref", "")),
            country=str(raw.get("country", "")),
        )
        if institute.id in institutes_by_id:
            raise AuthorListError(f"duplicate institute id {institute.id!r} in member db")
        institutes_by_id[institute.id] = institute

    qualified: list[Author] = []
    for raw in member_db.get("members", []):
        if not isinstance(raw, dict):
            raise AuthorListError("each member must be an object")
        family = str(raw.get("family_name", ""))
        initials = str(raw.get("initials", ""))
        label = f"{initials} {family}".strip() or "<unnamed>"
        start = _parse_date(raw.get("membership_start"), f"member {label!r}")
        raw_end = raw.get("membership_end")
        end = None if raw_end in (None, "") else _parse_date(raw_end, f"member {label!r}")
        if reference_date < start:
            continue
        if end is not None and reference_date > end:
            continue
        affiliations = raw.get("affiliations", [])
        if not isinstance(affiliations, list) or not affiliations:
            raise AuthorListError(f"member {label!r} has no affiliations")
        for ref in affiliations:
            if ref not in institutes_by_id:
                raise AuthorListError(f"member {label!r} references unknown institute {ref!r}")
        qualified.append(
            Author(
                family_name=family,
                initials=initials,
                affiliations=tuple(str(a) for a in affiliations),
                foaf_name=str(raw.get("foaf_name", "")),
                inspire_id=str(raw.get("inspire_id", "")),
                orcid=str(raw.get("orcid", "")),
                deceased=bool(raw.get("deceased", False)),
                membership_start=start,
                membership_end=end,
            )
        )

    if not qualified:
        raise AuthorListError(f"no members qualify on {reference_date.isoformat()}")

    qualified.sort(key=Author.sort_key)

    used: list[Institute] = []
    seen: set[str] = set()
    for author in qualified:
        for ref in author.affiliations:
            if ref not in seen:
                seen.add(ref)
                used.append(institutes_by_id[ref])

    header = dict(paper_header)
    header[HEADER_REF_DATE] = reference_date.isoformat()
    result = AuthorList(header=header, institutes=tuple(used), authors=tuple(qualified))
    result.validate()
    return result


def _escape_attr(value: str) -> str:
    return (
        value.replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _escape_text(value: str) -> str:
    return value.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _render_xml(author_list: AuthorList) -> str:
    out: list[str] = ['<?xml version="1.0" encoding="UTF-8"?>', "<authorlist>", "  <header>"]
    for key in sorted(author_list.header):
        out.append(
            f'    <entry key="{_escape_attr(key)}">{_escape_text(author_list.header[key])}</entry>'
        )
    out.append("  </header>")
    out.append("  <institutes>")
    for institute in author_list.institutes:
        attrs = [f'id="{_escape_attr(institute.id)}"']
        if institute.inspire_ref:
            attrs.append(f'inspire_ref="{_escape_attr(institute.inspire_ref)}"')
        if institute.country:
            attrs.append(f'country="{_escape_attr(institute.country)}"')
        out.append(f'    <institute {" ".join(attrs)}>{_escape_text(institute.name)}</institute>')
    out.append("  </institutes>")
    out.append("  <authors>")
    for author in author_list.authors:
        attrs = [
            f'family_name="{_escape_attr(author.family_name)}"',
            f'initials="{_escape_attr(author.initials)}"',
        ]
        if author.foaf_name:
            attrs.append(f'foaf_name="{_escape_attr(author.foaf_name)}"')
        if author.inspire_id:
            attrs.append(f'inspire_id="{_escape_attr(author.inspire_id)}"')
        if author.orcid:
            attrs.append(f'orcid="{_escape_attr(author.orcid)}"')
        if author.deceased:
            attrs.append('deceased="true"')
        if author.membership_start is not None:
            attrs.append(f'membership_start="{author.membership_start.isoformat()}"')
        if author.membership_end is not None:
            attrs.append(f'membership_end="{author.membership_end.isoformat()}"')
        out.append(f'    <author {" ".join(attrs)}>')
        for ref in author.affiliations:
            out.append(f'      <affiliation ref="{_escape_attr(ref)}"/>')
        out.append("    </author>")
    out.append("  </authors>")
    out.append("</authorlist>")
    return "\n".join(out) + "\n"


def _render_tex(author_list: AuthorList) -> str:
    positions = {inst.id: pos for pos, inst in enumerate(author_list.institutes, 1)}
    lines: list[str] = []
    for author in author_list.authors:
        indices = ",".join(str(positions[ref]) for ref in author.affiliations)
        if author.deceased:
            indices = f"{indices},\\dagger" if indices else "\\dagger"
        name = f"{author.initials}~{author.family_name}" if author.initials else author.family_name
        lines.append(f"{name}$^{{{indices}}}$")
    body = ",\n".join(lines)
    institute_lines = "\n".join(
        f"$^{{{positions[inst.id]}}}$ {inst.name}\\\\" for inst in author_list.institutes
    )
    return f"{body}\n\\\\[12pt]\n{institute_lines}\n"


def render_author_list(author_list: AuthorList, format: str) -> str:
    """Serialize to the named format: "xml" or "tex"."""
    author_list.validate()
    if format == "xml":
        return _render_xml(author_list)
    if format == "tex":
        return _render_tex(author_list)
    raise AuthorListError(f"unsupported author list format {format!r}")


def _element_path(tag: str, index: int) -> str:
    return f"{tag}[{index + 1}]"


def parse_author_list(xml_text: str, warnings: list[str] | None = None) -> AuthorList:
    """Parse author-list XML back into an AuthorList.

    Structural problems raise AuthorListParseError naming the element
    path; unknown elements are skipped with a note in warnings.
    """
    if warnings is None:
        warnings = []
    if not xml_text.strip():
        raise AuthorListParseError("missing Header block")
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise AuthorListParseError(f"malformed XML: {exc}") from exc
    if root.tag != "authorlist":
        raise AuthorListParseError(f"expected <authorlist> root, found <{root.tag}>")

    header_el = root.find("header")
    if header_el is None:
        raise AuthorListParseError("missing Header block")
    institutes_el = root.find("institutes")
    if institutes_el is None:
        raise AuthorListParseError("missing Institutes block")
    authors_el = root.find("authors")
    if authors_el is None:
        raise AuthorListParseError("missing Authors block")

    for index, child in enumerate(root):
        if child.tag not in ("header", "institutes", "authors"):
            warnings.append(f"ignored unknown element at authorlist/{_element_path(child.tag, index)}")

    header: dict[str, str] = {}
    for index, child in enumerate(header_el):
        if child.tag != "entry":
            warnings.append(f"ignored unknown element at header/{_element_path(child.tag, index)}")
            continue
        key = child.get("key")
        if not key:
            raise AuthorListParseError(f"header/{_element_path('entry', index)} lacks a key attribute")
        if key in header:
            raise AuthorListParseError(f"header/{_element_path('entry', index)} repeats key {key!r}")
        header[key] = child.text or ""

    institutes: list[Institute] = []
    seen_ids: set[str] = set()
    for index, child in enumerate(institutes_el):
        path = f"institutes/{_element_path(child.tag, index)}"
        if child.tag != "institute":
            warnings.append(f"ignored unknown element at {path}")
            continue
        inst_id = child.get("id")
        if not inst_id:
            raise AuthorListParseError(f"{path} lacks an id attribute")
        if inst_id in seen_ids:
            raise AuthorListParseError(f"{path} repeats institute id {inst_id!r}")
        seen_ids.add(inst_id)
        institutes.append(
            Institute(
                id=inst_id,
                name=(child.text or "").strip(),
                inspire_ref=child.get("inspire_ref", ""),
                country=child.get("country", ""),
            )
        )

    authors: list[Author] = []
    for index, child in enumerate(authors_el):
        path = f"authors/{_element_path(child.tag, index)}"
        if child.tag != "author":
            warnings.append(f"ignored unknown element at {path}")
            continue
        family = child.get("family_name")
        if family is None:
            raise AuthorListParseError(f"{path} lacks a family_name attribute")
        affiliations: list[str] = []
        for sub_index, sub in enumerate(child):
            sub_path = f"{path}/{_element_path(sub.tag, sub_index)}"
            if sub.tag != "affiliation":
                warnings.append(f"ignored unknown element at {sub_path}")
                continue
            ref = sub.get("ref")
            if not ref:
                raise AuthorListParseError(f"{sub_path} lacks a ref attribute")
            if ref not in seen_ids:
                raise AuthorListParseError(
                    f"{sub_path} references undeclared institute {ref!r}"
                )
            affiliations.append(ref)
        start = child.get("membership_start")
        end = child.get("membership_end")
        try:
            membership_start = date.fromisoformat(start) if start else None
            membership_end = date.fromisoformat(end) if end else None
        except ValueError as exc:
            raise AuthorListParseError(f"{path} has a bad membership date: {exc}") from exc
        authors.append(
            Author(
                family_name=family,
                initials=child.get("initials", ""),
                affiliations=tuple(affiliations),
                foaf_name=child.get("foaf_name", ""),
                inspire_id=child.get("inspire_id", ""),
                orcid=child.get("orcid", ""),
                deceased=child.get("deceased", "") == "true",
                membership_start=membership_start,
                membership_end=membership_end,
            )
        )

    result = AuthorList(header=header, institutes=tuple(institutes), authors=tuple(authors))
    result.validate()
    return result


def render_acknowledgements(
    agencies: list[FundingAgency], reference_date: date, template: str
) -> str:
    """Fill the {{agencies}} placeholder with agencies active at the date.

    Agency order follows the roster. An empty active set renders an empty
    placeholder and logs a warning, since a funding section naming nobody
    is almost certainly a configuration mistake.
    """
    if "{{agencies}}" not in template:
        raise AuthorListError("acknowledgements template lacks an {{agencies}} placeholder")
    active = [a.name for a in agencies if a.active_on(reference_date)]
    if not active:
        logger.warning("no funding agencies active on %s", reference_date.isoformat())
    return template.replace("{{agencies}}", "; ".join(active))
