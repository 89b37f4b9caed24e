"""LaTeX flattening for submission archives.

Four steps, applied in order: merge every source file into one,
drop comments, rename figures to the journal convention, and discard
the directory structure. The result is a deterministic tar.gz plus a
manifest sidecar.
"""

from __future__ import annotations

import enum
import gzip
import io
import json
import re
import tarfile
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath

__all__ = [
    "FlattenError",
    "SubmissionProfile",
    "TexProject",
    "FlattenResult",
    "inline_inputs",
    "strip_comments",
    "rename_figures",
    "build_submission",
    "write_archive",
]

FLAT_SOURCE_NAME = "main.tex"
BIBLIOGRAPHY_SLOT = "main.bbl"

DEFAULT_VERBATIM_ENVS = ("verbatim", "lstlisting")

_INCLUDE = re.compile(r"\\(?:input|include)\{([^}]*)\}")
_GRAPHICS = re.compile(r"(\\includegraphics\s*(?:\[[^\]]*\])?\s*)\{([^}]*)\}")
_GRAPHIC_SUFFIXES = (".pdf", ".png", ".jpg", ".jpeg", ".eps")


class FlattenError(Exception):
    """Raised when a project cannot be flattened."""


class SubmissionProfile(enum.Enum):
    """TeX Live target of the submission archive.

    The two targets differ in bibliography handling: the journal
    profile ships a precompiled bbl slot alongside the sources.
    """

    ARXIV_TL2020 = "arxiv_tl2020"
    JOURNAL_TL2017 = "journal_tl2017"


@dataclass
class TexProject:
    """A manuscript checkout: source text, binary assets, one root file.

    Paths are POSIX-relative. Assets under an ``auxiliary`` prefix are
    kept out of submission archives.
    """

    root_file: str
    files: dict[str, str]
    assets: dict[str, bytes] = field(default_factory=dict)
    auxiliary: tuple[str, ...] = ()

    def validate(self) -> None:
        if self.root_file not in self.files:
            raise FlattenError(f"root file {self.root_file!r} not in project")
        for path in list(self.files) + list(self.assets):
            pure = PurePosixPath(path)
            if pure.is_absolute() or ".." in pure.parts:
                raise FlattenError(f"path {path!r} is not project-relative")

    def is_auxiliary(self, path: str) -> bool:
        for prefix in self.auxiliary:
            clean = prefix.rstrip("/")
            if path == clean or path.startswith(clean + "/"):
                return True
        return False

    @classmethod
    def from_directory(
        cls,
        root_dir: str | Path,
        root_file: str = "main.tex",
        auxiliary: tuple[str, ...] = (),
    ) -> "TexProject":
        """Read a checkout from disk; .tex files become sources, the rest assets."""
        base = Path(root_dir)
        files: dict[str, str] = {}
        assets: dict[str, bytes] = {}
        for path in sorted(base.rglob("*")):
            if not path.is_file():
                continue
            relative = path.relative_to(base).as_posix()
            if path.suffix == ".tex":
                files[relative] = path.read_text(encoding="utf-8")
            else:
                assets[relative] = path.read_bytes()
        project = cls(
            root_file=root_file, files=files, assets=assets, auxiliary=tuple(auxiliary)
        )
        project.validate()
        return project


@dataclass(frozen=True)
class FlattenResult:
    flat_source: str
    renamed_assets: dict[str, str]
    profile: SubmissionProfile
    manifest: tuple[str, ...]


def _comment_start(line: str) -> int | None:
    """Index of the first % not escaped by an odd run of backslashes."""
    position = 0
    while True:
        position = line.find("%", position)
        if position < 0:
            return None
        backslashes = 0
        cursor = position - 1
        while cursor >= 0 and line[cursor] == "\\":
            backslashes += 1
            cursor -= 1
        if backslashes % 2 == 0:
            return position
        position += 1


def _begin_pattern(envs: tuple[str, ...]) -> re.Pattern[str]:
    return re.compile(r"\\begin\{(" + "|".join(re.escape(e) for e in envs) + r")\}")


def inline_inputs(project: TexProject) -> str:
    """Merge the inclusion tree into a single source text.

    Every \\input/\\include outside comments and verbatim blocks is
    replaced by the (recursively expanded) target body. A target
    without extension picks up the includer's suffix.
    """
    project.validate()
    begin_re = _begin_pattern(DEFAULT_VERBATIM_ENVS)

    def resolve(target: str, includer: str) -> str:
        if target in project.files:
            return target
        suffix = PurePosixPath(includer).suffix or ".tex"
        candidate = target + suffix
        if candidate in project.files:
            return candidate
        raise FlattenError(f"{includer} inputs {target}: no such file")

    def expand(path: str, stack: tuple[str, ...]) -> str:
        if path in stack:
            cycle = stack[stack.index(path):] + (path,)
            raise FlattenError("inclusion cycle: " + " -> ".join(cycle))
        chain = stack + (path,)
        out: list[str] = []
        in_env: str | None = None
        for line in project.files[path].split("\n"):
            if in_env is not None:
                out.append(line)
                if f"\\end{{{in_env}}}" in line:
                    in_env = None
                continue
            active_end = len(line)
            comment = _comment_start(line)
            if comment is not None:
                active_end = comment
            begin = begin_re.search(line)
            if begin is not None and begin.start() < active_end:
                active_end = min(active_end, begin.end())
                env = begin.group(1)
                if f"\\end{{{env}}}" not in line[begin.end():]:
                    in_env = env

            def substitute(match: re.Match[str]) -> str:
                if match.start() >= active_end:
                    return match.group(0)
                return expand(resolve(match.group(1), path), chain)

            out.append(_INCLUDE.sub(substitute, line))
        return "\n".join(out)

    return expand(project.root_file, ())


def strip_comments(
    tex: str, verbatim_envs: tuple[str, ...] = DEFAULT_VERBATIM_ENVS
) -> str:
    """Remove % comments, keeping escapes, verbatim blocks, and the
    bare trailing % that TeX uses to suppress the line break."""
    begin_re = _begin_pattern(verbatim_envs)
    out: list[str] = []
    in_env: str | None = None
    for line in tex.split("\n"):
        if in_env is not None:
            out.append(line)
            if f"\\end{{{in_env}}}" in line:
                in_env = None
            continue
        comment = _comment_start(line)
        begin = begin_re.search(line)
        if begin is not None and (comment is None or begin.start() < comment):
            env = begin.group(1)
            if f"\\end{{{env}}}" not in line[begin.end():]:
                in_env = env
            out.append(line)
            continue
        if comment is None:
            out.append(line)
            continue
        kept = line[:comment]
        if comment == len(line) - 1 and kept.strip():
            out.append(line)
        else:
            out.append(kept.rstrip())
    return "\n".join(out)


def rename_figures(
    tex: str, assets: dict[str, bytes]
) -> tuple[str, dict[str, str]]:
    """Rewrite graphics references to Fig1, Fig2, ... in first-reference
    order, preserving each asset's extension."""
    renamed: dict[str, str] = {}

    def resolve(reference: str) -> str:
        if reference in assets:
            return reference
        for suffix in _GRAPHIC_SUFFIXES:
            if reference + suffix in assets:
                return reference + suffix
        raise FlattenError(f"graphics reference {reference!r} matches no asset")

    def substitute(match: re.Match[str]) -> str:
        original = resolve(match.group(2))
        if original not in renamed:
            suffix = PurePosixPath(original).suffix
            renamed[original] = f"Fig{len(renamed) + 1}{suffix}"
        return match.group(1) + "{" + renamed[original] + "}"

    return _GRAPHICS.sub(substitute, tex), renamed


def _flat_copies(project: TexProject, suffix: str) -> list[str]:
    names: dict[str, str] = {}
    for path in project.assets:
        if project.is_auxiliary(path) or not path.endswith(suffix):
            continue
        name = PurePosixPath(path).name
        if name in names:
            raise FlattenError(
                f"flat name clash: {names[name]!r} and {path!r} both become {name!r}"
            )
        names[name] = path
    return sorted(names)


def build_submission(
    project: TexProject, profile: SubmissionProfile | str
) -> FlattenResult:
    """Run the four flattening steps and assemble the archive manifest."""
    if isinstance(profile, str):
        try:
            profile = SubmissionProfile(profile)
        except ValueError:
            choices = ", ".join(p.value for p in SubmissionProfile)
            raise FlattenError(f"unknown profile {profile!r} (choices: {choices})")
    merged = inline_inputs(project)
    stripped = strip_comments(merged)
    submittable = {
        path: data
        for path, data in project.assets.items()
        if not project.is_auxiliary(path)
    }
    flat, renamed = rename_figures(stripped, submittable)
    manifest = [FLAT_SOURCE_NAME]
    manifest.extend(renamed.values())
    manifest.extend(_flat_copies(project, ".bib"))
    manifest.extend(_flat_copies(project, ".sty"))
    if profile is SubmissionProfile.JOURNAL_TL2017:
        manifest.append(BIBLIOGRAPHY_SLOT)
    return FlattenResult(
        flat_source=flat,
        renamed_assets=renamed,
        profile=profile,
        manifest=tuple(manifest),
    )


def _entry_bytes(name: str, result: FlattenResult, project: TexProject) -> bytes:
    if name == FLAT_SOURCE_NAME:
        return result.flat_source.encode("utf-8")
    if name == BIBLIOGRAPHY_SLOT:
        # placeholder: compiling the bibliography is the pipeline's job
        return b""
    for original, new_name in result.renamed_assets.items():
        if new_name == name:
            return project.assets[original]
    for path, data in project.assets.items():
        if PurePosixPath(path).name == name and not project.is_auxiliary(path):
            return data
    raise FlattenError(f"manifest entry {name!r} has no source")


def write_archive(
    result: FlattenResult, project: TexProject, out_path: str | Path
) -> Path:
    """Write the tar.gz (fixed mtime/owner for reproducible bytes) and a
    JSON sidecar with the manifest and rename map. Returns the sidecar path."""
    out_path = Path(out_path)
    buffer = io.BytesIO()
    with gzip.GzipFile(fileobj=buffer, mode="wb", mtime=0) as gz:
        with tarfile.open(fileobj=gz, mode="w") as tar:
            for name in result.manifest:
                data = _entry_bytes(name, result, project)
                info = tarfile.TarInfo(name)
                info.size = len(data)
                info.mtime = 0
                info.uid = info.gid = 0
                info.uname = info.gname = ""
                info.mode = 0o644
                tar.addfile(info, io.BytesIO(data))
    out_path.write_bytes(buffer.getvalue())
    sidecar = out_path.with_name(out_path.name + ".manifest.json")
    payload = {
        "profile": result.profile.value,
        "entries": list(result.manifest),
        "renamed": dict(result.renamed_assets),
    }
    sidecar.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    return sidecar
