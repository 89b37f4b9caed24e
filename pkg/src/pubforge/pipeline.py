"""CI-style pipelines: stages of jobs with branch-based selection.

Two bundled configurations mirror the production setup: an editing
pipeline (version, LaTeX, rules, build checks) for work branches and a
submission pipeline that additionally packages the flattened archive.
Jobs never raise; they report passed/failed plus diagnostics.
"""

from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass, field
from importlib import resources
from typing import Callable

from . import __version__
from .flatten import (
    FlattenError,
    SubmissionProfile,
    TexProject,
    build_submission,
    inline_inputs,
    strip_comments,
)

__all__ = [
    "PipelineError",
    "PipelineKind",
    "JobSpec",
    "Stage",
    "PipelineConfig",
    "JobOutcome",
    "StageResult",
    "PipelineResult",
    "select_pipeline",
    "load_pipeline",
    "load_bundled_pipeline",
    "load_style_rules",
    "registered_jobs",
    "run_pipeline",
]

PASSED = "passed"
FAILED = "failed"
SKIPPED = "skipped"

SUBMISSION_REF_PREFIX = "PO-"

_REF_CODE = re.compile(
    r"^ANA-[A-Z]{4}-[0-9]{4}-[0-9]{2}(-(PAPER|INT[0-9]+|CONF|PUB))?$"
)
_REF_CODE_MACRO = re.compile(r"\\newcommand\{\\PaperRefCode\}\{([^}]*)\}")


class PipelineError(Exception):
    """Configuration or selection error, raised before any job runs."""


class PipelineKind(enum.Enum):
    EDITING = "editing"
    SUBMISSION = "submission"


def select_pipeline(ref_name: str) -> PipelineKind:
    """Branches and tags named PO-* trigger submission; all else editing."""
    if not ref_name:
        raise PipelineError("ref name is empty")
    if ref_name.startswith(SUBMISSION_REF_PREFIX):
        return PipelineKind.SUBMISSION
    return PipelineKind.EDITING


@dataclass(frozen=True)
class JobSpec:
    kind: str
    name: str = ""
    params: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.name or self.kind


@dataclass(frozen=True)
class Stage:
    name: str
    jobs: tuple[JobSpec, ...]
    run_on_failure: bool = False


@dataclass(frozen=True)
class PipelineConfig:
    name: str
    stages: tuple[Stage, ...]

    def validate(self) -> None:
        if not self.stages:
            raise PipelineError(f"pipeline {self.name!r} has no stages")
        seen: set[str] = set()
        for stage in self.stages:
            if stage.name in seen:
                raise PipelineError(f"duplicate stage name {stage.name!r}")
            seen.add(stage.name)
            for job in stage.jobs:
                if job.kind not in _JOBS:
                    raise PipelineError(
                        f"stage {stage.name!r} names unregistered job kind {job.kind!r}"
                    )


@dataclass(frozen=True)
class JobOutcome:
    name: str
    kind: str
    status: str
    diagnostics: tuple[str, ...] = ()
    artifact: dict | None = None


@dataclass(frozen=True)
class StageResult:
    name: str
    status: str
    jobs: tuple[JobOutcome, ...]


@dataclass(frozen=True)
class PipelineResult:
    name: str
    status: str
    stages: tuple[StageResult, ...]
    artifacts: tuple[dict, ...]

    def to_json(self) -> str:
        payload = {
            "pipeline": self.name,
            "status": self.status,
            "stages": [
                {
                    "name": stage.name,
                    "status": stage.status,
                    "jobs": [
                        {
                            "name": job.name,
                            "kind": job.kind,
                            "status": job.status,
                            "diagnostics": list(job.diagnostics),
                        }
                        for job in stage.jobs
                    ],
                }
                for stage in self.stages
            ],
            "artifacts": [dict(a) for a in self.artifacts],
        }
        return json.dumps(payload, ensure_ascii=False, indent=2) + "\n"


def load_pipeline(text: str) -> PipelineConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as error:
        raise PipelineError(f"pipeline config is not valid JSON: {error}")
    if not isinstance(raw, dict) or not isinstance(raw.get("name"), str):
        raise PipelineError("pipeline config needs a string 'name'")
    stages = []
    for index, entry in enumerate(raw.get("stages", []), start=1):
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise PipelineError(f"stage[{index}] needs a string 'name'")
        jobs = []
        for job_index, job in enumerate(entry.get("jobs", []), start=1):
            if not isinstance(job, dict) or not isinstance(job.get("kind"), str):
                raise PipelineError(
                    f"stage[{index}].jobs[{job_index}] needs a string 'kind'"
                )
            params = job.get("params", {})
            if not isinstance(params, dict):
                raise PipelineError(
                    f"stage[{index}].jobs[{job_index}].params must be an object"
                )
            jobs.append(
                JobSpec(kind=job["kind"], name=job.get("name", ""), params=params)
            )
        stages.append(
            Stage(
                name=entry["name"],
                jobs=tuple(jobs),
                run_on_failure=bool(entry.get("run_on_failure", False)),
            )
        )
    config = PipelineConfig(name=raw["name"], stages=tuple(stages))
    config.validate()
    return config


def _bundled(relative: str) -> str:
    return resources.files("pubforge").joinpath("data", relative).read_text(
        encoding="utf-8"
    )


def load_bundled_pipeline(kind: PipelineKind | str) -> PipelineConfig:
    if isinstance(kind, str):
        kind = PipelineKind(kind)
    return load_pipeline(_bundled(f"pipelines/{kind.value}.json"))


def load_style_rules(text: str | None = None) -> dict:
    raw = json.loads(text if text is not None else _bundled("style_rules.json"))
    if not isinstance(raw, dict):
        raise PipelineError("style rules must be a JSON object")
    return raw


# --- job kinds -------------------------------------------------------------

JobFunction = Callable[[TexProject, dict, dict], JobOutcome]

_JOBS: dict[str, JobFunction] = {}


def registered_jobs() -> tuple[str, ...]:
    return tuple(sorted(_JOBS))


def _job(kind: str):
    def register(fn: JobFunction) -> JobFunction:
        _JOBS[kind] = fn
        return fn

    return register


def _outcome(spec_label: str, kind: str, diagnostics: list[str],
             artifact: dict | None = None) -> JobOutcome:
    status = FAILED if diagnostics else PASSED
    return JobOutcome(
        name=spec_label,
        kind=kind,
        status=status,
        diagnostics=tuple(diagnostics),
        artifact=artifact,
    )


def _version_tuple(text: str) -> tuple[int, ...]:
    return tuple(int(part) for part in text.strip().split("."))


@_job("version_check")
def _version_check(workspace: TexProject, params: dict, context: dict) -> JobOutcome:
    diagnostics: list[str] = []
    minimum = params.get("minimum", "0.0.0")
    current = context.get("toolkit_version", __version__)
    try:
        if _version_tuple(current) < _version_tuple(minimum):
            diagnostics.append(
                f"toolkit version {current} is older than required {minimum}"
            )
    except ValueError:
        diagnostics.append(f"unparsable version string: {current!r} vs {minimum!r}")
    return _outcome("version_check", "version_check", diagnostics)


def _style_rules(params: dict, context: dict) -> dict:
    if "rules" in params:
        return params["rules"]
    if "style_rules" in context:
        return context["style_rules"]
    return load_style_rules()


def _merged_source(workspace: TexProject) -> str:
    return strip_comments(inline_inputs(workspace))


@_job("latex_checks")
def _latex_checks(workspace: TexProject, params: dict, context: dict) -> JobOutcome:
    diagnostics: list[str] = []
    rules = _style_rules(params, context)
    try:
        source = _merged_source(workspace)
    except FlattenError as error:
        return _outcome("latex_checks", "latex_checks", [str(error)])
    lines = source.split("\n")
    for command in rules.get("forbidden_commands", []):
        pattern = re.compile(re.escape(command) + r"(?![A-Za-z])")
        for number, line in enumerate(lines, start=1):
            if pattern.search(line):
                diagnostics.append(f"forbidden command {command} at line {number}")
    allowed = rules.get("allowed_figure_placements")
    if allowed is not None:
        for number, line in enumerate(lines, start=1):
            for match in re.finditer(r"\\begin\{figure\}\[([^\]]*)\]", line):
                if match.group(1) not in allowed:
                    diagnostics.append(
                        f"figure placement [{match.group(1)}] at line {number} "
                        f"not in allowed set"
                    )
    return _outcome("latex_checks", "latex_checks", diagnostics)


@_job("rules_check")
def _rules_check(workspace: TexProject, params: dict, context: dict) -> JobOutcome:
    diagnostics: list[str] = []
    rules = _style_rules(params, context)
    try:
        source = _merged_source(workspace)
    except FlattenError as error:
        return _outcome("rules_check", "rules_check", [str(error)])
    macro = _REF_CODE_MACRO.search(source)
    code = macro.group(1) if macro else context.get("ref_code")
    if not code:
        diagnostics.append("no reference code declared (\\PaperRefCode missing)")
    elif not _REF_CODE.match(code):
        diagnostics.append(
            f"reference code {code!r} does not match "
            "ANA-GROUP-YEAR-NN(-PAPER|-INTn|-CONF|-PUB)"
        )
    lowered = source.lower()
    for section in rules.get("required_sections", []):
        if f"\\section{{{section.lower()}}}" not in lowered:
            diagnostics.append(f"required section {section!r} missing")
    return _outcome("rules_check", "rules_check", diagnostics)


_BIB_KEY = re.compile(r"@\w+\s*\{\s*([^,\s}]+)")


def _bib_keys(workspace: TexProject) -> set[str]:
    keys: set[str] = set()
    for path, data in workspace.assets.items():
        if path.endswith(".bib"):
            keys.update(_BIB_KEY.findall(data.decode("utf-8", "replace")))
    return keys


def _structural_diagnostics(source: str) -> list[str]:
    diagnostics: list[str] = []
    stack: list[str] = []
    depth = 0
    for token in re.finditer(r"\\begin\{([^}]*)\}|\\end\{([^}]*)\}|\\.|[{}]", source):
        text = token.group(0)
        if token.group(1) is not None:
            stack.append(token.group(1))
        elif token.group(2) is not None:
            closing = token.group(2)
            if stack and stack[-1] == closing:
                stack.pop()
            else:
                diagnostics.append(f"unmatched \\end{{{closing}}}")
        elif text == "{":
            depth += 1
        elif text == "}":
            if depth == 0:
                diagnostics.append("unbalanced closing brace")
                break
            depth -= 1
    for environment in stack:
        diagnostics.append(f"unbalanced \\begin{{{environment}}}")
    if depth > 0:
        diagnostics.append(f"{depth} unclosed brace(s)")
    return diagnostics


@_job("build_check")
def _build_check(workspace: TexProject, params: dict, context: dict) -> JobOutcome:
    try:
        source = _merged_source(workspace)
    except FlattenError as error:
        return _outcome("build_check", "build_check", [str(error)])
    diagnostics = _structural_diagnostics(source)

    labels = set(re.findall(r"\\label\{([^}]*)\}", source))
    for match in re.finditer(r"\\[cC]?ref\{([^}]*)\}|\\eqref\{([^}]*)\}", source):
        target = match.group(1) or match.group(2)
        if target not in labels:
            diagnostics.append(f"reference to undefined label {target!r}")

    keys = _bib_keys(workspace)
    for match in re.finditer(r"\\cite\{([^}]*)\}", source):
        for key in match.group(1).split(","):
            if key.strip() not in keys:
                diagnostics.append(f"citation key {key.strip()!r} not in bibliography")

    engine = context.get("tex_engine")
    if engine is not None:
        ok, engine_diagnostics = engine(workspace)
        if not ok:
            diagnostics.extend(engine_diagnostics)
    return _outcome("build_check", "build_check", diagnostics)


@_job("flatten_submission")
def _flatten_submission(
    workspace: TexProject, params: dict, context: dict
) -> JobOutcome:
    profile = params.get("profile", SubmissionProfile.ARXIV_TL2020.value)
    label = f"flatten[{profile}]"
    try:
        result = build_submission(workspace, profile)
    except FlattenError as error:
        return _outcome(label, "flatten_submission", [str(error)])
    artifact = {
        "profile": result.profile.value,
        "manifest": list(result.manifest),
        "renamed": dict(result.renamed_assets),
    }
    return _outcome(label, "flatten_submission", [], artifact)


def run_pipeline(
    config: PipelineConfig, workspace: TexProject, context: dict | None = None
) -> PipelineResult:
    """Execute stages in order; after a failure only run_on_failure
    stages still run, everything else is skipped."""
    config.validate()
    context = dict(context or {})
    stage_results: list[StageResult] = []
    artifacts: list[dict] = []
    failed_so_far = False
    for stage in config.stages:
        if failed_so_far and not stage.run_on_failure:
            outcomes = tuple(
                JobOutcome(name=j.label, kind=j.kind, status=SKIPPED)
                for j in stage.jobs
            )
            stage_results.append(StageResult(stage.name, SKIPPED, outcomes))
            continue
        outcomes = []
        for job in stage.jobs:
            fn = _JOBS[job.kind]
            try:
                outcome = fn(workspace, job.params, context)
            except Exception as error:  # jobs must not abort the pipeline
                outcome = JobOutcome(
                    name=job.label,
                    kind=job.kind,
                    status=FAILED,
                    diagnostics=(f"job crashed: {error}",),
                )
            if job.name and outcome.name != job.name:
                outcome = JobOutcome(
                    name=job.name,
                    kind=outcome.kind,
                    status=outcome.status,
                    diagnostics=outcome.diagnostics,
                    artifact=outcome.artifact,
                )
            outcomes.append(outcome)
            if outcome.artifact is not None:
                artifacts.append(outcome.artifact)
        status = FAILED if any(o.status == FAILED for o in outcomes) else PASSED
        stage_results.append(StageResult(stage.name, status, tuple(outcomes)))
        if status == FAILED:
            failed_so_far = True
    overall = FAILED if failed_so_far else PASSED
    return PipelineResult(
        name=config.name,
        status=overall,
        stages=tuple(stage_results),
        artifacts=tuple(artifacts),
    )
