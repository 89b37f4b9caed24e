"""Command line entry point.

Subcommands are thin adapters over the library modules: check,
flatten, authorlist, compare, workflow, serve. Exit codes: 0 success,
1 findings or failed checks, 2 usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import date
from importlib import resources
from pathlib import Path

from . import __version__
from .authorlist import (
    AuthorListError,
    load_agencies,
    load_member_db,
    parse_author_list,
    render_author_list,
    snapshot_author_list,
)
from .flatten import (
    FlattenError,
    SubmissionProfile,
    TexProject,
    build_submission,
    write_archive,
)
from .matcher import MatchError, MatchThresholds, SynonymDB, SynonymError
from .pdfextract import PdfError, extract_text
from .pipeline import (
    PASSED,
    PipelineError,
    load_bundled_pipeline,
    run_pipeline,
    select_pipeline,
)
from .proofcheck import (
    PDF_MAGIC,
    ReportSources,
    dump_pretokenized,
    run_compare,
    store_report,
)
from .proofparse import ProofParseError, SegmentMarkers
from .report import CATEGORY_FIELDS, render_html, write_report
from .server import ServeError, serve
from .workflow import (
    WorkflowDef,
    WorkflowEnv,
    WorkflowError,
    create_instance,
    load_bundled_workflow,
    load_workflow,
    proceed,
    read_instance,
    save,
    write_instance,
)

EXIT_OK = 0
EXIT_FINDINGS = 1
EXIT_USAGE = 2

CONFIG_ENV = "PUBFORGE_CONFIG"


class CliError(Exception):
    """Configuration or usage problem; maps to exit code 2."""


def _read_text(path: str | Path, what: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as error:
        raise CliError(f"cannot read {what} {path}: {error.strerror}")


def _read_bytes(path: str | Path, what: str) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as error:
        raise CliError(f"cannot read {what} {path}: {error.strerror}")


def _load_config(explicit: str | None) -> dict:
    path = explicit or os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    text = _read_text(path, "config file")
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as error:
        raise CliError(f"config file {path} is not valid JSON: {error}")
    if not isinstance(raw, dict):
        raise CliError(f"config file {path} must hold a JSON object")
    return raw


def _setting(args: argparse.Namespace, config: dict, name: str, default=None):
    value = getattr(args, name.replace("-", "_"), None)
    if value is not None:
        return value
    if name in config:
        return config[name]
    return default


def _bundled_text(*parts: str) -> str:
    return resources.files("pubforge").joinpath("data", *parts).read_text(
        encoding="utf-8"
    )


def _load_project(directory: str, root: str | None) -> TexProject:
    base = Path(directory)
    if not base.is_dir():
        raise CliError(f"project directory {directory} does not exist")
    if root is None:
        candidates = sorted(p.name for p in base.glob("*.tex"))
        if "main.tex" in candidates:
            root = "main.tex"
        elif len(candidates) == 1:
            root = candidates[0]
        else:
            raise CliError(
                "cannot pick a root file, pass --root "
                f"(top-level .tex files: {', '.join(candidates) or 'none'})"
            )
    return TexProject.from_directory(base, root_file=root)


# --- check ------------------------------------------------------------------


def _cmd_check(args: argparse.Namespace, config: dict) -> int:
    kind = select_pipeline(args.ref)
    pipeline = load_bundled_pipeline(kind)
    project = _load_project(args.project, args.root)
    result = run_pipeline(pipeline, project)
    if args.json:
        sys.stdout.write(result.to_json())
    else:
        print(f"pipeline: {result.name} (ref {args.ref})")
        for stage in result.stages:
            print(f"  stage {stage.name}: {stage.status}")
            for job in stage.jobs:
                print(f"    {job.name}: {job.status}")
                for diagnostic in job.diagnostics:
                    print(f"      - {diagnostic}")
        print(f"overall: {result.status}")
    return EXIT_OK if result.status == PASSED else EXIT_FINDINGS


# --- flatten ----------------------------------------------------------------


def _cmd_flatten(args: argparse.Namespace, config: dict) -> int:
    try:
        profile = SubmissionProfile(args.profile)
    except ValueError:
        choices = ", ".join(p.value for p in SubmissionProfile)
        raise CliError(f"unknown profile {args.profile!r} (choices: {choices})")
    project = _load_project(args.project, args.root)
    try:
        result = build_submission(project, profile)
    except FlattenError as error:
        print(f"flatten failed: {error}", file=sys.stderr)
        return EXIT_FINDINGS
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    archive = out_dir / f"{args.name}.tar.gz"
    sidecar = write_archive(result, project, archive)
    print(f"archive: {archive}")
    print(f"manifest: {sidecar}")
    for entry in result.manifest:
        print(f"  {entry}")
    return EXIT_OK


# --- authorlist -------------------------------------------------------------


def _cmd_authorlist_snapshot(args: argparse.Namespace, config: dict) -> int:
    member_db_path = _setting(args, config, "member_db")
    if not member_db_path:
        raise CliError("a member database is required (--member-db or config)")
    database = load_member_db(_read_text(member_db_path, "member database"))
    try:
        reference_date = date.fromisoformat(args.date)
    except ValueError:
        raise CliError(f"--date must be YYYY-MM-DD, got {args.date!r}")
    header = {"ref_code": args.ref_code}
    if args.title:
        header["title"] = args.title
    snapshot = snapshot_author_list(database, reference_date, header)
    text = render_author_list(snapshot, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} ({len(snapshot.authors)} authors)")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_authorlist_render(args: argparse.Namespace, config: dict) -> int:
    snapshot = parse_author_list(_read_text(args.xml, "author list"))
    text = render_author_list(snapshot, args.format)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- compare ----------------------------------------------------------------


def _proof_text(args: argparse.Namespace) -> str:
    data = _read_bytes(args.proof, "proof")
    if args.proof_format == "pdf" or (
        args.proof_format == "auto" and data.startswith(PDF_MAGIC)
    ):
        return dump_pretokenized(extract_text(data))
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        raise CliError(
            f"proof {args.proof} is not UTF-8 text; pass --proof-format pdf "
            "if it is a PDF without the standard header"
        )


def _publisher_profile(name_or_path: str) -> str:
    candidate = Path(name_or_path)
    if candidate.is_file():
        return _read_text(candidate, "publisher profile")
    bundled = resources.files("pubforge").joinpath(
        "data", "publishers", f"{name_or_path.lower()}.json"
    )
    if bundled.is_file():
        return bundled.read_text(encoding="utf-8")
    raise CliError(
        f"publisher profile {name_or_path!r} is neither a file nor a bundled name"
    )


def _cmd_compare(args: argparse.Namespace, config: dict) -> int:
    synonyms_path = _setting(args, config, "synonyms")
    if synonyms_path:
        synonyms = SynonymDB.from_json(_read_text(synonyms_path, "synonym store"))
    else:
        synonyms = SynonymDB()
    agencies_path = _setting(args, config, "agencies")
    agencies_json = (
        _read_text(agencies_path, "agency list") if agencies_path
        else '{"agencies": []}'
    )
    thresholds_path = _setting(args, config, "thresholds")
    thresholds_text = (
        _read_text(thresholds_path, "thresholds") if thresholds_path
        else _bundled_text("thresholds.json")
    )
    creation = args.creation_date or date.today().isoformat()
    try:
        date.fromisoformat(creation)
    except ValueError:
        raise CliError(f"--creation-date must be YYYY-MM-DD, got {creation!r}")

    markers_json = _publisher_profile(args.publisher)
    markers = SegmentMarkers.from_json(markers_json)
    sources = ReportSources(
        reference_xml=_read_text(args.xml, "author list"),
        proof_text=_proof_text(args),
        markers_json=markers_json,
        agencies_json=agencies_json,
        thresholds=MatchThresholds.from_json(thresholds_text),
        publisher=markers.publisher_name or args.publisher,
        document=args.document,
        filename=args.filename or Path(args.proof).stem,
        creation_date=creation,
    )
    report = run_compare(sources, synonyms)

    reports_dir = _setting(args, config, "reports", default="reports")
    path = store_report(reports_dir, report, sources)
    print(f"report: {path}")
    total = 0
    for category in CATEGORY_FIELDS:
        count = len(getattr(report, category))
        total += count
        print(f"  {category}: {count}")
    if args.html:
        Path(args.html).write_text(render_html(report), encoding="utf-8")
        print(f"html: {args.html}")
    return EXIT_FINDINGS if total else EXIT_OK


# --- workflow ---------------------------------------------------------------


def _load_definition(name_or_path: str) -> WorkflowDef:
    candidate = Path(name_or_path)
    if candidate.is_file():
        return load_workflow(_read_text(candidate, "workflow definition"))
    bundled = resources.files("pubforge").joinpath(
        "data", "workflows", f"{name_or_path}.json"
    )
    if bundled.is_file():
        return load_bundled_workflow(name_or_path)
    raise CliError(
        f"workflow {name_or_path!r} is neither a file nor a bundled name"
    )


def _parse_data(raw: str | None) -> dict:
    if not raw:
        return {}
    if raw.startswith("@"):
        raw = _read_text(raw[1:], "data file")
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as error:
        raise CliError(f"--data is not valid JSON: {error}")
    if not isinstance(data, dict):
        raise CliError("--data must hold a JSON object")
    return data


def _actor(raw: str) -> set[str]:
    roles = {role.strip() for role in raw.split(",") if role.strip()}
    if not roles:
        raise CliError("--actor needs at least one role")
    return roles


def _workflow_env(args: argparse.Namespace, config: dict) -> WorkflowEnv | None:
    workspace = _setting(args, config, "workspace")
    outbox = _setting(args, config, "outbox")
    member_db = _setting(args, config, "member_db")
    if not any((workspace, outbox, member_db)):
        return None
    return WorkflowEnv(
        workspace_root=Path(workspace) if workspace else None,
        outbox_dir=Path(outbox) if outbox else None,
        member_db_path=Path(member_db) if member_db else None,
    )


def _cmd_workflow_init(args: argparse.Namespace, config: dict) -> int:
    definition = _load_definition(args.definition)
    store = Path(_setting(args, config, "dir", default="workflows"))
    if (store / f"{args.instance}.json").exists():
        raise CliError(f"instance {args.instance!r} already exists in {store}")
    instance = create_instance(definition, args.instance)
    path = write_instance(instance, store)
    print(f"created {path} at step {instance.current_node}")
    return EXIT_OK


def _instance_and_definition(args: argparse.Namespace, config: dict):
    store = Path(_setting(args, config, "dir", default="workflows"))
    try:
        instance = read_instance(store, args.instance)
    except OSError:
        raise CliError(f"no instance {args.instance!r} in {store}")
    definition = _load_definition(args.definition or instance.definition_name)
    return store, instance, definition


def _cmd_workflow_save(args: argparse.Namespace, config: dict) -> int:
    store, instance, definition = _instance_and_definition(args, config)
    instance = save(definition, instance, _actor(args.actor), _parse_data(args.data))
    write_instance(instance, store)
    print(f"saved; still at step {instance.current_node}")
    return EXIT_OK


def _cmd_workflow_proceed(args: argparse.Namespace, config: dict) -> int:
    store, instance, definition = _instance_and_definition(args, config)
    instance, effects = proceed(
        definition,
        instance,
        _actor(args.actor),
        _parse_data(args.data),
        env=_workflow_env(args, config),
    )
    write_instance(instance, store)
    print(f"moved to step {instance.current_node}")
    for effect in effects:
        print(f"  effect: {json.dumps(effect, ensure_ascii=False)}")
    return EXIT_OK


def _cmd_workflow_show(args: argparse.Namespace, config: dict) -> int:
    store = Path(_setting(args, config, "dir", default="workflows"))
    try:
        instance = read_instance(store, args.instance)
    except OSError:
        raise CliError(f"no instance {args.instance!r} in {store}")
    sys.stdout.write(
        json.dumps(instance.to_json(), ensure_ascii=False, indent=2) + "\n"
    )
    return EXIT_OK


# --- serve ------------------------------------------------------------------


def _cmd_serve(args: argparse.Namespace, config: dict) -> int:
    reports = _setting(args, config, "reports")
    synonyms = _setting(args, config, "synonyms")
    if not reports or not synonyms:
        raise CliError("serve needs --reports and --synonyms (flags or config)")
    serve(reports, synonyms, bind=args.bind, ui_dir=args.ui)
    return EXIT_OK


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pubforge",
        description="Publication toolkit: author lists, proof checks, "
        "LaTeX flattening, pipelines, workflows.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--config",
        help=f"JSON config with default paths (or set {CONFIG_ENV})",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check", help="run the pipeline for a git ref")
    check.add_argument("--ref", required=True, help="branch or tag name")
    check.add_argument("--project", default=".", help="project directory")
    check.add_argument("--root", help="root .tex file (default: autodetect)")
    check.add_argument("--json", action="store_true", help="print the JSON result")
    check.set_defaults(handler=_cmd_check)

    flatten = commands.add_parser("flatten", help="build a submission archive")
    flatten.add_argument(
        "--profile",
        required=True,
        help="submission profile: " + ", ".join(p.value for p in SubmissionProfile),
    )
    flatten.add_argument("--project", default=".", help="project directory")
    flatten.add_argument("--root", help="root .tex file (default: autodetect)")
    flatten.add_argument("--out", default=".", help="output directory")
    flatten.add_argument("--name", default="submission", help="archive base name")
    flatten.set_defaults(handler=_cmd_flatten)

    authorlist = commands.add_parser("authorlist", help="author list operations")
    authorlist_commands = authorlist.add_subparsers(
        dest="authorlist_command", required=True
    )
    snapshot = authorlist_commands.add_parser(
        "snapshot", help="freeze the author list at a reference date"
    )
    snapshot.add_argument("--member-db", help="membership database JSON")
    snapshot.add_argument("--date", required=True, help="reference date YYYY-MM-DD")
    snapshot.add_argument("--ref-code", required=True, help="analysis reference code")
    snapshot.add_argument("--title", default="", help="paper title")
    snapshot.add_argument("--format", default="xml", choices=("xml", "tex"))
    snapshot.add_argument("--out", help="output file (default stdout)")
    snapshot.set_defaults(handler=_cmd_authorlist_snapshot)
    render = authorlist_commands.add_parser(
        "render", help="render a stored author list"
    )
    render.add_argument("--xml", required=True, help="author list XML file")
    render.add_argument("--format", default="tex", choices=("xml", "tex"))
    render.add_argument("--out", help="output file (default stdout)")
    render.set_defaults(handler=_cmd_authorlist_render)

    compare = commands.add_parser(
        "compare", help="check a publisher proof against the author list"
    )
    compare.add_argument("--xml", required=True, help="reference author list XML")
    compare.add_argument("--proof", required=True, help="proof PDF or text file")
    compare.add_argument(
        "--publisher", required=True, help="publisher profile name or JSON file"
    )
    compare.add_argument(
        "--proof-format",
        default="auto",
        choices=("auto", "pdf", "text"),
        help="override %%PDF- magic detection",
    )
    compare.add_argument("--synonyms", help="synonym store JSON")
    compare.add_argument("--agencies", help="funding agency list JSON")
    compare.add_argument("--thresholds", help="matching thresholds JSON")
    compare.add_argument("--document", default="", help="publisher document id")
    compare.add_argument("--filename", help="proof version label")
    compare.add_argument("--creation-date", help="report date YYYY-MM-DD")
    compare.add_argument("--reports", help="reports directory (default: reports)")
    compare.add_argument("--html", help="also render an HTML report here")
    compare.set_defaults(handler=_cmd_compare)

    workflow = commands.add_parser("workflow", help="drive workflow instances")
    workflow_commands = workflow.add_subparsers(dest="workflow_command", required=True)

    def workflow_common(sub, with_actor: bool):
        sub.add_argument("--instance", required=True, help="instance id")
        sub.add_argument("--dir", help="instance directory (default: workflows)")
        sub.add_argument(
            "--definition", help="workflow name or file (default: from instance)"
        )
        if with_actor:
            sub.add_argument(
                "--actor", required=True, help="comma-separated role names"
            )
            sub.add_argument("--data", help="step data as JSON (or @file)")

    init = workflow_commands.add_parser("init", help="start a new instance")
    init.add_argument("--definition", default="phase0", help="workflow name or file")
    init.add_argument("--instance", required=True, help="new instance id")
    init.add_argument("--dir", help="instance directory (default: workflows)")
    init.set_defaults(handler=_cmd_workflow_init)
    save_parser = workflow_commands.add_parser("save", help="store step fields")
    workflow_common(save_parser, with_actor=True)
    save_parser.set_defaults(handler=_cmd_workflow_save)
    proceed_parser = workflow_commands.add_parser("proceed", help="advance a step")
    workflow_common(proceed_parser, with_actor=True)
    proceed_parser.add_argument("--workspace", help="directory for created repositories")
    proceed_parser.add_argument("--outbox", help="directory for notifications")
    proceed_parser.add_argument("--member-db", help="membership database JSON")
    proceed_parser.set_defaults(handler=_cmd_workflow_proceed)
    show = workflow_commands.add_parser("show", help="print an instance")
    workflow_common(show, with_actor=False)
    show.set_defaults(handler=_cmd_workflow_show)

    serve_parser = commands.add_parser("serve", help="serve reports and synonyms")
    serve_parser.add_argument("--reports", help="reports directory")
    serve_parser.add_argument("--synonyms", help="synonym store JSON")
    serve_parser.add_argument("--bind", default="127.0.0.1:8765", help="host:port")
    serve_parser.add_argument("--ui", help="static UI directory (default: built-in)")
    serve_parser.set_defaults(handler=_cmd_serve)

    return parser


# Malformed inputs and bad service setup are configuration problems;
# content the toolkit inspected and rejected counts as findings.
_CONFIG_ERRORS = (
    CliError,
    AuthorListError,
    MatchError,
    PdfError,
    PipelineError,
    ProofParseError,
    ServeError,
    SynonymError,
)

_FINDING_ERRORS = (FlattenError, WorkflowError)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(args.config)
        return args.handler(args, config)
    except _CONFIG_ERRORS as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_USAGE
    except _FINDING_ERRORS as error:
        print(f"error: {error}", file=sys.stderr)
        return EXIT_FINDINGS
    except KeyboardInterrupt:
        return EXIT_FINDINGS


if __name__ == "__main__":
    sys.exit(main())
