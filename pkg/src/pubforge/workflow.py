"""JSON-configured workflow state machine with role-gated transitions.

A workflow definition is a directed cyclic graph of steps. Actors with
matching roles either Save (store field values, stay put) or Proceed
(validate mandatory fields, follow the single edge whose guard holds,
run the step's actions, send its notification to the outbox). Every
action leaves an effect record even when it touches nothing, so runs
are fully auditable and replayable.
"""

from __future__ import annotations

import json
import os
import re
import tempfile
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from importlib import resources
from pathlib import Path
from typing import Callable

from .authorlist import load_member_db, render_author_list, snapshot_author_list

__all__ = [
    "WorkflowError",
    "WorkflowLoadError",
    "PermissionDenied",
    "FieldValidationError",
    "TransitionError",
    "RenderError",
    "ActionError",
    "FieldSpec",
    "ActionSpec",
    "NotificationTemplate",
    "Step",
    "Edge",
    "WorkflowDef",
    "HistoryEntry",
    "WorkflowInstance",
    "WorkflowEnv",
    "load_workflow",
    "load_bundled_workflow",
    "parse_guard",
    "evaluate_guard",
    "create_instance",
    "save",
    "proceed",
    "replay",
    "render_notification",
    "instantiate_template",
    "write_instance",
    "read_instance",
]

SAVE = "Save"
PROCEED = "Proceed"

FIELD_TYPES = ("string", "date", "number", "boolean", "list")

_PLACEHOLDER = re.compile(r"\{\{([A-Za-z_][A-Za-z0-9_]*)\}\}")


class WorkflowError(Exception):
    pass


class WorkflowLoadError(WorkflowError):
    """Definition JSON failed validation; message carries the JSON path."""


class PermissionDenied(WorkflowError):
    pass


class FieldValidationError(WorkflowError):
    pass


class TransitionError(WorkflowError):
    pass


class RenderError(WorkflowError):
    pass


class ActionError(WorkflowError):
    pass


# --- guard mini-language ----------------------------------------------------
#
# guard    := or
# or       := and ("or" and)*
# and      := unary ("and" unary)*
# unary    := "not" unary | primary
# primary  := "(" guard ")" | "present" "(" name ")"
#           | name ("==" | "!=") literal
# literal  := "..." | '...' | number | true | false
#
# A missing field compares unequal to every literal.

_MISSING = object()

_TOKEN = re.compile(
    r"\s*(==|!=|\(|\)|\"[^\"]*\"|'[^']*'|[A-Za-z_][A-Za-z0-9_]*|-?\d+(?:\.\d+)?)"
)


def _tokenize(expression: str) -> list[str]:
    tokens: list[str] = []
    position = 0
    while position < len(expression):
        match = _TOKEN.match(expression, position)
        if match is None:
            if expression[position:].strip():
                raise WorkflowLoadError(
                    f"guard syntax error near {expression[position:][:20]!r}"
                )
            break
        tokens.append(match.group(1))
        position = match.end()
    return tokens


class _GuardParser:
    def __init__(self, expression: str):
        self.expression = expression
        self.tokens = _tokenize(expression)
        self.index = 0

    def peek(self) -> str | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def take(self) -> str:
        token = self.peek()
        if token is None:
            raise WorkflowLoadError(f"guard {self.expression!r} ends unexpectedly")
        self.index += 1
        return token

    def expect(self, token: str) -> None:
        got = self.take()
        if got != token:
            raise WorkflowLoadError(
                f"guard {self.expression!r}: expected {token!r}, got {got!r}"
            )

    def parse(self) -> Callable[[dict], bool]:
        node = self.parse_or()
        if self.peek() is not None:
            raise WorkflowLoadError(
                f"guard {self.expression!r}: trailing token {self.peek()!r}"
            )
        return node

    def parse_or(self) -> Callable[[dict], bool]:
        left = self.parse_and()
        while self.peek() == "or":
            self.take()
            right = self.parse_and()
            left = (lambda a, b: lambda d: a(d) or b(d))(left, right)
        return left

    def parse_and(self) -> Callable[[dict], bool]:
        left = self.parse_unary()
        while self.peek() == "and":
            self.take()
            right = self.parse_unary()
            left = (lambda a, b: lambda d: a(d) and b(d))(left, right)
        return left

    def parse_unary(self) -> Callable[[dict], bool]:
        if self.peek() == "not":
            self.take()
            inner = self.parse_unary()
            return lambda d: not inner(d)
        return self.parse_primary()

    def parse_primary(self) -> Callable[[dict], bool]:
        token = self.take()
        if token == "(":
            inner = self.parse_or()
            self.expect(")")
            return inner
        if token == "present":
            self.expect("(")
            name = self.take()
            self.expect(")")
            return lambda d: name in d
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", token):
            raise WorkflowLoadError(
                f"guard {self.expression!r}: unexpected token {token!r}"
            )
        name = token
        operator = self.take()
        if operator not in ("==", "!="):
            raise WorkflowLoadError(
                f"guard {self.expression!r}: expected comparison after {name!r}"
            )
        value = self._literal(self.take())
        if operator == "==":
            return lambda d: d.get(name, _MISSING) == value
        return lambda d: d.get(name, _MISSING) != value

    def _literal(self, token: str):
        if token.startswith(('"', "'")):
            return token[1:-1]
        if token == "true":
            return True
        if token == "false":
            return False
        try:
            return int(token)
        except ValueError:
            pass
        try:
            return float(token)
        except ValueError:
            raise WorkflowLoadError(
                f"guard {self.expression!r}: bad literal {token!r}"
            )


def parse_guard(expression: str | None) -> Callable[[dict], bool]:
    if expression is None or not expression.strip():
        return lambda data: True
    return _GuardParser(expression).parse()


def evaluate_guard(expression: str | None, data: dict) -> bool:
    return parse_guard(expression)(data)


# --- definition -------------------------------------------------------------


@dataclass(frozen=True)
class FieldSpec:
    name: str
    type: str = "string"
    mandatory: bool = False


@dataclass(frozen=True)
class ActionSpec:
    kind: str
    params: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NotificationTemplate:
    id: str
    recipients: tuple[str, ...]
    subject: str
    body: str


@dataclass(frozen=True)
class Step:
    id: str
    title: str = ""
    fields: tuple[FieldSpec, ...] = ()
    roles_allowed: tuple[str, ...] = ()
    actions_on_proceed: tuple[ActionSpec, ...] = ()
    notification: str | None = None


@dataclass(frozen=True)
class Edge:
    source: str
    target: str
    guard: str | None = None


@dataclass(frozen=True)
class WorkflowDef:
    name: str
    start: str
    nodes: tuple[Step, ...]
    edges: tuple[Edge, ...]
    templates: tuple[NotificationTemplate, ...] = ()

    def node(self, node_id: str) -> Step:
        for step in self.nodes:
            if step.id == node_id:
                return step
        raise WorkflowError(f"unknown node {node_id!r}")

    def outgoing(self, node_id: str) -> tuple[Edge, ...]:
        return tuple(edge for edge in self.edges if edge.source == node_id)

    def template(self, template_id: str) -> NotificationTemplate:
        for template in self.templates:
            if template.id == template_id:
                return template
        raise WorkflowError(f"unknown notification template {template_id!r}")


def _load_fields(raw: list, path: str) -> tuple[FieldSpec, ...]:
    fields: list[FieldSpec] = []
    for index, entry in enumerate(raw):
        where = f"{path}.fields[{index}]"
        if isinstance(entry, str):
            fields.append(FieldSpec(name=entry))
            continue
        if not isinstance(entry, dict) or not isinstance(entry.get("name"), str):
            raise WorkflowLoadError(f"{where}: needs a string 'name'")
        kind = entry.get("type", "string")
        if kind not in FIELD_TYPES:
            raise WorkflowLoadError(
                f"{where}: unknown field type {kind!r} (choices: {', '.join(FIELD_TYPES)})"
            )
        fields.append(
            FieldSpec(
                name=entry["name"],
                type=kind,
                mandatory=bool(entry.get("mandatory", False)),
            )
        )
    return tuple(fields)


def load_workflow(text: str) -> WorkflowDef:
    """Parse and validate a workflow definition; errors carry JSON paths."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as error:
        raise WorkflowLoadError(f"workflow JSON is malformed: {error}")
    if not isinstance(raw, dict):
        raise WorkflowLoadError("workflow definition must be a JSON object")
    name = raw.get("name")
    if not isinstance(name, str) or not name:
        raise WorkflowLoadError("name: required string")

    templates: list[NotificationTemplate] = []
    template_ids: set[str] = set()
    for index, entry in enumerate(raw.get("templates", [])):
        where = f"templates[{index}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
            raise WorkflowLoadError(f"{where}: needs a string 'id'")
        if entry["id"] in template_ids:
            raise WorkflowLoadError(f"{where}: duplicate template id {entry['id']!r}")
        template_ids.add(entry["id"])
        templates.append(
            NotificationTemplate(
                id=entry["id"],
                recipients=tuple(entry.get("recipients", [])),
                subject=entry.get("subject", ""),
                body=entry.get("body", ""),
            )
        )

    nodes: list[Step] = []
    node_ids: set[str] = set()
    for index, entry in enumerate(raw.get("nodes", [])):
        where = f"nodes[{index}]"
        if not isinstance(entry, dict) or not isinstance(entry.get("id"), str):
            raise WorkflowLoadError(f"{where}: needs a string 'id'")
        node_id = entry["id"]
        if node_id in node_ids:
            raise WorkflowLoadError(f"{where}: duplicate node id {node_id!r}")
        node_ids.add(node_id)
        actions: list[ActionSpec] = []
        for action_index, action in enumerate(entry.get("actions_on_proceed", [])):
            action_where = f"{where}.actions_on_proceed[{action_index}]"
            if not isinstance(action, dict) or not isinstance(action.get("kind"), str):
                raise WorkflowLoadError(f"{action_where}: needs a string 'kind'")
            if action["kind"] not in _ACTIONS:
                raise WorkflowLoadError(
                    f"{action_where}: unknown action kind {action['kind']!r}"
                )
            actions.append(
                ActionSpec(kind=action["kind"], params=action.get("params", {}))
            )
        notification = entry.get("notification")
        if notification is not None and notification not in template_ids:
            raise WorkflowLoadError(
                f"{where}.notification: unknown template id {notification!r}"
            )
        nodes.append(
            Step(
                id=node_id,
                title=entry.get("title", ""),
                fields=_load_fields(entry.get("fields", []), where),
                roles_allowed=tuple(entry.get("roles_allowed", [])),
                actions_on_proceed=tuple(actions),
                notification=notification,
            )
        )
    if not nodes:
        raise WorkflowLoadError("nodes: at least one node is required")

    edges: list[Edge] = []
    for index, entry in enumerate(raw.get("edges", [])):
        where = f"edges[{index}]"
        if not isinstance(entry, dict):
            raise WorkflowLoadError(f"{where}: must be an object")
        for endpoint in ("from", "to"):
            value = entry.get(endpoint)
            if value not in node_ids:
                raise WorkflowLoadError(
                    f"{where}.{endpoint}: unknown node {value!r}"
                )
        guard = entry.get("guard")
        if guard is not None:
            try:
                parse_guard(guard)
            except WorkflowLoadError as error:
                raise WorkflowLoadError(f"{where}.guard: {error}")
        edges.append(Edge(source=entry["from"], target=entry["to"], guard=guard))

    start = raw.get("start", nodes[0].id)
    if start not in node_ids:
        raise WorkflowLoadError(f"start: unknown node {start!r}")
    return WorkflowDef(
        name=name,
        start=start,
        nodes=tuple(nodes),
        edges=tuple(edges),
        templates=tuple(templates),
    )


def load_bundled_workflow(name: str = "phase0") -> WorkflowDef:
    text = resources.files("pubforge").joinpath(
        "data", "workflows", f"{name}.json"
    ).read_text(encoding="utf-8")
    return load_workflow(text)


# --- instances --------------------------------------------------------------


@dataclass(frozen=True)
class HistoryEntry:
    node: str
    actor: tuple[str, ...]
    timestamp: str
    verb: str
    data: dict

    def to_json(self) -> dict:
        return {
            "node": self.node,
            "actor": list(self.actor),
            "timestamp": self.timestamp,
            "verb": self.verb,
            "data": self.data,
        }


@dataclass(frozen=True)
class WorkflowInstance:
    definition_name: str
    instance_id: str
    current_node: str
    step_data: dict
    history: tuple[HistoryEntry, ...] = ()

    def merged_data(self) -> dict:
        merged: dict = {}
        for values in self.step_data.values():
            merged.update(values)
        return merged

    def to_json(self) -> dict:
        return {
            "workflow": self.definition_name,
            "instance_id": self.instance_id,
            "current_node": self.current_node,
            "step_data": self.step_data,
            "history": [entry.to_json() for entry in self.history],
        }


def create_instance(definition: WorkflowDef, instance_id: str) -> WorkflowInstance:
    return WorkflowInstance(
        definition_name=definition.name,
        instance_id=instance_id,
        current_node=definition.start,
        step_data={},
    )


@dataclass
class WorkflowEnv:
    """Where proceed side effects may land; without one, actions only
    record what they would have done."""

    workspace_root: Path | None = None
    outbox_dir: Path | None = None
    member_db_path: Path | None = None


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _check_roles(step: Step, actor: set[str] | frozenset[str]) -> None:
    if step.roles_allowed and not set(actor) & set(step.roles_allowed):
        raise PermissionDenied(
            f"step {step.id!r} allows roles {list(step.roles_allowed)}, "
            f"actor has {sorted(actor)}"
        )


def _check_types(step: Step, data: dict) -> None:
    problems: list[str] = []
    specs = {spec.name: spec for spec in step.fields}
    for key, value in data.items():
        spec = specs.get(key)
        if spec is None:
            continue  # free-form keys are allowed alongside declared fields
        if spec.type == "string" and not isinstance(value, str):
            problems.append(f"{key} (expected string)")
        elif spec.type == "boolean" and not isinstance(value, bool):
            problems.append(f"{key} (expected boolean)")
        elif spec.type == "number" and (
            isinstance(value, bool) or not isinstance(value, (int, float))
        ):
            problems.append(f"{key} (expected number)")
        elif spec.type == "list" and not isinstance(value, list):
            problems.append(f"{key} (expected list)")
        elif spec.type == "date":
            try:
                date.fromisoformat(value)
            except (TypeError, ValueError):
                problems.append(f"{key} (expected ISO date)")
    if problems:
        raise FieldValidationError(
            "invalid field values: " + ", ".join(sorted(problems))
        )


def _apply(
    instance: WorkflowInstance,
    actor: set[str] | frozenset[str],
    data: dict,
    verb: str,
    timestamp: str | None,
) -> WorkflowInstance:
    node_data = dict(instance.step_data.get(instance.current_node, {}))
    node_data.update(data)
    step_data = dict(instance.step_data)
    step_data[instance.current_node] = node_data
    entry = HistoryEntry(
        node=instance.current_node,
        actor=tuple(sorted(actor)),
        timestamp=timestamp or _now(),
        verb=verb,
        data=dict(data),
    )
    return replace(
        instance, step_data=step_data, history=instance.history + (entry,)
    )


def save(
    definition: WorkflowDef,
    instance: WorkflowInstance,
    actor: set[str] | frozenset[str],
    data: dict,
    timestamp: str | None = None,
) -> WorkflowInstance:
    """Store field values on the current step without moving."""
    step = definition.node(instance.current_node)
    _check_roles(step, actor)
    _check_types(step, data)
    return _apply(instance, actor, data, SAVE, timestamp)


def _substitute(template: str, context: dict) -> str:
    def resolve(match: re.Match[str]) -> str:
        key = match.group(1)
        if key not in context:
            raise RenderError(f"unresolved placeholder {key!r}")
        value = context[key]
        if isinstance(value, list):
            return ", ".join(str(item) for item in value)
        return str(value)

    return _PLACEHOLDER.sub(resolve, template)


def render_notification(
    template: NotificationTemplate, context: dict
) -> dict:
    """Fill a template and resolve its recipients.

    Recipient expressions of the form role:NAME expand to the members
    listed in the context, under either role_members[NAME] or a
    <name>_members field; anything else is a literal address.
    """
    recipients: list[str] = []
    for expression in template.recipients:
        if expression.startswith("role:"):
            role = expression[len("role:"):]
            members = context.get("role_members", {}).get(role)
            if members is None:
                members = context.get(f"{role.lower()}_members")
            if members is None:
                raise RenderError(f"no members recorded for role {role!r}")
            recipients.extend(str(member) for member in members)
        else:
            recipients.append(_substitute(expression, context))
    return {
        "template": template.id,
        "recipients": recipients,
        "subject": _substitute(template.subject, context),
        "body": _substitute(template.body, context),
    }


# --- actions ----------------------------------------------------------------

ActionFunction = Callable[[dict, dict, WorkflowEnv | None], dict]

_ACTIONS: dict[str, ActionFunction] = {}


def _action(kind: str):
    def register(fn: ActionFunction) -> ActionFunction:
        _ACTIONS[kind] = fn
        return fn

    return register


@_action("create_group")
def _create_group(params: dict, context: dict, env: WorkflowEnv | None) -> dict:
    # e-group creation is out of scope; the effect record is the contract
    return {
        "action": "create_group",
        "group": _substitute(params.get("name", ""), context),
        "performed": False,
    }


@_action("create_repository")
def _create_repository(params: dict, context: dict, env: WorkflowEnv | None) -> dict:
    name = _substitute(params.get("name", "{{ref_code}}-PAPER"), context)
    record = {"action": "create_repository", "repository": name, "performed": False}
    if env is not None and env.workspace_root is not None:
        ref_code = context.get("ref_code")
        if not ref_code:
            raise ActionError("create_repository needs ref_code in step data")
        target = Path(env.workspace_root) / name
        if target.exists():
            raise ActionError(f"repository path {target} already exists")
        instantiate_template(str(ref_code), target)
        record["performed"] = True
        record["path"] = str(target)
    return record


@_action("push_authorlist")
def _push_authorlist(params: dict, context: dict, env: WorkflowEnv | None) -> dict:
    directory = _substitute(params.get("directory", "{{ref_code}}-PAPER"), context)
    record = {"action": "push_authorlist", "performed": False}
    if (
        env is None
        or env.workspace_root is None
        or env.member_db_path is None
    ):
        return record
    reference_date = context.get("reference_date")
    if not reference_date:
        raise ActionError("push_authorlist needs reference_date in step data")
    ref_code = context.get("ref_code", "")
    database = load_member_db(
        Path(env.member_db_path).read_text(encoding="utf-8")
    )
    snapshot = snapshot_author_list(
        database,
        date.fromisoformat(str(reference_date)),
        {"ref_code": str(ref_code)},
    )
    target = Path(env.workspace_root) / directory / "authorlist.xml"
    record["mode"] = "update" if target.exists() else "add"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_author_list(snapshot, "xml"), encoding="utf-8")
    record["performed"] = True
    record["path"] = str(target)
    return record


def _write_outbox(env: WorkflowEnv | None, instance: WorkflowInstance,
                  message: dict) -> str | None:
    if env is None or env.outbox_dir is None:
        return None
    outbox = Path(env.outbox_dir)
    outbox.mkdir(parents=True, exist_ok=True)
    name = (
        f"{instance.instance_id}_{len(instance.history):04d}_"
        f"{message['template']}.json"
    )
    path = outbox / name
    _atomic_write(path, json.dumps(message, ensure_ascii=False, indent=2) + "\n")
    return str(path)


def proceed(
    definition: WorkflowDef,
    instance: WorkflowInstance,
    actor: set[str] | frozenset[str],
    data: dict,
    env: WorkflowEnv | None = None,
    timestamp: str | None = None,
) -> tuple[WorkflowInstance, list[dict]]:
    """Validate, follow the unique true-guard edge, run actions, notify."""
    step = definition.node(instance.current_node)
    _check_roles(step, actor)
    _check_types(step, data)

    merged_node = dict(instance.step_data.get(step.id, {}))
    merged_node.update(data)
    missing = [
        spec.name
        for spec in step.fields
        if spec.mandatory and spec.name not in merged_node
    ]
    if missing:
        raise FieldValidationError(
            "missing mandatory fields: " + ", ".join(sorted(missing))
        )

    updated = _apply(instance, actor, data, PROCEED, timestamp)
    guard_context = updated.merged_data()
    candidates = [
        edge
        for edge in definition.outgoing(step.id)
        if parse_guard(edge.guard)(guard_context)
    ]
    if len(candidates) != 1:
        names = [f"{edge.source}->{edge.target}" for edge in candidates] or ["none"]
        raise TransitionError(
            f"step {step.id!r} needs exactly one open edge, got: "
            + ", ".join(names)
        )
    edge = candidates[0]

    effects: list[dict] = []
    context = dict(guard_context)
    for action in step.actions_on_proceed:
        effects.append(_ACTIONS[action.kind](action.params, context, env))
    if step.notification is not None:
        message = render_notification(definition.template(step.notification), context)
        message["path"] = _write_outbox(env, updated, message)
        effects.append({"action": "notify", **message})

    return replace(updated, current_node=edge.target), effects


def replay(
    definition: WorkflowDef,
    history: tuple[HistoryEntry, ...] | list[HistoryEntry],
    instance_id: str,
) -> WorkflowInstance:
    """Re-execute recorded verbs from the initial state (no side effects)."""
    instance = create_instance(definition, instance_id)
    for entry in history:
        actor = set(entry.actor)
        if entry.verb == SAVE:
            instance = save(
                definition, instance, actor, entry.data, timestamp=entry.timestamp
            )
        elif entry.verb == PROCEED:
            instance, _ = proceed(
                definition,
                instance,
                actor,
                entry.data,
                env=None,
                timestamp=entry.timestamp,
            )
        else:
            raise WorkflowError(f"unknown history verb {entry.verb!r}")
    return instance


# --- template instantiation -------------------------------------------------


def instantiate_template(
    ref_code: str, target: str | Path, template_root=None
) -> list[Path]:
    """Copy the bundled document template into target, substituting the
    reference code in file names and text contents. Returns written paths."""
    if template_root is None:
        template_root = resources.files("pubforge").joinpath("data", "template")
    target = Path(target)
    written: list[Path] = []

    def copy_tree(node, destination: Path) -> None:
        for child in node.iterdir():
            name = child.name.replace("{{ref_code}}", ref_code)
            if child.is_dir():
                copy_tree(child, destination / name)
                continue
            destination.mkdir(parents=True, exist_ok=True)
            out = destination / name
            data = child.read_bytes()
            if name.endswith((".tex", ".bib", ".sty")):
                text = data.decode("utf-8").replace("{{ref_code}}", ref_code)
                out.write_text(text, encoding="utf-8")
            else:
                out.write_bytes(data)
            written.append(out)

    copy_tree(template_root, target)
    return sorted(written)


# --- persistence ------------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
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


def write_instance(instance: WorkflowInstance, directory: str | Path) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{instance.instance_id}.json"
    _atomic_write(
        path, json.dumps(instance.to_json(), ensure_ascii=False, indent=2) + "\n"
    )
    return path


def read_instance(directory: str | Path, instance_id: str) -> WorkflowInstance:
    path = Path(directory) / f"{instance_id}.json"
    raw = json.loads(path.read_text(encoding="utf-8"))
    history = tuple(
        HistoryEntry(
            node=entry["node"],
            actor=tuple(entry["actor"]),
            timestamp=entry["timestamp"],
            verb=entry["verb"],
            data=entry.get("data", {}),
        )
        for entry in raw.get("history", [])
    )
    return WorkflowInstance(
        definition_name=raw["workflow"],
        instance_id=raw["instance_id"],
        current_node=raw["current_node"],
        step_data=raw.get("step_data", {}),
        history=history,
    )
