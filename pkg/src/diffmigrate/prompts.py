"""Prompt templates and the builders that fill them.

Templates are plain text with {slot} placeholders. Slot names may contain
spaces; literal braces are written {{ and }}. Three migration strategies
exist, differing in what extra context rides along with the file being
migrated: nothing, the dependency's own code, or the dependency's diff.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, NamedTuple

from .errors import (
    ArtifactForbidden,
    ArtifactRequired,
    MissingSlot,
    TemplateError,
    UnknownSlot,
)
from .files import FileEntry


class MigrationStrategy(enum.Enum):
    """How much of the dependency the model gets to see."""

    BLACK_BOX = "black_box"
    WITH_CODE = "with_code"
    WITH_DIFF = "with_diff"

    @property
    def tag(self) -> str:
        return self.value

    @property
    def needs_artifact(self) -> bool:
        return self is not MigrationStrategy.BLACK_BOX

    @classmethod
    def from_tag(cls, tag: str) -> "MigrationStrategy":
        for member in cls:
            if member.value == tag:
                return member
        raise ValueError(f"unknown strategy tag: {tag!r}")


def _scan(body: str):
    """Yield ('lit', text) and ('slot', name) tokens from a template body."""
    i = 0
    n = len(body)
    lit_start = i
    while i < n:
        ch = body[i]
        if ch == "{":
            if body.startswith("{{", i):
                yield "lit", body[lit_start:i] + "{"
                i += 2
                lit_start = i
                continue
            if i > lit_start:
                yield "lit", body[lit_start:i]
            end = body.find("}", i)
            if end == -1:
                raise TemplateError(f"unclosed '{{' at offset {i}")
            name = body[i + 1 : end]
            if "{" in name:
                raise TemplateError(f"nested '{{' inside slot at offset {i}")
            if not name.strip():
                raise TemplateError(f"empty slot name at offset {i}")
            yield "slot", name
            i = end + 1
            lit_start = i
        elif ch == "}":
            if body.startswith("}}", i):
                yield "lit", body[lit_start:i] + "}"
                i += 2
                lit_start = i
                continue
            raise TemplateError(f"stray '}}' at offset {i}; write '}}}}' for a literal")
        else:
            i += 1
    if lit_start < n:
        yield "lit", body[lit_start:]


def slots_in(body: str) -> frozenset[str]:
    """The slot names a template body references."""
    return frozenset(name for kind, name in _scan(body) if kind == "slot")


@dataclass(frozen=True)
class PromptTemplate:
    """A named template body plus the slots a caller must bind."""

    name: str
    body: str
    required_slots: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "required_slots", frozenset(self.required_slots))
        extra = self.slots_in_body() - self.required_slots
        if extra:
            raise TemplateError(
                f"template {self.name!r} uses undeclared slots: {sorted(extra)}"
            )

    def slots_in_body(self) -> frozenset[str]:
        return slots_in(self.body)

    def render(self, bindings: Mapping[str, str]) -> str:
        """Fill every slot; bound values pass through verbatim.

        Braces inside bound values are data, never re-interpreted as
        placeholders.
        """
        missing = self.required_slots - bindings.keys()
        if missing:
            raise MissingSlot(
                f"template {self.name!r} missing bindings: {sorted(missing)}"
            )
        unknown = bindings.keys() - self.required_slots
        if unknown:
            raise UnknownSlot(
                f"template {self.name!r} got unknown bindings: {sorted(unknown)}"
            )
        parts = []
        for kind, value in _scan(self.body):
            parts.append(bindings[value] if kind == "slot" else value)
        return "".join(parts)


SLOTS_HEADER = "#slots:"


def load_template_file(path: Path) -> PromptTemplate:
    """Read a template from disk.

    If the first line is '#slots: a, b, c' it declares the required slots
    and is stripped from the body; otherwise the slots found in the body
    are the required set.
    """
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if text.startswith(SLOTS_HEADER):
        header, _, body = text.partition("\n")
        names = [n.strip() for n in header[len(SLOTS_HEADER) :].split(",")]
        slots = frozenset(n for n in names if n)
        return PromptTemplate(path.stem, body, slots)
    return PromptTemplate(path.stem, text, slots_in(text))


class LibraryInfo(NamedTuple):
    """Display facts about the dependency being migrated across."""

    name: str
    alias: str
    v_from: str
    v_to: str


MIGRATION_SYSTEM_PROMPT = ""

_BLACK_BOX_BODY = (
    "Refactor the code below to work with {library} ({library alias}). "
    "Currently the code works with version {legacy version} but needs to be "
    "updated to work with version {target version}. Maintain the same style, "
    "functionality, and structure as the original code.\n"
    "\n"
    "{code}\n"
    "\n"
    "Refactored code:"
)

_WITH_CODE_BODY = (
    "Below is some code for the {library} ({library alias}) library:\n"
    "\n"
    "{library code}\n"
    "\n"
    "Please refactor the code below to be compatible with the {library} "
    "library.\n"
    "Maintain the same style, functionality, and structure as the original "
    "code.\n"
    "\n"
    "{code}\n"
    "\n"
    "Refactored code:"
)

_WITH_DIFF_BODY = (
    "Here is the diff information for an update to the {library} "
    "({library alias}) library:\n"
    "{diff}\n"
    "\n"
    "Please refactor the code below to maintain compatibility with the "
    "{library} library.\n"
    "Maintain the same style, functionality, and structure as the original "
    "code.\n"
    "\n"
    "{code}\n"
    "\n"
    "Refactored code:"
)

_MIGRATION_BODIES = {
    MigrationStrategy.BLACK_BOX: _BLACK_BOX_BODY,
    MigrationStrategy.WITH_CODE: _WITH_CODE_BODY,
    MigrationStrategy.WITH_DIFF: _WITH_DIFF_BODY,
}

_ARTIFACT_SLOT = {
    MigrationStrategy.WITH_CODE: "library code",
    MigrationStrategy.WITH_DIFF: "diff",
}


def default_migration_template(strategy: MigrationStrategy) -> PromptTemplate:
    body = _MIGRATION_BODIES[strategy]
    return PromptTemplate(strategy.tag, body, slots_in(body))


def build_migration_prompt(
    strategy: MigrationStrategy,
    file: FileEntry | str,
    lib: LibraryInfo,
    artifact: str | None = None,
    template: PromptTemplate | None = None,
) -> tuple[str, str]:
    """(system, user) prompt pair migrating one file under a strategy.

    black_box takes no artifact; with_code wants the dependency's code,
    with_diff its unified diff, and both insist the artifact is non-empty.
    """
    if strategy.needs_artifact:
        if not artifact:
            raise ArtifactRequired(
                f"strategy {strategy.tag} needs a context artifact"
            )
    elif artifact is not None:
        raise ArtifactForbidden("black_box takes no context artifact")
    if template is None:
        template = default_migration_template(strategy)
    code = file.content if isinstance(file, FileEntry) else file
    bindings = {
        "library": lib.name,
        "library alias": lib.alias,
        "code": code,
    }
    if strategy is MigrationStrategy.BLACK_BOX:
        bindings["legacy version"] = lib.v_from
        bindings["target version"] = lib.v_to
    else:
        bindings[_ARTIFACT_SLOT[strategy]] = artifact  # type: ignore[index]
    bindings = {k: v for k, v in bindings.items() if k in template.required_slots}
    return MIGRATION_SYSTEM_PROMPT, template.render(bindings)


BENCH_SYSTEM_PROMPT = (
    "You are an expert software engineer. Your task is to compare changes "
    "to functions and count how many functions now have errors."
)

CODE_PAIR_TRIAL = "code_pair"
DIFF_PAIR_TRIAL = "diff_pair"

_CODE_PAIR_BODY = (
    "Here is a python file with 5 functions.\n"
    "\n"
    "```python\n"
    "{original file}\n"
    "```\n"
    "\n"
    "Here is a python file with the same 5 functions written by someone "
    "else, but now there may be errors.\n"
    "\n"
    "```python\n"
    "{modified file}\n"
    "```\n"
    "\n"
    "Your task is to count how many of the functions now have at least one "
    "error in them. Answer with ONLY the number of functions that have "
    "errors [0-5]."
)

_DIFF_PAIR_BODY = (
    "Here is a python file with 5 functions.\n"
    "\n"
    "```python\n"
    "{original file}\n"
    "```\n"
    "\n"
    "Here is a diff file comparing the original file to a another file "
    "with the same 5 functions written by someone else, but now there may "
    "be errors:\n"
    "\n"
    "```python\n"
    "{diff file}\n"
    "```\n"
    "\n"
    "Your task is to count how many of the functions now have at least one "
    "error in them. Answer with ONLY the number of functions that have "
    "errors [0-5]."
)


def bench_trial_template(trial: str) -> PromptTemplate:
    if trial == CODE_PAIR_TRIAL:
        body, slot = _CODE_PAIR_BODY, "modified file"
    elif trial == DIFF_PAIR_TRIAL:
        body, slot = _DIFF_PAIR_BODY, "diff file"
    else:
        raise ValueError(f"unknown trial kind: {trial!r}")
    return PromptTemplate(trial, body, frozenset({"original file", slot}))


def build_bench_prompt(
    trial: str, original: str, counterpart: str
) -> tuple[str, str]:
    """(system, user) pair for one comparison question.

    The counterpart is the rewritten file for code_pair or its unified
    diff for diff_pair. Degenerate empty inputs render fine; garbage in,
    garbage out is the caller's concern.
    """
    template = bench_trial_template(trial)
    slot = "modified file" if trial == CODE_PAIR_TRIAL else "diff file"
    return BENCH_SYSTEM_PROMPT, template.render(
        {"original file": original, slot: counterpart}
    )
