"""Drive whole-project migrations: one LLM call per source file per run.

A job names the source tree, the dependency's two versions, a strategy,
and how many independent runs to produce. Outputs land under
dest_dir/run_<k>/ mirroring source paths; the source tree is never
written to. A run.json per run records prompts (as hashes), token usage,
and per-file outcomes.
"""

from __future__ import annotations

import datetime as _dt
import hashlib
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .diffs import render_diff
from .errors import ContextOverflow, IoFailure, LlmError, MigrationFailed
from .files import FileEntry, FileFilter, FileSet
from .llm import ChatRequest, LlmClient, sanitize_code_reply
from .prompts import (
    LibraryInfo,
    MigrationStrategy,
    PromptTemplate,
    build_migration_prompt,
)
from .repo import RepoRef, library_diff, snapshot
from .tokens import HEURISTIC, TokenizerSpec, count_tokens, fits_context

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LibrarySpec:
    """The dependency being crossed: name, alias, and its two versions."""

    name: str
    alias: str
    ref_from: RepoRef
    ref_to: RepoRef

    def info(self) -> LibraryInfo:
        return LibraryInfo(self.name, self.alias, self.ref_from.ref, self.ref_to.ref)


@dataclass(frozen=True)
class ExperimentSpec:
    """One experiment cell: a library pair, a method, a case set."""

    library: str
    method: str
    case: str

    def __post_init__(self):
        if not (self.library and self.method and self.case):
            raise ValueError("library, method and case must all be non-empty")

    @property
    def label(self) -> str:
        return f"{self.library}/{self.method}/{self.case}"


@dataclass
class MigrationJob:
    source_dir: Path
    dest_dir: Path
    files: tuple[str, ...]
    library: LibrarySpec
    file_filter: FileFilter
    strategy: MigrationStrategy
    model: str
    runs: int = 1
    parallel: bool = False
    die_on_error: bool = False
    max_workers: int = 4
    case: str = ""

    def __post_init__(self):
        self.source_dir = Path(self.source_dir)
        self.dest_dir = Path(self.dest_dir)
        self.files = tuple(self.files)
        if self.runs < 1:
            raise ValueError("runs must be >= 1")
        if self.max_workers < 1:
            raise ValueError("max_workers must be >= 1")
        if self.dest_dir.resolve() == self.source_dir.resolve():
            raise ValueError("dest_dir must differ from source_dir")
        if not self.case:
            self.case = self.source_dir.name


@dataclass(frozen=True)
class FileOutcome:
    path: str
    status: str  # "ok" or "error"
    error: str | None = None
    prompt_sha256: str = ""
    prompt_tokens: int = 0
    completion_tokens: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class RunResult:
    run_index: int
    output_dir: Path
    outcomes: tuple[FileOutcome, ...]
    started_at: str
    finished_at: str

    @property
    def prompt_tokens(self) -> int:
        return sum(o.prompt_tokens for o in self.outcomes)

    @property
    def completion_tokens(self) -> int:
        return sum(o.completion_tokens for o in self.outcomes)

    @property
    def failed(self) -> tuple[FileOutcome, ...]:
        return tuple(o for o in self.outcomes if not o.ok)


def load_source_files(job: MigrationJob) -> FileSet:
    """The job's input files, in job order, filtered, from disk.

    An explicit files list pins order (and membership); otherwise every
    filter-passing file under source_dir is taken in path order.
    """
    if not job.source_dir.is_dir():
        raise IoFailure(f"source directory missing: {job.source_dir}")
    if job.files:
        entries = []
        for rel in job.files:
            if not job.file_filter.matches(rel):
                logger.warning("listed file excluded by filter: %s", rel)
                continue
            fs_path = job.source_dir / rel
            if not fs_path.is_file():
                raise IoFailure(f"listed file missing: {fs_path}")
            entries.append(FileEntry(rel, fs_path.read_text(encoding="utf-8")))
        return FileSet(tuple(entries))
    return FileSet.from_dir(job.source_dir, job.file_filter)


def ordered_paths(job: MigrationJob, files: FileSet) -> list[str]:
    if job.files:
        return [p for p in job.files if p in files]
    return list(files.paths)


def prepare_artifact(job: MigrationJob) -> str | None:
    """The strategy's context artifact, computed once per job.

    black_box: nothing. with_code: the dependency's filtered files at the
    target version, concatenated with '# file:' banners. with_diff: the
    rendered unified diff between the two versions (empty, with a
    warning, when the refs are identical).
    """
    if job.strategy is MigrationStrategy.BLACK_BOX:
        return None
    if job.strategy is MigrationStrategy.WITH_CODE:
        tree = snapshot(job.library.ref_to, job.file_filter)
        parts = []
        for entry in tree:
            content = entry.content
            if content and not content.endswith("\n"):
                content += "\n"
            parts.append(f"# file: {entry.path}\n{content}")
        return "".join(parts)
    diff = library_diff(job.library.ref_from, job.library.ref_to, job.file_filter)
    text = render_diff(diff)
    if not text:
        logger.warning(
            "no differences between %s and %s; diff artifact is empty",
            job.library.ref_from.ref,
            job.library.ref_to.ref,
        )
    return text


@dataclass(frozen=True)
class PreparedFile:
    """A source file with its prompt already built and counted."""

    entry: FileEntry
    system: str
    user: str
    prompt_sha256: str
    prompt_token_count: int


def prepare_prompts(
    job: MigrationJob,
    files: FileSet,
    artifact: str | None,
    *,
    template: PromptTemplate | None = None,
    tokenizer: TokenizerSpec = HEURISTIC,
) -> list[PreparedFile]:
    prepared = []
    for path in ordered_paths(job, files):
        entry = files.get(path)
        assert entry is not None
        system, user = build_migration_prompt(
            job.strategy, entry, job.library.info(), artifact, template
        )
        digest = hashlib.sha256((system + "\x00" + user).encode("utf-8")).hexdigest()
        prepared.append(
            PreparedFile(entry, system, user, digest, count_tokens(system + user, tokenizer))
        )
    return prepared


def migrate_file(
    prepared: PreparedFile,
    job: MigrationJob,
    client: LlmClient,
    *,
    window_tokens: int | None = None,
) -> tuple[str, FileOutcome]:
    """Run one file through the model; returns (code, outcome).

    An oversized prompt fails fast without a provider call.
    """
    if window_tokens is not None:
        fit = fits_context(prepared.prompt_token_count, window_tokens)
        if not fit.fits:
            raise ContextOverflow(
                f"{prepared.entry.path}: prompt is {prepared.prompt_token_count} "
                f"tokens, {-fit.margin} over the {window_tokens}-token window"
            )
    request = ChatRequest(
        model=job.model,
        system=prepared.system,
        user=prepared.user,
        want_token_probs=False,
    )
    response = client.complete(request, case=job.case, method=job.strategy.tag)
    code = sanitize_code_reply(response.text)
    outcome = FileOutcome(
        path=prepared.entry.path,
        status="ok",
        prompt_sha256=prepared.prompt_sha256,
        prompt_tokens=response.prompt_tokens,
        completion_tokens=response.completion_tokens,
    )
    return code, outcome


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _write_output(run_dir: Path, path: str, code: str) -> None:
    target = run_dir / path
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(code + "\n" if code else "", encoding="utf-8")


def _process_one(
    prepared: PreparedFile,
    job: MigrationJob,
    client: LlmClient,
    run_dir: Path,
    window_tokens: int | None,
) -> FileOutcome:
    try:
        code, outcome = migrate_file(
            prepared, job, client, window_tokens=window_tokens
        )
    except LlmError as exc:
        logger.error("migration failed for %s: %s", prepared.entry.path, exc)
        return FileOutcome(
            path=prepared.entry.path,
            status="error",
            error=str(exc),
            prompt_sha256=prepared.prompt_sha256,
        )
    try:
        _write_output(run_dir, prepared.entry.path, code)
    except OSError as exc:
        return FileOutcome(
            path=prepared.entry.path,
            status="error",
            error=f"write failed: {exc}",
            prompt_sha256=prepared.prompt_sha256,
        )
    return outcome


def run(
    job: MigrationJob,
    client: LlmClient,
    *,
    window_tokens: int | None = None,
    tokenizer: TokenizerSpec = HEURISTIC,
    template: PromptTemplate | None = None,
) -> list[RunResult]:
    """Execute the whole job: every file, every run.

    Serial unless job.parallel; a parallel run writes the same bytes a
    serial one would, given a deterministic provider. With die_on_error,
    the first failure aborts the job (after in-flight work settles in
    parallel mode) by raising MigrationFailed; otherwise failures are
    recorded per file and the job continues.
    """
    files = load_source_files(job)
    artifact = prepare_artifact(job)
    prepared = prepare_prompts(
        job, files, artifact, template=template, tokenizer=tokenizer
    )
    results = []
    for index in range(1, job.runs + 1):
        run_dir = job.dest_dir / f"run_{index}"
        run_dir.mkdir(parents=True, exist_ok=True)
        started = _now()
        outcomes: list[FileOutcome] = []
        if job.parallel and len(prepared) > 1:
            with ThreadPoolExecutor(max_workers=job.max_workers) as pool:
                outcomes = list(
                    pool.map(
                        lambda p: _process_one(p, job, client, run_dir, window_tokens),
                        prepared,
                    )
                )
            if job.die_on_error:
                failed = [o for o in outcomes if not o.ok]
                if failed:
                    _write_run_report(job, run_dir, index, started, _now(), outcomes)
                    raise MigrationFailed(
                        f"run {index}: {len(failed)} file(s) failed, "
                        f"first: {failed[0].path}: {failed[0].error}"
                    )
        else:
            for item in prepared:
                outcome = _process_one(item, job, client, run_dir, window_tokens)
                outcomes.append(outcome)
                if job.die_on_error and not outcome.ok:
                    _write_run_report(job, run_dir, index, started, _now(), outcomes)
                    raise MigrationFailed(
                        f"run {index}: {outcome.path}: {outcome.error}"
                    )
        finished = _now()
        _write_run_report(job, run_dir, index, started, finished, outcomes)
        results.append(
            RunResult(index, run_dir, tuple(outcomes), started, finished)
        )
    return results


def _write_run_report(
    job: MigrationJob,
    run_dir: Path,
    index: int,
    started: str,
    finished: str,
    outcomes: list[FileOutcome],
) -> None:
    report = {
        "run_index": index,
        "model": job.model,
        "strategy": job.strategy.tag,
        "library": job.library.name,
        "case": job.case,
        "started_at": started,
        "finished_at": finished,
        "files": [
            {
                "path": o.path,
                "status": o.status,
                "error": o.error,
                "prompt_sha256": o.prompt_sha256,
                "prompt_tokens": o.prompt_tokens,
                "completion_tokens": o.completion_tokens,
            }
            for o in outcomes
        ],
        "totals": {
            "prompt_tokens": sum(o.prompt_tokens for o in outcomes),
            "completion_tokens": sum(o.completion_tokens for o in outcomes),
            "failed": sum(1 for o in outcomes if not o.ok),
        },
    }
    (run_dir / "run.json").write_text(
        json.dumps(report, indent=2) + "\n", encoding="utf-8"
    )
