"""Judge migrated code two ways: by running the project's tests, and by
comparing the model's edits against a reference migration line by line.

Edit matching works on change blocks (maximal runs of consecutive changed
lines). A reference block is location-matched when a candidate block
touches the same old-file lines, and exactly matched when the candidate
also writes the same replacement lines (trailing whitespace ignored).
Matching is greedy one-to-one in old-file order, preferring exact over
merely located candidates.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
import re
import subprocess
import tempfile
import time
import xml.etree.ElementTree as ET
from dataclasses import dataclass
from pathlib import Path
from typing import Collection, Iterable, Sequence

from .diffs import ChangeBlock, change_blocks
from .errors import ParseFailure, RunnerNotFound, Timeout
from .files import FileFilter, FileSet

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TestReport:
    """Counts parsed from one test-runner invocation."""

    passed: int
    failed: int
    errored: int
    collected: int
    raw_log: Path | None = None

    def __post_init__(self):
        if min(self.passed, self.failed, self.errored, self.collected) < 0:
            raise ValueError("test counts cannot be negative")


SUMMARY_REGEX = "summary_regex"
JUNIT_XML = "junit_xml"

DEFAULT_SUMMARY_PATTERN = (
    r"(?P<passed>\d+) passed"
    r"|(?P<failed>\d+) failed"
    r"|(?P<error>\d+) error(?:s)?"
    r"|collected (?P<collected>\d+) item"
)


@dataclass(frozen=True)
class ParseSpec:
    """How to read the runner's result: summary regex or junit XML.

    The regex is searched repeatedly over the whole log; named groups
    passed/failed/error/collected contribute counts, last match winning.
    For XML, xml_path is resolved against the project directory.
    """

    kind: str = SUMMARY_REGEX
    pattern: str = DEFAULT_SUMMARY_PATTERN
    xml_path: str = "report.xml"

    def __post_init__(self):
        if self.kind not in (SUMMARY_REGEX, JUNIT_XML):
            raise ValueError(f"unknown parse kind: {self.kind!r}")
        if self.kind == SUMMARY_REGEX:
            groups = re.compile(self.pattern).groupindex
            if not {"passed", "failed", "error"} & set(groups):
                raise ValueError(
                    "pattern needs at least one of the groups passed/failed/error"
                )


def _parse_summary(log_text: str, pattern: str, log_path: Path) -> TestReport:
    counts: dict[str, int] = {}
    for match in re.finditer(pattern, log_text):
        for name, value in match.groupdict().items():
            if value is not None:
                counts[name] = int(value)
    if not {"passed", "failed", "error"} & counts.keys():
        raise ParseFailure(
            f"no test summary recognized in runner output (log: {log_path})",
            log_path=log_path,
        )
    passed = counts.get("passed", 0)
    failed = counts.get("failed", 0)
    errored = counts.get("error", 0)
    collected = counts.get("collected", passed + failed + errored)
    return TestReport(passed, failed, errored, collected, log_path)


def _parse_junit(xml_file: Path, log_path: Path) -> TestReport:
    if not xml_file.is_file():
        raise ParseFailure(
            f"junit report not found: {xml_file}", log_path=log_path
        )
    try:
        root = ET.parse(xml_file).getroot()
    except ET.ParseError as exc:
        raise ParseFailure(
            f"junit report unreadable: {exc}", log_path=log_path
        ) from exc
    suites = [root] if root.tag == "testsuite" else list(root.iter("testsuite"))
    tests = failures = errors = skipped = 0
    for suite in suites:
        tests += int(suite.get("tests", 0))
        failures += int(suite.get("failures", 0))
        errors += int(suite.get("errors", 0))
        skipped += int(suite.get("skipped", 0))
    return TestReport(
        passed=tests - failures - errors - skipped,
        failed=failures,
        errored=errors,
        collected=tests,
        raw_log=log_path,
    )


def run_tests(
    project_dir: Path,
    runner_command: Sequence[str],
    parse_spec: ParseSpec | None = None,
    *,
    timeout: float | None = None,
    log_dir: Path | None = None,
) -> TestReport:
    """Run the project's tests in a subprocess and parse the outcome.

    The runner executes with project_dir as its working directory; stdout
    and stderr are captured to a log file that is always retained, parse
    failures included.
    """
    project_dir = Path(project_dir)
    if not project_dir.is_dir():
        raise RunnerNotFound(f"project directory missing: {project_dir}")
    if not runner_command:
        raise RunnerNotFound("empty runner command")
    spec = parse_spec or ParseSpec()

    if log_dir is not None:
        log_dir = Path(log_dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        fd, name = tempfile.mkstemp(prefix="testrun-", suffix=".log", dir=log_dir)
    else:
        fd, name = tempfile.mkstemp(prefix="testrun-", suffix=".log")
    log_path = Path(name)

    start = time.monotonic()
    try:
        proc = subprocess.run(
            list(runner_command),
            cwd=project_dir,
            stdout=fd,
            stderr=subprocess.STDOUT,
            timeout=timeout,
        )
    except FileNotFoundError as exc:
        raise RunnerNotFound(f"cannot launch runner: {runner_command[0]}") from exc
    except subprocess.TimeoutExpired as exc:
        raise Timeout(
            f"test runner exceeded {timeout}s (partial log: {log_path})"
        ) from exc
    finally:
        os.close(fd)
    logger.debug(
        "runner exited %d in %.1fs", proc.returncode, time.monotonic() - start
    )
    log_text = log_path.read_text(encoding="utf-8", errors="replace")
    if spec.kind == JUNIT_XML:
        return _parse_junit(project_dir / spec.xml_path, log_path)
    return _parse_summary(log_text, spec.pattern, log_path)


BlockId = tuple[str, int]


@dataclass(frozen=True)
class EditMatchReport:
    """How well one candidate's edits line up with the reference edits."""

    reference_blocks: int
    candidate_blocks: int
    matched_exact: int
    matched_location: int
    exact_ids: frozenset[BlockId] = frozenset()
    location_ids: frozenset[BlockId] = frozenset()

    @property
    def recall(self) -> float | None:
        if self.reference_blocks == 0:
            return None
        return self.matched_exact / self.reference_blocks

    @property
    def precision(self) -> float | None:
        if self.candidate_blocks == 0:
            return None
        return self.matched_exact / self.candidate_blocks

    @property
    def location_rate(self) -> float | None:
        if self.reference_blocks == 0:
            return None
        return self.matched_location / self.reference_blocks

    def to_dict(self) -> dict:
        return {
            "reference_blocks": self.reference_blocks,
            "candidate_blocks": self.candidate_blocks,
            "matched_exact": self.matched_exact,
            "matched_location": self.matched_location,
            "recall": self.recall,
            "precision": self.precision,
            "location_rate": self.location_rate,
        }


def _stripped(lines: Iterable[str]) -> tuple[str, ...]:
    return tuple(line.rstrip() for line in lines)


def _blocks_for_pair(
    original: FileSet, changed: FileSet, paths: Iterable[str]
) -> dict[str, tuple[ChangeBlock, ...]]:
    out: dict[str, tuple[ChangeBlock, ...]] = {}
    for path in paths:
        orig = original.get(path)
        orig_text = orig.content if orig else ""
        entry = changed.get(path)
        # a path the changed side never produced counts as untouched
        changed_text = entry.content if entry is not None else orig_text
        out[path] = change_blocks(orig_text, changed_text)
    return out


def match_edits(
    original: FileSet,
    reference: FileSet,
    candidate: FileSet,
    *,
    ignore_patterns: Iterable[str] = (),
) -> EditMatchReport:
    """Score candidate edits against reference edits, block by block.

    Both sides diff against the same original tree. A path present in one
    side but not the other is scored as-is (its blocks simply find no
    partner) after a warning, so an incomplete candidate loses recall
    rather than erroring out.
    """
    keep = FileFilter(exclude=tuple(ignore_patterns))
    paths = sorted(
        p
        for p in set(original.paths) | set(reference.paths) | set(candidate.paths)
        if keep.matches(p)
    )
    ref_only = [p for p in paths if p in reference and p not in candidate]
    cand_only = [p for p in paths if p in candidate and p not in reference]
    if ref_only or cand_only:
        logger.warning(
            "path mismatch between reference and candidate "
            "(missing from candidate: %s; extra in candidate: %s)",
            ref_only or "none",
            cand_only or "none",
        )

    ref_blocks = _blocks_for_pair(original, reference, paths)
    cand_blocks = _blocks_for_pair(original, candidate, paths)

    total_ref = sum(len(b) for b in ref_blocks.values())
    total_cand = sum(len(b) for b in cand_blocks.values())
    exact_ids: set[BlockId] = set()
    location_ids: set[BlockId] = set()

    for path in paths:
        refs = ref_blocks[path]
        cands = cand_blocks[path]
        taken = [False] * len(cands)
        for ri, rb in enumerate(refs):
            overlapping = [
                ci
                for ci, cb in enumerate(cands)
                if not taken[ci] and rb.overlaps_old(cb)
            ]
            if not overlapping:
                continue
            want = _stripped(rb.added)
            exact = [
                ci for ci in overlapping if _stripped(cands[ci].added) == want
            ]
            chosen = exact[0] if exact else overlapping[0]
            taken[chosen] = True
            location_ids.add((path, ri))
            if exact:
                exact_ids.add((path, ri))

    return EditMatchReport(
        reference_blocks=total_ref,
        candidate_blocks=total_cand,
        matched_exact=len(exact_ids),
        matched_location=len(location_ids),
        exact_ids=frozenset(exact_ids),
        location_ids=frozenset(location_ids),
    )


def cumulative_union_counts(sets: Iterable[Collection]) -> list[int]:
    """Sizes of the running union: how coverage grows run over run."""
    seen: set = set()
    counts = []
    for s in sets:
        seen |= set(s)
        counts.append(len(seen))
    return counts


def union_runs(
    original: FileSet,
    reference: FileSet,
    candidates: Sequence[FileSet],
    *,
    ignore_patterns: Iterable[str] = (),
) -> list[EditMatchReport]:
    """Score each run, then fold runs together cumulatively.

    Report k describes the union of runs 1..k: a reference block counts
    as matched if any run so far matched it. Precision is not defined for
    a union (candidate blocks are not one-to-one across runs), so
    candidate_blocks accumulates the per-run totals and the precision of
    a union report is best ignored.
    """
    per_run = [
        match_edits(original, reference, cand, ignore_patterns=ignore_patterns)
        for cand in candidates
    ]
    reports = []
    exact: set[BlockId] = set()
    location: set[BlockId] = set()
    cand_total = 0
    for rep in per_run:
        exact |= rep.exact_ids
        location |= rep.location_ids
        cand_total += rep.candidate_blocks
        reports.append(
            EditMatchReport(
                reference_blocks=rep.reference_blocks,
                candidate_blocks=cand_total,
                matched_exact=len(exact),
                matched_location=len(location),
                exact_ids=frozenset(exact),
                location_ids=frozenset(location),
            )
        )
    return reports


EVAL_CSV_COLUMNS = (
    "run",
    "reference_blocks",
    "candidate_blocks",
    "matched_exact",
    "matched_location",
    "recall",
    "precision",
    "location_rate",
)


def reports_to_csv(reports: Sequence[EditMatchReport]) -> str:
    """One row per report, RFC-4180, runs numbered from 1."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(EVAL_CSV_COLUMNS)
    for idx, rep in enumerate(reports, start=1):
        d = rep.to_dict()
        writer.writerow(
            [idx]
            + [
                d[c] if d[c] is not None else ""
                for c in EVAL_CSV_COLUMNS[1:]
            ]
        )
    return buf.getvalue()


def reports_to_json(reports: Sequence[EditMatchReport]) -> str:
    return json.dumps(
        [dict(run=i, **rep.to_dict()) for i, rep in enumerate(reports, start=1)],
        indent=2,
    )
