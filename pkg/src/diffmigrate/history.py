"""Commit-by-commit size history of a repository, in tokens.

For every commit on a chain this measures two things: how many tokens
the filtered tree holds, and how many tokens the unified diff against
the parent takes. Whenever the second number is much smaller than the
first, shipping a diff to a model is the cheaper way to describe the
change.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .diffs import compute_diff, render_diff
from .errors import UnresolvedRef
from .files import FileFilter, FileSet
from .repo import RepoRef, ensure_repository, resolve_commit, snapshot, _git
from .tokens import HEURISTIC, TokenizerSpec, count_tokens

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CommitSizePoint:
    """One commit's tree size and change size, both in tokens."""

    commit: str
    timestamp: str
    repo_tokens: int
    diff_tokens: int

    def __post_init__(self):
        if self.repo_tokens < 0 or self.diff_tokens < 0:
            raise ValueError("token counts cannot be negative")


def _chain(tip: RepoRef, first_parent: bool) -> list[tuple[str, str]]:
    """(commit, ISO timestamp) pairs, oldest first, ending at the tip."""
    commit = resolve_commit(tip)
    args = ["log", "--reverse", "--format=%H %cI", commit]
    if first_parent:
        args.insert(1, "--first-parent")
    out = _git(tip.repo_path, *args).decode("ascii")
    pairs = []
    for line in out.splitlines():
        sha, _, stamp = line.partition(" ")
        if sha:
            pairs.append((sha, stamp))
    if not pairs:
        raise UnresolvedRef(f"no commits reachable from {tip.ref}")
    return pairs


def tree_tokens(files: FileSet, tokenizer: TokenizerSpec = HEURISTIC) -> int:
    """Per-file token counts summed over the snapshot."""
    return sum(count_tokens(entry.content, tokenizer) for entry in files)


def analyze(
    tip: RepoRef,
    file_filter: FileFilter | None = None,
    tokenizer: TokenizerSpec = HEURISTIC,
    *,
    first_parent: bool = True,
) -> list[CommitSizePoint]:
    """Walk the chain up to the tip, oldest first, measuring each commit.

    The first commit diffs against the empty tree, so its diff is the
    whole tree being created. With first_parent (the default) merge
    commits count the merge's own effect rather than replaying the side
    branch.
    """
    ensure_repository(tip.repo_path)
    points = []
    previous = FileSet()
    for commit, stamp in _chain(tip, first_parent):
        current = snapshot(RepoRef(tip.repo_path, commit), file_filter)
        diff_text = render_diff(compute_diff(previous, current))
        points.append(
            CommitSizePoint(
                commit=commit,
                timestamp=stamp,
                repo_tokens=tree_tokens(current, tokenizer),
                diff_tokens=count_tokens(diff_text, tokenizer),
            )
        )
        previous = current
    return points


HISTORY_CSV_COLUMNS = ("commit", "timestamp", "repo_tokens", "diff_tokens")


def emit_csv(points: Sequence[CommitSizePoint]) -> str:
    """RFC-4180 CSV with the fixed commit,timestamp,repo_tokens,diff_tokens header."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(HISTORY_CSV_COLUMNS)
    for p in points:
        writer.writerow([p.commit, p.timestamp, p.repo_tokens, p.diff_tokens])
    return buf.getvalue()
