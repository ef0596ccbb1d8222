"""Read-only access to git repositories: snapshots of a ref, and the
unified diff of a dependency between two refs.

Everything goes through the git CLI as a subprocess; no repository state
is ever modified. Content is read with cat-file in one batch process
rather than one subprocess per file.
"""

from __future__ import annotations

import logging
import subprocess
from dataclasses import dataclass
from pathlib import Path

from .diffs import DEFAULT_CONTEXT, UnifiedDiff, compute_diff
from .errors import IoFailure, NotARepository, UnresolvedRef
from .files import FileEntry, FileFilter, FileSet, decode_text

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RepoRef:
    """A repository path plus a ref name (tag, branch, or commit id)."""

    repo_path: Path
    ref: str

    def __post_init__(self):
        object.__setattr__(self, "repo_path", Path(self.repo_path))
        if not self.ref:
            raise ValueError("ref must be non-empty")


def _git(repo: Path, *args: str, input_bytes: bytes | None = None) -> bytes:
    cmd = ["git", "-C", str(repo), *args]
    try:
        proc = subprocess.run(cmd, input=input_bytes, capture_output=True)
    except FileNotFoundError as exc:
        raise IoFailure("git executable not found") from exc
    if proc.returncode != 0:
        stderr = proc.stderr.decode("utf-8", "replace").strip()
        raise IoFailure(f"git {' '.join(args)} failed: {stderr}")
    return proc.stdout


def ensure_repository(repo_path: Path) -> None:
    repo_path = Path(repo_path)
    if not repo_path.is_dir():
        raise NotARepository(f"{repo_path} is not a directory")
    proc = subprocess.run(
        ["git", "-C", str(repo_path), "rev-parse", "--is-inside-work-tree"],
        capture_output=True,
    )
    if proc.returncode != 0 or proc.stdout.strip() != b"true":
        raise NotARepository(f"{repo_path} is not a git work tree")


def resolve_commit(ref: RepoRef) -> str:
    """Resolve a ref name to a full commit id."""
    ensure_repository(ref.repo_path)
    proc = subprocess.run(
        [
            "git",
            "-C",
            str(ref.repo_path),
            "rev-parse",
            "--verify",
            "--quiet",
            f"{ref.ref}^{{commit}}",
        ],
        capture_output=True,
    )
    if proc.returncode != 0:
        raise UnresolvedRef(f"{ref.ref!r} does not name a commit in {ref.repo_path}")
    return proc.stdout.decode("ascii").strip()


def _list_paths(repo: Path, commit: str) -> list[str]:
    raw = _git(repo, "ls-tree", "-r", "-z", "--name-only", commit)
    return [p.decode("utf-8", "surrogateescape") for p in raw.split(b"\x00") if p]


def _read_blobs(repo: Path, commit: str, paths: list[str]) -> dict[str, bytes]:
    """Fetch many blobs with a single cat-file --batch process."""
    if not paths:
        return {}
    request = "".join(f"{commit}:{path}\n" for path in paths).encode("utf-8")
    out = _git(repo, "cat-file", "--batch", input_bytes=request)
    blobs: dict[str, bytes] = {}
    pos = 0
    for path in paths:
        nl = out.index(b"\n", pos)
        header = out[pos:nl].decode("utf-8", "replace")
        pos = nl + 1
        fields = header.rsplit(None, 2)
        if len(fields) == 3 and fields[1] == "blob":
            size = int(fields[2])
            blobs[path] = out[pos : pos + size]
            pos += size + 1  # blob content plus its trailing newline
        elif header.endswith(("missing", "ambiguous")):
            raise IoFailure(f"cannot read {commit}:{path}: {header}")
        else:
            # non-blob entry (submodule commit, etc.): skip
            logger.warning("skipping non-blob entry: %s (%s)", path, header)
            size = int(fields[2]) if len(fields) == 3 else 0
            pos += size + 1
    return blobs


def snapshot(ref: RepoRef, file_filter: FileFilter | None = None) -> FileSet:
    """All text files at a ref that pass the filter, as a FileSet.

    Binary files (undecodable or containing NUL) are skipped with a
    warning rather than failing the snapshot.
    """
    commit = resolve_commit(ref)
    paths = _list_paths(ref.repo_path, commit)
    if file_filter is not None:
        paths = [p for p in paths if file_filter.matches(p)]
    blobs = _read_blobs(ref.repo_path, commit, paths)
    entries = []
    for path in paths:
        raw = blobs.get(path)
        if raw is None:
            continue
        text = decode_text(raw)
        if text is None:
            logger.warning("skipping binary file: %s", path)
            continue
        entries.append(FileEntry(path, text))
    return FileSet(tuple(entries))


def library_diff(
    ref_from: RepoRef,
    ref_to: RepoRef,
    file_filter: FileFilter | None = None,
    *,
    context: int = DEFAULT_CONTEXT,
) -> UnifiedDiff:
    """Unified diff of the filtered tree between two refs.

    Renames appear as a deletion plus a creation. An empty selection on
    both sides yields an empty diff with a warning, not an error.
    """
    old = snapshot(ref_from, file_filter)
    new = snapshot(ref_to, file_filter)
    if not old.entries and not new.entries:
        logger.warning(
            "filter selected no files at %s or %s; diff is empty",
            ref_from.ref,
            ref_to.ref,
        )
        return UnifiedDiff((), context_width=context)
    return compute_diff(old, new, context=context)
