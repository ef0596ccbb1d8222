"""In-memory file snapshots and glob-style path filtering.

A FileSet is the unit the rest of the package moves around: an immutable,
path-sorted collection of text files. It can come from a git ref (see
``repo``), from a directory on disk, or be built directly in tests.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class FileEntry:
    """One text file: repository-relative path plus full content."""

    path: str
    content: str

    @property
    def line_count(self) -> int:
        if not self.content:
            return 0
        return self.content.count("\n") + (0 if self.content.endswith("\n") else 1)

    @property
    def byte_size(self) -> int:
        return len(self.content.encode("utf-8"))


def _glob_to_regex(pattern: str) -> str:
    """Translate one glob pattern to a regex over '/'-separated paths.

    '*' and '?' never cross a separator; '**' does. fnmatch is not used
    because its '*' crosses separators, which breaks path filtering.
    """
    out: list[str] = []
    i = 0
    n = len(pattern)
    while i < n:
        ch = pattern[i]
        if ch == "*":
            if pattern.startswith("**/", i):
                # '**/' spans zero or more whole directories
                out.append("(?:.*/)?")
                i += 3
            elif pattern.startswith("**", i):
                out.append(".*")
                i += 2
            else:
                out.append("[^/]*")
                i += 1
        elif ch == "?":
            out.append("[^/]")
            i += 1
        elif ch == "[":
            j = i + 1
            if j < n and pattern[j] in "!^":
                j += 1
            if j < n and pattern[j] == "]":
                j += 1
            while j < n and pattern[j] != "]":
                j += 1
            if j >= n:
                # unterminated class: treat '[' literally
                out.append(re.escape(ch))
                i += 1
            else:
                inner = pattern[i + 1 : j]
                if inner.startswith("!"):
                    inner = "^" + inner[1:]
                out.append("[" + inner + "]")
                i = j + 1
        else:
            out.append(re.escape(ch))
            i += 1
    return "".join(out) + r"\Z"


class FileFilter:
    """Include/exclude glob filter over repository-relative paths.

    Rules:
      * exclusion always wins over inclusion
      * an empty include list means "include everything"
      * a pattern without '/' matches the basename at any depth
      * a pattern with '/' matches the full relative path
    """

    def __init__(self, include: Iterable[str] = (), exclude: Iterable[str] = ()):
        self.include: tuple[str, ...] = tuple(include)
        self.exclude: tuple[str, ...] = tuple(exclude)
        self._include_res = [self._compile(p) for p in self.include]
        self._exclude_res = [self._compile(p) for p in self.exclude]

    @staticmethod
    def _compile(pattern: str) -> tuple[bool, re.Pattern[str]]:
        if not pattern:
            raise ValueError("empty glob pattern")
        basename_only = "/" not in pattern
        try:
            rx = re.compile(_glob_to_regex(pattern))
        except re.error as exc:
            raise ValueError(f"invalid glob pattern {pattern!r}: {exc}") from exc
        return basename_only, rx

    @staticmethod
    def _hit(compiled: tuple[bool, re.Pattern[str]], path: str) -> bool:
        basename_only, rx = compiled
        target = path.rsplit("/", 1)[-1] if basename_only else path
        return rx.match(target) is not None

    def matches(self, path: str) -> bool:
        if any(self._hit(c, path) for c in self._exclude_res):
            return False
        if not self._include_res:
            return True
        return any(self._hit(c, path) for c in self._include_res)

    def __repr__(self) -> str:
        return f"FileFilter(include={self.include!r}, exclude={self.exclude!r})"

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, FileFilter):
            return NotImplemented
        return self.include == other.include and self.exclude == other.exclude


@dataclass(frozen=True)
class FileSet:
    """Immutable snapshot of text files, sorted by path, paths unique."""

    entries: tuple[FileEntry, ...] = ()
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        ordered = tuple(sorted(self.entries, key=lambda e: e.path))
        seen: set[str] = set()
        for entry in ordered:
            if entry.path in seen:
                raise ValueError(f"duplicate path in file set: {entry.path}")
            seen.add(entry.path)
        object.__setattr__(self, "entries", ordered)
        object.__setattr__(self, "_index", {e.path: e for e in ordered})

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "FileSet":
        return cls(tuple(FileEntry(p, c) for p, c in pairs))

    @classmethod
    def from_dir(cls, root: Path, file_filter: FileFilter | None = None) -> "FileSet":
        """Snapshot a directory tree, skipping binary files with a warning."""
        root = Path(root)
        entries: list[FileEntry] = []
        for fs_path in sorted(p for p in root.rglob("*") if p.is_file()):
            rel = fs_path.relative_to(root).as_posix()
            if file_filter is not None and not file_filter.matches(rel):
                continue
            raw = fs_path.read_bytes()
            text = decode_text(raw)
            if text is None:
                logger.warning("skipping binary file: %s", rel)
                continue
            entries.append(FileEntry(rel, text))
        return cls(tuple(entries))

    def get(self, path: str) -> FileEntry | None:
        return self._index.get(path)

    def __contains__(self, path: str) -> bool:
        return path in self._index

    def __iter__(self) -> Iterator[FileEntry]:
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def paths(self) -> tuple[str, ...]:
        return tuple(e.path for e in self.entries)

    @property
    def total_bytes(self) -> int:
        return sum(e.byte_size for e in self.entries)

    def filtered(self, file_filter: FileFilter) -> "FileSet":
        return FileSet(tuple(e for e in self.entries if file_filter.matches(e.path)))


def decode_text(raw: bytes) -> str | None:
    """Decode bytes as UTF-8 text; None marks the blob as binary."""
    if b"\x00" in raw:
        return None
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return None
