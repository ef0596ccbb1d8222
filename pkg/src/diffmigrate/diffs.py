r"""Line-level diffs: Myers edit scripts, GNU-style unified rendering,
parsing, patch application, and change blocks.

The renderer reproduces ``diff -u`` output byte for byte when given
``a/<path>`` / ``b/<path>`` labels: ambiguous insert/delete runs sit as far
down as possible, change runs separated by at most 2*context unchanged
lines share one hunk, and a file whose last line has no newline renders the
``\ No newline at end of file`` marker after each affected line.

Line texts inside hunks keep their trailing newline; only a file's
unterminated last line is stored without one. That makes ``apply_diff`` an
exact byte-level reconstruction and keeps parse(render(d)) == d.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import ContextMismatch, LineCountMismatch, MalformedHunkHeader
from .files import FileEntry, FileSet

KEEP = "keep"
DELETE = "delete"
INSERT = "insert"

DEFAULT_CONTEXT = 3

NO_NEWLINE_MARKER = "\\ No newline at end of file"


def split_lines(text: str) -> list[str]:
    """Split on '\n' keeping the newline on each line.

    Unlike str.splitlines, only '\n' terminates a line, so content using
    '\r\n' or stray '\r' survives round trips unchanged.
    """
    if not text:
        return []
    lines = text.split("\n")
    last = lines.pop()
    out = [line + "\n" for line in lines]
    if last:
        out.append(last)
    return out


@dataclass(frozen=True)
class EditOp:
    kind: str  # KEEP, DELETE or INSERT
    text: str

    def __post_init__(self):
        if self.kind not in (KEEP, DELETE, INSERT):
            raise ValueError(f"bad op kind: {self.kind!r}")


@dataclass(frozen=True)
class EditScript:
    """Ordered edit operations turning one line sequence into another."""

    ops: tuple[EditOp, ...]

    @property
    def lcs_length(self) -> int:
        return sum(1 for op in self.ops if op.kind == KEEP)

    @property
    def kept(self) -> tuple[str, ...]:
        return tuple(op.text for op in self.ops if op.kind == KEEP)

    def old_lines(self) -> list[str]:
        return [op.text for op in self.ops if op.kind != INSERT]

    def new_lines(self) -> list[str]:
        return [op.text for op in self.ops if op.kind != DELETE]


def _myers_middle(a: Sequence[str], b: Sequence[str]) -> list[EditOp]:
    """Greedy forward Myers over sequences with no common affix."""
    n, m = len(a), len(b)
    if n == 0:
        return [EditOp(INSERT, line) for line in b]
    if m == 0:
        return [EditOp(DELETE, line) for line in a]

    max_d = n + m
    size = 2 * max_d + 1
    offset = max_d
    v = [0] * size
    # trace[d] holds v restricted to k in [-d, d] as it stood entering
    # depth d; index by k + d. Storing the slice keeps memory at the
    # O(D^2) the backtrack needs instead of O(D * (N + M)).
    trace: list[list[int]] = []
    found_d = -1
    for d in range(max_d + 1):
        trace.append(v[offset - d : offset + d + 1])
        for k in range(-d, d + 1, 2):
            if k == -d or (k != d and v[offset + k - 1] < v[offset + k + 1]):
                x = v[offset + k + 1]
            else:
                x = v[offset + k - 1] + 1
            y = x - k
            while x < n and y < m and a[x] == b[y]:
                x += 1
                y += 1
            v[offset + k] = x
            if x >= n and y >= m:
                found_d = d
                break
        if found_d >= 0:
            break

    ops_rev: list[EditOp] = []
    x, y = n, m
    for d in range(found_d, 0, -1):
        prev = trace[d]
        k = x - y
        if k == -d or (k != d and prev[k - 1 + d] < prev[k + 1 + d]):
            prev_k = k + 1
        else:
            prev_k = k - 1
        prev_x = prev[prev_k + d]
        prev_y = prev_x - prev_k
        while x > prev_x and y > prev_y:
            x -= 1
            y -= 1
            ops_rev.append(EditOp(KEEP, a[x]))
        if prev_k == k + 1:
            y -= 1
            ops_rev.append(EditOp(INSERT, b[prev_y]))
        else:
            x -= 1
            ops_rev.append(EditOp(DELETE, a[prev_x]))
    while x > 0 and y > 0:
        x -= 1
        y -= 1
        ops_rev.append(EditOp(KEEP, a[x]))
    ops_rev.reverse()
    return ops_rev


def _shift_boundaries(
    a: Sequence[str],
    changed_a: list[bool],
    b: Sequence[str],
    changed_b: list[bool],
) -> None:
    """Slide ambiguous change runs into the reference tool's normal form.

    Mutates the changed-line flags in place. Each file's runs shift up to
    merge with a preceding run, then down to merge with a following one;
    a run that found no merge stays as far down as possible unless pulling
    it back up aligns it with a change in the other file.
    """
    for lines, changed, other in (
        (a, changed_a, changed_b),
        (b, changed_b, changed_a),
    ):
        i_end = len(lines)

        def chg(idx: int, flags=changed) -> bool:
            return 0 <= idx < len(flags) and flags[idx]

        def oth(idx: int, flags=other) -> bool:
            return 0 <= idx < len(flags) and flags[idx]

        i = j = 0
        while True:
            # skip to the next run, keeping the other file's cursor in
            # step: each unchanged line here pairs with one there
            while i < i_end and not changed[i]:
                while oth(j):
                    j += 1
                j += 1
                i += 1
            if i == i_end:
                break
            start = i
            i += 1
            while chg(i):
                i += 1
            while oth(j):
                j += 1

            while True:
                runlength = i - start
                # shift up while the line before the run equals its last
                # line; this can merge with the preceding run
                while start and lines[start - 1] == lines[i - 1]:
                    start -= 1
                    changed[start] = True
                    i -= 1
                    changed[i] = False
                    while chg(start - 1):
                        start -= 1
                    j -= 1
                    while oth(j):
                        j -= 1
                # the last spot (if any) where the run's end lined up
                # with a change in the other file
                corresponding = i if oth(j - 1) else i_end
                # shift down while the run's first line equals the line
                # after it; this can merge with the following run
                while i != i_end and lines[start] == lines[i]:
                    changed[start] = False
                    start += 1
                    changed[i] = True
                    i += 1
                    while chg(i):
                        i += 1
                    j += 1
                    while oth(j):
                        corresponding = i
                        j += 1
                if runlength == i - start:
                    break

            # pull the settled run back up to align with the other file
            while corresponding < i:
                start -= 1
                changed[start] = True
                i -= 1
                changed[i] = False
                j -= 1
                while oth(j):
                    j -= 1


def _script_from_changed(
    a: Sequence[str], changed_a: Sequence[bool], b: Sequence[str], changed_b: Sequence[bool]
) -> list[EditOp]:
    ops: list[EditOp] = []
    ia = ib = 0
    while ia < len(a) or ib < len(b):
        if ia < len(a) and changed_a[ia]:
            ops.append(EditOp(DELETE, a[ia]))
            ia += 1
        elif ib < len(b) and changed_b[ib]:
            ops.append(EditOp(INSERT, b[ib]))
            ib += 1
        else:
            ops.append(EditOp(KEEP, a[ia]))
            ia += 1
            ib += 1
    return ops


def myers_diff(old_lines: Sequence[str], new_lines: Sequence[str]) -> EditScript:
    """Minimal edit script between two sequences (lines, or any strings).

    The result is in rendering normal form: deletions precede insertions
    within a change run, and ambiguous runs sit where the reference diff
    tool would put them (see _shift_boundaries).
    """
    a = list(old_lines)
    b = list(new_lines)
    prefix = 0
    limit = min(len(a), len(b))
    while prefix < limit and a[prefix] == b[prefix]:
        prefix += 1
    suffix = 0
    limit -= prefix
    while suffix < limit and a[len(a) - 1 - suffix] == b[len(b) - 1 - suffix]:
        suffix += 1
    middle = _myers_middle(
        a[prefix : len(a) - suffix], b[prefix : len(b) - suffix]
    )
    changed_a = [False] * len(a)
    changed_b = [False] * len(b)
    ia = ib = prefix
    for op in middle:
        if op.kind == KEEP:
            ia += 1
            ib += 1
        elif op.kind == DELETE:
            changed_a[ia] = True
            ia += 1
        else:
            changed_b[ib] = True
            ib += 1
    _shift_boundaries(a, changed_a, b, changed_b)
    return EditScript(tuple(_script_from_changed(a, changed_a, b, changed_b)))


@dataclass(frozen=True)
class Hunk:
    """One @@ block: header numbers plus tagged body lines.

    Tags are ' ', '-' or '+'. Starts are 1-based; a zero-length side's
    start names the line *before* the hunk on that side, 0 for the top.
    """

    old_start: int
    old_len: int
    new_start: int
    new_len: int
    lines: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for tag, _ in self.lines:
            if tag not in (" ", "-", "+"):
                raise ValueError(f"bad hunk line tag: {tag!r}")
        old_count = sum(1 for tag, _ in self.lines if tag in (" ", "-"))
        new_count = sum(1 for tag, _ in self.lines if tag in (" ", "+"))
        if old_count != self.old_len or new_count != self.new_len:
            raise LineCountMismatch(
                f"hunk declares -{self.old_len}/+{self.new_len} but body has "
                f"-{old_count}/+{new_count}"
            )
        if min(self.old_start, self.new_start, self.old_len, self.new_len) < 0:
            raise ValueError("negative hunk header field")


@dataclass(frozen=True)
class FileDiff:
    """Diff of one file; a missing side (None) marks creation or deletion."""

    old_path: str | None
    new_path: str | None
    hunks: tuple[Hunk, ...]

    def __post_init__(self):
        if self.old_path is None and self.new_path is None:
            raise ValueError("file diff needs at least one path")
        last_end = 0
        for hunk in self.hunks:
            anchor = hunk.old_start if hunk.old_len == 0 else hunk.old_start - 1
            if anchor < last_end:
                raise MalformedHunkHeader(
                    "hunks out of order or overlapping on the old side"
                )
            last_end = anchor + hunk.old_len

    @property
    def path(self) -> str:
        return self.new_path if self.new_path is not None else self.old_path  # type: ignore[return-value]


@dataclass(frozen=True)
class UnifiedDiff:
    """A parsed or computed unified diff over any number of files.

    context_width records how much context the diff was rendered with; it
    does not take part in equality, so parse(render(d)) == d holds even for
    non-default widths.
    """

    files: tuple[FileDiff, ...] = ()
    context_width: int = field(default=DEFAULT_CONTEXT, compare=False)

    def __bool__(self) -> bool:
        return bool(self.files)

    def file_for(self, path: str) -> FileDiff | None:
        for fd in self.files:
            if fd.path == path or fd.old_path == path:
                return fd
        return None


def _file_diff(
    old: FileEntry | None, new: FileEntry | None, context: int
) -> FileDiff | None:
    old_lines = split_lines(old.content) if old is not None else []
    new_lines = split_lines(new.content) if new is not None else []
    if old is not None and new is not None and old.content == new.content:
        return None
    script = myers_diff(old_lines, new_lines)
    hunks = _build_hunks(script.ops, context)
    if not hunks:
        return None
    return FileDiff(
        old.path if old is not None else None,
        new.path if new is not None else None,
        tuple(hunks),
    )


def _build_hunks(ops: Sequence[EditOp], context: int) -> list[Hunk]:
    if context < 0:
        raise ValueError("context must be >= 0")
    tagged: list[tuple[str, str]] = []
    for op in ops:
        tag = {KEEP: " ", DELETE: "-", INSERT: "+"}[op.kind]
        tagged.append((tag, op.text))

    runs: list[tuple[int, int]] = []
    i = 0
    while i < len(tagged):
        if tagged[i][0] == " ":
            i += 1
            continue
        j = i
        while j < len(tagged) and tagged[j][0] != " ":
            j += 1
        runs.append((i, j - 1))
        i = j
    if not runs:
        return []

    groups: list[tuple[int, int]] = [runs[0]]
    for start, end in runs[1:]:
        if start - groups[-1][1] - 1 <= 2 * context:
            groups[-1] = (groups[-1][0], end)
        else:
            groups.append((start, end))

    old_before = [0] * (len(tagged) + 1)
    new_before = [0] * (len(tagged) + 1)
    for idx, (tag, _) in enumerate(tagged):
        old_before[idx + 1] = old_before[idx] + (1 if tag in (" ", "-") else 0)
        new_before[idx + 1] = new_before[idx] + (1 if tag in (" ", "+") else 0)

    hunks: list[Hunk] = []
    for start, end in groups:
        lo = max(0, start - context)
        hi = min(len(tagged), end + 1 + context)
        body = tuple(tagged[lo:hi])
        old_len = sum(1 for tag, _ in body if tag in (" ", "-"))
        new_len = sum(1 for tag, _ in body if tag in (" ", "+"))
        old_start = old_before[lo] + 1 if old_len else old_before[lo]
        new_start = new_before[lo] + 1 if new_len else new_before[lo]
        hunks.append(Hunk(old_start, old_len, new_start, new_len, body))
    return hunks


def compute_diff(
    old: FileSet, new: FileSet, *, context: int = DEFAULT_CONTEXT
) -> UnifiedDiff:
    """Structured diff between two file sets, sorted by path.

    A path on one side only becomes a creation or deletion against
    /dev/null; renames are therefore a deletion plus a creation. Identical
    files are omitted, as is the creation or deletion of an empty file
    (matching the reference tool, which emits nothing for those).
    """
    paths = sorted(set(old.paths) | set(new.paths))
    diffs = []
    for path in paths:
        fd = _file_diff(old.get(path), new.get(path), context)
        if fd is not None:
            diffs.append(fd)
    return UnifiedDiff(tuple(diffs), context_width=context)


def _coerce_set(value: FileSet | FileEntry | str, default_path: str) -> FileSet:
    if isinstance(value, FileSet):
        return value
    if isinstance(value, FileEntry):
        return FileSet((value,))
    return FileSet((FileEntry(default_path, value),))


def render_unified(
    old: FileSet | FileEntry | str,
    new: FileSet | FileEntry | str,
    *,
    context: int = DEFAULT_CONTEXT,
    path: str = "file",
) -> str:
    """Render the unified diff text between two snapshots (or raw texts)."""
    old_set = _coerce_set(old, path)
    new_set = _coerce_set(new, path)
    return render_diff(compute_diff(old_set, new_set, context=context))


def _format_range(start: int, length: int) -> str:
    return str(start) if length == 1 else f"{start},{length}"


def render_diff(diff: UnifiedDiff) -> str:
    out: list[str] = []
    for fd in diff.files:
        old_label = "/dev/null" if fd.old_path is None else f"a/{fd.old_path}"
        new_label = "/dev/null" if fd.new_path is None else f"b/{fd.new_path}"
        out.append(f"--- {old_label}\n")
        out.append(f"+++ {new_label}\n")
        for hunk in fd.hunks:
            out.append(
                f"@@ -{_format_range(hunk.old_start, hunk.old_len)} "
                f"+{_format_range(hunk.new_start, hunk.new_len)} @@\n"
            )
            for tag, text in hunk.lines:
                if text.endswith("\n"):
                    out.append(tag + text)
                else:
                    out.append(tag + text + "\n" + NO_NEWLINE_MARKER + "\n")
    return "".join(out)


_HUNK_HEADER_RE = re.compile(
    r"^@@ -(?P<os>\d+)(?:,(?P<ol>\d+))? \+(?P<ns>\d+)(?:,(?P<nl>\d+))? @@(?: .*)?$"
)


def _parse_label(label: str) -> str | None:
    label = label.split("\t", 1)[0]
    if label == "/dev/null":
        return None
    if label.startswith(("a/", "b/")):
        return label[2:]
    return label


def parse_unified(text: str) -> UnifiedDiff:
    """Parse unified diff text back into structured form.

    Strict inside hunks (counts must match the header, stray lines are
    errors) but tolerant of non-diff preamble lines between files, such as
    the command echoes recursive diff emits.
    """
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    files: list[FileDiff] = []
    i = 0
    while i < len(lines):
        line = lines[i]
        if line.startswith("--- "):
            if i + 1 >= len(lines) or not lines[i + 1].startswith("+++ "):
                raise MalformedHunkHeader(
                    f"line {i + 1}: '---' header without matching '+++'"
                )
            old_path = _parse_label(line[4:])
            new_path = _parse_label(lines[i + 1][4:])
            i += 2
            hunks: list[Hunk] = []
            while i < len(lines) and lines[i].startswith("@@"):
                match = _HUNK_HEADER_RE.match(lines[i])
                if match is None:
                    raise MalformedHunkHeader(f"line {i + 1}: {lines[i]!r}")
                old_start = int(match.group("os"))
                old_len = int(match.group("ol") or 1)
                new_start = int(match.group("ns"))
                new_len = int(match.group("nl") or 1)
                i += 1
                body: list[tuple[str, str]] = []
                old_seen = new_seen = 0
                while old_seen < old_len or new_seen < new_len:
                    if i >= len(lines):
                        raise LineCountMismatch(
                            f"hunk at line {i} truncated: expected "
                            f"{old_len} old / {new_len} new lines"
                        )
                    raw = lines[i]
                    if not raw:
                        raise LineCountMismatch(
                            f"line {i + 1}: blank line inside hunk body"
                        )
                    tag, rest = raw[0], raw[1:]
                    if tag == " ":
                        old_seen += 1
                        new_seen += 1
                    elif tag == "-":
                        old_seen += 1
                    elif tag == "+":
                        new_seen += 1
                    else:
                        raise LineCountMismatch(
                            f"line {i + 1}: unexpected {raw!r} inside hunk body"
                        )
                    if i + 1 < len(lines) and lines[i + 1].startswith("\\"):
                        body.append((tag, rest))
                        i += 2
                    else:
                        body.append((tag, rest + "\n"))
                        i += 1
                hunks.append(Hunk(old_start, old_len, new_start, new_len, tuple(body)))
            files.append(FileDiff(old_path, new_path, tuple(hunks)))
        elif line.startswith("@@"):
            raise MalformedHunkHeader(f"line {i + 1}: hunk before any file header")
        else:
            i += 1
    return UnifiedDiff(tuple(files))


def _apply_hunks(content: str, hunks: Sequence[Hunk], path: str) -> str:
    old_lines = split_lines(content)
    out: list[str] = []
    cursor = 0
    for hunk in hunks:
        anchor = hunk.old_start if hunk.old_len == 0 else hunk.old_start - 1
        if anchor < cursor:
            raise ContextMismatch(f"{path}: overlapping hunks")
        if anchor > len(old_lines):
            raise ContextMismatch(f"{path}: hunk starts beyond end of file")
        out.extend(old_lines[cursor:anchor])
        cursor = anchor
        for tag, text in hunk.lines:
            if tag == "+":
                out.append(text)
                continue
            if cursor >= len(old_lines):
                raise ContextMismatch(f"{path}: file ends inside hunk")
            if old_lines[cursor] != text:
                raise ContextMismatch(
                    f"{path}:{cursor + 1}: expected {text!r}, "
                    f"found {old_lines[cursor]!r}"
                )
            cursor += 1
            if tag == " ":
                out.append(text)
    out.extend(old_lines[cursor:])
    return "".join(out)


def apply_diff(diff: UnifiedDiff, old: FileSet | FileEntry | str):
    """Apply a diff to a snapshot, returning the patched snapshot.

    Accepts a FileSet (returns a FileSet) or, for single-file diffs, a
    FileEntry or raw string (returns the same kind). Any disagreement with
    the expected old content raises ContextMismatch.
    """
    if isinstance(old, str):
        if len(diff.files) != 1:
            raise ValueError("raw-text apply needs a single-file diff")
        fd = diff.files[0]
        if fd.old_path is None or fd.new_path is None:
            raise ContextMismatch("cannot apply a creation/deletion to raw text")
        return _apply_hunks(old, fd.hunks, fd.old_path)
    if isinstance(old, FileEntry):
        patched = apply_diff(diff, FileSet((old,)))
        if len(patched) != 1:
            raise ContextMismatch("diff did not leave exactly one file")
        return patched.entries[0]

    working: dict[str, str] = {e.path: e.content for e in old}
    for fd in diff.files:
        if fd.old_path is None:
            assert fd.new_path is not None
            if fd.new_path in working:
                raise ContextMismatch(f"cannot create existing file {fd.new_path}")
            parts: list[str] = []
            for hunk in fd.hunks:
                for tag, text in hunk.lines:
                    if tag != "+":
                        raise ContextMismatch(
                            f"{fd.new_path}: creation diff carries old lines"
                        )
                    parts.append(text)
            working[fd.new_path] = "".join(parts)
        elif fd.new_path is None:
            existing = working.get(fd.old_path)
            if existing is None:
                raise ContextMismatch(f"cannot delete missing file {fd.old_path}")
            expected: list[str] = []
            for hunk in fd.hunks:
                for tag, text in hunk.lines:
                    if tag != "-":
                        raise ContextMismatch(
                            f"{fd.old_path}: deletion diff carries new lines"
                        )
                    expected.append(text)
            if existing != "".join(expected):
                raise ContextMismatch(
                    f"{fd.old_path}: content differs from the deletion diff"
                )
            del working[fd.old_path]
        else:
            existing = working.get(fd.old_path)
            if existing is None:
                raise ContextMismatch(f"missing file {fd.old_path}")
            patched = _apply_hunks(existing, fd.hunks, fd.old_path)
            del working[fd.old_path]
            working[fd.new_path] = patched
    return FileSet.from_pairs(working.items())


@dataclass(frozen=True)
class ChangeBlock:
    """A maximal run of consecutive changed lines.

    Ranges are 1-based inclusive (first, last). A pure insertion has an
    empty removed side and anchors old_range at the line it precedes; a
    pure deletion mirrors that on the new side. Line texts are stored
    without their trailing newline.
    """

    old_range: tuple[int, int]
    new_range: tuple[int, int]
    removed: tuple[str, ...]
    added: tuple[str, ...]

    @property
    def kind(self) -> str:
        if self.removed and self.added:
            return "replace"
        return "delete" if self.removed else "insert"

    def overlaps_old(self, other: "ChangeBlock") -> bool:
        a_lo, a_hi = self.old_range
        b_lo, b_hi = other.old_range
        return a_lo <= b_hi and b_lo <= a_hi


def _chomp(text: str) -> str:
    return text[:-1] if text.endswith("\n") else text


def change_blocks(
    old: FileEntry | str, new: FileEntry | str
) -> tuple[ChangeBlock, ...]:
    """Group a file pair's edits into maximal consecutive-change blocks."""
    old_text = old.content if isinstance(old, FileEntry) else old
    new_text = new.content if isinstance(new, FileEntry) else new
    script = myers_diff(split_lines(old_text), split_lines(new_text))
    blocks: list[ChangeBlock] = []
    old_no = new_no = 0
    ops = script.ops
    i = 0
    while i < len(ops):
        op = ops[i]
        if op.kind == KEEP:
            old_no += 1
            new_no += 1
            i += 1
            continue
        anchor_old = old_no
        anchor_new = new_no
        removed: list[str] = []
        added: list[str] = []
        first_old = first_new = 0
        while i < len(ops) and ops[i].kind != KEEP:
            if ops[i].kind == DELETE:
                old_no += 1
                if not removed:
                    first_old = old_no
                removed.append(_chomp(ops[i].text))
            else:
                new_no += 1
                if not added:
                    first_new = new_no
                added.append(_chomp(ops[i].text))
            i += 1
        old_range = (first_old, old_no) if removed else (anchor_old + 1, anchor_old + 1)
        new_range = (first_new, new_no) if added else (anchor_new + 1, anchor_new + 1)
        blocks.append(
            ChangeBlock(old_range, new_range, tuple(removed), tuple(added))
        )
    return tuple(blocks)


def blocks_from_sets(
    old: FileSet, new: FileSet, paths: Iterable[str] | None = None
) -> dict[str, tuple[ChangeBlock, ...]]:
    """Per-path change blocks between two snapshots.

    Paths present on one side only diff against the empty file, so a whole
    added or removed file becomes a single block.
    """
    if paths is None:
        paths = sorted(set(old.paths) | set(new.paths))
    result: dict[str, tuple[ChangeBlock, ...]] = {}
    for path in paths:
        old_entry = old.get(path)
        new_entry = new.get(path)
        old_text = old_entry.content if old_entry else ""
        new_text = new_entry.content if new_entry else ""
        result[path] = change_blocks(old_text, new_text)
    return result
