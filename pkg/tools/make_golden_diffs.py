#!/usr/bin/env python3
"""Regenerate the golden unified-diff fixtures under tests/data/golden/.

Each case runs the system diff tool in unified mode over a curated file
pair, asserts our renderer produces byte-identical output, and writes
old/new/expected plus a small metadata file. A case whose rendering
drifts from the reference tool fails the whole run, so the checked-in
fixtures are identity-verified at generation time.

Usage: python3 tools/make_golden_diffs.py
"""

from __future__ import annotations

import json
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "src"))

from diffmigrate.diffs import compute_diff, render_diff, render_unified  # noqa: E402
from diffmigrate.files import FileSet  # noqa: E402

GOLDEN_DIR = REPO / "tests" / "data" / "golden"


def _para(lines):
    return "".join(line + "\n" for line in lines)


_PROSE = [
    "The quick brown fox",
    "jumps over the lazy dog",
    "while the cat watches",
    "from a sunny windowsill",
    "and the birds sing",
    "in the old oak tree",
    "beside the garden wall",
    "where roses climb",
    "toward the summer sky",
    "every afternoon",
    "until the light fades",
    "and evening settles in",
]

_CODE = [
    "import os",
    "import sys",
    "",
    "def main():",
    "    args = sys.argv[1:]",
    "    for name in args:",
    "        print(name)",
    "    return 0",
    "",
    "if __name__ == '__main__':",
    "    sys.exit(main())",
]


def _replace(lines, index, new_line):
    out = list(lines)
    out[index] = new_line
    return out


def _insert(lines, index, *new_lines):
    out = list(lines)
    out[index:index] = list(new_lines)
    return out


def _delete(lines, index, count=1):
    out = list(lines)
    del out[index : index + count]
    return out


# name, path, old text (None = absent file), new text, context width
CASES = [
    (
        "replace_mid",
        "notes.txt",
        _para(_PROSE),
        _para(_replace(_PROSE, 5, "in the young birch tree")),
        3,
    ),
    (
        "insert_mid",
        "notes.txt",
        _para(_PROSE),
        _para(_insert(_PROSE, 6, "past the mossy fountain")),
        3,
    ),
    (
        "delete_mid",
        "notes.txt",
        _para(_PROSE),
        _para(_delete(_PROSE, 7)),
        3,
    ),
    (
        "insert_top",
        "notes.txt",
        _para(_PROSE),
        _para(["A new opening line"] + _PROSE),
        3,
    ),
    (
        "delete_top",
        "notes.txt",
        _para(_PROSE),
        _para(_PROSE[1:]),
        3,
    ),
    (
        "append_eof",
        "notes.txt",
        _para(_PROSE),
        _para(_PROSE + ["one more closing line"]),
        3,
    ),
    (
        "delete_eof",
        "notes.txt",
        _para(_PROSE),
        _para(_PROSE[:-1]),
        3,
    ),
    (
        "no_newline_old",
        "frag.txt",
        "alpha\nbeta\ngamma",
        "alpha\nbeta\ngamma\ndelta\n",
        3,
    ),
    (
        "no_newline_new",
        "frag.txt",
        "alpha\nbeta\ngamma\n",
        "alpha\nbeta\nomega",
        3,
    ),
    (
        "no_newline_both",
        "frag.txt",
        "alpha\nbeta\ngamma",
        "alpha\nbeta\ndelta",
        3,
    ),
    (
        "empty_to_content",
        "fresh.txt",
        "",
        "first line\nsecond line\n",
        3,
    ),
    (
        "content_to_empty",
        "gone.txt",
        "first line\nsecond line\n",
        "",
        3,
    ),
    (
        "created_file",
        "pkg/new_module.py",
        None,
        _para(_CODE),
        3,
    ),
    (
        "deleted_file",
        "pkg/old_module.py",
        _para(_CODE),
        None,
        3,
    ),
    # Two changes six kept lines apart share one hunk at width 3; seven
    # apart split into two.
    (
        "hunks_merge_gap6",
        "notes.txt",
        _para(_PROSE),
        _para(_replace(_replace(_PROSE, 2, "as the dog naps"), 9, "most afternoons")),
        3,
    ),
    (
        "hunks_split_gap7",
        "notes.txt",
        _para(_PROSE),
        _para(_replace(_replace(_PROSE, 1, "leaps over the lazy dog"), 9, "most afternoons")),
        3,
    ),
    (
        "context_zero",
        "notes.txt",
        _para(_PROSE),
        _para(_replace(_PROSE, 4, "and the crickets sing")),
        0,
    ),
    (
        "context_one",
        "notes.txt",
        _para(_PROSE),
        _para(_replace(_PROSE, 4, "and the crickets sing")),
        1,
    ),
    (
        "context_five",
        "notes.txt",
        _para(_PROSE),
        _para(_replace(_PROSE, 4, "and the crickets sing")),
        5,
    ),
    # Inserting into a run of identical lines is ambiguous; the fixture
    # pins where the reference tool settles the run.
    (
        "repeated_blank_runs",
        "spaced.txt",
        "header\n\n\nbody\n\n\nfooter\n",
        "header\n\n\nbody\n\n\n\nfooter\n",
        3,
    ),
    (
        "repeated_code_blocks",
        "calc.py",
        "def add(a, b):\n    return a + b\n\n\ndef mul(a, b):\n    return a * b\n",
        "def add(a, b):\n    return a + b\n\n\ndef sub(a, b):\n    return a - b\n\n\ndef mul(a, b):\n    return a * b\n",
        3,
    ),
    (
        "interleaved_code_edit",
        "tool.py",
        _para(_CODE),
        _para(
            _insert(
                _replace(_CODE, 4, "    args = list(sys.argv[1:])"),
                7,
                "    if not args:",
                "        print('nothing to do')",
            )
        ),
        1,
    ),
    (
        "first_and_last",
        "notes.txt",
        _para(_PROSE),
        _para(
            _replace(
                _replace(_PROSE, 0, "The slow brown fox"),
                len(_PROSE) - 1,
                "and night settles in",
            )
        ),
        3,
    ),
    (
        "full_rewrite",
        "tiny.txt",
        "one\ntwo\nthree\n",
        "uno\ndos\ntres\n",
        3,
    ),
    (
        "whitespace_only",
        "ws.txt",
        "keep\nvalue = 1 \nkeep too\n",
        "keep\nvalue = 1\nkeep too\n",
        3,
    ),
]


def reference_diff(old, new, path, context):
    """Unified diff from the system tool, bytes, labels matching ours."""
    with tempfile.TemporaryDirectory() as td:
        tdp = Path(td)
        if old is None:
            old_file, old_label = "/dev/null", "/dev/null"
        else:
            p = tdp / "old_side"
            p.write_bytes(old.encode())
            old_file, old_label = str(p), f"a/{path}"
        if new is None:
            new_file, new_label = "/dev/null", "/dev/null"
        else:
            p = tdp / "new_side"
            p.write_bytes(new.encode())
            new_file, new_label = str(p), f"b/{path}"
        cmd = [
            "diff",
            "-U",
            str(context),
            "--label",
            old_label,
            "--label",
            new_label,
            old_file,
            new_file,
        ]
        proc = subprocess.run(cmd, capture_output=True)
        if proc.returncode not in (0, 1):
            raise RuntimeError(f"diff failed: {proc.stderr.decode()!r}")
        return proc.stdout.decode()


def our_diff(old, new, path, context):
    if old is None or new is None:
        old_set = FileSet.from_pairs([] if old is None else [(path, old)])
        new_set = FileSet.from_pairs([] if new is None else [(path, new)])
        return render_diff(compute_diff(old_set, new_set, context=context))
    return render_unified(old, new, context=context, path=path)


def main():
    if shutil.which("diff") is None:
        raise SystemExit("system diff tool not found")
    if GOLDEN_DIR.exists():
        shutil.rmtree(GOLDEN_DIR)
    GOLDEN_DIR.mkdir(parents=True)
    manifest = []
    failures = []
    for name, path, old, new, context in CASES:
        expected = reference_diff(old, new, path, context)
        ours = our_diff(old, new, path, context)
        if ours != expected:
            failures.append(name)
            print(f"MISMATCH {name}")
            print("--- reference ---")
            print(expected)
            print("--- ours ---")
            print(ours)
            continue
        case_dir = GOLDEN_DIR / name
        case_dir.mkdir()
        if old is not None:
            (case_dir / "old.txt").write_bytes(old.encode())
        if new is not None:
            (case_dir / "new.txt").write_bytes(new.encode())
        (case_dir / "expected.diff").write_bytes(expected.encode())
        meta = {
            "path": path,
            "context": context,
            "old_absent": old is None,
            "new_absent": new is None,
        }
        (case_dir / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
        manifest.append(name)
        print(f"ok {name}")
    if failures:
        raise SystemExit(f"{len(failures)} case(s) diverged: {failures}")
    (GOLDEN_DIR / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"{len(manifest)} golden cases written to {GOLDEN_DIR}")


if __name__ == "__main__":
    main()
