"""Shared fixtures: throwaway git repositories and data paths."""

from __future__ import annotations

import subprocess
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"
GOLDEN_DIR = DATA_DIR / "golden"


def git(repo: Path, *args: str) -> str:
    proc = subprocess.run(
        ["git", "-C", str(repo), *args],
        capture_output=True,
        text=True,
        check=True,
    )
    return proc.stdout


@pytest.fixture
def make_repo(tmp_path):
    """Factory building a git repo from a list of commit snapshots.

    Each snapshot maps path -> content, or -> None to delete the path.
    Commit dates are fixed and increasing so history output is stable.
    """

    counter = 0

    def build(commits, *, name="fixture_repo"):
        nonlocal counter
        counter += 1
        root = tmp_path / f"{name}{counter}"
        root.mkdir()
        git(root, "init", "-q", "-b", "main")
        git(root, "config", "user.email", "tests@example.invalid")
        git(root, "config", "user.name", "Test Fixture")
        for index, snapshot in enumerate(commits):
            for rel, content in snapshot.items():
                target = root / rel
                if content is None:
                    target.unlink()
                else:
                    target.parent.mkdir(parents=True, exist_ok=True)
                    if isinstance(content, bytes):
                        target.write_bytes(content)
                    else:
                        target.write_text(content, encoding="utf-8")
            git(root, "add", "-A")
            stamp = f"2024-01-{index + 1:02d}T12:00:00+00:00"
            subprocess.run(
                ["git", "-C", str(root), "commit", "-q", "-m", f"step {index}"],
                capture_output=True,
                check=True,
                env={
                    "GIT_AUTHOR_DATE": stamp,
                    "GIT_COMMITTER_DATE": stamp,
                    "GIT_AUTHOR_NAME": "Test Fixture",
                    "GIT_AUTHOR_EMAIL": "tests@example.invalid",
                    "GIT_COMMITTER_NAME": "Test Fixture",
                    "GIT_COMMITTER_EMAIL": "tests@example.invalid",
                    "PATH": "/usr/bin:/bin:/usr/local/bin",
                    "HOME": str(root),
                },
            )
        return root

    return build
