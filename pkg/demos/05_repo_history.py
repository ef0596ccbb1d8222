"""How much of a repository's history fits in a context window?

Walks a scripted repository commit by commit and measures two sizes in
tokens: the whole filtered tree, and the unified diff against the
parent. After the first commit the diff is usually far smaller, which
is the case for handing models diffs instead of trees.

Run with: python demos/05_repo_history.py
"""

import subprocess
import tempfile
from pathlib import Path

from diffmigrate import FileFilter, RepoRef, analyze, emit_csv

MODULE = "".join(f"def handler_{i}():\n    return {i}\n\n\n" for i in range(40))


def git(repo, *args):
    subprocess.run(["git", "-C", str(repo), *args], check=True, capture_output=True)


def commit_all(repo, message):
    git(repo, "add", "-A")
    git(repo, "commit", "-q", "-m", message)


def build_repo(root):
    repo = root / "service"
    repo.mkdir()
    git(repo, "init", "-q", "-b", "main")
    git(repo, "config", "user.email", "demo@example.invalid")
    git(repo, "config", "user.name", "Demo")

    # commit 1: the module lands whole
    (repo / "handlers.py").write_text(MODULE, encoding="utf-8")
    (repo / "README.md").write_text("prose that the filter will skip\n" * 20)
    commit_all(repo, "initial handlers")

    # commit 2: one function changes
    (repo / "handlers.py").write_text(
        MODULE.replace("return 7", "return 7_000"), encoding="utf-8"
    )
    commit_all(repo, "fix handler 7")

    # commit 3: one function is added
    with (repo / "handlers.py").open("a", encoding="utf-8") as fh:
        fh.write("def handler_extra():\n    return -1\n")
    commit_all(repo, "add an extra handler")
    return repo


def main():
    with tempfile.TemporaryDirectory() as scratch:
        repo = build_repo(Path(scratch))

        # only python files count toward the measurement
        points = analyze(RepoRef(repo, "HEAD"), FileFilter(include=("*.py",)))

        print(emit_csv(points))
        for point in points[1:]:
            ratio = point.diff_tokens / point.repo_tokens
            print(
                f"commit {point.commit[:8]}: the diff is "
                f"{ratio:.1%} of the tree's size"
            )


if __name__ == "__main__":
    main()
