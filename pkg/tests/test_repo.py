"""Git snapshot and cross-version diff extraction."""

import pytest

from diffmigrate.errors import IoFailure, NotARepository, UnresolvedRef
from diffmigrate.files import FileFilter
from diffmigrate.repo import (
    RepoRef,
    ensure_repository,
    library_diff,
    resolve_commit,
    snapshot,
)


def test_reporef_normalizes_path_and_rejects_empty_ref(tmp_path):
    ref = RepoRef(str(tmp_path), "HEAD")
    assert ref.repo_path == tmp_path
    with pytest.raises(ValueError):
        RepoRef(tmp_path, "")


def test_ensure_repository_rejects_plain_dir(tmp_path):
    with pytest.raises(NotARepository):
        ensure_repository(tmp_path)


def test_ensure_repository_rejects_missing_dir(tmp_path):
    with pytest.raises(NotARepository):
        ensure_repository(tmp_path / "nope")


def test_resolve_commit_full_id(make_repo):
    repo = make_repo([{"a.txt": "one\n"}])
    commit = resolve_commit(RepoRef(repo, "HEAD"))
    assert len(commit) == 40
    assert commit == resolve_commit(RepoRef(repo, "main"))


def test_resolve_commit_unknown_ref(make_repo):
    repo = make_repo([{"a.txt": "one\n"}])
    with pytest.raises(UnresolvedRef):
        resolve_commit(RepoRef(repo, "no-such-tag"))


def test_snapshot_reads_tracked_text_files(make_repo):
    repo = make_repo([{"a.txt": "one\n", "sub/b.py": "x = 1\n"}])
    fs = snapshot(RepoRef(repo, "HEAD"))
    assert fs.paths == ("a.txt", "sub/b.py")
    assert fs.get("sub/b.py").content == "x = 1\n"


def test_snapshot_sees_the_named_commit_not_head(make_repo):
    repo = make_repo([{"a.txt": "v1\n"}, {"a.txt": "v2\n"}])
    first = resolve_commit(RepoRef(repo, "HEAD~1"))
    fs = snapshot(RepoRef(repo, first))
    assert fs.get("a.txt").content == "v1\n"


def test_snapshot_applies_filter(make_repo):
    repo = make_repo([{"a.py": "1\n", "b.txt": "2\n"}])
    fs = snapshot(RepoRef(repo, "HEAD"), FileFilter(include=("*.py",)))
    assert fs.paths == ("a.py",)


def test_snapshot_skips_binary_blobs(make_repo, caplog):
    repo = make_repo([{"data.bin": b"\x00\x01", "ok.txt": "fine\n"}])
    with caplog.at_level("WARNING"):
        fs = snapshot(RepoRef(repo, "HEAD"))
    assert fs.paths == ("ok.txt",)
    assert any("data.bin" in r.message for r in caplog.records)


def test_library_diff_between_commits(make_repo):
    repo = make_repo(
        [
            {"mod.py": "def f():\n    return 1\n"},
            {"mod.py": "def f():\n    return 2\n"},
        ]
    )
    diff = library_diff(RepoRef(repo, "HEAD~1"), RepoRef(repo, "HEAD"))
    assert len(diff.files) == 1
    assert diff.files[0].path == "mod.py"
    from diffmigrate.diffs import render_diff

    text = render_diff(diff)
    assert "-    return 1" in text
    assert "+    return 2" in text


def test_library_diff_rename_is_delete_plus_add(make_repo):
    repo = make_repo(
        [{"old.py": "same\n"}, {"old.py": None, "new.py": "same\n"}]
    )
    diff = library_diff(RepoRef(repo, "HEAD~1"), RepoRef(repo, "HEAD"))
    pairs = {(fd.old_path, fd.new_path) for fd in diff.files}
    assert ("old.py", None) in pairs
    assert (None, "new.py") in pairs


def test_library_diff_empty_filtered_trees_warns(make_repo, caplog):
    repo = make_repo([{"a.txt": "1\n"}, {"a.txt": "2\n"}])
    only_rs = FileFilter(include=("*.rs",))
    with caplog.at_level("WARNING"):
        diff = library_diff(
            RepoRef(repo, "HEAD~1"), RepoRef(repo, "HEAD"), only_rs
        )
    assert not diff
    assert any("empty" in r.message.lower() for r in caplog.records)


def test_library_diff_identical_trees_is_empty(make_repo):
    repo = make_repo([{"a.txt": "same\n"}, {"b.txt": "added\n"}])
    only_a = FileFilter(include=("a.txt",))
    diff = library_diff(RepoRef(repo, "HEAD~1"), RepoRef(repo, "HEAD"), only_a)
    assert not diff


def test_snapshot_missing_path_inside_repo_fails_cleanly(make_repo):
    repo = make_repo([{"a.txt": "x\n"}])
    with pytest.raises(UnresolvedRef):
        snapshot(RepoRef(repo, "deadbeef" * 5))


def test_git_failure_carries_stderr(make_repo):
    repo = make_repo([{"a.txt": "x\n"}])
    from diffmigrate.repo import _git

    with pytest.raises(IoFailure) as exc_info:
        _git(repo, "cat-file", "-p", "not-an-object")
    assert "cat-file" in str(exc_info.value)
