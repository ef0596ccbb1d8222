"""File snapshot, glob filter, and text decoding behavior."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffmigrate.files import FileEntry, FileFilter, FileSet, decode_text


def test_decode_text_accepts_utf8():
    assert decode_text("héllo\n".encode("utf-8")) == "héllo\n"


def test_decode_text_rejects_nul_bytes():
    assert decode_text(b"abc\x00def") is None


def test_decode_text_rejects_invalid_utf8():
    assert decode_text(b"\xff\xfe\xc0") is None


def test_decode_text_empty_is_text():
    assert decode_text(b"") == ""


def test_entry_line_count_counts_final_partial_line():
    assert FileEntry("a.txt", "one\ntwo\n").line_count == 2
    assert FileEntry("a.txt", "one\ntwo").line_count == 2
    assert FileEntry("a.txt", "").line_count == 0


def test_entry_byte_size_is_utf8_length():
    assert FileEntry("a.txt", "héllo").byte_size == 6


def test_bare_pattern_matches_basename_at_any_depth():
    f = FileFilter(include=("*.py",))
    assert f.matches("top.py")
    assert f.matches("pkg/sub/deep.py")
    assert not f.matches("pkg/readme.txt")


def test_slash_pattern_anchors_to_full_path():
    f = FileFilter(include=("pkg/*.py",))
    assert f.matches("pkg/mod.py")
    assert not f.matches("pkg/sub/mod.py")
    assert not f.matches("other/mod.py")


def test_double_star_crosses_directories():
    f = FileFilter(include=("src/**/*.py",))
    assert f.matches("src/a.py")
    assert f.matches("src/deep/er/a.py")
    assert not f.matches("lib/a.py")


def test_question_mark_stays_within_segment():
    f = FileFilter(include=("a?c.txt",))
    assert f.matches("abc.txt")
    assert not f.matches("a/c.txt")


def test_character_class_passthrough():
    f = FileFilter(include=("v[12].txt",))
    assert f.matches("v1.txt")
    assert f.matches("v2.txt")
    assert not f.matches("v3.txt")


def test_exclusion_beats_inclusion():
    f = FileFilter(include=("*.py",), exclude=("test_*.py",))
    assert f.matches("mod.py")
    assert not f.matches("pkg/test_mod.py")


def test_empty_include_means_everything():
    f = FileFilter()
    assert f.matches("anything/at/all.bin")


def test_filters_with_same_patterns_are_equal():
    assert FileFilter(include=("*.py",)) == FileFilter(include=("*.py",))
    assert FileFilter(include=("*.py",)) != FileFilter(include=("*.rs",))


def test_fileset_sorts_entries_by_path():
    fs = FileSet.from_pairs([("b.txt", "B"), ("a.txt", "A")])
    assert fs.paths == ("a.txt", "b.txt")


def test_fileset_rejects_duplicate_paths():
    with pytest.raises(ValueError):
        FileSet.from_pairs([("a.txt", "1"), ("a.txt", "2")])


def test_fileset_lookup_and_membership():
    fs = FileSet.from_pairs([("a.txt", "A")])
    assert "a.txt" in fs
    assert fs.get("a.txt").content == "A"
    assert fs.get("missing.txt") is None
    assert len(fs) == 1


def test_fileset_total_bytes_sums_utf8():
    fs = FileSet.from_pairs([("a", "xy"), ("b", "é")])
    assert fs.total_bytes == 4


def test_fileset_filtered_drops_nonmatching():
    fs = FileSet.from_pairs([("a.py", "1"), ("b.txt", "2")])
    only_py = fs.filtered(FileFilter(include=("*.py",)))
    assert only_py.paths == ("a.py",)


def test_from_dir_reads_text_and_skips_binary(tmp_path, caplog):
    (tmp_path / "keep.py").write_text("x = 1\n")
    (tmp_path / "skip.bin").write_bytes(b"\x00\x01\x02")
    sub = tmp_path / "sub"
    sub.mkdir()
    (sub / "nested.py").write_text("y = 2\n")
    fs = FileSet.from_dir(tmp_path)
    assert fs.paths == ("keep.py", "sub/nested.py")


def test_from_dir_applies_filter(tmp_path):
    (tmp_path / "keep.py").write_text("x\n")
    (tmp_path / "drop.txt").write_text("y\n")
    fs = FileSet.from_dir(tmp_path, FileFilter(include=("*.py",)))
    assert fs.paths == ("keep.py",)


@given(
    st.lists(
        st.tuples(
            st.text(
                alphabet=st.characters(
                    whitelist_categories=("Ll",), max_codepoint=0x7F
                ),
                min_size=1,
                max_size=8,
            ),
            st.text(max_size=20),
        ),
        max_size=6,
        unique_by=lambda pair: pair[0],
    )
)
def test_fileset_iteration_matches_paths(pairs):
    fs = FileSet.from_pairs(pairs)
    assert tuple(e.path for e in fs) == fs.paths
    assert sorted(fs.paths) == list(fs.paths)
