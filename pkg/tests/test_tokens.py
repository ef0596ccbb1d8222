"""Token counting: heuristic, BPE vocabulary, context fitting."""

import base64

import pytest
from hypothesis import given
from hypothesis import strategies as st

from diffmigrate.errors import VocabLoadError
from diffmigrate.tokens import (
    HEURISTIC,
    TokenizerSpec,
    count_tokens,
    fits_context,
    load_vocab,
)


def test_heuristic_rounds_bytes_up():
    assert count_tokens("") == 0
    assert count_tokens("a") == 1
    assert count_tokens("abcd") == 1
    assert count_tokens("abcde") == 2
    assert count_tokens("x" * 8) == 2
    assert count_tokens("x" * 9) == 3


def test_heuristic_counts_utf8_bytes_not_chars():
    # é is two bytes; three of them make six bytes, two tokens
    assert count_tokens("ééé") == 2


@given(st.text(max_size=200))
def test_heuristic_matches_ceiling_formula(text):
    n = len(text.encode("utf-8"))
    expected = 0 if n == 0 else -(-n // 4)
    assert count_tokens(text) == expected


def _write_vocab(tmp_path, entries, name="vocab.txt"):
    lines = [
        f"{base64.b64encode(token).decode()} {rank}" for token, rank in entries
    ]
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n")
    return path


def test_vocab_loads_base64_rank_lines(tmp_path):
    path = _write_vocab(tmp_path, [(b"a", 0), (b"ab", 1)])
    vocab = load_vocab(path)
    assert vocab == {b"a": 0, b"ab": 1}


def test_vocab_skips_blank_lines(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text(f"{base64.b64encode(b'a').decode()} 0\n\n\n")
    assert load_vocab(path) == {b"a": 0}


def test_vocab_missing_file_raises(tmp_path):
    with pytest.raises(VocabLoadError):
        load_vocab(tmp_path / "absent.txt")


def test_vocab_rejects_bad_base64(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("not-base64!!! 0\n")
    with pytest.raises(VocabLoadError):
        load_vocab(path)


def test_vocab_rejects_negative_rank(tmp_path):
    path = _write_vocab(tmp_path, [(b"a", -1)], name="neg.txt")
    with pytest.raises(VocabLoadError):
        load_vocab(path)


def test_vocab_rejects_extra_fields(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text(f"{base64.b64encode(b'a').decode()} 0 junk\n")
    with pytest.raises(VocabLoadError):
        load_vocab(path)


def test_vocab_rejects_empty_file(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("\n\n")
    with pytest.raises(VocabLoadError):
        load_vocab(path)


def test_bpe_merges_lowest_rank_first(tmp_path):
    # 'ab' outranks 'bc', so "abc" becomes ['ab', 'c']
    path = _write_vocab(tmp_path, [(b"ab", 0), (b"bc", 1)])
    spec = TokenizerSpec(kind="bpe_vocab", vocab_path=path)
    assert count_tokens("abc", spec) == 2


def test_bpe_merges_all_occurrences_per_sweep(tmp_path):
    path = _write_vocab(tmp_path, [(b"ab", 0)])
    spec = TokenizerSpec(kind="bpe_vocab", vocab_path=path)
    assert count_tokens("abab", spec) == 2
    assert count_tokens("ababab", spec) == 3


def test_bpe_builds_longer_tokens_from_pairs(tmp_path):
    path = _write_vocab(tmp_path, [(b"ab", 0), (b"abab", 1)])
    spec = TokenizerSpec(kind="bpe_vocab", vocab_path=path)
    assert count_tokens("abab", spec) == 1


def test_bpe_without_merges_counts_bytes(tmp_path):
    path = _write_vocab(tmp_path, [(b"zz", 0)])
    spec = TokenizerSpec(kind="bpe_vocab", vocab_path=path)
    assert count_tokens("abc", spec) == 3


def test_bpe_empty_text_is_zero(tmp_path):
    path = _write_vocab(tmp_path, [(b"ab", 0)])
    spec = TokenizerSpec(kind="bpe_vocab", vocab_path=path)
    assert count_tokens("", spec) == 0


def test_spec_validates_kind_and_vocab():
    with pytest.raises(ValueError):
        TokenizerSpec(kind="magic")
    with pytest.raises(ValueError):
        TokenizerSpec(kind="bpe_vocab")


def test_spec_default_names():
    assert HEURISTIC.name == "bytes/4"
    spec = TokenizerSpec(kind="bpe_vocab", vocab_path="some/dir/cl100k.txt")
    assert spec.name == "cl100k"


def test_fits_context_margins():
    fit = fits_context(100, 128)
    assert fit.fits and fit.margin == 28
    tight = fits_context(128, 128)
    assert tight.fits and tight.margin == 0
    over = fits_context(200, 128)
    assert not over.fits and over.margin == -72


def test_fits_context_rejects_bad_window():
    with pytest.raises(ValueError):
        fits_context(10, 0)
    with pytest.raises(ValueError):
        fits_context(-1, 10)
