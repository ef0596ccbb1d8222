"""Token counting for budget checks and size analyses.

Two counters are available: a bytes/4 heuristic that needs no data files,
and a real byte-pair-encoding vocabulary loaded from the common
"base64-token rank" file format. Counts feed context-window checks and the
repository-size history; they do not need to agree with any provider's
billing exactly.
"""

from __future__ import annotations

import base64
import binascii
from dataclasses import dataclass
from pathlib import Path

from .errors import VocabLoadError

BYTE_HEURISTIC = "byte_heuristic"
BPE_VOCAB = "bpe_vocab"

HEURISTIC_BYTES_PER_TOKEN = 4


@dataclass(frozen=True)
class TokenizerSpec:
    """Which counter to use and, for BPE, where its vocabulary lives."""

    kind: str = BYTE_HEURISTIC
    vocab_path: Path | None = None
    name: str = ""

    def __post_init__(self):
        if self.kind not in (BYTE_HEURISTIC, BPE_VOCAB):
            raise ValueError(f"unknown tokenizer kind: {self.kind!r}")
        if self.kind == BPE_VOCAB and self.vocab_path is None:
            raise ValueError("bpe_vocab requires vocab_path")
        if not self.name:
            default = "bytes/4" if self.kind == BYTE_HEURISTIC else Path(self.vocab_path).stem
            object.__setattr__(self, "name", default)


HEURISTIC = TokenizerSpec()


@dataclass(frozen=True)
class ContextFit:
    fits: bool
    margin: int


_vocab_cache: dict[Path, dict[bytes, int]] = {}


def load_vocab(path: Path) -> dict[bytes, int]:
    """Load a BPE vocabulary: one 'base64token rank' pair per line."""
    path = Path(path)
    cached = _vocab_cache.get(path)
    if cached is not None:
        return cached
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise VocabLoadError(f"cannot read vocabulary {path}: {exc}") from exc
    vocab: dict[bytes, int] = {}
    for lineno, line in enumerate(raw.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 2:
            raise VocabLoadError(f"{path}:{lineno}: expected 'token rank', got {line!r}")
        try:
            token = base64.b64decode(parts[0], validate=True)
            rank = int(parts[1])
        except (binascii.Error, ValueError) as exc:
            raise VocabLoadError(f"{path}:{lineno}: {exc}") from exc
        if rank < 0:
            raise VocabLoadError(f"{path}:{lineno}: negative rank")
        vocab[token] = rank
    if not vocab:
        raise VocabLoadError(f"{path}: vocabulary is empty")
    _vocab_cache[path] = vocab
    return vocab


def _bpe_count(data: bytes, vocab: dict[bytes, int]) -> int:
    if not data:
        return 0
    parts = [data[i : i + 1] for i in range(len(data))]
    while len(parts) > 1:
        best_rank = None
        best_idx = -1
        for i in range(len(parts) - 1):
            rank = vocab.get(parts[i] + parts[i + 1])
            if rank is not None and (best_rank is None or rank < best_rank):
                best_rank = rank
                best_idx = i
        if best_rank is None:
            break
        merged = parts[best_idx] + parts[best_idx + 1]
        out = []
        i = 0
        # merge every occurrence of the winning pair in one sweep
        while i < len(parts):
            if i < len(parts) - 1 and parts[i] + parts[i + 1] == merged:
                out.append(merged)
                i += 2
            else:
                out.append(parts[i])
                i += 1
        parts = out
    return len(parts)


def count_tokens(text: str, spec: TokenizerSpec = HEURISTIC) -> int:
    """Token count of text under the given tokenizer. Empty text is 0."""
    if not text:
        return 0
    data = text.encode("utf-8")
    if spec.kind == BYTE_HEURISTIC:
        return (len(data) + HEURISTIC_BYTES_PER_TOKEN - 1) // HEURISTIC_BYTES_PER_TOKEN
    vocab = load_vocab(spec.vocab_path)  # type: ignore[arg-type]
    return _bpe_count(data, vocab)


def fits_context(token_count: int, window: int) -> ContextFit:
    """Whether a prompt of token_count tokens fits a window, with margin."""
    if window <= 0:
        raise ValueError("context window must be positive")
    if token_count < 0:
        raise ValueError("token count cannot be negative")
    return ContextFit(token_count <= window, window - token_count)
