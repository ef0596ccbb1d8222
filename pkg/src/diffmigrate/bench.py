"""A comprehension benchmark for diffs: can a model count injected bugs?

Each question shows five functions (file A), a rewrite of them by
"someone else" in which a known number contain an error (file B), and
asks for that count. One trial shows A and B side by side; the other
shows A and the unified diff of A versus B. Ground truth is exact by
construction, so the benchmark needs no human grading.
"""

from __future__ import annotations

import ast
import csv
import io
import json
import logging
import random
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .diffs import render_unified
from .errors import CorpusTooSmall, LengthMismatch
from .files import FileEntry

logger = logging.getLogger(__name__)

FUNCTIONS_PER_FILE = 5
MAX_ERRORS = 5
DIGIT_MASS_FLOOR = 0.5


@dataclass(frozen=True)
class CorpusItem:
    """One function in two versions: the original and a stranger's rewrite.

    The rewrite either works (a stylistic twin) or hides a bug; erroneous
    says which. Sources must be bare implementations with no docstrings,
    so nothing but the code itself gives the bug away.
    """

    id: str
    correct: str
    alternate: str
    erroneous: bool

    def __post_init__(self):
        if not self.id:
            raise ValueError("corpus item id must be non-empty")
        if not self.correct.strip() or not self.alternate.strip():
            raise ValueError(f"corpus item {self.id}: both versions must be non-empty")


def has_docstring(source: str) -> bool:
    """True if any function in the source opens with a string literal."""
    try:
        tree = ast.parse(source)
    except SyntaxError:
        return False
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            if ast.get_docstring(node) is not None:
                return True
    return False


class FunctionCorpus:
    """The pool of function pairs questions are sampled from."""

    def __init__(self, items: Iterable[CorpusItem]):
        self.items: tuple[CorpusItem, ...] = tuple(items)
        ids = [item.id for item in self.items]
        if len(ids) != len(set(ids)):
            raise ValueError("corpus item ids must be unique")

    @classmethod
    def load_jsonl(cls, path: Path) -> "FunctionCorpus":
        items = []
        for lineno, line in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1
        ):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
                items.append(
                    CorpusItem(
                        id=raw["id"],
                        correct=raw["correct"],
                        alternate=raw["alternate"],
                        erroneous=bool(raw["erroneous"]),
                    )
                )
            except (json.JSONDecodeError, KeyError) as exc:
                raise ValueError(f"{path}:{lineno}: bad corpus line: {exc}") from exc
        return cls(items)

    @classmethod
    def bundled(cls) -> "FunctionCorpus":
        """The corpus shipped with the package."""
        text = (
            resources.files("diffmigrate")
            .joinpath("data/corpus.jsonl")
            .read_text(encoding="utf-8")
        )
        items = [
            CorpusItem(
                id=raw["id"],
                correct=raw["correct"],
                alternate=raw["alternate"],
                erroneous=bool(raw["erroneous"]),
            )
            for raw in (json.loads(l) for l in text.splitlines() if l.strip())
        ]
        return cls(items)

    @property
    def erroneous_pool(self) -> tuple[CorpusItem, ...]:
        return tuple(item for item in self.items if item.erroneous)

    @property
    def benign_pool(self) -> tuple[CorpusItem, ...]:
        return tuple(item for item in self.items if not item.erroneous)


@dataclass(frozen=True)
class BenchQuestion:
    """One generated question with its ground truth."""

    file_a: str
    file_b: str
    file_c: str  # unified diff of file_a -> file_b
    true_count: int
    seed: int
    function_ids: tuple[str, ...] = ()

    def __post_init__(self):
        if not 0 <= self.true_count <= MAX_ERRORS:
            raise ValueError("true_count must be within 0..5")

    def to_json(self) -> str:
        return json.dumps(
            {
                "file_a": self.file_a,
                "file_b": self.file_b,
                "file_c": self.file_c,
                "true_count": self.true_count,
                "seed": self.seed,
                "function_ids": list(self.function_ids),
            }
        )

    @classmethod
    def from_json(cls, line: str) -> "BenchQuestion":
        raw = json.loads(line)
        return cls(
            file_a=raw["file_a"],
            file_b=raw["file_b"],
            file_c=raw["file_c"],
            true_count=int(raw["true_count"]),
            seed=int(raw["seed"]),
            function_ids=tuple(raw.get("function_ids", ())),
        )


def _join_functions(sources: Iterable[str]) -> str:
    parts = [src.strip("\n") for src in sources]
    return "\n\n".join(parts) + "\n"


def _build_question(corpus: FunctionCorpus, seed: int) -> BenchQuestion:
    rng = random.Random(seed)
    k = rng.randint(0, MAX_ERRORS)
    buggy = rng.sample(corpus.erroneous_pool, k)
    benign = rng.sample(corpus.benign_pool, FUNCTIONS_PER_FILE - k)
    chosen = list(buggy) + list(benign)
    rng.shuffle(chosen)
    file_a = _join_functions(item.correct for item in chosen)
    file_b = _join_functions(item.alternate for item in chosen)
    file_c = render_unified(
        FileEntry("functions.py", file_a), FileEntry("functions.py", file_b)
    )
    return BenchQuestion(
        file_a=file_a,
        file_b=file_b,
        file_c=file_c,
        true_count=k,
        seed=seed,
        function_ids=tuple(item.id for item in chosen),
    )


def generate_questions(
    corpus: FunctionCorpus, count: int, seed: int
) -> list[BenchQuestion]:
    """Deterministically generate questions from a corpus and a seed.

    Per question: the error count k is uniform over 0..5, k buggy pairs
    and 5-k benign pairs are drawn without replacement, and the five
    functions are shuffled so error positions carry no signal.
    """
    if count < 0:
        raise ValueError("count cannot be negative")
    need = FUNCTIONS_PER_FILE
    if len(corpus.erroneous_pool) < need or len(corpus.benign_pool) < need:
        raise CorpusTooSmall(
            f"need at least {need} erroneous and {need} benign items; "
            f"corpus has {len(corpus.erroneous_pool)} and {len(corpus.benign_pool)}"
        )
    master = random.Random(seed)
    return [_build_question(corpus, master.randrange(2**63)) for _ in range(count)]


def save_questions(questions: Iterable[BenchQuestion], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for question in questions:
            fh.write(question.to_json() + "\n")


def load_questions(path: Path) -> list[BenchQuestion]:
    return [
        BenchQuestion.from_json(line)
        for line in Path(path).read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]


def weighted_answer(
    token_probs: Sequence[tuple[str, float]],
    *,
    digit_mass_floor: float = DIGIT_MASS_FLOOR,
) -> float | None:
    """Probability-weighted count from the answer position's token probs.

    Sums t * p(t) over the digit tokens 0..5 after renormalizing their
    mass. When digits hold less than the floor of the total mass, the
    answer is judged invalid (None): the model was not really answering
    in digits.
    """
    digit_mass = 0.0
    weighted = 0.0
    total_mass = 0.0
    for token, prob in token_probs:
        total_mass += prob
        stripped = token.strip()
        if stripped.isdigit() and len(stripped) == 1 and 0 <= int(stripped) <= 5:
            digit_mass += prob
            weighted += int(stripped) * prob
    if digit_mass <= 0 or total_mass <= 0:
        return None
    if digit_mass / total_mass < digit_mass_floor:
        return None
    return weighted / digit_mass


_INT_ANSWER_RE = re.compile(r"-?\d+")


def parse_integer_answer(text: str) -> int | None:
    """First integer in a free-text reply, if it is a legal count."""
    match = _INT_ANSWER_RE.search(text)
    if match is None:
        return None
    value = int(match.group())
    if 0 <= value <= MAX_ERRORS:
        return value
    return None


@dataclass(frozen=True)
class BenchScore:
    """Aggregate quality of one model's answers over a question set."""

    mae: float | None
    accuracy: float | None
    invalid_rate: float
    answered: int
    total: int


def _round_half_up(value: float) -> int:
    return int(value + 0.5) if value >= 0 else -int(-value + 0.5)


def score(
    questions: Sequence[BenchQuestion] | Sequence[int],
    answers: Sequence[float | None],
) -> BenchScore:
    """MAE and accuracy of answers against ground truth.

    Invalid answers (None) are excluded from MAE and accuracy and
    reported through invalid_rate. Accuracy counts an answer correct when
    it rounds (half up) to the true count.
    """
    truths = [
        q.true_count if isinstance(q, BenchQuestion) else int(q) for q in questions
    ]
    if len(truths) != len(answers):
        raise LengthMismatch(
            f"{len(truths)} questions but {len(answers)} answers"
        )
    errors = []
    hits = 0
    for truth, answer in zip(truths, answers):
        if answer is None:
            continue
        errors.append(abs(answer - truth))
        if _round_half_up(answer) == truth:
            hits += 1
    answered = len(errors)
    total = len(truths)
    return BenchScore(
        mae=sum(errors) / answered if answered else None,
        accuracy=hits / answered if answered else None,
        invalid_rate=(total - answered) / total if total else 0.0,
        answered=answered,
        total=total,
    )


RESULTS_CSV_COLUMNS = ("tested", "algorithm", "MAE", "accuracy")


def results_to_csv(rows: Sequence[tuple[str, str, float | None, float | None]]) -> str:
    """Result-table CSV: one row per (model, trial) cell."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(RESULTS_CSV_COLUMNS)
    for tested, algorithm, mae, accuracy in rows:
        writer.writerow(
            [
                tested,
                algorithm,
                "" if mae is None else f"{mae:.3f}",
                "" if accuracy is None else f"{accuracy:.3f}",
            ]
        )
    return buf.getvalue()
