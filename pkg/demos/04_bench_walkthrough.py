"""The diff-comprehension benchmark, end to end with a simulated model.

Questions pair five small functions with a rewrite in which a known
number hide a bug; a model is asked for that count. Ground truth is
exact by construction, so scoring needs no human in the loop. Here a
noisy simulated model stands in for the real thing.

Run with: python demos/04_bench_walkthrough.py
"""

import random

from diffmigrate import (
    FunctionCorpus,
    generate_questions,
    results_to_csv,
    score,
    weighted_answer,
)
from diffmigrate.prompts import DIFF_PAIR_TRIAL, build_bench_prompt


def simulated_model(question, rng):
    """Answer token probabilities for a model that is right 60% of the time.

    The rest of its probability mass drifts to the neighbouring counts,
    the way real answer distributions spread.
    """
    truth = question.true_count
    probs = {}
    probs[str(truth)] = 0.6
    for neighbour in (truth - 1, truth + 1):
        if 0 <= neighbour <= 5:
            probs[str(neighbour)] = probs.get(str(neighbour), 0.0) + 0.15
    # a sliver of mass goes to a non-digit token now and then
    if rng.random() < 0.3:
        probs[" maybe"] = 0.05
    return tuple(probs.items())


def main():
    corpus = FunctionCorpus.bundled()
    print(
        f"bundled corpus: {len(corpus.items)} function pairs, "
        f"{len(corpus.erroneous_pool)} with hidden bugs"
    )

    # 1. Questions are generated deterministically from a seed.
    questions = generate_questions(corpus, 12, seed=404)
    sample = questions[0]
    print(f"first question hides {sample.true_count} bugs; its diff starts:")
    print("\n".join(sample.file_c.splitlines()[:6]))
    print()

    # 2. Each question becomes a prompt; the diff_pair trial shows the
    #    original file and the unified diff of the stranger's rewrite.
    system, user = build_bench_prompt(DIFF_PAIR_TRIAL, sample.file_a, sample.file_c)
    print(f"prompt: {len(system)} chars of system text, {len(user)} of user text")
    print()

    # 3. The probability-weighted answer reads the whole answer
    #    distribution instead of a single sampled token.
    rng = random.Random(7)
    answers = [weighted_answer(simulated_model(q, rng)) for q in questions]
    for question, answer in zip(questions[:4], answers[:4]):
        print(f"truth {question.true_count}, weighted answer {answer:.3f}")
    print()

    # 4. Scoring reports MAE and exact-count accuracy, excluding invalid
    #    answers. Note how the weighted answer recovers the truth even
    #    though 40% of the simulated mass sits on the wrong counts.
    outcome = score(questions, answers)
    print(
        f"MAE {outcome.mae:.3f}, accuracy {outcome.accuracy:.3f}, "
        f"{outcome.answered}/{outcome.total} answered"
    )
    print()
    print(results_to_csv([("simulated", "diff pair", outcome.mae, outcome.accuracy)]))


if __name__ == "__main__":
    main()
