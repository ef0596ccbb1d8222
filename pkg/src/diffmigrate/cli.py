"""Command-line front end.

Subcommands: migrate, eval, bench (generate/run/score), history, cost.
Configuration comes from a TOML file plus flag overrides; flags win.
Logs go to stderr, data and reports to stdout or under --out. Exit codes:
0 success, 1 operation failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

try:
    import tomllib  # Python 3.11+
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib  # type: ignore[no-redef]

from . import bench as bench_mod
from . import evaluate, history, migrate
from .errors import ConfigError, DiffmigrateError
from .files import FileFilter, FileSet
from .llm import (
    CostTable,
    HttpProvider,
    LlmClient,
    RetryPolicy,
    TokenBudget,
    UsageLedger,
)
from .prompts import (
    CODE_PAIR_TRIAL,
    DIFF_PAIR_TRIAL,
    MigrationStrategy,
    build_bench_prompt,
    load_template_file,
)
from .repo import RepoRef
from .tokens import HEURISTIC, TokenizerSpec

logger = logging.getLogger(__name__)

_ENV_RE = re.compile(r"\$\{([A-Za-z_][A-Za-z0-9_]*)\}")


def _interpolate(value: Any, source: str) -> Any:
    if isinstance(value, str):

        def repl(match: re.Match) -> str:
            name = match.group(1)
            try:
                return os.environ[name]
            except KeyError:
                raise ConfigError(
                    f"{source}: environment variable {name} is not set"
                ) from None

        return _ENV_RE.sub(repl, value)
    if isinstance(value, dict):
        return {k: _interpolate(v, source) for k, v in value.items()}
    if isinstance(value, list):
        return [_interpolate(v, source) for v in value]
    return value


@dataclass
class Config:
    """Parsed run configuration; sections default to empty."""

    provider: dict = field(default_factory=dict)
    library: dict = field(default_factory=dict)
    job: dict = field(default_factory=dict)
    eval: dict = field(default_factory=dict)
    costs: dict = field(default_factory=dict)
    templates: dict = field(default_factory=dict)
    bench: dict = field(default_factory=dict)
    path: Path | None = None

    def cost_table(self) -> CostTable | None:
        if not self.costs:
            return None
        try:
            rates = {
                model: (float(pair[0]), float(pair[1]))
                for model, pair in self.costs.items()
            }
        except (TypeError, IndexError, ValueError) as exc:
            raise ConfigError(f"bad [costs] entry: {exc}") from exc
        return CostTable.from_per_million(rates)


_PATH_KEYS = (
    ("library", "repo"),
    ("job", "source_dir"),
    ("templates", "dir"),
    ("bench", "corpus"),
)


def load_config(path: Path) -> Config:
    """Read, interpolate, and sanity-check a TOML config file.

    Every path the file references must exist at load time; a missing
    one raises ConfigError naming the key, rather than failing later
    mid-run.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    raw = _interpolate(raw, str(path))
    config = Config(
        provider=raw.get("provider", {}),
        library=raw.get("library", {}),
        job=raw.get("job", {}),
        eval=raw.get("eval", {}),
        costs=raw.get("costs", {}),
        templates=raw.get("templates", {}),
        bench=raw.get("bench", {}),
        path=path,
    )
    for section, key in _PATH_KEYS:
        value = getattr(config, section).get(key)
        if value is not None and not Path(value).exists():
            raise ConfigError(
                f"{path}: [{section}] {key} = {value!r} does not exist"
            )
    return config


ClientFactory = Callable[[Config, str], LlmClient]


def _default_client_factory(config: Config, model: str) -> LlmClient:
    provider_cfg = config.provider
    base_url = provider_cfg.get("base_url")
    if not base_url:
        raise ConfigError("[provider] base_url is required to reach a model")
    api_key = None
    key_env = provider_cfg.get("api_key_env")
    if key_env:
        api_key = os.environ.get(key_env)
        if not api_key:
            raise ConfigError(
                f"[provider] api_key_env names {key_env}, which is not set"
            )
    budget = None
    tpm = provider_cfg.get("tokens_per_minute")
    if tpm:
        budget = TokenBudget(int(tpm))
    retry = RetryPolicy(max_retries=int(provider_cfg.get("max_retries", 3)))
    provider = HttpProvider(
        base_url,
        api_key,
        timeout=float(provider_cfg.get("timeout_s", 120.0)),
    )
    return LlmClient(
        provider,
        retry=retry,
        budget=budget,
        cost_table=config.cost_table(),
    )


def _build_filter(config: Config, args: argparse.Namespace) -> FileFilter:
    include = tuple(config.job.get("include", ()))
    exclude = list(config.job.get("exclude", ()))
    if getattr(args, "exclude", None):
        exclude.extend(args.exclude)
    try:
        return FileFilter(include=include, exclude=tuple(exclude))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_job(config: Config, args: argparse.Namespace) -> migrate.MigrationJob:
    job_cfg = config.job
    lib_cfg = config.library

    def pick(flag: str, section: dict, key: str, default=None):
        value = getattr(args, flag, None)
        if value not in (None, [], ()):
            return value
        return section.get(key, default)

    source_dir = pick("source_dir", job_cfg, "source_dir")
    dest_dir = pick("dest_dir", job_cfg, "dest_dir")
    repo = pick("lib_repo", lib_cfg, "repo")
    v_from = pick("v_from", lib_cfg, "v_from")
    v_to = pick("v_to", lib_cfg, "v_to")
    model = pick("model", config.provider, "model")
    strategy_tag = pick("strategy", job_cfg, "strategy", "with_diff")
    missing = [
        name
        for name, value in (
            ("source_dir", source_dir),
            ("dest_dir", dest_dir),
            ("library repo", repo),
            ("--v-from", v_from),
            ("--v-to", v_to),
            ("model", model),
        )
        if not value
    ]
    if missing:
        raise ConfigError(f"missing required settings: {', '.join(missing)}")
    try:
        strategy = MigrationStrategy.from_tag(strategy_tag)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    library = migrate.LibrarySpec(
        name=lib_cfg.get("name", Path(repo).name),
        alias=lib_cfg.get("alias", lib_cfg.get("name", Path(repo).name)),
        ref_from=RepoRef(Path(repo), v_from),
        ref_to=RepoRef(Path(repo), v_to),
    )
    try:
        return migrate.MigrationJob(
            source_dir=Path(source_dir),
            dest_dir=Path(dest_dir),
            files=tuple(pick("files", job_cfg, "files", ()) or ()),
            library=library,
            file_filter=_build_filter(config, args),
            strategy=strategy,
            model=model,
            runs=int(pick("runs", job_cfg, "runs", 1)),
            parallel=bool(
                args.parallel if args.parallel else job_cfg.get("parallel", False)
            ),
            die_on_error=bool(args.die if args.die else job_cfg.get("die", False)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _tokenizer_from(config: Config) -> TokenizerSpec:
    vocab = config.provider.get("vocab_path")
    if vocab:
        return TokenizerSpec(kind="bpe_vocab", vocab_path=Path(vocab))
    return HEURISTIC


def _cmd_migrate(
    args: argparse.Namespace, client_factory: ClientFactory
) -> int:
    config = load_config(args.config) if args.config else Config()
    job = _build_job(config, args)
    tokenizer = _tokenizer_from(config)
    window = config.provider.get("window_tokens")
    window = int(window) if window else None

    template = None
    templates_dir = config.templates.get("dir")
    if templates_dir:
        candidate = Path(templates_dir) / f"{job.strategy.tag}.txt"
        if candidate.is_file():
            template = load_template_file(candidate)

    if args.dry_run:
        files = migrate.load_source_files(job)
        artifact = migrate.prepare_artifact(job)
        prepared = migrate.prepare_prompts(
            job, files, artifact, template=template, tokenizer=tokenizer
        )
        rows = [
            {
                "path": p.entry.path,
                "prompt_tokens": p.prompt_token_count,
                "fits_window": (
                    p.prompt_token_count <= window if window else None
                ),
            }
            for p in prepared
        ]
        json.dump(
            {
                "dry_run": True,
                "strategy": job.strategy.tag,
                "model": job.model,
                "files": rows,
                "total_prompt_tokens": sum(r["prompt_tokens"] for r in rows),
            },
            sys.stdout,
            indent=2,
        )
        sys.stdout.write("\n")
        return 0

    client = client_factory(config, job.model)
    results = migrate.run(
        job, client, window_tokens=window, tokenizer=tokenizer, template=template
    )
    ledger_path = job.dest_dir / "usage.jsonl"
    client.ledger.save_jsonl(ledger_path)
    failed = sum(len(r.failed) for r in results)
    for result in results:
        logger.info(
            "run %d: %d files, %d failed, %d prompt tokens, %d completion tokens",
            result.run_index,
            len(result.outcomes),
            len(result.failed),
            result.prompt_tokens,
            result.completion_tokens,
        )
    print(
        json.dumps(
            {
                "runs": len(results),
                "files_per_run": len(results[0].outcomes) if results else 0,
                "failed_files": failed,
                "ledger": str(ledger_path),
                "total_cost_usd": client.ledger.total_cost(),
            },
            indent=2,
        )
    )
    return 1 if failed else 0


def _load_tree(path: str) -> FileSet:
    root = Path(path)
    if not root.is_dir():
        raise ConfigError(f"directory not found: {root}")
    return FileSet.from_dir(root)


def _cmd_eval(args: argparse.Namespace) -> int:
    original = _load_tree(args.original)
    reference = _load_tree(args.reference)
    candidates = [_load_tree(c) for c in args.candidate]
    ignore = tuple(args.ignore or ())
    per_run = [
        evaluate.match_edits(original, reference, cand, ignore_patterns=ignore)
        for cand in candidates
    ]
    cumulative = evaluate.union_runs(
        original, reference, candidates, ignore_patterns=ignore
    )
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "per_run.csv").write_text(
            evaluate.reports_to_csv(per_run), encoding="utf-8"
        )
        (out / "per_run.json").write_text(
            evaluate.reports_to_json(per_run), encoding="utf-8"
        )
        (out / "cumulative.csv").write_text(
            evaluate.reports_to_csv(cumulative), encoding="utf-8"
        )
        (out / "cumulative.json").write_text(
            evaluate.reports_to_json(cumulative), encoding="utf-8"
        )
        logger.info("reports written under %s", out)
    else:
        sys.stdout.write(evaluate.reports_to_csv(per_run))
        if len(candidates) > 1:
            sys.stdout.write(evaluate.reports_to_csv(cumulative))

    if args.run_tests:
        report = evaluate.run_tests(
            Path(args.project or args.candidate[0]),
            args.run_tests,
            timeout=args.test_timeout,
        )
        print(
            json.dumps(
                {
                    "passed": report.passed,
                    "failed": report.failed,
                    "errored": report.errored,
                    "collected": report.collected,
                    "log": str(report.raw_log),
                }
            )
        )
    return 0


def _bench_corpus(config: Config, args: argparse.Namespace) -> bench_mod.FunctionCorpus:
    corpus_path = getattr(args, "corpus", None) or config.bench.get("corpus")
    if corpus_path:
        return bench_mod.FunctionCorpus.load_jsonl(Path(corpus_path))
    return bench_mod.FunctionCorpus.bundled()


def _cmd_bench_generate(args: argparse.Namespace) -> int:
    config = load_config(args.config) if args.config else Config()
    corpus = _bench_corpus(config, args)
    questions = bench_mod.generate_questions(corpus, args.count, args.seed)
    bench_mod.save_questions(questions, Path(args.out))
    logger.info("%d questions written to %s", len(questions), args.out)
    return 0


def _cmd_bench_run(
    args: argparse.Namespace, client_factory: ClientFactory
) -> int:
    from .llm import ChatRequest

    config = load_config(args.config) if args.config else Config()
    questions = bench_mod.load_questions(Path(args.questions))
    model = args.model or config.provider.get("model")
    if not model:
        raise ConfigError("a model is required (flag --model or [provider] model)")
    client = client_factory(config, model)
    answers: list[float | None] = []
    for question in questions:
        counterpart = (
            question.file_b if args.trial == CODE_PAIR_TRIAL else question.file_c
        )
        system, user = build_bench_prompt(args.trial, question.file_a, counterpart)
        response = client.complete(
            ChatRequest(
                model=model,
                system=system,
                user=user,
                max_output_tokens=16,
                want_token_probs=True,
            ),
            case=f"bench-{question.seed}",
            method=args.trial,
        )
        if response.token_probs:
            answers.append(bench_mod.weighted_answer(response.token_probs))
        else:
            parsed = bench_mod.parse_integer_answer(response.text)
            answers.append(float(parsed) if parsed is not None else None)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", encoding="utf-8") as fh:
        for index, answer in enumerate(answers):
            fh.write(json.dumps({"index": index, "answer": answer}) + "\n")
    logger.info("%d answers written to %s", len(answers), out)
    return 0


def _cmd_bench_score(args: argparse.Namespace) -> int:
    questions = bench_mod.load_questions(Path(args.questions))
    answers: list[float | None] = []
    for line in Path(args.answers).read_text(encoding="utf-8").splitlines():
        if line.strip():
            answers.append(json.loads(line)["answer"])
    result = bench_mod.score(questions, answers)
    row = (
        args.tested or "model",
        args.algorithm or "unknown",
        result.mae,
        result.accuracy,
    )
    csv_text = bench_mod.results_to_csv([row])
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
    else:
        sys.stdout.write(csv_text)
    logger.info(
        "answered %d/%d, invalid rate %.3f",
        result.answered,
        result.total,
        result.invalid_rate,
    )
    return 0


def _cmd_history(args: argparse.Namespace) -> int:
    file_filter = None
    if args.include or args.exclude:
        file_filter = FileFilter(
            include=tuple(args.include or ()), exclude=tuple(args.exclude or ())
        )
    tokenizer = HEURISTIC
    if args.vocab:
        tokenizer = TokenizerSpec(kind="bpe_vocab", vocab_path=Path(args.vocab))
    points = history.analyze(
        RepoRef(Path(args.repo), args.ref),
        file_filter,
        tokenizer,
        first_parent=not args.no_first_parent,
    )
    csv_text = history.emit_csv(points)
    if args.out:
        Path(args.out).write_text(csv_text, encoding="utf-8")
        logger.info("%d points written to %s", len(points), args.out)
    else:
        sys.stdout.write(csv_text)
    return 0


def _cmd_cost(args: argparse.Namespace) -> int:
    ledger = UsageLedger.load_jsonl(Path(args.ledger))
    prompt_tokens, completion_tokens = ledger.total_tokens()
    summary: dict[str, Any] = {
        "records": len(ledger.records),
        "prompt_tokens": prompt_tokens,
        "completion_tokens": completion_tokens,
        "total_cost_usd": round(ledger.total_cost(), 6),
    }
    if args.by:
        summary["by_" + args.by] = {
            key: {
                "prompt_tokens": pt,
                "completion_tokens": ct,
                "cost_usd": round(cost, 6),
            }
            for key, (pt, ct, cost) in sorted(ledger.grouped(args.by).items())
        }
    print(json.dumps(summary, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffmigrate",
        description="Migrate code across breaking dependency versions "
        "with LLM assistance, and measure the result.",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    mig = sub.add_parser("migrate", help="migrate a source tree")
    mig.add_argument("--config", help="TOML configuration file")
    mig.add_argument("--source-dir")
    mig.add_argument("--dest-dir")
    mig.add_argument("--files", nargs="+", help="relative paths, in order")
    mig.add_argument("--lib-repo", help="dependency repository path")
    mig.add_argument("--v-from", help="dependency ref migrated away from")
    mig.add_argument("--v-to", help="dependency ref migrated to")
    mig.add_argument("--exclude", action="append", help="glob to skip; repeatable")
    mig.add_argument(
        "--strategy", choices=[s.value for s in MigrationStrategy]
    )
    mig.add_argument("--model")
    mig.add_argument("--runs", type=int)
    mig.add_argument("--parallel", action="store_true")
    mig.add_argument("--die", action="store_true", help="abort on first failure")
    mig.add_argument(
        "--dry-run",
        action="store_true",
        help="build prompts and count tokens without any network calls",
    )

    ev = sub.add_parser("eval", help="score candidate migrations")
    ev.add_argument("--original", required=True, help="pre-migration tree")
    ev.add_argument("--reference", required=True, help="known-good migrated tree")
    ev.add_argument(
        "--candidate", required=True, nargs="+", help="model output tree(s), one per run"
    )
    ev.add_argument("--ignore", action="append", help="glob to skip; repeatable")
    ev.add_argument("--out", help="directory for CSV/JSON reports")
    ev.add_argument(
        "--run-tests", nargs="+", metavar="ARG", help="also run this test command"
    )
    ev.add_argument("--project", help="directory to run tests in")
    ev.add_argument("--test-timeout", type=float)

    be = sub.add_parser("bench", help="diff-comprehension benchmark")
    besub = be.add_subparsers(dest="bench_command", required=True)

    bgen = besub.add_parser("generate", help="generate questions")
    bgen.add_argument("--config")
    bgen.add_argument("--corpus", help="JSONL corpus; bundled one by default")
    bgen.add_argument("--count", type=int, required=True)
    bgen.add_argument("--seed", type=int, required=True)
    bgen.add_argument("--out", required=True)

    brun = besub.add_parser("run", help="ask a model the questions")
    brun.add_argument("--config")
    brun.add_argument("--questions", required=True)
    brun.add_argument(
        "--trial", required=True, choices=[CODE_PAIR_TRIAL, DIFF_PAIR_TRIAL]
    )
    brun.add_argument("--model")
    brun.add_argument("--out", required=True, help="answers JSONL")

    bscore = besub.add_parser("score", help="score answers against truth")
    bscore.add_argument("--questions", required=True)
    bscore.add_argument("--answers", required=True)
    bscore.add_argument("--tested", help="model label for the results row")
    bscore.add_argument("--algorithm", help="trial label for the results row")
    bscore.add_argument("--out")

    hi = sub.add_parser("history", help="repo size vs diff size per commit")
    hi.add_argument("--repo", required=True)
    hi.add_argument("--ref", default="HEAD")
    hi.add_argument("--include", action="append")
    hi.add_argument("--exclude", action="append")
    hi.add_argument("--vocab", help="BPE vocabulary file; heuristic otherwise")
    hi.add_argument("--no-first-parent", action="store_true")
    hi.add_argument("--out")

    co = sub.add_parser("cost", help="summarize a usage ledger")
    co.add_argument("--ledger", required=True)
    co.add_argument("--by", choices=["model", "case", "method"])

    return parser


def main(
    argv: Sequence[str] | None = None,
    *,
    client_factory: ClientFactory | None = None,
) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    factory = client_factory or _default_client_factory
    try:
        if args.command == "migrate":
            return _cmd_migrate(args, factory)
        if args.command == "eval":
            return _cmd_eval(args)
        if args.command == "bench":
            if args.bench_command == "generate":
                return _cmd_bench_generate(args)
            if args.bench_command == "run":
                return _cmd_bench_run(args, factory)
            return _cmd_bench_score(args)
        if args.command == "history":
            return _cmd_history(args)
        return _cmd_cost(args)
    except ConfigError as exc:
        logger.error("%s", exc)
        return 2
    except DiffmigrateError as exc:
        logger.error("%s", exc)
        return 1
    except OSError as exc:
        logger.error("%s", exc)
        return 1


def entrypoint() -> None:  # console-script shim
    sys.exit(main())
