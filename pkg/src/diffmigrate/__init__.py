"""Migrate code across breaking dependency versions, and measure it.

The package splits into small layers: pure diff machinery (diffs),
token counting (tokens), git access (repo), prompt assembly (prompts),
provider plumbing (llm), the migration driver (migrate), scoring
(evaluate, bench), and commit-history analysis (history). The cli
module ties them together behind one console script.
"""

from .bench import (
    BenchQuestion,
    BenchScore,
    CorpusItem,
    FunctionCorpus,
    generate_questions,
    load_questions,
    parse_integer_answer,
    results_to_csv,
    save_questions,
    score,
    weighted_answer,
)
from .diffs import (
    ChangeBlock,
    EditOp,
    EditScript,
    FileDiff,
    Hunk,
    UnifiedDiff,
    apply_diff,
    blocks_from_sets,
    change_blocks,
    compute_diff,
    myers_diff,
    parse_unified,
    render_diff,
    render_unified,
)
from .errors import (
    ArtifactForbidden,
    ArtifactRequired,
    AuthError,
    ConfigError,
    ContextMismatch,
    ContextOverflow,
    CorpusTooSmall,
    DiffmigrateError,
    IoFailure,
    LengthMismatch,
    LineCountMismatch,
    LlmError,
    MalformedHunkHeader,
    MigrationFailed,
    MissingSlot,
    NotARepository,
    ParseFailure,
    RateLimited,
    RunnerNotFound,
    ServerError,
    TemplateError,
    Timeout,
    UnknownModel,
    UnknownSlot,
    UnresolvedRef,
    VocabLoadError,
)
from .evaluate import (
    EditMatchReport,
    ParseSpec,
    TestReport,
    cumulative_union_counts,
    match_edits,
    reports_to_csv,
    reports_to_json,
    run_tests,
    union_runs,
)
from .files import FileEntry, FileFilter, FileSet
from .history import CommitSizePoint, analyze, emit_csv
from .llm import (
    ChatRequest,
    ChatResponse,
    CostTable,
    HttpProvider,
    LlmClient,
    MockProvider,
    RetryPolicy,
    TokenBudget,
    UsageLedger,
    UsageRecord,
    estimate_cost,
)
from .migrate import (
    ExperimentSpec,
    FileOutcome,
    LibrarySpec,
    MigrationJob,
    PreparedFile,
    RunResult,
    load_source_files,
    migrate_file,
    prepare_artifact,
    prepare_prompts,
    run,
)
from .prompts import (
    LibraryInfo,
    MigrationStrategy,
    PromptTemplate,
    build_bench_prompt,
    build_migration_prompt,
    default_migration_template,
    load_template_file,
)
from .repo import RepoRef, library_diff, resolve_commit, snapshot
from .tokens import (
    HEURISTIC,
    ContextFit,
    TokenizerSpec,
    count_tokens,
    fits_context,
    load_vocab,
)

__version__ = "0.1.0"

__all__ = [
    "ArtifactForbidden",
    "ArtifactRequired",
    "AuthError",
    "BenchQuestion",
    "BenchScore",
    "ChangeBlock",
    "ChatRequest",
    "ChatResponse",
    "CommitSizePoint",
    "ConfigError",
    "ContextFit",
    "ContextMismatch",
    "ContextOverflow",
    "CorpusItem",
    "CorpusTooSmall",
    "CostTable",
    "DiffmigrateError",
    "EditMatchReport",
    "EditOp",
    "EditScript",
    "ExperimentSpec",
    "FileDiff",
    "FileEntry",
    "FileFilter",
    "FileOutcome",
    "FileSet",
    "FunctionCorpus",
    "HEURISTIC",
    "HttpProvider",
    "Hunk",
    "IoFailure",
    "LengthMismatch",
    "LibraryInfo",
    "LibrarySpec",
    "LineCountMismatch",
    "LlmClient",
    "LlmError",
    "MalformedHunkHeader",
    "MigrationFailed",
    "MigrationJob",
    "MigrationStrategy",
    "MissingSlot",
    "MockProvider",
    "NotARepository",
    "ParseFailure",
    "ParseSpec",
    "PreparedFile",
    "PromptTemplate",
    "RateLimited",
    "RepoRef",
    "RetryPolicy",
    "RunResult",
    "RunnerNotFound",
    "ServerError",
    "TemplateError",
    "TestReport",
    "Timeout",
    "TokenBudget",
    "TokenizerSpec",
    "UnifiedDiff",
    "UnknownModel",
    "UnknownSlot",
    "UnresolvedRef",
    "UsageLedger",
    "UsageRecord",
    "VocabLoadError",
    "analyze",
    "apply_diff",
    "blocks_from_sets",
    "build_bench_prompt",
    "build_migration_prompt",
    "change_blocks",
    "compute_diff",
    "count_tokens",
    "cumulative_union_counts",
    "default_migration_template",
    "emit_csv",
    "estimate_cost",
    "fits_context",
    "generate_questions",
    "library_diff",
    "load_questions",
    "load_source_files",
    "load_template_file",
    "load_vocab",
    "match_edits",
    "migrate_file",
    "myers_diff",
    "parse_integer_answer",
    "parse_unified",
    "prepare_artifact",
    "prepare_prompts",
    "render_diff",
    "render_unified",
    "reports_to_csv",
    "reports_to_json",
    "resolve_commit",
    "results_to_csv",
    "run",
    "run_tests",
    "save_questions",
    "score",
    "snapshot",
    "union_runs",
    "weighted_answer",
]
