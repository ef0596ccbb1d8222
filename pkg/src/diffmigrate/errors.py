"""Exception types shared across the package.

Every error raised on purpose by this package derives from DiffmigrateError,
so callers (and the CLI) can catch one base class and map it to a clean
failure instead of a traceback.
"""

from __future__ import annotations


class DiffmigrateError(Exception):
    """Base class for all failures this package raises deliberately."""


# --- repository access ---


class NotARepository(DiffmigrateError):
    """The given path is not inside a git work tree."""


class UnresolvedRef(DiffmigrateError):
    """A ref name did not resolve to a commit in the repository."""


class IoFailure(DiffmigrateError):
    """A subprocess or filesystem interaction failed unexpectedly."""


# --- diff engine ---


class MalformedHunkHeader(DiffmigrateError):
    """A @@ line in a unified diff did not match the expected shape."""


class LineCountMismatch(DiffmigrateError):
    """Hunk body length disagrees with the counts declared in its header."""


class ContextMismatch(DiffmigrateError):
    """A patch did not line up with the file it was applied to."""


# --- tokenizer ---


class VocabLoadError(DiffmigrateError):
    """A BPE vocabulary file was missing or malformed."""


# --- prompt templates ---


class TemplateError(DiffmigrateError):
    """A template body is malformed (unbalanced or nested braces)."""


class MissingSlot(TemplateError):
    """A required slot was left unbound at render time."""


class UnknownSlot(TemplateError):
    """A binding was supplied for a slot the template does not declare."""


class ArtifactRequired(DiffmigrateError):
    """The strategy needs a context artifact and none was supplied."""


class ArtifactForbidden(DiffmigrateError):
    """The strategy takes no context artifact yet one was supplied."""


# --- LLM client ---


class LlmError(DiffmigrateError):
    """Base class for chat-completion failures."""


class AuthError(LlmError):
    """The provider rejected our credentials. Never retried."""


class RateLimited(LlmError):
    """The provider throttled us and retries were exhausted."""


class ContextOverflow(LlmError):
    """The request does not fit the model's context window."""


class Timeout(DiffmigrateError):
    """An external call (provider or test runner) exceeded its deadline."""


class ServerError(LlmError):
    """The provider failed on its side (5xx). Retried as transient."""


class UnknownModel(DiffmigrateError):
    """No cost rates are configured for the requested model."""


# --- migration driver ---


class MigrationFailed(DiffmigrateError):
    """A per-file migration failed and the job was set to die on error."""


# --- evaluator ---


class RunnerNotFound(DiffmigrateError):
    """The configured test-runner executable could not be launched."""


class ParseFailure(DiffmigrateError):
    """Test-runner output matched no known summary shape.

    Carries the path of the retained raw log so the run can be inspected.
    """

    def __init__(self, message: str, log_path=None):
        super().__init__(message)
        self.log_path = log_path


# --- benchmark ---


class CorpusTooSmall(DiffmigrateError):
    """The function corpus cannot supply the pools a question needs."""


class LengthMismatch(DiffmigrateError):
    """Answer and question sequences differ in length."""


# --- configuration ---


class ConfigError(DiffmigrateError):
    """The run configuration is missing, malformed, or points nowhere."""
