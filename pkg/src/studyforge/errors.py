"""Exception hierarchy shared across the package.

Every error carries a short machine-readable ``code`` so the service layer
can map failures onto structured JSON bodies without string matching.
"""


class StudyforgeError(Exception):
    """Base class; ``code`` is a stable identifier, ``detail`` optional context."""

    code = "error"

    def __init__(self, message: str, *, code: str | None = None, detail: object = None):
        super().__init__(message)
        if code is not None:
            self.code = code
        self.detail = detail


class CorpusLoadError(StudyforgeError):
    code = "corpus_load"


class ArgumentError(StudyforgeError):
    code = "bad_argument"


class NotFoundError(StudyforgeError):
    code = "not_found"


class GraphValidationError(StudyforgeError):
    code = "graph_invalid"


class TransportError(StudyforgeError):
    """Upstream provider (chat model or embedding service) failed."""

    code = "upstream"


class ValidationError(StudyforgeError):
    """A parsed output violated one of its format invariants."""

    code = "validation"


class MalformedOutputError(StudyforgeError):
    """Model output stayed unparseable after the retry; carries the raw text."""

    code = "malformed_output"

    def __init__(self, message: str, raw: str = "", **kw):
        super().__init__(message, **kw)
        self.raw = raw


class PolicyError(StudyforgeError):
    """A request violated an evaluation policy (e.g. self-judging)."""

    code = "policy"


class ConfigError(StudyforgeError):
    code = "bad_config"
