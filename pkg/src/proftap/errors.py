"""Exception hierarchy shared across the package.

Two broad families matter to the CLI: validation problems (bad config or
input, exit code 2) and stage failures (a pipeline step could not finish,
exit code 3).
"""


class ProftapError(Exception):
    """Base class for all package errors."""


class ValidationError(ProftapError):
    """Bad input, config, or arguments. CLI exit code 2."""


class StageError(ProftapError):
    """A pipeline stage failed to complete. CLI exit code 3."""


class CorpusFormatError(ValidationError):
    """A corpus file is unreadable or a record violates the schema."""


class SegmentationError(ProftapError):
    """A poem body has no line content after punctuation removal."""


class TemplateError(ValidationError):
    """Prompt template is missing or duplicates the title placeholder."""


class PostprocessError(ProftapError):
    """Raw model output contained no poem after cleanup rules."""


class AdapterError(StageError):
    """A model adapter could not produce output (transport, missing file)."""


class GenerationExhaustedError(StageError):
    """All regeneration attempts for a (model, title) pair were rejected."""

    def __init__(self, model_id: str, title: str, reasons: list[str]):
        self.model_id = model_id
        self.title = title
        self.reasons = reasons
        detail = "; ".join(reasons) if reasons else "no attempts recorded"
        super().__init__(
            f"model {model_id!r}, title {title!r}: all attempts rejected ({detail})"
        )


class PlanError(ValidationError):
    """Assignment plan cannot satisfy its coverage constraints."""


class RatingError(ProftapError):
    """A rating submission was rejected."""


class DuplicateRatingError(RatingError):
    """The (judge, poem) pair already has a stored rating."""
