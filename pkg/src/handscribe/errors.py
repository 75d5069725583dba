"""Exception hierarchy shared by all pipeline stages.

Every error raised by this package derives from PipelineError so batch
entry points can map failures to exit codes without enumerating modules.
"""


class PipelineError(Exception):
    """Base class for all errors raised by the annotation pipeline."""

    code = "pipeline_error"


class NoInkError(PipelineError):
    """Image contains no foreground ink (uniform below-threshold content)."""

    code = "no_ink"


class BackendFailure(PipelineError):
    """A detector backend could not produce score/geometry maps."""

    code = "backend_failure"


class ShapeMismatchError(PipelineError):
    """Model parameters are inconsistent with the input tensor shape."""

    code = "shape_mismatch"


class InfeasibleLabelError(PipelineError):
    """Label cannot be aligned within the model's timestep budget."""

    code = "infeasible_label"


class UnknownIdError(PipelineError):
    """Referenced box id does not exist on the page."""

    code = "unknown_id"


class ZeroAreaError(PipelineError):
    """Rectangle has no area after clamping to the page."""

    code = "zero_area"


class EmptyWordError(PipelineError):
    """Dictionary words must be non-empty."""

    code = "empty_word"


class EmptyCorpusError(PipelineError):
    """CER is undefined for a corpus with zero ground-truth characters."""

    code = "empty_corpus"


class ParseError(PipelineError):
    """Project file is not parseable."""

    code = "parse_error"


class ValidationError(PipelineError):
    """Project content violates a structural invariant."""

    code = "validation_error"


class UnsupportedVersionError(PipelineError):
    """Project file version is not supported by this build."""

    code = "unsupported_version"


class IoFailure(PipelineError):
    """Filesystem read/write failed."""

    code = "io_failure"


class MissingTextError(PipelineError):
    """Some ordered boxes lack transcriptions."""

    code = "missing_text"

    def __init__(self, box_ids):
        self.box_ids = list(box_ids)
        super().__init__(f"boxes without text: {', '.join(self.box_ids)}")


class PhaseOrderError(PipelineError):
    """A workflow phase was requested before its preconditions were met."""

    code = "phase_order"


class BadImageError(PipelineError):
    """Uploaded bytes could not be decoded as a PNG or JPEG image."""

    code = "bad_image"


class UnknownSessionError(PipelineError):
    """No live session with the given id."""

    code = "unknown_session"


class ConflictError(PipelineError):
    """Client revision is stale; the session moved on."""

    code = "conflict"

    def __init__(self, current_revision: int):
        self.current_revision = current_revision
        super().__init__(f"stale revision, current is {current_revision}")
