"""Exception hierarchy shared across the package.

Everything raised on purpose derives from HtreeError so callers can catch
one base type at the boundary and map it to an exit code or a log line.
"""

from __future__ import annotations


class HtreeError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(HtreeError):
    """Invalid configuration value, missing config file, or bad CLI flag combination."""


class SchemaError(HtreeError):
    """CSV header or schema contract violation (missing column, duplicate name, bad kind)."""


class DataError(HtreeError):
    """Bad cell values, dimension mismatches, or empty/degenerate inputs."""


class LabelError(DataError):
    """Label column violation: value outside {0, 1} or unparseable."""


class ModelFormatError(HtreeError):
    """Model artifact cannot be parsed or fails structural validation."""

    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message)
        self.byte_offset = byte_offset


class UnsupportedVersionError(ModelFormatError):
    """Model artifact declares a format version this build does not read."""


class LlmError(HtreeError):
    """Base class for language-model query failures."""


class LlmTransportError(LlmError):
    """HTTP-level failure: connection refused, non-2xx status after retries."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class LlmTimeoutError(LlmError):
    """Request exceeded the configured timeout after retries."""


class LlmProtocolError(LlmError):
    """Response arrived but is not a well-formed chat completion."""


class PersonaValidationError(HtreeError):
    """Generated persona text is missing a required section or is empty."""

    def __init__(self, message: str, section: str | None = None):
        super().__init__(message)
        self.section = section


class PipelineError(HtreeError):
    """Training-stage failure, annotated with the cluster being processed."""

    def __init__(self, message: str, cluster_label: int | None = None):
        super().__init__(message)
        self.cluster_label = cluster_label
