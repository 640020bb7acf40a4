"""Exception types shared across the pipeline, mapped to CLI exit codes."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class; `exit_code` is what the CLI returns for this failure."""

    exit_code = 1


class ConfigError(PipelineError):
    """Invalid run configuration or operation parameters."""

    exit_code = 2


class DataError(PipelineError):
    """Unreadable or schema-violating input data.

    `row_index` is set when the failure is tied to one CSV data row
    (0-based, header excluded).
    """

    exit_code = 3

    def __init__(self, message: str, row_index: int | None = None):
        super().__init__(message)
        self.row_index = row_index


class TrainingError(PipelineError):
    """Model training cannot proceed (e.g. no events in the training set)."""

    exit_code = 4
