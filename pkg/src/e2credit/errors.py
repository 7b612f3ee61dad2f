"""Exceptions mapped to the CLI's stable exit codes."""


class InputFormatError(Exception):
    """Malformed input file (CSV schema, config syntax). Exit code 2."""


class PipelineError(Exception):
    """A pipeline precondition failed (empty dataset, no holdout). Exit code 3."""


class CompatibilityError(Exception):
    """Forest and dataset do not match (columns, row counts). Exit code 4."""
