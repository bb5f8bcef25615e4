"""
Exception hierarchy for masai-lite.

Library code raises these; only the command-line frontend turns them into
process exit codes (0 success, 1 usage, 2 input format, 3 internal).
"""


class MasaiError(Exception):
    """Base class for every error raised on purpose by masai-lite."""

    exit_code = 3


class UsageError(MasaiError):
    """Invalid flags or flag combinations."""

    exit_code = 1


class ParameterError(UsageError):
    """Filtration parameters that cannot produce a valid seed scheme."""


class FormatError(MasaiError):
    """Malformed FASTA, FASTQ or index input."""

    exit_code = 2


class InputError(MasaiError):
    """Inputs that are individually well formed but inconsistent."""

    exit_code = 2


class ContractError(MasaiError):
    """An internal invariant was violated."""

    exit_code = 3


class GenomeRangeError(MasaiError, IndexError):
    """A genome position or contig offset outside the valid range."""

    exit_code = 3
