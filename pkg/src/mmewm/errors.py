"""Exception hierarchy shared by the library and the command line.

Each class carries the process exit code the CLI returns for it; 2 is left
to argparse for usage errors.
"""


class MmeError(Exception):
    exit_code = 1


class InvalidParameterError(MmeError, ValueError):
    """Bad argument value or shape (non-positive scale, dimension mismatch...)."""

    exit_code = 8


class ConfigError(InvalidParameterError):
    """Scheme configuration outside its feasible region, e.g. alpha below bound."""

    exit_code = 3


class FormatError(MmeError):
    """Malformed or unsupported RIFF/WAVE input."""

    exit_code = 4


class CapacityError(MmeError):
    exit_code = 5


class IntegrityError(MmeError):
    """Metadata does not match the file it claims to describe."""

    exit_code = 6


class PrecisionError(MmeError):
    """A write would quantize samples and destroy reversibility."""

    exit_code = 7
