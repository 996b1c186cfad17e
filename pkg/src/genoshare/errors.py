"""Exception types raised across the toolkit."""


class ToolkitError(Exception):
    """Base class for all genoshare errors."""


class ParseError(ToolkitError):
    """Malformed input file (carries a line number when known)."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateIdError(ToolkitError):
    """Duplicate rsid or sample id where uniqueness is required."""


class DomainError(ToolkitError):
    """A value outside its declared domain (genotype token, maf, ...)."""


class AlignmentError(ToolkitError):
    """Dataset and reference panel share no usable SNPs, or column order disagrees."""


class EncodingError(ToolkitError):
    """Binary encoding attempted on a dataset that still has missing calls."""


class ShapeMismatchError(ToolkitError):
    """Operands of an elementwise operation have different shapes."""


class SizeError(ToolkitError):
    """Input too small or too large for the requested operation."""


class ConfigError(ToolkitError):
    """Invalid run configuration (epsilon, alpha, mode combinations)."""


class NoSignalError(ToolkitError):
    """Operation undefined at flip probability 0.5 (noise destroys all signal)."""
