"""
Exception hierarchy for dsge-automl.

Everything raised on purpose by the package derives from DsgeAutoMLError so
the CLI can report it with a single handler.
"""

from typing import Optional


class DsgeAutoMLError(Exception):
    """Base class for all package errors."""


class GrammarError(DsgeAutoMLError):
    """A grammar failed to parse or validate."""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        self.detail = message
        if line is not None:
            where = f"line {line}" if column is None else f"line {line}, column {column}"
            message = f"{where}: {message}"
        super().__init__(message)


class GrammarSyntaxError(GrammarError):
    pass


class UndefinedNonterminalError(GrammarError):
    def __init__(self, name: str, line: Optional[int] = None, column: Optional[int] = None):
        self.name = name
        super().__init__(f"undefined nonterminal <{name}>", line, column)


class UnreachableNonterminalError(GrammarError):
    def __init__(self, name: str, line: Optional[int] = None):
        self.name = name
        super().__init__(f"nonterminal <{name}> is unreachable from the start symbol", line)


class EmptyRuleError(GrammarError):
    pass


class RandBoundsError(GrammarError):
    pass


class DuplicateRuleError(GrammarError):
    pass


class NonTerminatingError(GrammarError):
    pass


class MappingError(DsgeAutoMLError):
    """A genotype could not be mapped within the depth bound."""


class PipelineCompileError(DsgeAutoMLError):
    """A phenotype does not describe a valid pipeline."""


class ComponentFailure(DsgeAutoMLError):
    """A pipeline component failed numerically while fitting or predicting."""


class EvaluationTimeout(DsgeAutoMLError):
    """An evaluation observed its cancellation flag."""


class DatasetError(DsgeAutoMLError):
    pass


class ConfigError(DsgeAutoMLError):
    pass


class ReportFormatError(DsgeAutoMLError):
    pass


class ReplayMismatchError(DsgeAutoMLError):
    """A replayed genotype no longer produces the stored phenotype."""
