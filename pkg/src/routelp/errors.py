"""Exception types shared across the package."""


class RouteLPError(Exception):
    """Base class for every error raised by routelp."""


class InvalidParams(RouteLPError):
    pass


class DisconnectedGraph(RouteLPError):
    pass


class ParseError(RouteLPError):
    def __init__(self, message, field=None, line=None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class InvalidInstance(RouteLPError):
    pass


# rational-lp
class IterationLimit(RouteLPError):
    pass


class CutRoundLimit(RouteLPError):
    pass


# flows-branchings
class NotAPreflow(RouteLPError):
    pass


class RequirementExceedsConnectivity(RouteLPError):
    pass


class DenominatorOverflow(RouteLPError):
    pass


class SearchExhausted(RouteLPError):
    """Backtracking found no decomposition although one must exist."""


# rooted-forests
class EmptyTerminalSet(RouteLPError):
    pass


class InvalidCover(RouteLPError):
    pass


# parity-join
class OddSetTooLarge(RouteLPError):
    pass


class OddCardinality(RouteLPError):
    pass


class OddDegreePresent(RouteLPError):
    pass


class Disconnected(RouteLPError):
    pass


class AnchorNotOnAnyPath(RouteLPError):
    pass


class ComponentNotAnchored(RouteLPError):
    pass


# approx-algorithms
class TerminalNotInBranching(RouteLPError):
    pass


# exact-oracles
class BudgetExceeded(RouteLPError):
    pass


# cli-bench
class ConfigError(RouteLPError):
    pass


class EmptyInput(RouteLPError):
    pass
