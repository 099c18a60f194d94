"""Exception types shared across the package."""


class CausalBanditsError(Exception):
    """Base class for all package-specific errors."""


class KeepSetInvalid(CausalBanditsError):
    """A projection keep-set references nodes outside the graph."""


class ParseError(CausalBanditsError):
    """A graph/model/config file could not be parsed.

    Carries a best-effort location (line/column) when the underlying
    reader provides one.
    """

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", column {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class StateSpaceTooLarge(CausalBanditsError):
    """Exact enumeration was requested for a state space above the cap."""


class NonIntegerCosts(CausalBanditsError):
    """The knapsack benchmark requires integer arm costs."""


class NonBinaryGraph(CausalBanditsError):
    """A binary-only model generator received a non-binary graph."""


class InvalidProbability(CausalBanditsError):
    """A probability parameter lies outside [0, 1] or breaks a table."""


class NoObservations(CausalBanditsError):
    """An observational estimate was requested from an empty log."""


class EmptySlice(CausalBanditsError):
    """A stratum slice estimate was requested for an empty slice."""


class NoEffectiveSamples(CausalBanditsError):
    """An arm has neither interventional samples nor usable strata."""


class ZeroCount(CausalBanditsError):
    """A UCB index was requested with a zero effective count."""


class InsufficientBudget(CausalBanditsError):
    """The budget cannot cover a policy's mandatory initial pulls."""


class GraphNotNoBackdoor(CausalBanditsError):
    """A no-backdoor-only policy was run on a graph with open backdoors."""


class NonUniformCost(CausalBanditsError):
    """A uniform-cost-only baseline received non-uniform costs."""


class GraphHasHiddenConfounders(CausalBanditsError):
    """A fully-observable-only baseline received bidirected edges."""


class ConfigInvalid(CausalBanditsError):
    """An experiment configuration is malformed or inconsistent."""
