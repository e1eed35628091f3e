"""
Exception hierarchy for the Cournot rule-revision toolkit
"""


class CournotError(Exception):
    """Base class for every error raised by the toolkit"""


class DomainError(CournotError, ValueError):
    """Argument outside the domain of an operation (e.g. q < 0, q on the wrong side of q^W)"""


class GridError(CournotError):
    """Quantity grid cannot carry the benchmarks, or is too coarse for the descent chain"""


class ConvergenceError(CournotError):
    """Root bracket invalid, fixed point not unique, or an iteration cap was hit"""


class StateSpaceTooLarge(CournotError):
    """Exact chain enumeration would exceed the configured state cap"""


class RootUnreachable(CournotError):
    """Some node has no finite-cost path to the requested arborescence root"""


class AnalyticDiscrepancy(CournotError):
    """Tree search disagrees with the closed form, or a witness tree is unsound"""

    def __init__(self, message: str, root: str = "", costs: dict = None):
        super().__init__(message)
        self.root = root
        self.costs = costs or {}


class NoAtsError(CournotError):
    """No aggregate-taking strategy exists on the strategy grid"""


class CriterionNotSupported(CournotError):
    """Analytic mode refused because a criterion violates Survival-of-the-Fittest"""


class ConfigError(CournotError, ValueError):
    """Run configuration failed validation; message carries the dotted field path"""
