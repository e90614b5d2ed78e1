"""Exception taxonomy for the laboratory.

Structural violations are hard failures: they mean a paper-guaranteed
invariant broke on constructed data, which is a bug signal, never an
expected runtime condition.
"""


class GaplabError(Exception):
    """Base class for all laboratory errors."""


class ParseError(GaplabError):
    """Malformed instance or artifact file."""


class MetricViolation(GaplabError):
    """Asymmetry, negative entry or triangle-inequality failure."""


class InfeasibleInput(GaplabError):
    """An alleged LP solution fails a degree or subtour constraint."""


class Unbounded(GaplabError):
    """LP unbounded; impossible for a valid metric, signals a bug."""


class IterationLimit(GaplabError):
    """Separation or pivoting loop exceeded its configured cap."""


class DisconnectedSupport(GaplabError):
    """Support graph disconnected (min cut 0); carries the witness."""

    def __init__(self, message, component=None):
        super().__init__(message)
        self.component = component


class TooLarge(GaplabError):
    """Instance exceeds the exact exhaustive backend bound."""


class TooManyOdd(GaplabError):
    """Odd-vertex set above the exact matching cap."""


class SingularLaplacian(GaplabError):
    """Laplacian solve failed; disconnected support or degenerate weights."""


class NoConvergence(GaplabError):
    """Lambda fit hit the iteration cap; carries the best deviation seen."""

    def __init__(self, message, best_deviation=None):
        super().__init__(message)
        self.best_deviation = best_deviation


class NoArrangement(GaplabError):
    """No valid circular-ones arrangement exists; carries the obstruction."""


class ChainViolation(GaplabError):
    """Chain lemma containments failed; invariant breach."""


class StructureViolation(GaplabError):
    """An inline structural lemma check failed; hard failure."""


class HierarchyViolation(GaplabError):
    """Laminarity or partition-mass check failed in the hierarchy."""


class MappingUnavailable(GaplabError):
    """Cut-to-edge-group search exhausted; contradicts the imported lemma."""


class BadParams(GaplabError):
    """Fixture parameters outside documented ranges."""
