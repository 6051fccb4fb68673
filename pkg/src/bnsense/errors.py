"""Exception types raised by the library.

Every error raised on purpose derives from BnsenseError so callers (and the
CLI) can distinguish library failures from genuine bugs.
"""


class BnsenseError(Exception):
    """Base class for all library errors."""


class NetworkFormatError(BnsenseError):
    """The network file or dict violates the schema or the probability rules.

    Covers unknown references, cycles, arity mismatches and row sums outside
    tolerance.  Messages carry the variable / row location of the offence.
    """


class DegenerateParameterError(BnsenseError):
    """A parameter with value 1 cannot be co-varied (its row has no mass left)."""


class ImpossibleEvidenceError(BnsenseError):
    """The entered evidence has probability zero under the network."""


class InconsistentPotentialError(BnsenseError):
    """A message division hit positive/0 — the tree state is corrupt (a bug)."""


class DependentParametersError(BnsenseError):
    """A parameter set failed the pairwise independence check."""


class CliqueMembershipError(BnsenseError):
    """No single clique contains all the parameter families requested."""


class RankDeficiencyError(BnsenseError):
    """The coefficient system never reached full rank within the propagation cap."""


class UndefinedPointError(BnsenseError):
    """A sensitivity function was evaluated where its denominator is not positive."""
