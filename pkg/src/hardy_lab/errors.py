"""Exception hierarchy. Every error carries a machine-readable ``code``
that the CLI maps to its JSON error output."""


class HardyLabError(Exception):
    code = "ERROR"


class InputError(HardyLabError):
    code = "INPUT"


# -- space ---------------------------------------------------------------
class AsymmetricDistance(InputError):
    code = "ASYMMETRIC_DISTANCE"


class TriangleViolation(InputError):
    code = "TRIANGLE_VIOLATION"


class NonpositiveMass(InputError):
    code = "NONPOSITIVE_MASS"


# -- spectral ------------------------------------------------------------
class AsymmetricAdjacency(InputError):
    code = "ASYMMETRIC_ADJACENCY"


class Disconnected(InputError):
    code = "DISCONNECTED"


class ProfileDomainTooSmall(HardyLabError):
    code = "PROFILE_DOMAIN_TOO_SMALL"


class QuadratureNotConverged(HardyLabError):
    code = "QUADRATURE_NOT_CONVERGED"


class FitDegenerate(HardyLabError):
    code = "FIT_DEGENERATE"


# -- profiles ------------------------------------------------------------
class GridTooCoarse(HardyLabError):
    code = "GRID_TOO_COARSE"


class InsufficientVanishingOrder(HardyLabError):
    code = "INSUFFICIENT_VANISHING_ORDER"


# -- maximal -------------------------------------------------------------
class EmptyGrid(InputError):
    code = "EMPTY_GRID"


class EmptyDictionary(InputError):
    code = "EMPTY_DICTIONARY"


# -- whitney -------------------------------------------------------------
class NotProperSubset(InputError):
    code = "NOT_PROPER_SUBSET"


# -- atomic --------------------------------------------------------------
class ZeroField(HardyLabError):
    code = "ZERO_FIELD"


class VanishingOrderTooLow(HardyLabError):
    code = "VANISHING_ORDER_TOO_LOW"
