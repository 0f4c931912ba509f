"""Exception hierarchy.

Every error carries a short machine-readable ``code`` that the command layer
writes into report rows.
"""


class FinslerError(Exception):
    code = "E_FINSLER"


# jets
class MismatchedJets(FinslerError, ValueError):
    code = "E_JET_MISMATCH"


class DivisionByZeroJet(FinslerError, ZeroDivisionError):
    code = "E_JET_DIV0"


class DomainError(FinslerError, ValueError):
    code = "E_FN_DOMAIN"


class OrderExceeded(FinslerError, ValueError):
    code = "E_ORDER"


# expressions
class ParseError(FinslerError, ValueError):
    code = "E_PARSE"

    def __init__(self, message, offset):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class DimensionError(FinslerError, ValueError):
    code = "E_DIMENSION"


# metrics
class OutsideDomain(FinslerError, ValueError):
    code = "E_OUTSIDE_DOMAIN"


class ZeroDirection(FinslerError, ValueError):
    code = "E_ZERO_DIRECTION"


class ConeMismatch(FinslerError, ValueError):
    code = "E_CONE"


class NotPositiveDefinite(FinslerError, ValueError):
    code = "E_NOT_POSDEF"


class SingularMetric(FinslerError, ValueError):
    code = "E_SINGULAR"


class ConnectionConsistency(FinslerError, ArithmeticError):
    code = "E_CONNECTION"

    def __init__(self, message, residual):
        super().__init__(f"{message}: residual {residual:.3e}")
        self.residual = residual


# curvature
class OneDimensional(FinslerError, ValueError):
    code = "E_ONE_DIM"


class DegenerateFlag(FinslerError, ValueError):
    code = "E_DEGENERATE_FLAG"


# circle maps
class CriticalPoint(FinslerError, ValueError):
    code = "E_CRITICAL_POINT"


class BadDeterminant(FinslerError, ValueError):
    code = "E_BAD_DET"


class PoleInDomain(FinslerError, ValueError):
    code = "E_POLE"


# cli
class ConfigError(FinslerError, ValueError):
    code = "E_CONFIG"
