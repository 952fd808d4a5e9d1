"""Exception types shared across the package."""


class KneadlabError(Exception):
    """Base class for all package errors."""


class RuleViolation(KneadlabError):
    """A kneading-map rule was queried outside its domain or breaks Q(k) < k."""


class WindowExhausted(KneadlabError):
    """A comparison or check ran out of defined symbols before deciding."""


class PrecisionExhausted(KneadlabError):
    """The precision escalation policy hit its cap without resolving a sign."""


class AdmissibilityViolation(KneadlabError):
    """Target kneading data cannot be realized; carries the first bad index."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class EscapeError(KneadlabError):
    """Critical orbit left the bounded-orbit window; carries the escape step."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NoRootError(KneadlabError):
    """A bracketing step found no sign change where a root was required."""


class WitnessFailure(KneadlabError):
    """A sampled monotonicity/sign witness contradicted the expected branch."""


class ClosestReturnViolation(KneadlabError):
    """An orbit point violated the closest-return placement law."""


class UndecidedSymbol(KneadlabError):
    """A sign needed for an ordering decision fell below the margin threshold."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class PostcriticalBasePoint(KneadlabError):
    """Backward-orbit base point collides with the forward critical orbit."""


class CriticalCollision(KneadlabError):
    """A preimage branch hit the critical point exactly; carries the path."""

    def __init__(self, message, path=""):
        super().__init__(message)
        self.path = path
