"""Exception types raised across the package."""


class CosetCSPError(Exception):
    """Base class for every error raised by cosetcsp."""


class NotAGroup(CosetCSPError):
    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


class EmptySet(CosetCSPError):
    pass


class NotCosetInput(CosetCSPError):
    pass


class NotSubgroup(CosetCSPError):
    pass


class NotADPInput(CosetCSPError):
    pass


class ContradictoryInstance(CosetCSPError):
    def __init__(self, element, groups=()):
        msg = f"element {element!r} has conflicting constraining groups {sorted(groups)}"
        super().__init__(msg)
        self.element = element


class BudgetExceeded(CosetCSPError):
    """A search exhausted its node or candidate budget."""


class CapExceeded(CosetCSPError):
    """An enumeration produced more results than the caller allowed."""


class EmptyRelation(CosetCSPError):
    pass


class EmptyH(CosetCSPError):
    pass


class Unsolvable(CosetCSPError):
    pass


class NotAnAnomaly(CosetCSPError):
    pass


class PreconditionViolated(CosetCSPError):
    pass


class InvalidSpec(CosetCSPError):
    pass


class ConstructionFailure(AssertionError):
    """A construction that must always succeed did not.

    Raised only when an exhaustive check contradicts a proven statement,
    so seeing it means a bug in this package.
    """
