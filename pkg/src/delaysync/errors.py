"""Exception types raised across the package."""


class InvalidInputError(ValueError):
    """Malformed input: non-finite entries, wrong shapes, bad configs."""


class PreconditionError(ValueError):
    """Input is well formed but violates an operation's precondition."""


class CapacityError(RuntimeError):
    """Exact enumeration would exceed the configured work cap."""


class ZeroPatternError(PreconditionError):
    """Coupling has nonzero weight in delay classes not covered by the declared delays.

    ``offenders`` lists ``(class_index, delay)`` pairs.
    """

    def __init__(self, offenders):
        self.offenders = list(offenders)
        pairs = ", ".join(f"(class {c}, delay {d})" for c, d in self.offenders)
        super().__init__(f"zero-pattern condition violated by {pairs}")
