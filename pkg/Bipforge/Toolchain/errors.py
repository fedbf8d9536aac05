"""
Exception hierarchy for the toolchain.

Everything derives from ValueError so callers that only know about invalid
input keep working.
"""

from typing import Optional


class BipforgeError(ValueError):
    """Base class for every toolchain error"""


class ModelError(BipforgeError):
    """A model value violates one of its construction invariants"""


class ParseError(BipforgeError):
    """Source text does not follow the model, scenario or configuration grammar"""

    def __init__(self, message: str, span=None):
        self.message = message
        self.span = span
        where = f"{span}: " if span is not None else ""
        super().__init__(f"{where}{message}")


class UnknownPattern(BipforgeError):
    pass


class MissingParameter(BipforgeError):
    pass


class MissingCardinality(BipforgeError):
    pass


class UnknownEvent(BipforgeError):
    pass


class BehaviorInvalid(BipforgeError):
    """Raised when a model with behavioral errors is handed to the engine"""

    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        super().__init__(
            f"model has {len(self.diagnostics)} behavioral error(s); run 'check' for details"
        )


class NotEncodable(BipforgeError):
    """The diagram does not define exactly one conforming architecture"""

    def __init__(self, message: str, report=None):
        self.report = report
        super().__init__(message)


class LimitExceeded(BipforgeError):
    def __init__(self, limit: int, found: int):
        self.limit = limit
        self.found = found
        super().__init__(
            f"search limit of {limit} visited nodes exceeded after {found} configuration(s)"
        )


class UniverseTooLarge(BipforgeError):
    def __init__(self, size: int, bound: int, where: Optional[str] = None):
        self.size = size
        self.bound = bound
        suffix = f" in {where}" if where else ""
        super().__init__(f"{size} port instances{suffix} exceed the enumeration bound of {bound}")


class EmptySet(BipforgeError):
    pass


class InternalLivelock(BipforgeError):
    pass
