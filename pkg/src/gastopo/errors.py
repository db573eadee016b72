"""Exception hierarchy shared by all gastopo modules.

Every error carries a stable ``kind`` string (the class name) that the
HTTP service relays verbatim to clients.
"""


class GastopoError(Exception):
    """Base class for all domain errors."""

    @property
    def kind(self) -> str:
        return type(self).__name__


# --- core model ---------------------------------------------------------

class DuplicateLayer(GastopoError):
    pass


class ReservedLayer(GastopoError):
    pass


class UnknownLayer(GastopoError):
    pass


class UnknownAttribute(GastopoError):
    pass


class ReservedAttribute(GastopoError):
    pass


class UnknownId(GastopoError):
    pass


# --- geometry -----------------------------------------------------------

class EmptyRoute(GastopoError):
    pass


class InvalidRoute(GastopoError):
    pass


class InvalidGeometry(GastopoError):
    pass


class TooFewControlPoints(GastopoError):
    pass


class DegenerateControlPoints(GastopoError):
    pass


class DegenerateTransform(GastopoError):
    pass


# --- topology operations ------------------------------------------------

class SplitAtEndpoint(GastopoError):
    pass


class ShortPipeNotDividable(GastopoError):
    pass


class IncompleteAssignment(GastopoError):
    pass


class InvalidSubnodeIndex(GastopoError):
    pass


class SelfLoop(GastopoError):
    pass


class DuplicateShortPipe(GastopoError):
    pass


class EndpointMismatch(GastopoError):
    pass


class NodeInUse(GastopoError):
    pass


class NotAChain(GastopoError):
    pass


class AlreadyGrouped(GastopoError):
    pass


class PlacementKindMismatch(GastopoError):
    pass


class UnknownSublayer(GastopoError):
    pass


# --- validation ---------------------------------------------------------

class DanglingReference(GastopoError):
    pass


# --- project IO ---------------------------------------------------------

class MissingMandatoryFile(GastopoError):
    pass


class ParseError(GastopoError):
    pass


class SchemaError(GastopoError):
    pass


class IoError(GastopoError):
    pass


# --- command dispatch ---------------------------------------------------

class UnknownOperation(GastopoError):
    pass


class ValidationError(GastopoError):
    pass


class ReplayDivergence(GastopoError):
    pass
