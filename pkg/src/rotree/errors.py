"""Exception hierarchy shared across the package."""


class RotreeError(Exception):
    """Base class for every error raised by rotree."""


# search-core
class EmptyFrontier(RotreeError):
    """A non-terminal state produced no legal action."""


class NoChildren(RotreeError):
    pass


class UnknownNode(RotreeError, KeyError):
    pass


class InvalidTree(RotreeError):
    pass


# environments
class IllegalAction(RotreeError):
    def __init__(self, rule, message=""):
        self.rule = rule
        super().__init__(f"{rule}: {message}" if message else rule)


class Unsolvable(RotreeError):
    pass


class InvalidInstance(RotreeError):
    pass


# policy
class PolicyFailure(RotreeError):
    pass


class BackendUnavailable(PolicyFailure):
    def __init__(self, message, last_error=None):
        super().__init__(message)
        self.last_error = last_error


class AuthError(PolicyFailure):
    pass


class MalformedResponse(PolicyFailure):
    pass


class UnscriptedQuery(PolicyFailure):
    def __init__(self, digest):
        self.digest = digest
        super().__init__(f"no scripted response for digest {digest}")


class MissingSlot(RotreeError):
    def __init__(self, slot):
        self.slot = slot
        super().__init__(f"unfilled placeholder: {slot}")


# reflection
class NotFound(RotreeError):
    pass


class CorruptStore(RotreeError):
    pass


# metrics
class InsufficientSamples(RotreeError):
    pass


class TooFewPoints(RotreeError):
    pass


class DegenerateRange(RotreeError):
    pass


class EmptyInput(RotreeError):
    pass


# cli
class ManifestError(RotreeError):
    pass


class EmptyTraceDir(RotreeError):
    pass


class SchemaMismatch(RotreeError):
    pass
