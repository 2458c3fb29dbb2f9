"""Exception hierarchy shared by every cbrank module."""


class CBRankError(Exception):
    """Base class for all library errors."""


# ordinals
class UnrepresentableLimit(CBRankError):
    pass


class SearchExhausted(CBRankError):
    pass


class OutOfBound(CBRankError):
    pass


class NestingTooDeep(CBRankError):
    pass


class ParseError(CBRankError):
    pass


# streams
class DepthExceeded(CBRankError):
    pass


class EmptyList(CBRankError):
    pass


class IndexSetExhausted(CBRankError):
    pass


class HorizonExceeded(CBRankError):
    pass


# functionals
class PrefixTooShort(CBRankError):
    pass


class MalformedOutput(CBRankError):
    pass


class ComponentStall(CBRankError):
    pass


class PhaseIncomplete(CBRankError):
    pass


class NotStalled(CBRankError):
    pass


# measure
class NotPrefixFree(CBRankError):
    pass


# topology
class UndecidableEquality(CBRankError):
    pass
