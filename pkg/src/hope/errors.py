"""Exception types shared across the library, server and client."""


class HopeError(Exception):
    """Base class for every error raised by this package."""


# number theory

class InvalidModulusError(HopeError, ValueError):
    pass


class NotInvertibleError(HopeError, ValueError):
    pass


class UndefinedGcdError(HopeError, ValueError):
    pass


class OutOfRangeError(HopeError, ValueError):
    pass


class EntropyError(HopeError):
    """The randomness source failed to produce output."""


class ExhaustedError(HopeError):
    """Rejection sampling ran out of attempts."""


# cryptography

class PlaintextRangeError(HopeError, ValueError):
    pass


class PlaintextBoundError(PlaintextRangeError):
    """Signed plaintext outside the configured [-M, M] window."""


class BadRandomnessError(HopeError, ValueError):
    pass


class MalformedCiphertextError(HopeError, ValueError):
    pass


class KeyMismatchError(HopeError):
    """Operands were produced under different public keys."""


class EpochError(KeyMismatchError):
    """Comparison key epoch is stale or regressed."""


class ConfigError(HopeError, ValueError):
    pass


# index

class DuplicateIdError(HopeError, KeyError):
    pass


class EmptyRangeError(HopeError, ValueError):
    """Range query whose lower bound exceeds its upper bound."""


class LoadError(HopeError):
    def __init__(self, path, line_no, reason):
        super().__init__(f"{path}:{line_no}: {reason}")
        self.path = path
        self.line_no = line_no
        self.reason = reason
