"""Exception hierarchy shared by every module."""


class MarkovCusumError(Exception):
    pass


class NonErgodic(MarkovCusumError):
    pass


class AlphabetMismatch(MarkovCusumError):
    pass


class SupportViolation(MarkovCusumError):
    pass


class InvalidDelta(MarkovCusumError):
    pass


class TrainingTooShort(MarkovCusumError):
    pass


class InadmissibleDelta(MarkovCusumError):
    pass


class BadParams(MarkovCusumError):
    pass


class TooLarge(MarkovCusumError):
    pass


class EmptyWindow(MarkovCusumError):
    pass


class OutsideWindow(MarkovCusumError):
    pass


class DegenerateDrift(MarkovCusumError):
    pass


class ConfigError(MarkovCusumError):
    pass


class ModelFileError(ConfigError):
    pass
