# -*- coding: utf-8 -*-
"""Exceptions raised by knowprobe.

Everything derives from KnowProbeError so the CLI can turn library failures
into a usage error with a readable message.
"""


class KnowProbeError(Exception):
    pass


class EmptyInput(KnowProbeError, ValueError):
    pass


class InvalidArgument(KnowProbeError, ValueError):
    pass


class InvalidTemperature(InvalidArgument):
    pass


class OutOfVocabulary(KnowProbeError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class DimensionMismatch(KnowProbeError, ValueError):
    pass


class CapabilityUnsupported(KnowProbeError):
    pass


class NoSubjectCandidate(KnowProbeError):
    pass


class SubjectNotLocated(KnowProbeError):
    pass


class OverlappingOccurrences(KnowProbeError, ValueError):
    pass


class NoScorableTokens(KnowProbeError):
    pass


class CalibrationError(KnowProbeError, ValueError):
    pass


class ConfigError(KnowProbeError, ValueError):
    pass


class DatasetError(KnowProbeError, ValueError):
    """A dataset file could not be read; `lineno` is 1-based, None for file-level problems."""

    def __init__(self, message, path=None, lineno=None):
        self.path = path
        self.lineno = lineno
        location = ''
        if path is not None:
            location = str(path)
            if lineno is not None:
                location += ':{}'.format(lineno)
            location += ': '
        super(DatasetError, self).__init__(location + message)
