"""Exception hierarchy shared by every module."""


class SeqMeasureError(Exception):
    """Base class for all package errors."""


class ResourceLimitError(SeqMeasureError):
    """A prefix or enumeration request exceeded the configured maximum."""


class TermParseError(SeqMeasureError, ValueError):
    pass


class ZeroMassError(SeqMeasureError):
    pass


class UndefinedValueError(SeqMeasureError):
    """An evaluation needed an exact value but the evaluator returned unknown."""


class PartitionError(SeqMeasureError):
    pass


class NormalizationError(SeqMeasureError):
    pass


class UnstructuredInputError(SeqMeasureError):
    pass


class InexactBaseError(SeqMeasureError):
    pass


class ScheduleViolationError(SeqMeasureError):
    pass


class DecayUnresolvableError(SeqMeasureError):
    pass


class CertificateInvalidError(SeqMeasureError):
    pass


class OracleFailureError(SeqMeasureError):
    pass


class ExhaustedStreamError(SeqMeasureError):
    pass


class NonNullInputError(SeqMeasureError):
    pass
