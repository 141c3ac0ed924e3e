"""
Exception hierarchy for the DICING library
Every error raised by the cipher, its setup phases and the verification harness
derives from DicingError so callers can catch the whole family at once
"""


class DicingError(Exception):
    """Base class for all DICING errors"""

    pass


class ContractViolation(DicingError, ValueError):
    """A documented precondition of an operation was not met"""

    pass


class FieldMismatchError(ContractViolation):
    """Elements of two different fields were combined in one operation"""

    pass


class ModeMismatchError(ContractViolation):
    """A variant-specific operation was called on a generator in another mode"""

    pass


class StatisticalInputError(ContractViolation):
    """The stream handed to the statistical battery is too short"""

    pass


class UnsupportedKeySizeError(DicingError, ValueError):
    """The key is neither 128 nor 256 bits long"""

    def __init__(self, length: int):
        super().__init__(
            f"unsupported key size: {length} bytes (expected 16 or 32 bytes)"
        )
        self.length = length


class BadFactorizationError(DicingError, ValueError):
    """A claimed factorization of 2^d - 1 is wrong

    This is deliberately distinct from a field simply not being primitive,
    which verify_primitive reports by returning False.
    """

    pass


class OracleDisagreementError(DicingError, RuntimeError):
    """Two independent computations of the same constant disagree"""

    pass
