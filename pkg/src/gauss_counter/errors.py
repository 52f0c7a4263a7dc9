"""Exception hierarchy.

Every error carries a stable ``code`` (the class name) that the CLI writes
into its machine-readable error JSON. Validation problems map to exit code 2,
numerical failures to exit code 3.
"""


class GaussCounterError(Exception):
    exit_code = 3

    def __init__(self, message="", stage=None, details=None):
        super().__init__(message)
        self.stage = stage
        self.details = dict(details or {})

    @property
    def code(self):
        return type(self).__name__

    def to_dict(self):
        out = {"error": self.code, "message": str(self)}
        if self.stage is not None:
            out["stage"] = self.stage
        if self.details:
            out["details"] = self.details
        return out


class ValidationError(GaussCounterError, ValueError):
    exit_code = 2


class DimensionMismatch(ValidationError):
    pass


class NotSymmetric(ValidationError):
    pass


class NotPositiveDefinite(ValidationError):
    pass


class Unphysical(ValidationError):
    pass


class ClusterAmbiguity(ValidationError):
    pass


class LambdaPrimeOutOfRange(ValidationError):
    pass


class OddLength(ValidationError):
    pass


class InvalidParameters(ValidationError):
    pass


class ZeroP0(ValidationError):
    pass


class NonFiniteInput(ValidationError):
    pass


class EmptyRun(ValidationError):
    pass


class StructureMismatch(ValidationError):
    pass


class NumericalError(GaussCounterError, ArithmeticError):
    exit_code = 3


class NumericalInstability(NumericalError):
    pass


class NoKernelFound(NumericalError):
    pass


class RankAmbiguity(NumericalError):
    pass


class ComplexRoot(NumericalError):
    pass


class RootOutOfRange(NumericalError):
    pass


class IllConditioned(NumericalError):
    pass


class NegativeWeight(NumericalError):
    pass


class MultiplicityRoundingFailed(NumericalError):
    pass
