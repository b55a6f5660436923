"""Exception types raised by weightcalc operations."""


class WeightCalcError(Exception):
    """Base class for all library errors."""


class InvalidSpec(WeightCalcError, ValueError):
    """A sequence, weight function or matrix spec violates its preconditions."""


class DomainExceeded(WeightCalcError):
    """An evaluation point lies beyond the validated domain of the object."""


class ArgmaxOnBoundary(WeightCalcError):
    """A sup over a grid was attained at the grid boundary."""


class ReliabilityExceeded(WeightCalcError):
    """A series evaluation was requested outside its cancellation guard."""


class TruncationInsufficient(WeightCalcError):
    """More terms are needed than the truncation provides."""


class GrowthGateFailed(WeightCalcError):
    def __init__(self, row, message):
        super().__init__(message)
        self.row = row


class OutsideSector(WeightCalcError):
    pass


class AdmissibilityFailed(WeightCalcError):
    pass


class NoFiniteH(WeightCalcError):
    pass


class MixedRows(WeightCalcError):
    pass
