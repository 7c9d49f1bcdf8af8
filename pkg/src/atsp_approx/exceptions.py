"""Exception hierarchy. Every solver failure derives from ATSPError."""


class ATSPError(Exception):
    pass


class InstanceError(ATSPError, ValueError):
    pass


class TSPLIBError(InstanceError):
    pass


class LPError(ATSPError):
    pass


class FitError(ATSPError):
    pass


class SamplingError(ATSPError):
    pass


class CirculationInfeasible(ATSPError):
    def __init__(self, message, cut=None):
        super().__init__(message)
        self.cut = cut


class MergeBudgetExceeded(ATSPError):
    pass
