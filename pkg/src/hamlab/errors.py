"""Exception types shared across the package."""


class HamlabError(Exception):
    pass


class InvalidParameterError(HamlabError, ValueError):
    """A precondition on parameters or windows was violated."""


class UncertifiedRegionError(HamlabError, RuntimeError):
    """A query reached data that the sampled window cannot vouch for."""


class UncertifiedTrajectoryError(UncertifiedRegionError):
    """A tracked path left the certified region; carries the violation time."""

    def __init__(self, message, violation_time=None):
        super().__init__(message)
        self.violation_time = violation_time


class UndefinedPValueError(HamlabError, ValueError):
    """The sample is too small for the asymptotic p-value approximation."""


class CertificationFailure(HamlabError, RuntimeError):
    """A replica stayed uncertified after the one-shot window enlargement."""

    def __init__(self, message, replica=None, diagnostics=None):
        super().__init__(message)
        self.replica = replica
        self.diagnostics = diagnostics
