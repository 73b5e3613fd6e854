"""Exception hierarchy shared by every stage of the pipeline."""


class ParkPlanError(Exception):
    """Base class for all package errors."""


class NetworkError(ParkPlanError):
    pass


class NonRadialNetwork(NetworkError):
    pass


class DisconnectedNetwork(NetworkError):
    pass


class NonConvergence(ParkPlanError):
    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations


class NotConverged(ParkPlanError):
    """A power-flow result that did not converge was passed where a converged one is required."""


class Infeasible(ParkPlanError):
    def __init__(self, message, stage=None):
        super().__init__(message if stage is None else f"[{stage}] {message}")
        self.stage = stage


class Unbounded(ParkPlanError):
    pass


class IterationLimit(ParkPlanError):
    pass


class NoCandidates(ParkPlanError):
    pass


class InfeasibleDemand(Infeasible):
    pass


class InfeasibleTargets(Infeasible):
    pass


class EmptyPlan(ParkPlanError):
    pass


class EmptyWindow(ParkPlanError):
    pass


class LengthMismatch(ParkPlanError):
    pass


class BadWeights(ParkPlanError):
    pass


class ConfigError(ParkPlanError):
    def __init__(self, message, path=None, line=None):
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        super().__init__(where + message)
        self.message = message
        self.path = path
        self.line = line
