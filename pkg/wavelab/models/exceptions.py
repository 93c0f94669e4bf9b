from typing import Any, Optional


class WavelabError(Exception):
    pass


class ConfigError(WavelabError):
    pass


class DemoFailedError(WavelabError):
    def __init__(self, clause: str) -> None:
        super().__init__(f'demo assertion failed: {clause}')
        self.clause = clause


class NumericalError(WavelabError):
    pass


class WeightOverflowError(NumericalError):
    pass


class MaximizationFailure(NumericalError):
    pass


class NotConvergedError(NumericalError):
    def __init__(self, message: str, result: Optional[Any] = None) -> None:
        super().__init__(message)
        self.result = result  # best iterate reached before the iteration cap


class BracketInvalidError(NumericalError):
    pass


class NewtonDivergedError(NumericalError):
    pass


class NegativeSolutionError(NumericalError):
    pass


class LinearSolveFailure(NumericalError):
    pass


class IterationFailure(NumericalError):
    def __init__(self, message: str, shift: float) -> None:
        super().__init__(f'{message} (shift={shift!r})')
        self.shift = shift


class NoBoundStateError(NumericalError):
    pass


class PreconditionUnverifiableError(NumericalError):
    pass


class OrderingViolationError(NumericalError):
    pass
