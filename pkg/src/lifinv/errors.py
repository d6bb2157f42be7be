"""Exception and warning types raised across the package."""


class LifinvError(Exception):
    """Base class for all package errors."""


class InputShapeError(LifinvError, ValueError):
    pass


class OutOfRangeError(LifinvError, ValueError):
    pass


class TooFewBoundStatesError(LifinvError):
    def __init__(self, requested: int, found: int):
        self.requested = requested
        self.found = found
        super().__init__(
            f"requested {requested} bound states but only {found} lie below the potential asymptote"
        )


class FitInfeasibleError(LifinvError):
    pass


class InsufficientDataError(LifinvError):
    pass


class BoundaryHitError(LifinvError):
    def __init__(self, value: float, window: tuple[float, float]):
        self.value = value
        self.window = window
        super().__init__(
            f"misfit minimum at search boundary R_e={value:.4f} bohr "
            f"(window {window[0]:.4f}..{window[1]:.4f}); widen the search window"
        )


class NoSupportError(LifinvError):
    pass


class NumericalFailureError(LifinvError):
    def __init__(self, r: float, message: str = "non-finite value"):
        self.r = r
        super().__init__(f"{message} at R={r:.6f} bohr")


class EmptyRegionError(LifinvError, ValueError):
    pass


class ConfigError(LifinvError, ValueError):
    pass


class BoxContaminationWarning(UserWarning):
    pass


class SignAmbiguityWarning(UserWarning):
    pass


class CompletenessWarning(UserWarning):
    pass
