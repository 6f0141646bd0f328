"""Exception types shared across the package."""


class InputError(ValueError):
    """Invalid argument: malformed state, out-of-range parameter, shape mismatch."""


class ClassificationError(InputError):
    """States do not satisfy the one-photon-per-pair rule required for a fringe."""


class FitError(RuntimeError):
    """Least-squares fit could not be performed or did not converge."""


class CalibrationError(FitError):
    """Power-to-phase calibration is not constrained by the data."""
