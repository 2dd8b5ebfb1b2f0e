"""Exception types raised across the package."""


class ValidationError(ValueError):
    """Input failed a shape, symmetry or range check."""


class NotPSDError(ValidationError):
    """Matrix has an eigenvalue below the PSD clamping threshold."""


class InfeasibleProblemError(ValueError):
    """The robust problem admits no feasible beamformer (sigma_max(Q) <= eta)."""


class DegenerateLinearizationError(ValueError):
    """Linearization point has ||Q w_k|| too small to define a cut."""


class SubproblemFailure(RuntimeError):
    """A conic subproblem did not reach Optimal status.

    The partial trace collected so far is attached as ``trace``.
    """

    def __init__(self, message, trace=None, status=None):
        super().__init__(message)
        self.trace = trace
        self.status = status
