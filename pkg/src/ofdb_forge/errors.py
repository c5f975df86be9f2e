"""Exception types shared across the package."""


class ForgeError(Exception):
    """Base class for all domain errors raised by ofdb_forge."""


class DivergenceError(ForgeError):
    """Chaos-game trajectory left the bounded region (non-contractive system)."""


class EmptyCloudError(ForgeError):
    """An operation that needs points received an empty cloud."""


class DegenerateExtentError(ForgeError):
    """Point cloud has zero extent along every axis; no scale can be derived."""


class ShapeMismatchError(ForgeError):
    """Prediction/label shapes do not line up."""


class InsufficientCategoriesError(ForgeError):
    """Asked to keep more categories than the dataset contains."""


class SearchExhaustedError(ForgeError):
    """Category search ran out of attempts before reaching the target count.

    Carries the observed acceptance rate so callers can loosen thresholds.
    """

    def __init__(self, attempts: int, accepted: int, target: int):
        self.attempts = attempts
        self.accepted = accepted
        self.target = target
        self.acceptance_rate = accepted / attempts if attempts else 0.0
        super().__init__(
            f"category search exhausted: {accepted}/{target} categories accepted "
            f"after {attempts} candidates (acceptance rate {self.acceptance_rate:.4f})"
        )
