"""Exception hierarchy shared by all modules."""


class SpacelikeError(Exception):
    """Base class for errors raised by this package."""


class DomainInvalidError(SpacelikeError, ValueError):
    """A domain description is not admissible (e.g. non-positive radius)."""


class GridMismatchError(SpacelikeError, ValueError):
    """Two fields (or a field and a bundle) live on different grids."""


class SchemaError(SpacelikeError, ValueError):
    """A JSON document does not follow the expected schema.

    ``path`` names the offending key, e.g. ``"$.grid.nr"``.
    """

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path


class NotSpacelikeError(SpacelikeError, ValueError):
    """The graph reaches (or crosses) the light cone, ``|Du| >= 1 - eps``."""

    def __init__(self, message, worst_node=None, worst_value=None):
        super().__init__(message)
        self.worst_node = worst_node
        self.worst_value = worst_value


class InvalidAngleError(SpacelikeError, ValueError):
    """Intersection angle outside the admissible range ``theta0 <= -1``."""


class ConePreconditionError(SpacelikeError, ValueError):
    """A spectrum is required to lie in a Garding cone but does not."""


class NonConvergenceError(SpacelikeError, RuntimeError):
    """An iterative solver stopped without meeting its tolerance.

    ``history`` carries the residual norms seen so far.
    """

    def __init__(self, message, history=None, diagnostics=None):
        super().__init__(message)
        self.history = list(history or [])
        self.diagnostics = dict(diagnostics or {})
