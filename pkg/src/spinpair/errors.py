"""Exception types shared across the simulator.

Every error raised by the package derives from SimulationError; its
`category` attribute is the machine-readable tag emitted by the CLI.
Plain invalid arguments (wrong shapes, empty matrices) raise ValueError.
"""


class SimulationError(Exception):
    category = "error"


class ConfigError(SimulationError):
    """Bad or missing configuration key/value."""

    category = "configuration"


class UnsupportedSizeError(SimulationError):
    """Sample size beyond what the dense amplitude grid supports."""

    category = "unsupported-size"


class ParameterRegimeError(SimulationError):
    """Strict clamp policy rejected the parameter/occupancy combination."""

    category = "parameter-regime"


class DegenerateBranchError(SimulationError):
    """A zero-probability measurement branch was selected.

    Normalizing the post-measurement state would divide by zero; this
    signals either a sampler bug or a state prepared outside the branch's
    support.
    """

    category = "degenerate-branch"

    def __init__(self, message: str, event_index: int | None = None):
        super().__init__(message)
        self.event_index = event_index


class NumericsError(SimulationError):
    """Iterative linear-algebra kernel failed to converge."""

    category = "numerics"
