"""Exception types shared across the package."""


class InvalidArgumentError(ValueError):
    """An operation was called with arguments violating its contract."""


class ConfigError(Exception):
    """Experiment configuration is invalid; collects all problems found."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class SimulationInvariantError(RuntimeError):
    """A protocol invariant was violated during a simulation run."""
