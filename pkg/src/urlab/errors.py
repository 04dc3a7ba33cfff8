class URLabError(Exception):
    """Base class for all errors raised by urlab."""


class DomainError(URLabError, ValueError):
    """An argument lies outside the domain of the operation."""


class StateError(URLabError, RuntimeError):
    """An operation was called in a state that does not support it."""


class ImpossiblePerceptError(URLabError):
    """A model assigned zero probability to a percept it was asked to condition on.

    Raised by Bayesian updates; in practice this signals model misspecification.
    """


class EmptyClassError(URLabError):
    """Every hypothesis in a model class has been falsified."""


class ConfigError(URLabError, ValueError):
    """An experiment, agent or planner configuration is invalid."""

    def __init__(self, message, key=None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class GenerationError(URLabError):
    """A gridworld generator could not satisfy its configuration."""
