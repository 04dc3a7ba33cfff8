"""urlab: history-based Bayesian reinforcement learning agents on gridworlds."""

from urlab.core import (
    Percept,
    History,
    GeometricDiscount,
    UtilityFunction,
    effective_horizon,
    discounted_return,
    entropy,
    kl_divergence,
    history_probability,
)
from urlab.rng import RandomSource

__version__ = "0.1.0"

__all__ = [
    "Percept",
    "History",
    "GeometricDiscount",
    "UtilityFunction",
    "RandomSource",
    "effective_horizon",
    "discounted_return",
    "entropy",
    "kl_divergence",
    "history_probability",
]
