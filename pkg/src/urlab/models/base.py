"""The environment-model contract shared by every Bayesian model and by the planner."""

from __future__ import annotations

import copy

from urlab.core import Percept
from urlab.errors import ImpossiblePerceptError, StateError


class _Token:
    __slots__ = ("owner", "state")

    def __init__(self, owner, state):
        self.owner = owner
        self.state = state


class EnvironmentModel:
    """A predictive distribution over percepts that conditions on its own history.

    Subclasses implement ``percept_distribution``, ``sample``, ``update``,
    ``_save`` and ``_restore``. After every ``update`` the attributes
    ``last_probability`` (the probability the model gave the percept before
    conditioning on it) and ``last_info_gain`` are set.

    Checkpoints form a stack: ``rollback(token)`` restores the state captured by
    ``token`` and invalidates it together with every checkpoint taken after it.
    """

    num_actions = 5
    reward_bounds = (-10.0, 100.0)

    def __init__(self):
        self._stack: list[_Token] = []
        self.last_probability = 1.0
        self.last_info_gain = None

    # -- prediction ---------------------------------------------------------

    def percept_distribution(self, action: int) -> dict[Percept, float]:
        raise NotImplementedError

    def conditional_probability(self, action: int, percept: Percept) -> float:
        return self.percept_distribution(action).get(percept, 0.0)

    def sample(self, action: int, rng) -> Percept:
        dist = self.percept_distribution(action)
        percepts = list(dist)
        return percepts[rng.categorical([dist[e] for e in percepts])]

    def simulate(self, action: int, rng) -> Percept:
        """Sample a percept and condition on it; the planner's inner step."""
        e = self.sample(action, rng)
        self.update(action, e)
        return e

    # -- learning -----------------------------------------------------------

    def update(self, action: int, percept: Percept) -> None:
        raise NotImplementedError

    def info_gain_of_last_update(self) -> float:
        if self.last_info_gain is None:
            raise StateError("no update has been made yet")
        return self.last_info_gain

    # -- checkpoints --------------------------------------------------------

    def _save(self):
        raise NotImplementedError

    def _restore(self, state) -> None:
        raise NotImplementedError

    def checkpoint(self) -> _Token:
        token = _Token(self, (self._save(), self.last_probability, self.last_info_gain))
        self._stack.append(token)
        return token

    def rollback(self, token: _Token) -> None:
        stack = self._stack
        if stack and stack[-1] is token:
            stack.pop()
        else:
            for i in range(len(stack) - 1, -1, -1):
                if stack[i] is token:
                    del stack[i:]
                    break
            else:
                raise StateError("rollback with a stale or foreign checkpoint token")
        state, self.last_probability, self.last_info_gain = token.state
        self._restore(state)

    @property
    def in_checkpoint(self) -> bool:
        return bool(self._stack)

    # -- misc ---------------------------------------------------------------

    def snapshot(self) -> dict:
        """JSON-serializable view of the posterior."""
        return {"kind": type(self).__name__}

    def copy(self) -> "EnvironmentModel":
        """Independent deep copy; pending checkpoints are not carried over."""
        stack, self._stack = self._stack, []
        try:
            dup = copy.deepcopy(self)
        finally:
            self._stack = stack
        return dup


class IIDModel(EnvironmentModel):
    """A model whose percept distribution depends only on the action.

    ``table[a]`` maps percepts to probabilities. Used for bandits and for
    small randomized hypothesis classes in tests.
    """

    def __init__(self, table, reward_bounds=None):
        super().__init__()
        self.table = [
            {Percept(*e) if not isinstance(e, Percept) else e: float(p) for e, p in row.items()}
            for row in table
        ]
        self.num_actions = len(self.table)
        if reward_bounds is None:
            rewards = [e.reward for row in self.table for e in row]
            reward_bounds = (min(rewards), max(rewards))
        self.reward_bounds = tuple(reward_bounds)
        self._percepts = [list(row) for row in self.table]
        self._probs = [[row[e] for e in row] for row in self.table]

    def percept_distribution(self, action):
        return {e: p for e, p in self.table[action].items() if p > 0.0}

    def conditional_probability(self, action, percept):
        return self.table[action].get(percept, 0.0)

    def sample(self, action, rng):
        return self._percepts[action][rng.categorical(self._probs[action])]

    def update(self, action, percept):
        p = self.table[action].get(percept, 0.0)
        if p <= 0.0:
            raise ImpossiblePerceptError(f"percept {percept} has zero probability")
        self.last_probability = p
        self.last_info_gain = 0.0

    def _save(self):
        return None

    def _restore(self, state):
        pass


def bandit(payout_probs, payout=1.0, loss=0.0) -> IIDModel:
    """Known Bernoulli bandit with one arm per action."""
    table = []
    for p in payout_probs:
        row = {}
        if p > 0.0:
            row[Percept(0, float(payout))] = p
        if p < 1.0:
            row[Percept(0, float(loss))] = 1.0 - p
        table.append(row)
    return IIDModel(table, reward_bounds=(min(payout, loss), max(payout, loss)))
