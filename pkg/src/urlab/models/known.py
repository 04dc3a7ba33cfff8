"""A gridworld model with fully known layout, dynamics and payout probabilities.

Used as the informed model for AI-mu and as the single hypothesis that
Thompson sampling and MDL plan against.
"""

from __future__ import annotations

from urlab.core import Percept
from urlab.errors import ImpossiblePerceptError
from urlab.gridworld import (
    DISPENSER,
    NOISE,
    REWARD_BOUNDS,
    REWARD_BUMP,
    REWARD_EMPTY,
    REWARD_PAYOUT,
    GridSpec,
)
from urlab.models.base import EnvironmentModel


class KnownGridModel(EnvironmentModel):
    reward_bounds = REWARD_BOUNDS

    def __init__(self, spec: GridSpec, pos: int | None = None):
        super().__init__()
        self.spec = spec
        self.n = spec.n
        n2 = spec.n * spec.n
        self.neighbors = spec.neighbors
        self.walls = spec.walls
        self.obs_codes = spec.obs_codes
        self.theta = [0.0] * n2
        self.noise = [0] * n2
        for i in range(n2):
            tile = spec.tile_at(i)
            if tile.kind == DISPENSER:
                self.theta[i] = tile.theta
            elif tile.kind == NOISE:
                self.noise[i] = tile.noise_alphabet
        self.pos = spec.index(spec.start) if pos is None else pos
        self.last_info_gain = None

    @classmethod
    def hypothesis(cls, layout: GridSpec, dispenser: int, theta: float, pos: int) -> "KnownGridModel":
        """The world in which ``layout`` has a single dispenser at index ``dispenser``."""
        model = cls(layout, pos)
        model.theta = [0.0] * len(model.theta)
        model.theta[dispenser] = theta
        model.dispenser = dispenser
        return model

    def _dest(self, action: int) -> int:
        j = self.neighbors[self.pos][action]
        if j < 0 or self.walls[j]:
            return -1
        return j

    def percept_distribution(self, action):
        j = self._dest(action)
        if j < 0:
            k = self.pos
            rewards = {REWARD_BUMP: 1.0}
        else:
            k = j
            th = self.theta[j]
            if th >= 1.0:
                rewards = {REWARD_PAYOUT: 1.0}
            elif th > 0.0:
                rewards = {REWARD_PAYOUT: th, REWARD_EMPTY: 1.0 - th}
            else:
                rewards = {REWARD_EMPTY: 1.0}
        alphabet = self.noise[k]
        if alphabet:
            return {Percept(o, r): p / alphabet for o in range(alphabet) for r, p in rewards.items()}
        obs = self.obs_codes[k]
        return {Percept(obs, r): p for r, p in rewards.items()}

    def conditional_probability(self, action, percept):
        j = self._dest(action)
        obs, r = percept
        if j < 0:
            k = self.pos
            pr = 1.0 if r == REWARD_BUMP else 0.0
        else:
            k = j
            th = self.theta[j]
            if r == REWARD_PAYOUT:
                pr = th
            elif r == REWARD_EMPTY:
                pr = 1.0 - th
            else:
                pr = 0.0
        alphabet = self.noise[k]
        if alphabet:
            return pr / alphabet if 0 <= obs < alphabet else 0.0
        return pr if obs == self.obs_codes[k] else 0.0

    def sample(self, action, rng):
        j = self._dest(action)
        if j < 0:
            k = self.pos
            r = REWARD_BUMP
        else:
            k = j
            th = self.theta[j]
            r = REWARD_PAYOUT if th > 0.0 and rng.random() < th else REWARD_EMPTY
        alphabet = self.noise[k]
        return Percept(rng.randrange(alphabet) if alphabet else self.obs_codes[k], r)

    def simulate(self, action, rng):
        j = self._dest(action)
        if j < 0:
            k = self.pos
            r = REWARD_BUMP
            pr = 1.0
        else:
            k = self.pos = j
            th = self.theta[j]
            if th > 0.0 and rng.random() < th:
                r = REWARD_PAYOUT
                pr = th
            else:
                r = REWARD_EMPTY
                pr = 1.0 - th
        alphabet = self.noise[k]
        if alphabet:
            obs = rng.randrange(alphabet)
            pr /= alphabet
        else:
            obs = self.obs_codes[k]
        self.last_probability = pr
        self.last_info_gain = 0.0
        return Percept(obs, r)

    def update(self, action, percept):
        p = self.conditional_probability(action, percept)
        if p <= 0.0:
            raise ImpossiblePerceptError(f"percept {percept} impossible after action {action}")
        j = self._dest(action)
        if j >= 0:
            self.pos = j
        self.last_probability = p
        self.last_info_gain = 0.0

    def _save(self):
        return self.pos

    def _restore(self, state):
        self.pos = state

    def snapshot(self):
        return {"kind": "known", "n": self.n, "pos": list(self.spec.coord(self.pos))}
