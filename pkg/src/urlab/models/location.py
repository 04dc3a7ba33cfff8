"""Bayes mixture over dispenser locations.

The agent knows the layout (walls, noise tiles) and the dynamics; hypothesis
``i`` says the single dispenser sits on tile ``i`` (row-major) and pays out
with probability ``theta``. Because all hypotheses share the layout, one
tracked position serves every component, observations carry no evidence, and
only the reward on the occupied tile discriminates between hypotheses. That
structure makes the Bayes update touch a single weight except when a payout
falsifies every other hypothesis.

Weights are stored unnormalized together with their total ``Z`` and the sum
``S = sum w ln w``, so the posterior entropy ``ln Z - S / Z`` is maintained in
constant time per update.
"""

from __future__ import annotations

import math

from urlab.core import Percept
from urlab.errors import DomainError, ImpossiblePerceptError
from urlab.gridworld import (
    DISPENSER,
    EMPTY,
    NOISE,
    REWARD_BOUNDS,
    REWARD_BUMP,
    REWARD_EMPTY,
    REWARD_PAYOUT,
    GridSpec,
)
from urlab.models.base import EnvironmentModel
from urlab.models.known import KnownGridModel


def _xlogx(x: float) -> float:
    return x * math.log(x) if x > 0.0 else 0.0


class LocationMixture(EnvironmentModel):
    """Mixture over the N*N single-dispenser placements on a known layout.

    The class has all N*N placements with a uniform prior, walls included.
    A dispenser under a wall can never be stood on, so reward evidence never
    falsifies it and it keeps its mass. ``include_wall_placements=False``
    restricts the prior to open tiles (empty or dispenser).
    """

    reward_bounds = REWARD_BOUNDS

    def __init__(self, layout: GridSpec, theta: float | None = None, include_wall_placements: bool = True):
        super().__init__()
        if theta is None:
            theta = layout.dispensers()[0][1]
        if not 0.0 < theta <= 1.0:
            raise DomainError(f"theta must lie in (0, 1], got {theta}")
        self.layout = layout
        self.theta = float(theta)
        self.n = n = layout.n
        n2 = n * n
        self.size = n2
        self.neighbors = layout.neighbors
        self.walls = layout.walls
        self.obs_codes = layout.obs_codes
        self.noise = [0] * n2
        allowed = []
        for i in range(n2):
            tile = layout.tile_at(i)
            if tile.kind == NOISE:
                self.noise[i] = tile.noise_alphabet
            allowed.append(include_wall_placements or tile.kind in (EMPTY, DISPENSER))
        k = sum(allowed)
        self.w = [1.0 / k if ok else 0.0 for ok in allowed]
        self.Z = 1.0
        self.S = math.fsum(_xlogx(x) for x in self.w)
        self.ll = [0.0 if ok else -math.inf for ok in allowed]
        self.ll_common = 0.0
        self.pos = layout.index(layout.start)
        self._journal: list = []
        self._log_theta = math.log(theta)
        self._log_miss = math.log(1.0 - theta) if theta < 1.0 else -math.inf

    # -- posterior views ----------------------------------------------------

    def posterior(self) -> list[float]:
        z = self.Z
        return [x / z for x in self.w]

    def entropy(self) -> float:
        return max(math.log(self.Z) - self.S / self.Z, 0.0)

    def log_likelihoods_list(self) -> list[float]:
        c = self.ll_common
        return [x + c if x != -math.inf else x for x in self.ll]

    # -- prediction ---------------------------------------------------------

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
            p = self.w[j] / self.Z * self.theta
            if p >= 1.0:
                rewards = {REWARD_PAYOUT: 1.0}
            elif p > 0.0:
                rewards = {REWARD_PAYOUT: p, REWARD_EMPTY: 1.0 - p}
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
            p = self.w[j] / self.Z * self.theta
            if r == REWARD_PAYOUT:
                pr = p
            elif r == REWARD_EMPTY:
                pr = 1.0 - p
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
            r = REWARD_PAYOUT if rng.random() * self.Z < self.w[j] * self.theta else REWARD_EMPTY
        alphabet = self.noise[k]
        return Percept(rng.randrange(alphabet) if alphabet else self.obs_codes[k], r)

    # -- learning -----------------------------------------------------------

    def update(self, action, percept):
        obs, r = percept
        j = self._dest(action)
        k = self.pos if j < 0 else j
        alphabet = self.noise[k]
        if alphabet:
            if not 0 <= obs < alphabet:
                raise ImpossiblePerceptError(f"observation {obs} outside the noise alphabet")
            p_obs = 1.0 / alphabet
        elif obs != self.obs_codes[k]:
            raise ImpossiblePerceptError(f"observation {obs} contradicts the known layout")
        else:
            p_obs = 1.0
        journal = self._journal if self._stack else None
        w, Z = self.w, self.Z
        h_before = math.log(Z) - self.S / Z
        if j < 0:
            if r != REWARD_BUMP:
                raise ImpossiblePerceptError("moving into a wall must be a bump")
            xi = 1.0
        elif r == REWARD_PAYOUT:
            xi = w[j] * self.theta / Z
            if xi <= 0.0:
                raise ImpossiblePerceptError(f"payout on tile {j} which has zero posterior mass")
            if journal is not None:
                journal.append((0, self.w, self.ll, Z, self.S))
            new_ll = [-math.inf] * self.size
            new_ll[j] = self.ll[j] + self._log_theta
            self.ll = new_ll
            self.w = [0.0] * self.size
            self.w[j] = 1.0
            self.Z = 1.0
            self.S = 0.0
        elif r == REWARD_EMPTY:
            old = w[j]
            if old > 0.0:
                new = old * (1.0 - self.theta)
                xi = 1.0 - old * self.theta / Z
                if xi <= 0.0:
                    raise ImpossiblePerceptError(f"certain payout on tile {j} did not happen")
                if journal is not None:
                    journal.append((1, j, old, self.ll[j], Z, self.S))
                w[j] = new
                self.Z = Z + (new - old)
                self.S += _xlogx(new) - _xlogx(old)
                self.ll[j] += self._log_miss
            else:
                xi = 1.0
        else:
            raise ImpossiblePerceptError(f"reward {r} cannot occur on an open tile")
        if alphabet:
            if journal is not None:
                journal.append((2, self.ll_common))
            self.ll_common -= math.log(alphabet)
        if journal is not None:
            journal.append((3, self.pos))
        self.pos = k
        self.last_probability = xi * p_obs
        self.last_info_gain = h_before - (math.log(self.Z) - self.S / self.Z)
        if journal is None:
            self._renormalize()

    def _renormalize(self) -> None:
        total = math.fsum(self.w)
        self.w = [x / total for x in self.w]
        self.Z = 1.0
        self.S = math.fsum(_xlogx(x) for x in self.w)

    # -- checkpoints --------------------------------------------------------

    def _save(self):
        return len(self._journal), self.pos

    def _restore(self, state):
        length, pos = state
        journal = self._journal
        while len(journal) > length:
            entry = journal.pop()
            tag = entry[0]
            if tag == 1:
                _, j, old, ll_old, Z, S = entry
                self.w[j] = old
                self.ll[j] = ll_old
                self.Z = Z
                self.S = S
            elif tag == 0:
                _, self.w, self.ll, self.Z, self.S = entry
            elif tag == 2:
                self.ll_common = entry[1]
            else:
                self.pos = entry[1]
        self.pos = pos
        if not self._stack:
            journal.clear()

    # -- hypotheses ---------------------------------------------------------

    def hypothesis(self, index: int) -> KnownGridModel:
        """The single environment ``index``, positioned where the agent is now."""
        return KnownGridModel.hypothesis(self.layout, index, self.theta, self.pos)

    def snapshot(self):
        post = self.posterior()
        n = self.n
        return {
            "kind": "location-mixture",
            "n": n,
            "theta": self.theta,
            "pos": list(self.layout.coord(self.pos)),
            "weights": [post[y * n : (y + 1) * n] for y in range(n)],
        }
