"""Factorized per-tile gridworld model.

Each tile carries an independent wall belief and an independent Beta
estimator of its payout probability:

* wall belief: unknown / known-wall / known-open. This is a Haldane
  Beta(0, 0) prior, which is improper; its predictive is taken as 1/2 until
  the first observation collapses it to a point mass. Beliefs never revert.
* payout: Beta(1, 1) (Laplace) over successes (reward 100) and failures
  (reward -1) observed while standing on the tile, so the predictive payout
  probability is the rule of succession (s + 1) / (n + 2).

Off-grid neighbours are known walls. In simulation, a move into a tile of
unknown wall status succeeds with probability 1/2; the failed branch emits
the bump percept.
"""

from __future__ import annotations

import math
from functools import lru_cache

from scipy.special import betaln, digamma

from urlab.core import Percept
from urlab.errors import DomainError
from urlab.gridworld import REWARD_BOUNDS, REWARD_BUMP, REWARD_EMPTY, REWARD_PAYOUT, GridSpec
from urlab.models.base import EnvironmentModel

UNKNOWN, OPEN, WALL = 0, 1, 2
_LN2 = math.log(2.0)
_STATE_NAMES = {UNKNOWN: "unknown", OPEN: "open", WALL: "wall"}
_DIRECTIONS = (0, 1, 2, 3)
# Direction that points back at the tile we came from, per move direction.
_OPPOSITE = (1, 0, 3, 2)


@lru_cache(maxsize=None)
def beta_entropy(a: float, b: float) -> float:
    """Differential entropy of Beta(a, b) in nats."""
    return float(
        betaln(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b) + (a + b - 2.0) * digamma(a + b)
    )


def _grid_neighbors(n: int):
    out = []
    for i in range(n * n):
        x, y = i % n, i // n
        out.append(
            (
                i - 1 if x > 0 else -1,
                i + 1 if x < n - 1 else -1,
                i - n if y > 0 else -1,
                i + n if y < n - 1 else -1,
                i,
            )
        )
    return tuple(out)


class DirichletGridModel(EnvironmentModel):
    """Per-tile wall beliefs and Laplace payout estimators with an undo log."""

    reward_bounds = REWARD_BOUNDS

    def __init__(self, n: int, start: int = 0):
        super().__init__()
        if n < 2:
            raise DomainError("grid side must be >= 2")
        self.n = n
        n2 = n * n
        self.neighbors = _grid_neighbors(n)
        self.wall = [UNKNOWN] * n2
        self.wall[start] = OPEN
        self.successes = [0] * n2
        self.visits = [0] * n2
        self.pos = start
        self._journal: list = []
        self.last_touched = 0

    @classmethod
    def for_spec(cls, spec: GridSpec) -> "DirichletGridModel":
        """A blank model sized for ``spec``; only N and the start are used."""
        return cls(spec.n, spec.index(spec.start))

    # -- beliefs ------------------------------------------------------------

    def wall_probability(self, index: int) -> float:
        if index < 0:
            return 1.0
        s = self.wall[index]
        return 0.5 if s == UNKNOWN else (1.0 if s == WALL else 0.0)

    def payout_probability(self, index: int) -> float:
        return (self.successes[index] + 1.0) / (self.visits[index] + 2.0)

    def _bit_probs(self, index: int, forced_dir: int = -1, forced_bit: int = 0):
        """P(bit d = 1) for the four neighbours of ``index``."""
        nbrs = self.neighbors[index]
        wall = self.wall
        probs = []
        for d in _DIRECTIONS:
            if d == forced_dir:
                probs.append(float(forced_bit))
                continue
            j = nbrs[d]
            if j < 0:
                probs.append(1.0)
            else:
                s = wall[j]
                probs.append(0.5 if s == UNKNOWN else (1.0 if s == WALL else 0.0))
        return probs

    def _branches(self, action: int):
        """[(prob, tile, bit_probs, reward_dist)] for the bump and move branches."""
        pos = self.pos
        out = []
        if action == 4:
            p_move = 1.0
            target = pos
        else:
            target = self.neighbors[pos][action]
            p_move = 1.0 - self.wall_probability(target)
        if p_move < 1.0:
            bits = self._bit_probs(pos, action, 1)
            out.append((1.0 - p_move, pos, bits, {REWARD_BUMP: 1.0}))
        if p_move > 0.0:
            back = _OPPOSITE[action] if action != 4 else -1
            bits = self._bit_probs(target, back, 0)
            q = self.payout_probability(target)
            out.append((p_move, target, bits, {REWARD_PAYOUT: q, REWARD_EMPTY: 1.0 - q}))
        return out

    # -- prediction ---------------------------------------------------------

    def percept_distribution(self, action):
        dist: dict[Percept, float] = {}
        for p_branch, _, bits, rewards in self._branches(action):
            obs_dist = {0: 1.0}
            for d, q in enumerate(bits):
                nxt = {}
                for code, p in obs_dist.items():
                    if q > 0.0:
                        nxt[code | (1 << d)] = nxt.get(code | (1 << d), 0.0) + p * q
                    if q < 1.0:
                        nxt[code] = nxt.get(code, 0.0) + p * (1.0 - q)
                obs_dist = nxt
            for code, po in obs_dist.items():
                for r, pr in rewards.items():
                    if pr > 0.0:
                        e = Percept(code, r)
                        dist[e] = dist.get(e, 0.0) + p_branch * po * pr
        return dist

    def conditional_probability(self, action, percept):
        obs, r = percept
        if not 0 <= obs < 16:
            return 0.0
        pos = self.pos
        if action == 4:
            target = pos
            p_move = 1.0
        else:
            target = self.neighbors[pos][action]
            p_move = 1.0 - self.wall_probability(target)
        if r == REWARD_BUMP:
            if p_move >= 1.0:
                return 0.0
            p = 1.0 - p_move
            tile, forced, forced_bit = pos, action, 1
        elif r == REWARD_PAYOUT or r == REWARD_EMPTY:
            if p_move <= 0.0:
                return 0.0
            q = (self.successes[target] + 1.0) / (self.visits[target] + 2.0)
            p = p_move * (q if r == REWARD_PAYOUT else 1.0 - q)
            tile = target
            forced, forced_bit = (_OPPOSITE[action], 0) if action != 4 else (-1, 0)
        else:
            return 0.0
        nbrs = self.neighbors[tile]
        wall = self.wall
        for d in _DIRECTIONS:
            bit = (obs >> d) & 1
            if d == forced:
                if bit != forced_bit:
                    return 0.0
                continue
            j = nbrs[d]
            s = WALL if j < 0 else wall[j]
            if s == UNKNOWN:
                p *= 0.5
            elif bit != (s == WALL):
                return 0.0
        return p

    def simulate(self, action, rng):
        pos = self.pos
        wall = self.wall
        p = 1.0
        if action == 4:
            target = pos
            moved = True
        else:
            target = self.neighbors[pos][action]
            if target < 0:
                moved = False
            else:
                s = wall[target]
                if s == UNKNOWN:
                    p = 0.5
                    moved = rng.random() < 0.5
                else:
                    moved = s == OPEN
        if moved:
            k = target
            q = (self.successes[k] + 1.0) / (self.visits[k] + 2.0)
            if rng.random() < q:
                r = REWARD_PAYOUT
                p *= q
            else:
                r = REWARD_EMPTY
                p *= 1.0 - q
            forced = _OPPOSITE[action] if action != 4 else -1
            forced_bit = 0
        else:
            k = pos
            r = REWARD_BUMP
            forced = action
            forced_bit = 1
        nbrs = self.neighbors[k]
        code = 0
        for d in _DIRECTIONS:
            if d == forced:
                bit = forced_bit
            else:
                j = nbrs[d]
                if j < 0:
                    bit = 1
                else:
                    s = wall[j]
                    if s == UNKNOWN:
                        bit = rng.random() < 0.5
                        p *= 0.5
                    else:
                        bit = s == WALL
            if bit:
                code |= 1 << d
        e = Percept(code, r)
        self._apply(action, e)
        self.last_probability = p
        return e

    # -- learning -----------------------------------------------------------

    def update(self, action, percept):
        self.last_probability = self.conditional_probability(action, percept)
        self._apply(action, percept)

    def _apply(self, action, percept):
        obs, r = percept
        journal = self._journal if self._stack else None
        wall = self.wall
        pos = self.pos
        gain = 0.0
        touched = 0
        if journal is not None:
            journal.append((0, pos))
        if r == REWARD_BUMP:
            k = pos
            if action != 4:
                t = self.neighbors[pos][action]
                touched += 1
                if t >= 0 and wall[t] == UNKNOWN:
                    if journal is not None:
                        journal.append((1, t, UNKNOWN))
                    wall[t] = WALL
                    gain += _LN2
        else:
            k = self.neighbors[pos][action]
            if k < 0:
                k = pos  # inconsistent percept; keep position
            touched += 1
            if wall[k] == UNKNOWN:
                if journal is not None:
                    journal.append((1, k, UNKNOWN))
                wall[k] = OPEN
                gain += _LN2
            if r == REWARD_PAYOUT or r == REWARD_EMPTY:
                s, v = self.successes[k], self.visits[k]
                if journal is not None:
                    journal.append((2, k, s, v))
                s2 = s + 1 if r == REWARD_PAYOUT else s
                self.successes[k] = s2
                self.visits[k] = v + 1
                gain += beta_entropy(s + 1.0, v - s + 1.0) - beta_entropy(s2 + 1.0, v - s2 + 2.0)
            self.pos = k
        if 0 <= obs < 16:
            nbrs = self.neighbors[k]
            for d in _DIRECTIONS:
                j = nbrs[d]
                if j >= 0:
                    touched += 1
                    if wall[j] == UNKNOWN:
                        if journal is not None:
                            journal.append((1, j, UNKNOWN))
                        wall[j] = WALL if (obs >> d) & 1 else OPEN
                        gain += _LN2
        self.last_touched = touched
        self.last_info_gain = gain

    # -- checkpoints --------------------------------------------------------

    def _save(self):
        return len(self._journal)

    def _restore(self, length):
        journal = self._journal
        while len(journal) > length:
            entry = journal.pop()
            tag = entry[0]
            if tag == 0:
                self.pos = entry[1]
            elif tag == 1:
                self.wall[entry[1]] = entry[2]
            else:
                _, k, s, v = entry
                self.successes[k] = s
                self.visits[k] = v

    def snapshot(self):
        n = self.n
        tiles = []
        for i in range(n * n):
            tiles.append(
                {
                    "x": i % n,
                    "y": i // n,
                    "wall": _STATE_NAMES[self.wall[i]],
                    "successes": self.successes[i],
                    "visits": self.visits[i],
                }
            )
        return {"kind": "dirichlet", "n": n, "pos": [self.pos % n, self.pos // n], "tiles": tiles}
