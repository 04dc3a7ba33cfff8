"""Partially observable gridworld with dispenser and noise tiles.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row; the agent
always starts at ``(0, 0)``, the top-left corner. Tiles are indexed row-major,
``index = y * N + x``.

Observations are four wall-adjacency bits in the order (left, right, up,
down), packed into an integer ``left | right << 1 | up << 2 | down << 3``.
Off-grid neighbours count as walls, and moving off-grid is a bump.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence

from urlab.core import DOWN, LEFT, NOOP, RIGHT, UP, Percept
from urlab.errors import ConfigError, DomainError, GenerationError

EMPTY, WALL, DISPENSER, NOISE = "Empty", "Wall", "Dispenser", "Noise"

REWARD_EMPTY = -1.0
REWARD_BUMP = -10.0
REWARD_PAYOUT = 100.0
REWARD_BOUNDS = (REWARD_BUMP, REWARD_PAYOUT)

DEFAULT_NOISE_ALPHABET = 16

# (dx, dy) per action, in action-index order.
MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
_CHARS = {".": EMPTY, "#": WALL, "D": DISPENSER, "N": NOISE}
_CHAR_OF = {v: k for k, v in _CHARS.items()}


@dataclass(frozen=True)
class Tile:
    kind: str = EMPTY
    theta: Optional[float] = None
    noise_alphabet: Optional[int] = None

    def __post_init__(self):
        if self.kind not in _CHAR_OF:
            raise DomainError(f"unknown tile kind {self.kind!r}")
        if (self.theta is not None) != (self.kind == DISPENSER):
            raise DomainError("theta is set exactly on Dispenser tiles")
        if self.theta is not None and not 0.0 < self.theta <= 1.0:
            raise DomainError(f"dispenser theta must lie in (0, 1], got {self.theta}")
        if (self.noise_alphabet is not None) != (self.kind == NOISE):
            raise DomainError("noise_alphabet is set exactly on Noise tiles")
        if self.noise_alphabet is not None and self.noise_alphabet < 2:
            raise DomainError("noise alphabet must have at least 2 symbols")


EMPTY_TILE = Tile()
WALL_TILE = Tile(WALL)


class GridSpec:
    """Immutable N x N layout. ``tiles[y][x]`` is the tile at ``(x, y)``."""

    def __init__(self, tiles: Sequence[Sequence[Tile]]):
        rows = tuple(tuple(row) for row in tiles)
        n = len(rows)
        if n < 2 or any(len(r) != n for r in rows):
            raise DomainError("grid must be square with side length >= 2")
        self.n = n
        self.tiles = rows
        self.start = (0, 0)
        if rows[0][0].kind == WALL:
            raise DomainError("start tile (0, 0) is a wall")
        if not any(t.kind == DISPENSER for row in rows for t in row):
            raise DomainError("grid has no dispenser")
        self._flat = tuple(t for row in rows for t in row)
        self.walls = tuple(t.kind == WALL for t in self._flat)
        # neighbours[i][a] is the tile index reached by action a, or -1 off-grid
        nbrs = []
        for i in range(n * n):
            x, y = i % n, i // n
            row = []
            for dx, dy in MOVES:
                nx, ny = x + dx, y + dy
                row.append(ny * n + nx if 0 <= nx < n and 0 <= ny < n else -1)
            nbrs.append(tuple(row))
        self.neighbors = tuple(nbrs)
        self.obs_codes = tuple(self._obs_code(i) for i in range(n * n))

    def _obs_code(self, i: int) -> int:
        code = 0
        for d in (LEFT, RIGHT, UP, DOWN):
            j = self.neighbors[i][d]
            if j < 0 or self.walls[j]:
                code |= 1 << d
        return code

    def index(self, pos: tuple[int, int]) -> int:
        x, y = pos
        return y * self.n + x

    def coord(self, index: int) -> tuple[int, int]:
        return index % self.n, index // self.n

    def tile(self, pos: tuple[int, int]) -> Tile:
        x, y = pos
        if not (0 <= x < self.n and 0 <= y < self.n):
            return WALL_TILE
        return self.tiles[y][x]

    def tile_at(self, index: int) -> Tile:
        return self._flat[index]

    def dispensers(self) -> list[tuple[int, float]]:
        """(index, theta) of every dispenser in row-major order."""
        return [(i, t.theta) for i, t in enumerate(self._flat) if t.kind == DISPENSER]

    def with_single_dispenser(self, index: int, theta: float) -> "GridSpec":
        """Same layout with every dispenser cleared and one placed at ``index``."""
        rows = [
            [EMPTY_TILE if t.kind == DISPENSER else t for t in row] for row in self.tiles
        ]
        x, y = self.coord(index)
        if rows[y][x].kind != EMPTY:
            raise DomainError(f"cannot place a dispenser on a {rows[y][x].kind} tile")
        rows[y][x] = Tile(DISPENSER, theta=theta)
        return GridSpec(rows)

    def layout_text(self) -> str:
        return "\n".join("".join(_CHAR_OF[t.kind] for t in row) for row in self.tiles)

    def thetas(self) -> list[float]:
        return [theta for _, theta in self.dispensers()]

    def __eq__(self, other) -> bool:
        return isinstance(other, GridSpec) and self.tiles == other.tiles

    def __hash__(self) -> int:
        return hash(self.tiles)

    def __repr__(self) -> str:
        return f"GridSpec(n={self.n}, dispensers={self.dispensers()})"


@dataclass(frozen=True)
class GridState:
    pos: tuple[int, int] = (0, 0)


def bits_to_code(bits: Sequence[int]) -> int:
    return sum((1 << i) for i, b in enumerate(bits) if b)


def code_to_bits(code: int) -> tuple[int, int, int, int]:
    return tuple((code >> i) & 1 for i in range(4))


def observe_bits(spec: GridSpec, pos: tuple[int, int]) -> tuple[int, int, int, int]:
    """Wall-adjacency bits (left, right, up, down) at ``pos``."""
    if spec.tile(pos).kind == WALL:
        raise DomainError(f"position {pos} is inside a wall")
    return code_to_bits(spec.obs_codes[spec.index(pos)])


def _destination(spec: GridSpec, index: int, action: int) -> int:
    """Tile index after ``action``; -1 for a bump."""
    j = spec.neighbors[index][action]
    if j < 0 or spec.walls[j]:
        return -1
    return j


def exact_percept_distribution(spec: GridSpec, state: GridState, action: int) -> dict[Percept, float]:
    """The finite distribution that :func:`step` samples from."""
    i = spec.index(state.pos)
    j = _destination(spec, i, action)
    if j < 0:
        rewards = {REWARD_BUMP: 1.0}
        j = i
    else:
        rewards = _reward_distribution(spec.tile_at(j))
    tile = spec.tile_at(j)
    if tile.kind == NOISE:
        k = tile.noise_alphabet
        observations = {o: 1.0 / k for o in range(k)}
    else:
        observations = {spec.obs_codes[j]: 1.0}
    return {
        Percept(o, r): po * pr
        for o, po in observations.items()
        for r, pr in rewards.items()
    }


def _reward_distribution(tile: Tile) -> dict[float, float]:
    if tile.kind == DISPENSER:
        if tile.theta >= 1.0:
            return {REWARD_PAYOUT: 1.0}
        return {REWARD_PAYOUT: tile.theta, REWARD_EMPTY: 1.0 - tile.theta}
    return {REWARD_EMPTY: 1.0}


def step(spec: GridSpec, state: GridState, action: int, rng) -> tuple[GridState, Percept]:
    if not 0 <= action < len(MOVES):
        raise DomainError(f"invalid action {action}")
    i = spec.index(state.pos)
    j = _destination(spec, i, action)
    if j < 0:
        j = i
        reward = REWARD_BUMP
    else:
        reward = REWARD_EMPTY
        tile = spec.tile_at(j)
        if tile.kind == DISPENSER and rng.random() < tile.theta:
            reward = REWARD_PAYOUT
    tile = spec.tile_at(j)
    if tile.kind == NOISE:
        obs = rng.randrange(tile.noise_alphabet)
    else:
        obs = spec.obs_codes[j]
    new_state = state if j == i else GridState(spec.coord(j))
    return new_state, Percept(obs, reward)


def reachable_indices(spec: GridSpec) -> set[int]:
    """Flood fill of non-wall tiles reachable from the start."""
    start = spec.index(spec.start)
    seen = {start}
    queue = deque([start])
    while queue:
        i = queue.popleft()
        for a in (LEFT, RIGHT, UP, DOWN):
            j = spec.neighbors[i][a]
            if j >= 0 and not spec.walls[j] and j not in seen:
                seen.add(j)
                queue.append(j)
    return seen


def reachable_count(spec: GridSpec) -> int:
    return len(reachable_indices(spec))


class Gridworld:
    """The live environment: a spec, the agent's position and its RNG."""

    num_actions = len(MOVES)
    reward_bounds = REWARD_BOUNDS

    def __init__(self, spec: GridSpec, rng):
        self.spec = spec
        self.rng = rng
        self.state = GridState(spec.start)
        self.visited = {spec.index(spec.start)}

    def step(self, action: int) -> Percept:
        self.state, percept = step(self.spec, self.state, action, self.rng)
        self.visited.add(self.spec.index(self.state.pos))
        return percept

    @property
    def pos(self) -> tuple[int, int]:
        return self.state.pos


# ---------------------------------------------------------------------------
# Layout text and generation


def parse_layout(
    text: str | Sequence[str],
    thetas: Sequence[float] = (),
    noise_alphabet: int = DEFAULT_NOISE_ALPHABET,
) -> GridSpec:
    """Parse ``.``/``#``/``D``/``N`` rows; ``thetas`` are given in row-major dispenser order."""
    lines = text.split("\n") if isinstance(text, str) else list(text)
    if lines and lines[-1] == "":
        lines = lines[:-1]
    rows = []
    k = 0
    for y, line in enumerate(lines):
        if line != line.rstrip():
            raise ConfigError(f"trailing whitespace on layout row {y}", key="environment.layout")
        row = []
        for x, ch in enumerate(line):
            kind = _CHARS.get(ch)
            if kind is None:
                raise ConfigError(f"unknown layout character {ch!r} at ({x}, {y})", key="environment.layout")
            if kind == DISPENSER:
                if k >= len(thetas):
                    raise ConfigError("fewer thetas than dispensers", key="environment.thetas")
                row.append(Tile(DISPENSER, theta=float(thetas[k])))
                k += 1
            elif kind == NOISE:
                row.append(Tile(NOISE, noise_alphabet=noise_alphabet))
            else:
                row.append(EMPTY_TILE if kind == EMPTY else WALL_TILE)
        rows.append(row)
    if k != len(thetas):
        raise ConfigError(f"{len(thetas)} thetas given for {k} dispensers", key="environment.thetas")
    try:
        return GridSpec(rows)
    except DomainError as exc:
        raise ConfigError(str(exc), key="environment.layout") from exc


@dataclass
class GridGeneratorConfig:
    """Either an explicit ``layout`` or a random maze of side ``size``.

    Random generation draws walls independently with ``wall_density``, seals
    off any open tile not reachable from the start, and places one dispenser
    per entry of ``thetas`` on distinct reachable tiles other than the start.
    """

    size: int = 10
    wall_density: float = 0.2
    thetas: list = field(default_factory=lambda: [0.75])
    layout: Optional[str] = None
    noise_tiles: int = 0
    noise_alphabet: int = DEFAULT_NOISE_ALPHABET
    max_retries: int = 100


def generate_spec(cfg: GridGeneratorConfig, rng) -> GridSpec:
    if cfg.layout is not None:
        return parse_layout(cfg.layout, cfg.thetas, cfg.noise_alphabet)
    n = cfg.size
    if n < 2:
        raise GenerationError("size must be >= 2")
    if not cfg.thetas:
        raise GenerationError("at least one dispenser is required")
    needed = len(cfg.thetas) + cfg.noise_tiles + 1
    for _ in range(cfg.max_retries):
        walls = [rng.random() < cfg.wall_density for _ in range(n * n)]
        if walls[0]:
            continue
        rows = [[WALL_TILE if walls[y * n + x] else EMPTY_TILE for x in range(n)] for y in range(n)]
        # GridSpec requires a dispenser; probe reachability with a placeholder.
        rows[0][0] = Tile(DISPENSER, theta=1.0)
        reach = reachable_indices(GridSpec(rows))
        rows[0][0] = EMPTY_TILE
        if len(reach) < needed:
            continue
        for i in range(n * n):
            if i not in reach:
                rows[i // n][i % n] = WALL_TILE
        free = sorted(reach - {0})
        for theta in cfg.thetas:
            j = free.pop(rng.randrange(len(free)))
            rows[j // n][j % n] = Tile(DISPENSER, theta=float(theta))
        for _ in range(cfg.noise_tiles):
            j = free.pop(rng.randrange(len(free)))
            rows[j // n][j % n] = Tile(NOISE, noise_alphabet=cfg.noise_alphabet)
        return GridSpec(rows)
    raise GenerationError(f"no valid grid after {cfg.max_retries} attempts")
