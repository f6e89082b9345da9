"""Grid world, problem instances and the random instance generator.

A map is a rectangular grid of unit cells; some cells are obstacles.  Agents
occupy cells, move orthogonally (or wait), and each agent has a start cell
and a goal cell.  Instances are immutable once built.

Cells are (row, col) tuples throughout the package.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable

Cell = tuple[int, int]

# Orthogonal step order used everywhere a deterministic ordering is needed:
# up, down, left, right.  The wait move (staying put) is listed last.
ORTHO_STEPS: tuple[Cell, ...] = ((-1, 0), (1, 0), (0, -1), (0, 1))


class ConflictModel(Enum):
    """Which agent-agent interactions count as collisions."""

    VERTEX_ONLY = "vertex"
    VERTEX_AND_SWAP = "vertex_swap"

    @property
    def swaps(self) -> bool:
        return self is ConflictModel.VERTEX_AND_SWAP

    @staticmethod
    def parse(name: str) -> "ConflictModel":
        for m in ConflictModel:
            if m.value == name or m.name.lower() == name.lower():
                return m
        raise ValueError(f"unknown conflict model {name!r}")


class GenerationError(RuntimeError):
    """Raised when the random generator cannot produce a connected instance."""


@dataclass(frozen=True)
class GridMap:
    """Rectangular occupancy grid.  Obstacle cells cannot be entered."""

    width: int
    height: int
    obstacles: frozenset[Cell] = field(default_factory=frozenset)

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("map dimensions must be positive")
        for (r, c) in self.obstacles:
            if not (0 <= r < self.height and 0 <= c < self.width):
                raise ValueError(f"obstacle {(r, c)} out of bounds")

    @property
    def n_cells(self) -> int:
        return self.width * self.height

    @property
    def n_passable(self) -> int:
        return self.n_cells - len(self.obstacles)

    def in_bounds(self, cell: Cell) -> bool:
        r, c = cell
        return 0 <= r < self.height and 0 <= c < self.width

    def passable(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.obstacles

    def passable_cells(self) -> list[Cell]:
        return [
            (r, c)
            for r in range(self.height)
            for c in range(self.width)
            if (r, c) not in self.obstacles
        ]

    def move_options(self, cell: Cell) -> list[Cell]:
        """Legal single-step destinations from `cell`, wait move last.

        Deterministic order: up, down, left, right, wait.
        """
        if not self.passable(cell):
            raise ValueError(f"cell {cell} is not passable")
        r, c = cell
        out = []
        for dr, dc in ORTHO_STEPS:
            nxt = (r + dr, c + dc)
            if self.passable(nxt):
                out.append(nxt)
        out.append(cell)
        return out


def neighbors(grid: GridMap, cell: Cell) -> set[Cell]:
    """The cell itself (wait) plus every passable orthogonal neighbour."""
    return set(grid.move_options(cell))


@dataclass(frozen=True)
class Instance:
    """A map plus per-agent start and goal cells."""

    grid: GridMap
    starts: tuple[Cell, ...]
    goals: tuple[Cell, ...]

    def __post_init__(self):
        if len(self.starts) != len(self.goals):
            raise ValueError("starts and goals differ in length")
        if not self.starts:
            raise ValueError("instance needs at least one agent")
        if len(set(self.starts)) != len(self.starts):
            raise ValueError("start cells must be pairwise distinct")
        if len(set(self.goals)) != len(self.goals):
            raise ValueError("goal cells must be pairwise distinct")
        for cell in (*self.starts, *self.goals):
            if not self.grid.passable(cell):
                raise ValueError(f"endpoint {cell} is out of bounds or an obstacle")

    @property
    def n_agents(self) -> int:
        return len(self.starts)

    def connected(self) -> bool:
        """True when every agent's goal is reachable from its start."""
        for s, g in zip(self.starts, self.goals):
            if g not in _reachable_from(self.grid, s):
                return False
        return True


def _reachable_from(grid: GridMap, source: Cell) -> set[Cell]:
    seen = {source}
    frontier = [source]
    while frontier:
        nxt = []
        for cell in frontier:
            r, c = cell
            for dr, dc in ORTHO_STEPS:
                nb = (r + dr, c + dc)
                if nb not in seen and grid.passable(nb):
                    seen.add(nb)
                    nxt.append(nb)
        frontier = nxt
    return seen


def _pick_dimensions(n_agents: int, obstacle_prob: float, density: float) -> tuple[int, int]:
    """Choose a near-square (height, width) whose expected passable-cell
    count is closest to n_agents / density."""
    target = n_agents / density
    keep = 1.0 - obstacle_prob
    if keep <= 0:
        raise GenerationError("obstacle probability must be below 1")
    total = target / keep
    side = math.sqrt(total)
    best = None
    for h in {max(1, math.floor(side)), max(1, math.ceil(side))}:
        for w in (max(1, math.floor(total / h)), max(1, math.ceil(total / h))):
            err = abs(w * h * keep - target)
            key = (err, abs(w - h), h * w, h, w)
            if best is None or key < best[0]:
                best = (key, (h, w))
    return best[1]


def generate_instance(
    n_agents: int,
    seed: int,
    obstacle_prob: float = 0.2,
    density: float = 0.01,
    max_attempts: int = 1000,
) -> Instance:
    """Random instance following the benchmark protocol.

    The map is a near-square rectangle sized so that the expected number of
    passable cells is about n_agents / density.  Each cell independently
    becomes an obstacle with probability `obstacle_prob`.  Starts and goals
    are sampled uniformly without replacement from the passable cells and
    the whole draw is retried until every agent can reach its goal.
    Deterministic for a fixed argument tuple.
    """
    if n_agents < 1:
        raise ValueError("n_agents must be >= 1")
    if not (0.0 <= obstacle_prob < 1.0):
        raise ValueError("obstacle_prob must be in [0, 1)")
    height, width = _pick_dimensions(n_agents, obstacle_prob, density)
    rng = random.Random(seed)
    for _ in range(max_attempts):
        obstacles = frozenset(
            (r, c)
            for r in range(height)
            for c in range(width)
            if rng.random() < obstacle_prob
        )
        grid = GridMap(width=width, height=height, obstacles=obstacles)
        free = grid.passable_cells()
        if len(free) < 2 * n_agents:
            continue
        starts = tuple(rng.sample(free, n_agents))
        goals = tuple(rng.sample(free, n_agents))
        inst = Instance(grid=grid, starts=starts, goals=goals)
        if inst.connected():
            return inst
    raise GenerationError(
        f"no connected instance for n_agents={n_agents} seed={seed} "
        f"after {max_attempts} attempts"
    )
