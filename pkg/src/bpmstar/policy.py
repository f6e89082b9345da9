"""Per-agent individually optimal policies and equal-cost detour search.

Each agent owns a cost-to-go field (breadth-first distance to its goal over
passable cells) and a canonical next-step function.  The set of equal-cost
paths from any cell forms a DAG whose edges drop the cost-to-go by exactly
one; `find_bypass` searches that DAG for a path that threads through the
time-indexed occupancy of the other agents.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .domain import Cell, ConflictModel, GridMap, ORTHO_STEPS


@dataclass(frozen=True)
class Policy:
    """Individually optimal policy for one agent."""

    agent: int
    goal: Cell
    cost_to_go: dict[Cell, int]
    canonical_next: dict[Cell, Cell]

    def reachable(self, cell: Cell) -> bool:
        return cell in self.cost_to_go

    def dist(self, cell: Cell) -> int:
        try:
            return self.cost_to_go[cell]
        except KeyError:
            raise ValueError(f"cell {cell} cannot reach goal {self.goal}") from None


@dataclass(frozen=True)
class PathSegment:
    """A time-anchored cell sequence for one agent, ending at its goal."""

    agent: int
    cells: tuple[Cell, ...]
    start_time: int

    @property
    def cost(self) -> int:
        return len(self.cells) - 1

    @property
    def end_time(self) -> int:
        return self.start_time + self.cost

    def cell_at(self, t: int) -> Cell:
        idx = t - self.start_time
        if idx < 0:
            raise ValueError(f"time {t} precedes segment start {self.start_time}")
        return self.cells[min(idx, len(self.cells) - 1)]


def compute_policy(grid: GridMap, agent: int, goal: Cell) -> Policy:
    """Breadth-first cost-to-go from `goal`, plus the canonical next step.

    Ties in the next-step choice are broken in the fixed order up, down,
    left, right so runs are reproducible.  The goal maps to itself.
    """
    if not grid.passable(goal):
        raise ValueError(f"goal {goal} is out of bounds or an obstacle")
    dist: dict[Cell, int] = {goal: 0}
    frontier = [goal]
    while frontier:
        nxt = []
        for cell in frontier:
            r, c = cell
            for dr, dc in ORTHO_STEPS:
                nb = (r + dr, c + dc)
                if nb not in dist and grid.passable(nb):
                    dist[nb] = dist[cell] + 1
                    nxt.append(nb)
        frontier = nxt
    canonical: dict[Cell, Cell] = {goal: goal}
    for cell, d in dist.items():
        if cell == goal:
            continue
        r, c = cell
        for dr, dc in ORTHO_STEPS:
            nb = (r + dr, c + dc)
            if dist.get(nb, -1) == d - 1:
                canonical[cell] = nb
                break
    return Policy(agent=agent, goal=goal, cost_to_go=dist, canonical_next=canonical)


def optimal_successors(policy: Policy, cell: Cell) -> set[Cell]:
    """All equal-cost continuations from `cell`: the out-edges of the
    optimal-path DAG.  At the goal this is the zero-cost wait."""
    d = policy.dist(cell)
    if cell == policy.goal:
        return {cell}
    r, c = cell
    out = set()
    for dr, dc in ORTHO_STEPS:
        nb = (r + dr, c + dc)
        if policy.cost_to_go.get(nb, -1) == d - 1:
            out.add(nb)
    return out


def _ordered_successors(policy: Policy, cell: Cell) -> list[Cell]:
    """optimal_successors with the canonical step first (DFS determinism)."""
    succ = optimal_successors(policy, cell)
    first = policy.canonical_next[cell]
    rest = [s for s in sorted(succ) if s != first]
    return [first, *rest]


def canonical_path(policy: Policy, cell: Cell) -> list[Cell]:
    """The canonical individually optimal path from `cell` to the goal."""
    path = [cell]
    while path[-1] != policy.goal:
        path.append(policy.canonical_next[path[-1]])
    return path


class OccupancyView:
    """Time-indexed cells of a set of agents.

    Each agent's path is an absolute-time cell list starting at time 0;
    after the list ends the agent rests on its final cell forever.
    """

    def __init__(self, paths: dict[int, list[Cell]]):
        for agent, cells in paths.items():
            if not cells:
                raise ValueError(f"agent {agent} has an empty path")
        self.paths = paths

    @property
    def agents(self) -> list[int]:
        return sorted(self.paths)

    @property
    def horizon(self) -> int:
        return max((len(p) - 1 for p in self.paths.values()), default=0)

    def cell_of(self, agent: int, t: int) -> Cell:
        cells = self.paths[agent]
        return cells[min(t, len(cells) - 1)]

    def updated(self, agent: int, cells: list[Cell]) -> "OccupancyView":
        paths = dict(self.paths)
        paths[agent] = cells
        return OccupancyView(paths)

    def step_blocked(self, src: Cell, dst: Cell, t: int, model: ConflictModel) -> bool:
        """Would an agent moving src -> dst over [t, t+1] collide?

        The view must not contain the moving agent itself.
        """
        for other in self.paths:
            there = self.cell_of(other, t + 1)
            if there == dst:
                return True
            if model.swaps and there == src and self.cell_of(other, t) == dst:
                return True
        return False


def find_bypass(
    policy: Policy,
    start: Cell,
    start_time: int,
    blocked: OccupancyView,
    model: ConflictModel,
) -> PathSegment | None:
    """Search the optimal-path DAG for a conflict-free equal-cost path.

    Returns a segment from `start` (at absolute time `start_time`) to the
    goal with cost exactly cost_to_go(start), conflict-free against
    `blocked` both while moving and while resting at the goal afterwards,
    or None when no such DAG path exists.  Depth-first with a (cell, time)
    visited set, so the search is exhaustive over the DAG.
    """
    total = policy.dist(start)
    arrive = start_time + total
    horizon = max(blocked.horizon, arrive)

    def rest_clear() -> bool:
        # A swap against a resting agent would need the mover to enter the
        # goal cell, so vertex checks suffice here.
        for t in range(arrive + 1, horizon + 1):
            for other in blocked.paths:
                if blocked.cell_of(other, t) == policy.goal:
                    return False
        return True

    # The start cell itself must be free of vertex conflicts at start_time.
    for other in blocked.paths:
        if blocked.cell_of(other, start_time) == start:
            return None

    visited: set[tuple[Cell, int]] = set()

    def dfs(cell: Cell, t: int, path: list[Cell]) -> list[Cell] | None:
        if cell == policy.goal and t == arrive:
            return list(path) if rest_clear() else None
        if (cell, t) in visited:
            return None
        visited.add((cell, t))
        for nxt in _ordered_successors(policy, cell):
            if nxt == cell:
                continue
            if blocked.step_blocked(cell, nxt, t, model):
                continue
            path.append(nxt)
            found = dfs(nxt, t + 1, path)
            if found is not None:
                return found
            path.pop()
        return None

    cells = dfs(start, start_time, [start])
    if cells is None:
        return None
    return PathSegment(agent=policy.agent, cells=tuple(cells), start_time=start_time)
