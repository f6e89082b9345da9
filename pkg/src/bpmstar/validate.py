"""Solution checking and an independent brute-force reference solver.

The validator re-derives everything from the instance: endpoints, step
legality, obstacle avoidance, pairwise conflicts under the active model,
and the sum-of-costs (each agent pays one per step until its final
arrival; terminal goal rests are free).

`oracle_solve` is a plain A* over the full joint configuration space with
every agent branching over all of its moves.  It shares no search code
with the production solvers on purpose: it has its own distance tables,
its own successor generation and its own conflict tests, so agreement
between the two is meaningful evidence of correctness.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field
from heapq import heappush, heappop

from .domain import Cell, ConflictModel, GridMap, Instance
from .mstar import Solution, SolveResult, SolveStats, SolveStatus


@dataclass
class ValidationReport:
    ok: bool
    violations: list[tuple[int, str]]
    recomputed_cost: int

    def to_text(self) -> str:
        lines = [f"ok {str(self.ok).lower()}", f"cost {self.recomputed_cost}"]
        for t, msg in self.violations:
            lines.append(f"violation t={t} {msg}")
        return "\n".join(lines) + "\n"


def _arrival_time(path: tuple[Cell, ...], goal: Cell) -> int:
    arrive = 0
    for t, cell in enumerate(path):
        if cell != goal:
            arrive = t + 1
    return arrive


def validate(instance: Instance, solution: Solution, model: ConflictModel) -> ValidationReport:
    """Check a solution against an instance; every defect becomes an entry."""
    grid = instance.grid
    violations: list[tuple[int, str]] = []
    paths = solution.paths
    if len(paths) != instance.n_agents:
        violations.append((0, f"expected {instance.n_agents} paths, got {len(paths)}"))
        return ValidationReport(False, violations, 0)
    horizon = max(len(p) for p in paths) - 1

    def at(i: int, t: int) -> Cell:
        p = paths[i]
        return p[min(t, len(p) - 1)]

    for i, path in enumerate(paths):
        if not path:
            violations.append((0, f"agent {i} has an empty path"))
            continue
        if path[0] != instance.starts[i]:
            violations.append((0, f"agent {i} starts at {path[0]}, not {instance.starts[i]}"))
        if path[-1] != instance.goals[i]:
            violations.append(
                (len(path) - 1, f"agent {i} ends at {path[-1]}, not {instance.goals[i]}")
            )
        for t, cell in enumerate(path):
            if not grid.passable(cell):
                violations.append((t, f"agent {i} on blocked or out-of-bounds cell {cell}"))
        for t in range(len(path) - 1):
            (r1, c1), (r2, c2) = path[t], path[t + 1]
            if abs(r1 - r2) + abs(c1 - c2) > 1:
                violations.append((t + 1, f"agent {i} teleports {path[t]}->{path[t + 1]}"))
    for t in range(horizon + 1):
        occupied: dict[Cell, int] = {}
        for i in range(len(paths)):
            cell = at(i, t)
            if cell in occupied:
                violations.append((t, f"agents {occupied[cell]} and {i} both at {cell}"))
            else:
                occupied[cell] = i
        if model.swaps and t < horizon:
            for i in range(len(paths)):
                for j in range(i + 1, len(paths)):
                    if at(i, t + 1) == at(j, t) and at(j, t + 1) == at(i, t) and at(i, t) != at(j, t):
                        violations.append(
                            (t + 1, f"agents {i} and {j} swap {at(i, t)}<->{at(j, t)}")
                        )
    recomputed = sum(_arrival_time(p, g) for p, g in zip(paths, instance.goals))
    if recomputed != solution.total_cost:
        violations.append(
            (0, f"stated cost {solution.total_cost} != recomputed {recomputed}")
        )
    return ValidationReport(not violations, violations, recomputed)


# ---------------------------------------------------------------------------
# Independent joint-space reference solver
# ---------------------------------------------------------------------------


def _bfs_distances(grid: GridMap, goal: Cell) -> dict[Cell, int]:
    dist = {goal: 0}
    queue = [goal]
    head = 0
    while head < len(queue):
        r, c = queue[head]
        head += 1
        d = dist[(r, c)] + 1
        for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
            if nb not in dist and grid.passable(nb):
                dist[nb] = d
                queue.append(nb)
    return dist


def oracle_solve(
    instance: Instance,
    model: ConflictModel = ConflictModel.VERTEX_AND_SWAP,
    timeout: float | None = None,
) -> SolveResult:
    """Optimal joint-space A* with full branching.  Ground truth for small
    instances; exponential in the number of agents by design."""
    t0 = time.monotonic()
    deadline = None if timeout is None else t0 + timeout
    stats = SolveStats()
    grid = instance.grid
    n = instance.n_agents
    goals = instance.goals
    full = (1 << n) - 1
    dists = [_bfs_distances(grid, g) for g in goals]
    if any(instance.starts[i] not in dists[i] for i in range(n)):
        stats.wall_time = time.monotonic() - t0
        return SolveResult(SolveStatus.NO_PATH, None, stats)

    moves: dict[Cell, list[Cell]] = {}

    def cell_moves(cell: Cell) -> list[Cell]:
        got = moves.get(cell)
        if got is None:
            r, c = cell
            got = [
                nb
                for nb in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
                if grid.passable(nb)
            ]
            got.append(cell)
            moves[cell] = got
        return got

    def heuristic(cells: tuple[Cell, ...]) -> int:
        return sum(dists[i][cells[i]] for i in range(n))

    start = (instance.starts, 0)
    best_g: dict[tuple, int] = {start: 0}
    parents: dict[tuple, tuple] = {}
    heap: list[tuple] = [(heuristic(instance.starts), 0, start)]
    counter = 0
    while heap:
        if deadline is not None and time.monotonic() >= deadline:
            stats.wall_time = time.monotonic() - t0
            return SolveResult(SolveStatus.TIMEOUT, None, stats)
        f, g, state = heappop(heap)
        if g > best_g.get(state, -1):
            continue
        cells, parked = state
        if parked == full:
            configs = [cells]
            st = state
            while st in parents:
                st = parents[st]
                configs.append(st[0])
            configs.reverse()
            while len(configs) >= 2 and configs[-1] == configs[-2]:
                configs.pop()
            paths = tuple(tuple(cfg[i] for cfg in configs) for i in range(n))
            stats.wall_time = time.monotonic() - t0
            return SolveResult(
                SolveStatus.SOLVED, Solution(paths=paths, total_cost=g), stats
            )
        stats.expanded += 1
        options = []
        for i in range(n):
            if parked >> i & 1:
                options.append(((cells[i], True),))
            else:
                opts = [(c, False) for c in cell_moves(cells[i])]
                if cells[i] == goals[i]:
                    opts.append((cells[i], True))
                options.append(tuple(opts))
        for combo in itertools.product(*options):
            counter += 1
            if counter % 4096 == 0 and deadline is not None and time.monotonic() >= deadline:
                stats.wall_time = time.monotonic() - t0
                return SolveResult(SolveStatus.TIMEOUT, None, stats)
            to_cells = tuple(c for c, _ in combo)
            occupied = set(to_cells)
            if len(occupied) < n:
                continue
            if model.swaps:
                bad = False
                for i in range(n):
                    if to_cells[i] == cells[i]:
                        continue
                    for j in range(i + 1, n):
                        if to_cells[i] == cells[j] and to_cells[j] == cells[i]:
                            bad = True
                            break
                    if bad:
                        break
                if bad:
                    continue
            new_parked = 0
            active = 0
            for i, (_, p) in enumerate(combo):
                if p:
                    new_parked |= 1 << i
                else:
                    active += 1
            nstate = (to_cells, new_parked)
            ng = g + active
            if ng < best_g.get(nstate, ng + 1):
                best_g[nstate] = ng
                parents[nstate] = state
                heappush(heap, (ng + heuristic(to_cells), ng, nstate))
    stats.wall_time = time.monotonic() - t0
    return SolveResult(SolveStatus.NO_PATH, None, stats)
