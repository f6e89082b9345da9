"""Recursive subdimensional expansion: rM* and rBPM*.

Instead of expanding a strict-subset collision set as a full Cartesian
product, the set is advanced as a block along the optimal solution of its
own sub-problem (the same solver run on just those agents, from their
current cells), recursing until singleton sets, which reduce to the
individual policy.  Sub-solutions are memoized per (agents, configuration)
for the duration of a solve.

Sub-problems plan their members alone, ignoring everyone else (parked
agents included): the sub-plan must stay a relaxation of the members' part
of any full continuation or the optimality bound breaks.  Routes blocked
by an already-parked agent resolve upstream: the collision propagates back
to vertices where that agent was still active and a larger block replans
there.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from .bypass import BypassResolver
from .domain import Cell, ConflictModel, GridMap, Instance
from .mstar import (
    JointVertex,
    SolveResult,
    SolveStatus,
    SubdimensionalSearch,
    TimeoutInterrupt,
)

_NO_PLAN = "noplan"


@dataclass
class SubplannerCache:
    """Memoized block steps, keyed by the members' global ids and cells."""

    entries: dict[tuple, object] = field(default_factory=dict)
    hits: int = 0
    misses: int = 0
    solves: list[tuple] = field(default_factory=list)  # (member ids, status)


def _step_from_solution(solution, goals: list[Cell]) -> dict[int, tuple[Cell, bool]]:
    """First joint move of a sub-solution, with park flags for members that
    already sit on their goal and rest there for the whole remainder.

    An agent arriving at its goal in this step stays active (the move must
    be paid for); it parks on a later, stationary step.
    """
    step: dict[int, tuple[Cell, bool]] = {}
    for m, path in enumerate(solution.paths):
        nxt = path[min(1, len(path) - 1)]
        done = path[0] == goals[m] and all(c == goals[m] for c in path)
        step[m] = (nxt, done)
    return step


def solve_recursive(
    instance: Instance,
    use_bypass: bool,
    model: ConflictModel = ConflictModel.VERTEX_AND_SWAP,
    timeout: float | None = None,
    track_csets: bool = False,
    verify_hits_every: int = 0,
) -> SolveResult:
    """rM* (use_bypass=False) or rBPM* (use_bypass=True)."""
    deadline = None if timeout is None else time.monotonic() + timeout
    policy_table: dict = {}
    cache = SubplannerCache()
    stepper = _Stepper(
        model=model,
        use_bypass=use_bypass,
        deadline=deadline,
        cache=cache,
        verify_hits_every=verify_hits_every,
    )
    stepper.policy_tables[instance.grid] = policy_table
    search = SubdimensionalSearch(
        instance,
        model,
        deadline=deadline,
        conflict_resolver=BypassResolver() if use_bypass else None,
        block_stepper=stepper,
        policy_table=policy_table,
        track_csets=track_csets,
    )
    result = search.solve()
    result.stats.subplans = list(cache.solves)
    return result


class _Stepper:
    """Block-step callback; one instance is shared by all recursion levels."""

    def __init__(self, model, use_bypass, deadline, cache, verify_hits_every=0):
        self.model = model
        self.use_bypass = use_bypass
        self.deadline = deadline
        self.cache = cache
        self.verify_hits_every = verify_hits_every
        # per carved grid: a shared goal -> Policy table
        self.policy_tables: dict[GridMap, dict] = {}
        self.grids: dict[tuple, GridMap] = {}

    def __call__(self, search: SubdimensionalSearch, v: JointVertex, cset: int):
        members = [i for i in range(search.n) if cset >> i & 1]
        key = (
            search.grid.obstacles,
            tuple(
                sorted(
                    (search.agent_ids[i], v.cells[i], bool(v.parked >> i & 1))
                    for i in members
                )
            ),
        )
        cached = self.cache.entries.get(key)
        if cached is not None:
            self.cache.hits += 1
            if self.verify_hits_every and self.cache.hits % self.verify_hits_every == 0:
                fresh = self._solve_block(search, v, members, seed=False)
                if cached[2]:
                    # suffix-seeded entries may differ from a fresh solve by
                    # tie-breaking; equal remaining cost is the contract
                    assert fresh == _NO_PLAN and cached == _NO_PLAN or fresh[1] == cached[1], (
                        "sub-planner cache returned a stale step"
                    )
                else:
                    assert fresh == cached, "sub-planner cache returned a stale step"
        else:
            self.cache.misses += 1
            cached = self._solve_block(search, v, members)
            self.cache.entries[key] = cached
        if cached == _NO_PLAN:
            return None
        step = cached[0]
        return {i: step[search.agent_ids[i]] for i in members}

    def _policy_table(self, grid: GridMap) -> dict:
        got = self.policy_tables.get(grid)
        if got is None:
            got = {}
            self.policy_tables[grid] = got
        return got

    def _solve_block(
        self,
        search: SubdimensionalSearch,
        v: JointVertex,
        members: list[int],
        seed: bool = True,
    ):
        global_ids = tuple(search.agent_ids[i] for i in members)
        sub_parked = 0
        for m, i in enumerate(members):
            if v.parked >> i & 1:
                sub_parked |= 1 << m
        sub_instance = Instance(
            grid=search.grid,
            starts=tuple(v.cells[i] for i in members),
            goals=tuple(search.goals[i] for i in members),
        )
        sub_search = SubdimensionalSearch(
            sub_instance,
            self.model,
            deadline=self.deadline,
            conflict_resolver=BypassResolver() if self.use_bypass else None,
            block_stepper=self,
            policy_table=self._policy_table(search.grid),
            agent_ids=global_ids,
            initial_parked=sub_parked,
        )
        result = sub_search.solve()
        if result.status is SolveStatus.TIMEOUT:
            raise TimeoutInterrupt
        if result.status is SolveStatus.NO_PATH:
            self.cache.solves.append((global_ids, "nopath"))
            return _NO_PLAN
        self.cache.solves.append((global_ids, "solved"))
        goals = [search.goals[i] for i in members]
        local_step = _step_from_solution(result.solution, goals)
        step = {global_ids[m]: local_step[m] for m in range(len(members))}
        entry = (step, result.solution.total_cost, False)
        if seed:
            self._seed_suffixes(search.grid, global_ids, goals, result.solution)
        return entry

    def _seed_suffixes(self, grid, global_ids, goals, solution) -> None:
        """Every suffix of an optimal sub-plan is optimal from its own
        configuration, so pre-populate the cache along the plan.  Later
        queries while the block is being followed then hit instead of
        re-solving the sub-problem at every step."""
        paths = solution.paths
        k = len(paths)
        horizon = len(paths[0]) - 1
        arrivals = []
        for m in range(k):
            arrive = 0
            for t, cell in enumerate(paths[m]):
                if cell != goals[m]:
                    arrive = t + 1
            arrivals.append(arrive)

        def rest_from(m: int, t: int) -> bool:
            return arrivals[m] <= t

        for t in range(1, horizon):
            cells_t = tuple(paths[m][t] for m in range(k))
            parked_t = tuple(rest_from(m, t - 1) for m in range(k))
            key = (
                grid.obstacles,
                tuple(sorted(zip(global_ids, cells_t, parked_t))),
            )
            if key in self.cache.entries:
                continue
            step = {
                global_ids[m]: (paths[m][t + 1], rest_from(m, t)) for m in range(k)
            }
            remaining = sum(max(0, arrivals[m] - t) for m in range(k))
            self.cache.entries[key] = (step, remaining, True)


def solve_rmstar(
    instance: Instance,
    model: ConflictModel = ConflictModel.VERTEX_AND_SWAP,
    timeout: float | None = None,
    track_csets: bool = False,
) -> SolveResult:
    return solve_recursive(instance, False, model, timeout, track_csets)


def solve_rbpmstar(
    instance: Instance,
    model: ConflictModel = ConflictModel.VERTEX_AND_SWAP,
    timeout: float | None = None,
    track_csets: bool = False,
) -> SolveResult:
    return solve_recursive(instance, True, model, timeout, track_csets)
