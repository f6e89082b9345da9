"""Joint-space best-first search with subdimensional expansion.

The search works over joint states: one cell per agent plus a per-agent
"parked" flag.  A parked agent has reached its goal and committed to stay;
it moves no more and accrues no more cost.  Every step of an active agent
(moving or waiting, at its goal or not) costs one, so the cost of a joint
path is the sum of the agents' final arrival times - the standard
sum-of-individual-costs objective with free terminal goal rests.

Each joint vertex keeps a collision set: the agents whose individually
optimal continuations through that vertex are known to collide.  Agents
outside the set follow their policy step (or an installed equal-cost
override); agents inside branch over their whole move set.  When a new
collision is found it is pushed backwards through every predecessor
(`backprop`), re-opening vertices whose successor sets must widen.

A pluggable conflict resolver (see `bypass`) and block stepper (see
`recursion`) turn the same engine into BPM*, rM* and rBPM*.
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace
from enum import Enum
from heapq import heappush, heappop
from typing import Callable

from .domain import Cell, ConflictModel, GridMap, Instance
from .policy import PathSegment, Policy, compute_policy

AgentSet = int  # bitmask over agent indices

# Deadline checks are also made inside successor generation so that huge
# Cartesian products cannot stall the cooperative timeout.
_GEN_CHECK_EVERY = 2048


class TimeoutInterrupt(Exception):
    pass


class SolveStatus(Enum):
    SOLVED = "solved"
    NO_PATH = "nopath"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Conflict:
    """A pairwise collision on a joint transition."""

    agents: tuple[int, int]  # ordered pair, i < j
    kind: str  # "vertex" or "swap"
    cells: tuple[Cell, ...]  # shared cell, or the two exchanged cells

    @property
    def mask(self) -> AgentSet:
        i, j = self.agents
        return (1 << i) | (1 << j)


@dataclass(frozen=True)
class Solution:
    """Per-agent time-aligned paths; goal rests at the tail are trimmed."""

    paths: tuple[tuple[Cell, ...], ...]
    total_cost: int

    @property
    def n_agents(self) -> int:
        return len(self.paths)

    @property
    def makespan(self) -> int:
        return len(self.paths[0]) - 1


@dataclass
class SolveStats:
    expanded: int = 0
    generated: int = 0
    root_successors: set = field(default_factory=set)
    root_history: list[int] = field(default_factory=list)
    bypass_success: int = 0
    bypass_fail: int = 0
    conflicts_unavoidable: int = 0
    conflicts_half: int = 0
    conflicts_avoidable: int = 0
    bypass_calls_unavoidable: int = 0
    bypass_calls_half: int = 0
    bypass_calls_avoidable: int = 0
    installed_segments: list[tuple] = field(default_factory=list)
    override_replacements: int = 0
    cset_log: list[tuple] | None = None
    subplans: list[tuple] = field(default_factory=list)
    wall_time: float = 0.0


@dataclass
class SolveResult:
    status: SolveStatus
    solution: Solution | None
    stats: SolveStats

    @property
    def solved(self) -> bool:
        return self.status is SolveStatus.SOLVED


class JointVertex:
    """A joint configuration plus its search bookkeeping."""

    __slots__ = (
        "cells",
        "parked",
        "key",
        "g",
        "h",
        "parent",
        "back_set",
        "_back_ids",
        "collision_set",
        "overrides",
        "override_history",
        "in_open",
    )

    def __init__(self, cells: tuple[Cell, ...], parked: int, h: int = 0):
        self.cells = cells
        self.parked = parked
        self.key = (cells, parked)
        self.g: int | None = None  # None = not yet reached
        self.h = h
        self.parent: JointVertex | None = None
        self.back_set: list[JointVertex] = []
        self._back_ids: set[int] = set()
        self.collision_set: AgentSet = 0
        self.overrides: dict[int, tuple[PathSegment, int]] = {}
        self.override_history: dict[int, set] = {}
        self.in_open = False

    def add_predecessor(self, v: "JointVertex") -> None:
        if id(v) not in self._back_ids:
            self._back_ids.add(id(v))
            self.back_set.append(v)

    def __repr__(self):  # debugging aid
        return f"JointVertex(cells={self.cells}, parked={self.parked:b}, g={self.g})"


def sic_heuristic(policies: list[Policy], cells: tuple[Cell, ...]) -> int:
    """Sum of the agents' individual cost-to-go values (admissible)."""
    return sum(p.dist(c) for p, c in zip(policies, cells))


def detect_conflicts(
    from_cells: tuple[Cell, ...],
    to_cells: tuple[Cell, ...],
    model: ConflictModel,
) -> list[Conflict]:
    """All pairwise collisions on the transition from_cells -> to_cells."""
    out: list[Conflict] = []
    seen: dict[Cell, list[int]] = {}
    for i, cell in enumerate(to_cells):
        holders = seen.setdefault(cell, [])
        for j in holders:
            out.append(Conflict(agents=(j, i), kind="vertex", cells=(cell,)))
        holders.append(i)
    if model.swaps:
        movers = [i for i in range(len(to_cells)) if from_cells[i] != to_cells[i]]
        for a, i in enumerate(movers):
            for j in movers[a + 1 :]:
                if to_cells[i] == from_cells[j] and to_cells[j] == from_cells[i]:
                    out.append(
                        Conflict(
                            agents=(i, j),
                            kind="swap",
                            cells=(from_cells[i], from_cells[j]),
                        )
                    )
    return out


def union_agents(conflicts: list[Conflict]) -> AgentSet:
    mask = 0
    for c in conflicts:
        mask |= c.mask
    return mask


def backprop(vertex: JointVertex, cset: AgentSet, reopen: Callable[[JointVertex], None]) -> None:
    """Push a grown collision set through the predecessor graph.

    A vertex whose set actually grows is re-opened and the (updated) set
    continues into its own predecessors; a vertex already covering the set
    stops the propagation.
    """
    stack = [(vertex, cset)]
    while stack:
        v, cs = stack.pop()
        if cs & ~v.collision_set:
            v.collision_set |= cs
            reopen(v)
            for pred in v.back_set:
                stack.append((pred, v.collision_set))


def back_track(goal_vertex: JointVertex) -> Solution:
    """Reconstruct per-agent paths by following parent links from the goal."""
    chain = []
    v: JointVertex | None = goal_vertex
    while v is not None:
        chain.append(v)
        v = v.parent
    chain.reverse()
    configs = [v.cells for v in chain]
    while len(configs) >= 2 and configs[-1] == configs[-2]:
        configs.pop()
    n = len(configs[0])
    paths = tuple(tuple(cfg[i] for cfg in configs) for i in range(n))
    assert goal_vertex.g is not None
    return Solution(paths=paths, total_cost=goal_vertex.g)


def parent_chain(v: JointVertex) -> list[JointVertex]:
    chain = []
    while v is not None:
        chain.append(v)
        v = v.parent
    chain.reverse()
    return chain


class SubdimensionalSearch:
    """The shared search engine behind M*, BPM*, rM* and rBPM*."""

    def __init__(
        self,
        instance: Instance,
        model: ConflictModel,
        deadline: float | None = None,
        conflict_resolver=None,
        block_stepper=None,
        policy_table: dict[Cell, Policy] | None = None,
        initial_parked: int = 0,
        track_csets: bool = False,
        agent_ids: tuple[int, ...] | None = None,
    ):
        self.instance = instance
        self.grid: GridMap = instance.grid
        self.goals = instance.goals
        self.starts = instance.starts
        self.model = model
        self.n = instance.n_agents
        self.full_mask = (1 << self.n) - 1
        # Identity of each local agent in the outermost problem (recursive
        # sub-planners work on re-indexed subsets).
        self.agent_ids = agent_ids if agent_ids is not None else tuple(range(self.n))
        self.deadline = deadline
        self.resolver = conflict_resolver
        self.block_stepper = block_stepper
        self.stats = SolveStats()
        if track_csets:
            self.stats.cset_log = []
        if policy_table is None:
            policy_table = {}
        self.policy_table = policy_table
        self.policies: list[Policy] = []
        for i, goal in enumerate(self.goals):
            base = policy_table.get(goal)
            if base is None:
                base = compute_policy(self.grid, -1, goal)
                policy_table[goal] = base
            self.policies.append(replace(base, agent=i))
        self.vertices: dict[tuple, JointVertex] = {}
        self.open: list[tuple] = []
        self._seq = itertools.count()
        self.initial_parked = initial_parked
        self.root: JointVertex | None = None
        # segment identity -> (segment, install vertex, install serial);
        # newer installs win when overrides collide on a vertex, and the
        # serial makes that resolution independent of expansion order
        self.override_origin: dict[int, tuple[PathSegment, JointVertex, int]] = {}
        self._install_serial = itertools.count(1)

    # -- vertex/open plumbing -------------------------------------------

    def vertex(self, cells: tuple[Cell, ...], parked: int) -> JointVertex:
        key = (cells, parked)
        v = self.vertices.get(key)
        if v is None:
            v = JointVertex(cells, parked, h=sic_heuristic(self.policies, cells))
            self.vertices[key] = v
        return v

    def push(self, v: JointVertex) -> None:
        assert v.g is not None
        heappush(self.open, (v.g + v.h, -v.g, next(self._seq), v.key))
        v.in_open = True

    def reopen(self, v: JointVertex) -> None:
        if v.g is not None and not v.in_open:
            self.push(v)

    def _check_deadline(self) -> None:
        if self.deadline is not None and time.monotonic() >= self.deadline:
            raise TimeoutInterrupt

    # -- successor generation -------------------------------------------

    def _policy_step(self, v: JointVertex, i: int) -> tuple[Cell, bool]:
        """The single continuation of an out-of-collision-set agent."""
        cell = v.cells[i]
        ov = v.overrides.get(i)
        if ov is not None:
            seg, pos = ov
            if pos + 1 < len(seg.cells):
                return seg.cells[pos + 1], False
        if cell == self.goals[i]:
            return cell, True  # park: rest at the goal for free
        return self.policies[i].canonical_next[cell], False

    def agent_moves(self, v: JointVertex, i: int) -> list[tuple[Cell, bool]]:
        """Full move set of agent i (used when i is in the collision set)."""
        cell = v.cells[i]
        out: list[tuple[Cell, bool]] = [(c, False) for c in self.grid.move_options(cell)]
        if cell == self.goals[i]:
            out.append((cell, True))
        return out

    def register_segment(self, seg: PathSegment, origin: JointVertex) -> None:
        self.override_origin[id(seg)] = (seg, origin, next(self._install_serial))

    def _serial(self, seg: PathSegment) -> int:
        entry = self.override_origin.get(id(seg))
        return entry[2] if entry is not None else 0

    def set_override(self, vertex: JointVertex, agent: int, seg: PathSegment, pos: int) -> None:
        """Make `seg` the active equal-cost route for `agent` at `vertex`.

        When two installed segments claim the same vertex the newer one
        wins and the older segment's start vertex is re-opened; the serial
        comparison keeps the outcome independent of expansion order.
        """
        assert vertex.cells[agent] == seg.cells[pos]
        existing = vertex.overrides.get(agent)
        if existing is not None:
            old_seg, old_pos = existing
            if old_seg.cells == seg.cells and old_pos == pos:
                return
            if self._serial(old_seg) >= self._serial(seg):
                return
            self.stats.override_replacements += 1
            origin = self.override_origin.get(id(old_seg))
            if origin is not None and origin[1] is not vertex:
                self.reopen(origin[1])
        vertex.overrides[agent] = (seg, pos)
        self.reopen(vertex)

    def _propagate_overrides(self, v_k: JointVertex, v_l: JointVertex) -> None:
        """Carry active overrides into a successor that followed them."""
        for agent, (seg, pos) in v_k.overrides.items():
            nxt = pos + 1
            if nxt >= len(seg.cells) - 1:
                continue  # segment finished: canonical parking takes over
            if v_l.cells[agent] != seg.cells[nxt]:
                continue  # the agent branched off the segment
            if v_l.parked >> agent & 1:
                continue
            self.set_override(v_l, agent, seg, nxt)

    def successors(self, v: JointVertex):
        """The limited neighbours of v: Cartesian moves for collision-set
        agents, a single policy/override step for everyone else.

        Yields (cells, parked) pairs.  With a block stepper installed, a
        strict-subset collision set with two or more movable members is
        advanced as one block along its sub-planner's solution.
        """
        active_cset = v.collision_set & ~v.parked
        block_step: dict[int, tuple[Cell, bool]] | None = None
        full_branch = active_cset
        if (
            self.block_stepper is not None
            and v.collision_set != self.full_mask
            and active_cset.bit_count() >= 2
        ):
            # strict-subset set with two or more movable members: advance
            # the whole set (parked members ride along frozen) as a block
            # on its sub-planner's solution.  A lone movable member keeps
            # the full branch: its equal-cost alternatives must stay
            # reachable when a parked agent blocks the canonical route.
            full_branch = 0
            block_step = self.block_stepper(self, v, v.collision_set)
            if block_step is None:
                return  # no sub-plan from here: vertex dead-ends
        options: list[list[tuple[Cell, bool]]] = []
        for i in range(self.n):
            if v.parked >> i & 1:
                options.append([(v.cells[i], True)])
            elif block_step is not None and i in block_step:
                options.append([block_step[i]])
            elif full_branch >> i & 1:
                options.append(self.agent_moves(v, i))
            else:
                options.append([self._policy_step(v, i)])
        count = 0
        for combo in itertools.product(*options):
            count += 1
            if count % _GEN_CHECK_EVERY == 0:
                self._check_deadline()
            cells = tuple(c for c, _ in combo)
            parked = 0
            for i, (_, p) in enumerate(combo):
                if p:
                    parked |= 1 << i
            yield cells, parked

    # -- the main loop ----------------------------------------------------

    def resolve_conflicts(self, v_k: JointVertex, v_l: JointVertex, conflicts) -> AgentSet:
        if self.resolver is None:
            return union_agents(conflicts)
        return self.resolver.resolve(self, v_k, v_l, conflicts)

    def solve(self) -> SolveResult:
        t0 = time.monotonic()
        try:
            result = self._solve()
        except TimeoutInterrupt:
            result = SolveResult(SolveStatus.TIMEOUT, None, self.stats)
        result.stats.wall_time = time.monotonic() - t0
        return result

    def _solve(self) -> SolveResult:
        for i, p in enumerate(self.policies):
            if not p.reachable(self.starts[i]):
                return SolveResult(SolveStatus.NO_PATH, None, self.stats)
        root = self.vertex(self.starts, self.initial_parked)
        self.root = root
        root.g = 0
        self.push(root)
        while self.open:
            self._check_deadline()
            f, neg_g, _, key = heappop(self.open)
            v_k = self.vertices[key]
            if v_k.g is None or -neg_g != v_k.g:
                continue  # stale entry: the vertex was reached more cheaply
            if not v_k.in_open:
                continue  # duplicate of an already consumed entry
            v_k.in_open = False
            if v_k.parked == self.full_mask:
                return SolveResult(SolveStatus.SOLVED, back_track(v_k), self.stats)
            self.stats.expanded += 1
            is_root = v_k is root
            for cells, parked in self.successors(v_k):
                self.stats.generated += 1
                v_l = self.vertex(cells, parked)
                v_l.add_predecessor(v_k)
                if v_k.overrides:
                    self._propagate_overrides(v_k, v_l)
                if is_root:
                    self.stats.root_successors.add(v_l.key)
                conflicts = detect_conflicts(v_k.cells, cells, self.model)
                c_new = self.resolve_conflicts(v_k, v_l, conflicts)
                if c_new:
                    old = v_l.collision_set
                    v_l.collision_set |= c_new
                    if self.stats.cset_log is not None and v_l.collision_set != old:
                        self.stats.cset_log.append((v_l.key, old, v_l.collision_set))
                self._backprop(v_k, v_l.collision_set)
                if not conflicts:
                    ng = v_k.g + self.n - parked.bit_count()
                    if v_l.g is None or ng < v_l.g:
                        v_l.g = ng
                        v_l.parent = v_k
                        self.push(v_l)
            if is_root:
                self.stats.root_history.append(len(self.stats.root_successors))
        return SolveResult(SolveStatus.NO_PATH, None, self.stats)

    def _backprop(self, vertex: JointVertex, cset: AgentSet) -> None:
        log = self.stats.cset_log
        if log is None:
            backprop(vertex, cset, self.reopen)
            return
        stack = [(vertex, cset)]
        while stack:
            v, cs = stack.pop()
            if cs & ~v.collision_set:
                old = v.collision_set
                v.collision_set |= cs
                log.append((v.key, old, v.collision_set))
                self.reopen(v)
                for pred in v.back_set:
                    stack.append((pred, v.collision_set))


def limited_neighbors(search: SubdimensionalSearch, v: JointVertex) -> list[tuple]:
    """The successor states of v as a list of (cells, parked) pairs."""
    return list(search.successors(v))


def solve_mstar(
    instance: Instance,
    model: ConflictModel = ConflictModel.VERTEX_AND_SWAP,
    timeout: float | None = None,
    track_csets: bool = False,
) -> SolveResult:
    """Classic subdimensional expansion: collisions always grow the sets."""
    deadline = None if timeout is None else time.monotonic() + timeout
    search = SubdimensionalSearch(
        instance, model, deadline=deadline, track_csets=track_csets
    )
    return search.solve()
