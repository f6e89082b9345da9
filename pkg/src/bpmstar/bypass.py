"""Collision classification and bypass-based conflict resolution (BPM*).

When a joint transition collides, classic subdimensional expansion grows
the collision set right away.  The bypass variant first tries to reroute
one of the colliding agents onto a *different equal-cost* individually
optimal path that threads around everyone's current routes.  Collisions
are classified against the collision set of the expanding vertex:

* unavoidable - both agents already branch exhaustively: nothing to do;
* half-avoidable - only the outside agent may reroute; whatever happens,
  the inside agent joins the new collision set (both join on failure);
* avoidable - the lower-indexed agent tries first, then the other; only
  if both fail do they join the set.

Rerouted paths are installed as per-vertex overrides unless some conflict
of the transition could not be avoided at all, and the vertices where the
new routes begin are re-opened so the search flows through them.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

from .domain import Cell, ConflictModel, Instance
from .mstar import (
    AgentSet,
    Conflict,
    JointVertex,
    SolveResult,
    SubdimensionalSearch,
    parent_chain,
)
from .policy import OccupancyView, PathSegment, canonical_path, find_bypass

UNAVOIDABLE = "unavoidable"
HALF_AVOIDABLE = "half_avoidable"
AVOIDABLE = "avoidable"


@dataclass(frozen=True)
class CollisionClass:
    kind: str
    in_set: AgentSet  # the colliding agents already in the predecessor's set


def classify(conflict: Conflict, c_pred: AgentSet) -> CollisionClass:
    """Classify one collision against the expanding vertex's collision set."""
    inside = c_pred & conflict.mask
    n_inside = inside.bit_count()
    if n_inside == 2:
        return CollisionClass(UNAVOIDABLE, inside)
    if n_inside == 1:
        return CollisionClass(HALF_AVOIDABLE, inside)
    return CollisionClass(AVOIDABLE, 0)


def back_to_start_point(v_k: JointVertex, agent: int) -> JointVertex:
    """Walk parent links back to where the agent's current individually
    optimal segment began: the root, or the child of the last vertex whose
    collision set contained the agent."""
    v = v_k
    while True:
        parent = v.parent
        if parent is None or (parent.collision_set >> agent) & 1:
            return v
        v = parent


def _start_index(chain: list[JointVertex], agent: int) -> int:
    idx = len(chain) - 1
    while idx > 0 and not (chain[idx - 1].collision_set >> agent) & 1:
        idx -= 1
    return idx


def _segment_clear(seg: PathSegment, view: OccupancyView, model: ConflictModel) -> bool:
    """Re-check a candidate segment against the current occupancy view."""
    cells = seg.cells
    for other in view.paths:
        if view.cell_of(other, seg.start_time) == cells[0]:
            return False
    for k in range(len(cells) - 1):
        if view.step_blocked(cells[k], cells[k + 1], seg.start_time + k, model):
            return False
    horizon = max(view.horizon, seg.end_time)
    for t in range(seg.end_time + 1, horizon + 1):
        for other in view.paths:
            if view.cell_of(other, t) == cells[-1]:
                return False
    return True


class BypassResolver:
    """Per-solve bypass state: reroute memo and installed-route origins."""

    def __init__(self):
        self.memo: dict[tuple, tuple[Cell, ...] | None] = {}
        self.state_rev = 0  # bumped on every install; keys the memo epoch

    # -- occupancy bookkeeping -----------------------------------------

    def _agent_paths(
        self,
        search: SubdimensionalSearch,
        chain: list[JointVertex],
        v_l: JointVertex,
    ) -> dict[int, list[Cell]]:
        """Everyone's currently believed path: history along the parent
        chain, the concrete step into the successor under consideration,
        then the override or canonical continuation, then rest.

        Pinning the v_l step matters when the conflict partner moved by a
        branch or sub-planner move: a reroute must dodge the move that
        actually collided, not only the partner's canonical path.
        """
        v_k = chain[-1]
        paths: dict[int, list[Cell]] = {}
        for a in range(search.n):
            cells = [v.cells[a] for v in chain]
            cells.append(v_l.cells[a])
            cur = v_l.cells[a]
            ov = v_k.overrides.get(a)
            if ov is not None:
                seg, pos = ov
                if pos + 1 < len(seg.cells) and seg.cells[pos + 1] == cur:
                    cells.extend(seg.cells[pos + 2 :])
                    cur = seg.cells[-1]
            goal = search.goals[a]
            if cur != goal:
                cells.extend(canonical_path(search.policies[a], cur)[1:])
            paths[a] = cells
        return paths

    def _attempt(
        self,
        search: SubdimensionalSearch,
        chain: list[JointVertex],
        paths: dict[int, list[Cell]],
        agent: int,
        kind: str,
    ) -> tuple[PathSegment, JointVertex] | None:
        if kind == HALF_AVOIDABLE:
            search.stats.bypass_calls_half += 1
        elif kind == AVOIDABLE:
            search.stats.bypass_calls_avoidable += 1
        else:
            search.stats.bypass_calls_unavoidable += 1
        idx = _start_index(chain, agent)
        v_start = chain[idx]
        start_cell = v_start.cells[agent]
        view = OccupancyView({a: p for a, p in paths.items() if a != agent})
        key = (agent, start_cell, idx, self.state_rev)
        if key in self.memo:
            cached = self.memo[key]
            if cached is None:
                return None
            seg = PathSegment(agent=agent, cells=cached, start_time=idx)
            if _segment_clear(seg, view, search.model):
                return seg, v_start
            # A believed path moved under the memo entry: recompute.
        seg = find_bypass(search.policies[agent], start_cell, idx, view, search.model)
        if seg is None:
            self.memo[key] = None
            search.stats.bypass_fail += 1
            return None
        self.memo[key] = seg.cells
        search.stats.bypass_success += 1
        return seg, v_start

    # -- algorithm: resolve one transition -------------------------------

    def resolve(
        self,
        search: SubdimensionalSearch,
        v_k: JointVertex,
        v_l: JointVertex,
        conflicts: list[Conflict],
    ) -> AgentSet:
        """Handle the collisions of the transition v_k -> v_l.

        Returns the agents that must join the successor's collision set.
        Successful reroutes are installed unless some conflict failed
        outright.
        """
        if not conflicts:
            return 0
        stats = search.stats
        c_pred = v_k.collision_set
        chain = parent_chain(v_k)
        paths = self._agent_paths(search, chain, v_l)
        c_new: AgentSet = 0
        any_failure = False
        found: list[tuple[PathSegment, JointVertex]] = []

        def update_paths(seg: PathSegment) -> None:
            # working view only; the memo epoch moves on installs alone
            history = [v.cells[seg.agent] for v in chain[: seg.start_time]]
            paths[seg.agent] = history + list(seg.cells)

        for conflict in sorted(conflicts, key=lambda c: (c.agents, c.kind)):
            cls = classify(conflict, c_pred)
            if cls.kind == UNAVOIDABLE:
                stats.conflicts_unavoidable += 1
                continue  # both already branch exhaustively: nothing to repair
            if cls.kind == HALF_AVOIDABLE:
                stats.conflicts_half += 1
                in_agent = cls.in_set.bit_length() - 1
                out_agent = (
                    conflict.agents[0]
                    if conflict.agents[1] == in_agent
                    else conflict.agents[1]
                )
                got = self._attempt(search, chain, paths, out_agent, HALF_AVOIDABLE)
                if got is not None:
                    found.append(got)
                    update_paths(got[0])
                    c_new |= 1 << in_agent
                else:
                    any_failure = True
                    c_new |= conflict.mask
                continue
            # avoidable: lower index first, then the partner
            stats.conflicts_avoidable += 1
            first, second = conflict.agents
            got = self._attempt(search, chain, paths, first, AVOIDABLE)
            if got is not None:
                found.append(got)
                update_paths(got[0])
                continue
            got = self._attempt(search, chain, paths, second, AVOIDABLE)
            if got is not None:
                found.append(got)
                update_paths(got[0])
                continue
            any_failure = True
            c_new |= conflict.mask
        # Install the reroutes unless some conflict could not be avoided at
        # all.  A half-avoidable success adds its inside agent to the new
        # collision set but still counts as avoided: without installing its
        # reroute the search can starve when that agent was already in every
        # upstream set.
        if not any_failure and found:
            self.generate_new_path(search, v_l, found)
        return c_new

    def generate_new_path(
        self,
        search: SubdimensionalSearch,
        v_l: JointVertex,
        segments: list[tuple[PathSegment, JointVertex]],
    ) -> None:
        """Install rerouted segments as overrides at their start vertices
        and re-open those vertices; repeat installs of a segment already
        seen at a vertex are no-ops (keeps the modification count finite)."""
        for seg, v_start in segments:
            history = v_start.override_history.setdefault(seg.agent, set())
            if seg.cells in history:
                continue
            history.add(seg.cells)
            dist = search.policies[seg.agent].dist(seg.cells[0])
            if seg.cost != dist:
                raise AssertionError(
                    f"bypass segment for agent {seg.agent} costs {seg.cost}, "
                    f"canonical cost-to-go is {dist}"
                )
            search.register_segment(seg, v_start)
            search.set_override(v_start, seg.agent, seg, 0)
            search.reopen(v_start)
            self.state_rev += 1
            search.stats.installed_segments.append(
                (seg.agent, seg.cells[0], seg.start_time, seg.cost, dist)
            )


def solve_bpmstar(
    instance: Instance,
    model: ConflictModel = ConflictModel.VERTEX_AND_SWAP,
    timeout: float | None = None,
    track_csets: bool = False,
) -> SolveResult:
    """Subdimensional expansion with bypass conflict resolution."""
    deadline = None if timeout is None else time.monotonic() + timeout
    search = SubdimensionalSearch(
        instance,
        model,
        deadline=deadline,
        conflict_resolver=BypassResolver(),
        track_csets=track_csets,
    )
    return search.solve()
