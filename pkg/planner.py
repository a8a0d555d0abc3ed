"""
Theta* planners over grid vertices

``ThetaStarPlanner`` is the baseline (Path 1 / Path 2 relaxation, or plain
8-neighbour A* with ``any_angle=False``). ``ConstrainedThetaStarPlanner`` adds
the route constraints, dead-end backtracking with edge blocking, and the
inner open list used to cross coverage holes from a forced entry parent.
"""

import heapq
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, NamedTuple, Optional, Set, Tuple

from config import PLANNER_SETTINGS
from constraints import ConstraintSet, PathContext, PathState, close_path_state, extend_path_state
from geometry import continues_straight, euclid, merge_collinear, polyline_length

NEIGHBOR_STEPS = ((1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1))

_PUSH, _POP = 0, 1


@dataclass(eq=False)
class SearchNode:
    """Immutable per-vertex search record; parents are node references"""
    vertex: Tuple[int, int]
    g: float
    h: float
    parent: Optional['SearchNode'] = None
    via: Optional['SearchNode'] = None     # expanded node that generated this one
    state: Optional[PathState] = None
    forced: bool = False                   # no Path 2 over this node
    from_hole: bool = False                # produced by an inner hole search

    @property
    def f(self):
        return self.g + self.h

    @property
    def parent_vertex(self):
        return self.parent.vertex if self.parent is not None else None

    @property
    def via_neighbor(self):
        return self.via.vertex if self.via is not None else None

    @property
    def forced_parent(self):
        return self.forced

    @property
    def hole_acc(self):
        if self.state is None or not self.state.in_hole:
            return 0.0
        return self.state.run_acc

    def path(self):
        """Vertices from the root to this node"""
        chain = []
        node = self
        while node is not None:
            chain.append(node.vertex)
            node = node.parent
        chain.reverse()
        return chain


class OpenList:
    """Min-heap on (f, -g, x, y) with O(1) checkpoints

    Pushes and pops are journaled; ``restore`` replays the journal backwards,
    returning popped entries to the heap and cancelling later pushes, so the
    pop order after a restore is identical to the one seen after the
    checkpoint.
    """

    def __init__(self, journaling=True):
        self._heap = []
        self._seq = 0
        self._journal = []
        self._cancelled = set()
        self.journaling = journaling

    def push(self, node):
        entry = (node.f, -node.g, node.vertex[0], node.vertex[1], self._seq, node)
        self._seq += 1
        heapq.heappush(self._heap, entry)
        if self.journaling:
            self._journal.append((_PUSH, entry))

    def pop(self):
        while self._heap:
            entry = heapq.heappop(self._heap)
            if entry[4] in self._cancelled:
                continue
            if self.journaling:
                self._journal.append((_POP, entry))
            return entry[5]
        raise IndexError("pop from empty open list")

    def _purge(self):
        while self._heap and self._heap[0][4] in self._cancelled:
            heapq.heappop(self._heap)

    def __bool__(self):
        self._purge()
        return bool(self._heap)

    def __len__(self):
        return sum(1 for entry in self._heap if entry[4] not in self._cancelled)

    def checkpoint(self):
        return len(self._journal)

    def restore(self, token):
        while len(self._journal) > token:
            kind, entry = self._journal.pop()
            if kind == _POP:
                heapq.heappush(self._heap, entry)
            else:
                self._cancelled.add(entry[4])


class SearchState:
    """Open list, best-node table and closed set sharing one undo journal"""

    def __init__(self, journaling=False):
        self.open = OpenList(journaling=journaling)
        self.best: Dict[tuple, SearchNode] = {}
        self.closed: Set[tuple] = set()
        self.journaling = journaling
        self._journal = []

    def set_best(self, vertex, node):
        if self.journaling:
            self._journal.append(('best', vertex, self.best.get(vertex)))
        self.best[vertex] = node

    def drop_best(self, vertex):
        if vertex in self.best:
            if self.journaling:
                self._journal.append(('best', vertex, self.best[vertex]))
            del self.best[vertex]

    def close(self, vertex):
        if vertex not in self.closed:
            if self.journaling:
                self._journal.append(('close', vertex, None))
            self.closed.add(vertex)

    def reopen(self, vertex):
        if vertex in self.closed:
            if self.journaling:
                self._journal.append(('open', vertex, None))
            self.closed.discard(vertex)

    def checkpoint(self):
        return self.open.checkpoint(), len(self._journal)

    def restore(self, token):
        open_token, mark = token
        self.open.restore(open_token)
        while len(self._journal) > mark:
            kind, vertex, previous = self._journal.pop()
            if kind == 'best':
                if previous is None:
                    self.best.pop(vertex, None)
                else:
                    self.best[vertex] = previous
            elif kind == 'close':
                self.closed.discard(vertex)
            else:
                self.closed.add(vertex)


@dataclass
class PlannedPath:
    turning_points: List[Tuple[int, int]]
    cost_m: float
    visited_trace: List[Tuple[int, int]] = field(default_factory=list, repr=False)
    expansions: int = 0
    backtracks: int = 0
    planner: str = ''

    found = True

    @property
    def turns(self):
        return max(0, len(self.turning_points) - 2)


@dataclass
class NoPath:
    """Search finished without reaching the goal"""
    reason: str
    expansions: int = 0
    backtracks: int = 0
    visited_trace: List[Tuple[int, int]] = field(default_factory=list, repr=False)
    planner: str = ''

    found = False


class ThetaStarPlanner:
    """Baseline Theta* over grid vertices"""

    name = 'theta'

    def __init__(self, world, holes=(), constraints=None, blocks=None, any_angle=True,
                 respect_corridor=False, name=None):
        self.world = world
        self.holes = list(holes)
        self.constraints = constraints or ConstraintSet()
        self.any_angle = any_angle
        if name:
            self.name = name
        self.context = PathContext(world, self.holes, self.constraints, enforce=constraints is not None,
                                   respect_corridor=respect_corridor, blocks=blocks)
        self.count_dead_ends = False
        self.logger = logging.getLogger(f"{__name__}.{self.name}")
        self.search = None
        self.start = self.goal = None

    def heuristic(self, v):
        if self.goal is None:
            return 0.0
        return euclid(v, self.goal, self.world.cell_size_m)

    def begin(self, start, goal):
        """Reset run-local state and return the root node"""
        self.start = tuple(start)
        self.goal = tuple(goal) if goal is not None else None
        self.context.set_endpoints(self.start, self.goal)
        self.search = SearchState()
        self.visited = []
        self.expansions = 0
        self.backtracks = 0
        self.blocked_edges = set()
        return SearchNode(self.start, 0.0, self.heuristic(self.start), state=PathState.at(self.start))

    def plan(self, start, goal):
        root = self.begin(start, goal)
        search = self.search
        search.set_best(root.vertex, root)
        search.open.push(root)

        while search.open:
            s = search.open.pop()
            if search.best.get(s.vertex) is not s or s.vertex in search.closed:
                continue
            if s.vertex == self.goal:
                return self._finish(s)
            search.close(s.vertex)
            self.visited.append(s.vertex)
            self.expansions += 1
            self._visit(s)

        self.logger.debug(f"No path {self.start} -> {self.goal} after {self.expansions} expansions")
        return NoPath("open list exhausted", self.expansions, self.backtracks, list(self.visited), self.name)

    def _visit(self, s):
        return self._expand(s)

    def _expand(self, s):
        """Relax the 8 neighbours of s; returns the number of feasible successors"""
        search = self.search
        x, y = s.vertex
        feasible = 0
        for dx, dy in NEIGHBOR_STEPS:
            n = (x + dx, y + dy)
            if (s.vertex, n) in self.blocked_edges:
                continue
            closed = n in search.closed
            if closed and not self.count_dead_ends:
                continue
            # Main-search legs may clip holes; the storage run is accounted in the state
            child = self._successor(s, n, None)
            if child is None:
                continue
            feasible += 1
            if closed:
                continue
            current = search.best.get(n)
            if current is None or child.g < current.g:
                search.set_best(n, child)
                search.open.push(child)
        return feasible

    def _successor(self, s, n, policy, forced=False, from_hole=False):
        """Path 2 through s's parent when feasible, otherwise Path 1 through s"""
        if self.any_angle and not s.forced and s.parent is not None:
            state = self._extend(s.parent, n, policy)
            if state is not None:
                return self._node(n, s.parent, s, state, forced, from_hole)
        state = self._extend(s, n, policy)
        if state is None:
            return None
        return self._node(n, s, s, state, forced, from_hole)

    def _extend(self, node, n, policy):
        state = extend_path_state(node.state, n, self.context, policy)
        if state is not None and n == self.goal and not close_path_state(state, self.context):
            return None
        return state

    def _node(self, n, parent, via, state, forced=False, from_hole=False):
        g = parent.g + euclid(parent.vertex, n, self.world.cell_size_m)
        return SearchNode(n, g, self.heuristic(n), parent, via, state, forced, from_hole)

    def _finish(self, goal_node):
        points = merge_collinear(goal_node.path())
        cost = polyline_length(points, self.world.cell_size_m)
        self.logger.debug(f"Path found: {len(points)} turning points, {cost:.3f} m, "
                          f"{self.expansions} expansions, {self.backtracks} backtracks")
        return PlannedPath(points, cost, list(self.visited), self.expansions, self.backtracks, self.name)


class ConstrainedThetaStarPlanner(ThetaStarPlanner):
    """Theta* under the five route constraints"""

    name = 'constrained'

    def __init__(self, world, holes, constraints, settings=None):
        super().__init__(world, holes, constraints, respect_corridor=True)
        self.settings = dict(PLANNER_SETTINGS, **(settings or {}))
        self.storage_active = self.context.storage_active
        self.count_dead_ends = not self.constraints.is_trivial
        self._hole_of = {v: hole for hole in self.holes for v in hole.vertices}

    def begin(self, start, goal):
        root = super().begin(start, goal)
        self._explored = set()
        self._entries = {}
        self.hole_backtracks = 0
        self.hole_explorations = 0
        self.certified = False
        return root

    def plan(self, start, goal):
        result = super().plan(start, goal)
        if self._certifiable():
            result = self._certify(result)
        return result

    def _certifiable(self):
        world = self.world
        vertices = (world.width + 1) * (world.height + 1)
        return not self.constraints.is_trivial and vertices <= self.settings['certify_max_vertices']

    def _certify(self, result):
        """Exact turning-point search on small grids

        Confirms a NoPath, and replaces a found path when a feasible one
        cheaper by more than ``certify_ratio`` exists.
        """
        bound = result.cost_m / self.settings['certify_ratio'] if result.found else math.inf
        exact = label_search(self.context, self.start, self.goal, self.settings['exhaustive_max_vertices'], bound)
        self.certified = True
        self.expansions += exact.expansions
        self.visited.extend(exact.trace)
        if exact.points is None:
            result.expansions = self.expansions
            result.visited_trace = list(self.visited)
            return result
        cost = polyline_length(exact.points, self.world.cell_size_m)
        self.logger.debug(f"Exact search improved {self.start} -> {self.goal} to {cost:.3f} m "
                          f"({'no path' if not result.found else f'{result.cost_m:.3f} m'} before)")
        return PlannedPath(exact.points, cost, list(self.visited), self.expansions, self.backtracks, self.name)

    def _visit(self, s):
        feasible = 0
        hole = self._entry_hole(s)
        if hole is not None:
            self.hole_explorations += 1
            exits = HoleExplorer(self, hole, s).run()
            feasible += len(exits)
            self._merge_exits(exits)
        feasible += self._expand(s)
        if feasible == 0 and self.count_dead_ends:
            self._backtrack(s)
        return feasible

    def _entry_hole(self, s):
        if not self.storage_active or s.from_hole or s in self._explored:
            return None
        hole = self._hole_of.get(s.vertex)
        if hole is None:
            return None
        if s.vertex not in hole.boundary_vertices and s.parent is not None:
            return None
        if self._entries.get(hole.id, 0) >= self.settings['max_hole_entries']:
            return None
        self._explored.add(s)
        self._entries[hole.id] = self._entries.get(hole.id, 0) + 1
        return hole

    def _merge_exits(self, exits):
        search = self.search
        for node in exits:
            if node.vertex in search.closed:
                continue
            current = search.best.get(node.vertex)
            if current is None or node.g < current.g:
                search.set_best(node.vertex, node)
                search.open.push(node)

    def _backtrack(self, s):
        """Step back to the neighbour that generated s and block that edge"""
        via = s.via
        if via is None or s.from_hole or self.backtracks >= self.settings['max_backtracks']:
            return
        self.backtracks += 1
        self.blocked_edges.add((via.vertex, s.vertex))

        search = self.search
        if search.best.get(s.vertex) is s:
            search.drop_best(s.vertex)
        search.reopen(s.vertex)

        x, y = s.vertex
        neighbours = [(x + dx, y + dy) for dx, dy in NEIGHBOR_STEPS]
        for v in [via.vertex] + neighbours:
            node = search.best.get(v)
            if node is None or v not in search.closed:
                continue
            search.reopen(v)
            search.open.push(node)
        self.logger.debug(f"Dead end at {s.vertex}: blocked edge {via.vertex}->{s.vertex}")


class HoleExplorer:
    """Inner open list that exhausts one hole's exits from a fixed entry"""

    def __init__(self, planner, hole, entry):
        self.planner = planner
        self.hole = hole
        self.root = SearchNode(entry.vertex, entry.g, entry.h, entry.parent, entry.via, entry.state,
                               forced=True, from_hole=entry.from_hole)
        self.search = SearchState(journaling=True)
        self.checkpoints: Dict[SearchNode, tuple] = {}
        self.blocked_edges: Set[tuple] = set()
        self.exits: Dict[tuple, SearchNode] = {}
        self.backtracks = 0
        self.max_backtracks = planner.settings['max_hole_backtracks']
        self.max_expansions = planner.settings['max_hole_expansions']
        self.expansions = 0
        self.logger = logging.getLogger(f"{__name__}.hole")

    def seed(self):
        self.search.set_best(self.root.vertex, self.root)
        self.search.open.push(self.root)

    def step(self):
        """Pop and expand one node; None once the inner open list is empty"""
        search = self.search
        planner = self.planner
        while search.open:
            if self.expansions >= self.max_expansions:
                self.logger.debug(f"Hole {self.hole.id} exploration stopped after {self.expansions} expansions")
                return None
            s = search.open.pop()
            if search.best.get(s.vertex) is not s or s.vertex in search.closed:
                continue
            self.checkpoints[s] = search.checkpoint()
            search.close(s.vertex)
            planner.visited.append(s.vertex)
            planner.expansions += 1
            self.expansions += 1

            is_exit = s is not self.root and (s.vertex in self.hole.boundary_vertices or s.vertex == planner.goal)
            if is_exit:
                current = self.exits.get(s.vertex)
                if current is None or s.g < current.g:
                    self.exits[s.vertex] = s
            if s.vertex != planner.goal:
                feasible = self._expand(s)
                if (feasible == 0 and not is_exit and s is not self.root
                        and self.backtracks < self.max_backtracks):
                    self.backtracks += 1
                    backtrack_in_hole(self, s, self.hole)
            return s
        return None

    def run(self):
        self.seed()
        while self.step() is not None:
            pass
        self.planner.hole_backtracks = getattr(self.planner, 'hole_backtracks', 0) + self.backtracks
        self.logger.debug(f"Hole {self.hole.id} from {self.root.vertex}: {len(self.exits)} exits, "
                          f"{self.backtracks} rescinds")
        return [self.exits[v] for v in sorted(self.exits)]

    def _expand(self, s):
        planner = self.planner
        search = self.search
        hole = self.hole
        x, y = s.vertex
        feasible = 0
        for dx, dy in NEIGHBOR_STEPS:
            n = (x + dx, y + dy)
            if n not in hole.vertices or (s.vertex, n) in self.blocked_edges:
                continue
            forced = n in hole.boundary_vertices or n == planner.goal
            child = planner._successor(s, n, hole.id, forced=forced, from_hole=True)
            if child is None:
                continue
            feasible += 1
            if n in search.closed:
                continue
            current = search.best.get(n)
            if current is None or child.g < current.g:
                search.set_best(n, child)
                search.open.push(child)
        return feasible


def backtrack_in_hole(explorer, current, hole):
    """Rescind along the evolved path by the distance to the hole boundary

    The rescind distance is the distance from ``current`` to the nearest
    boundary vertex, rounded half up and at least one step. The target is the
    node on the expansion chain whose walked distance back is closest to it.
    """
    if hole.boundary_vertices:
        nearest = min(euclid(current.vertex, b) for b in hole.boundary_vertices)
    else:
        nearest = 0.0
    target = max(1, int(math.floor(nearest + 0.5)))

    chain = [current]
    node = current
    while node is not explorer.root and node.via is not None:
        node = node.via
        chain.append(node)

    walked = [0.0]
    for i in range(1, len(chain)):
        walked.append(walked[-1] + euclid(chain[i - 1].vertex, chain[i].vertex))

    if len(chain) == 1:
        index = 0
    else:
        index = min(range(1, len(chain)), key=lambda i: (abs(walked[i] - target), walked[i]))
    rescind = chain[index]
    if index > 0:
        explorer.blocked_edges.add((rescind.vertex, chain[index - 1].vertex))

    search = explorer.search
    token = explorer.checkpoints.get(rescind)
    if token is not None:
        search.restore(token)
    search.reopen(rescind.vertex)
    search.set_best(rescind.vertex, rescind)
    search.open.push(rescind)
    explorer.logger.debug(f"Rescind {current.vertex} -> {rescind.vertex} (distance {target})")
    return rescind


class LabelSearchResult(NamedTuple):
    points: Optional[List[Tuple[int, int]]]
    expansions: int
    trace: List[Tuple[int, int]]
    truncated: bool     # some label was cut by the turning-point limit


def label_search(ctx, start, goal, max_vertices, bound=math.inf):
    """Cheapest feasible turning-point path costing less than ``bound``

    Labels are Pareto sets over (cost, in-hole run length, turns) per
    (vertex, leg origin, hole run, turned) key; transitions go to every
    visible vertex.
    """
    cell = ctx.cell_size
    world = ctx.world
    vertices = [(x, y) for y in range(world.height + 1) for x in range(world.width + 1) if ctx.vertex_ok((x, y))]
    visible = {}

    def targets(v):
        if v not in visible:
            visible[v] = [w for w in vertices if w != v and ctx.clear(v, w)]
        return visible[v]

    fronts: Dict[tuple, list] = {}
    back: Dict[int, Tuple[Optional[int], tuple]] = {0: (None, start)}
    dead = set()
    heap = [(euclid(start, goal, cell), 0.0, 0, PathState.at(start))]
    seq = 1
    expansions = 0
    truncated = False
    trace = []

    while heap:
        _, g, label, state = heapq.heappop(heap)
        if label in dead:
            continue
        v = state.vertex
        if v == goal:
            points = []
            while label is not None:
                label, vertex = back[label]
                points.append(vertex)
            points.reverse()
            return LabelSearchResult(merge_collinear(points), expansions, trace, truncated)

        expansions += 1
        trace.append(v)
        for w in targets(v):
            if state.origin != v and continues_straight(state.origin, v, w):
                continue
            new = extend_path_state(state, w, ctx)
            if new is None:
                continue
            if w == goal and not close_path_state(new, ctx):
                continue
            if new.turns + 2 > max_vertices:
                truncated = True
                continue
            ng = g + euclid(v, w, cell)
            nf = ng + euclid(w, goal, cell)
            if nf >= bound:
                continue
            key = (w, new.origin, new.run_hole, new.turns > 0)
            front = fronts.setdefault(key, [])
            if any(og <= ng and oacc <= new.run_acc and ot <= new.turns for og, oacc, ot, _ in front):
                continue
            kept = []
            for entry in front:
                if ng <= entry[0] and new.run_acc <= entry[1] and new.turns <= entry[2]:
                    dead.add(entry[3])
                else:
                    kept.append(entry)
            kept.append((ng, new.run_acc, new.turns, seq))
            fronts[key] = kept
            back[seq] = (label, w)
            heapq.heappush(heap, (nf, ng, seq, new))
            seq += 1

    return LabelSearchResult(None, expansions, trace, truncated)


def theta_star(world, start, goal, blocks=None, respect_corridor=False, holes=()):
    """Unconstrained any-angle path"""
    planner = ThetaStarPlanner(world, holes, blocks=blocks, respect_corridor=respect_corridor)
    return planner.plan(start, goal)


def astar_8(world, start, goal):
    """8-neighbour A* reference under the same move rules"""
    return ThetaStarPlanner(world, any_angle=False, name='astar').plan(start, goal)


def constrained_theta_star(world, holes, cs, start, goal, settings=None):
    return ConstrainedThetaStarPlanner(world, holes, cs, settings).plan(start, goal)


def explore_hole(world, hole, entry, cs, inherited_state=None, holes=None, goal=None):
    """Exits reachable inside ``hole`` from ``entry``, sorted by vertex"""
    planner = ConstrainedThetaStarPlanner(world, holes if holes is not None else [hole], cs)
    planner.begin(entry, goal)
    entry = tuple(entry)
    state = inherited_state or PathState.at(entry)
    root = SearchNode(entry, 0.0, planner.heuristic(entry), state=state)
    return HoleExplorer(planner, hole, root).run()
