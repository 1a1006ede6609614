"""Lazy shortest path with posterior sampling over edge feasibility.

An explicit directed graph stands in for the world model: every edge has a
hidden validity bit and a prior probability of being valid. Evaluating an
edge costs one query and collapses its belief to known-valid or
known-invalid.
"""

from __future__ import annotations

import enum
import heapq
import json
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

Edge = tuple[int, int]

SAMPLE_ATTEMPTS = 50


class NoPathExists(Exception):
    pass


@dataclass(frozen=True)
class EdgeInfo:
    valid: bool  # hidden ground truth
    prior: float


@dataclass
class GraphWorld:
    vertices: list[int]
    edges: dict[Edge, EdgeInfo]
    source: int
    target: int

    def __post_init__(self):
        for e, info in self.edges.items():
            if not 0.0 <= info.prior <= 1.0:
                raise ValueError(f"prior of edge {e} outside [0, 1]")
        vs = set(self.vertices)
        if self.source not in vs or self.target not in vs:
            raise ValueError("source and target must be vertices")
        self._out: dict[int, list[int]] = {v: [] for v in self.vertices}
        for u, v in sorted(self.edges):
            self._out[u].append(v)

    def out(self, u: int) -> list[int]:
        return self._out[u]

    def out_degree(self, u: int) -> int:
        return len(self._out[u])

    def true_distances_to_target(self) -> dict[int, int]:
        """Hop distance to the target over truly valid edges (unreachable omitted)."""
        rev: dict[int, list[int]] = {v: [] for v in self.vertices}
        for (u, v), info in self.edges.items():
            if info.valid:
                rev[v].append(u)
        dist = {self.target: 0}
        q = deque([self.target])
        while q:
            v = q.popleft()
            for u in rev[v]:
                if u not in dist:
                    dist[u] = dist[v] + 1
                    q.append(u)
        return dist

    def with_truth_prior(self) -> "GraphWorld":
        """Copy whose prior equals the hidden truth (1 for valid edges, 0 otherwise)."""
        edges = {e: EdgeInfo(i.valid, 1.0 if i.valid else 0.0) for e, i in self.edges.items()}
        return GraphWorld(list(self.vertices), edges, self.source, self.target)

    # -- fixture format ------------------------------------------------------

    def to_json(self) -> str:
        data = {
            "vertices": self.vertices,
            "source": self.source,
            "target": self.target,
            "edges": [{"from": u, "to": v, "prior": i.prior, "valid": i.valid} for (u, v), i in sorted(self.edges.items())],
        }
        return json.dumps(data, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "GraphWorld":
        data = json.loads(text)
        edges = {(int(e["from"]), int(e["to"])): EdgeInfo(bool(e["valid"]), float(e["prior"])) for e in data["edges"]}
        return cls([int(v) for v in data["vertices"]], edges, int(data["source"]), int(data["target"]))

    @classmethod
    def load(cls, path: str | Path) -> "GraphWorld":
        return cls.from_json(Path(path).read_text())


class EdgeStatus(enum.Enum):
    UNKNOWN = "unknown"
    KNOWN_VALID = "valid"
    KNOWN_INVALID = "invalid"


class EdgeBelief:
    """Per-edge posterior; observations are absorbing because the world is deterministic."""

    def __init__(self, world: GraphWorld):
        self.world = world
        self.status: dict[Edge, EdgeStatus] = {e: EdgeStatus.UNKNOWN for e in world.edges}

    def known(self, e: Edge) -> bool:
        return self.status[e] is not EdgeStatus.UNKNOWN

    def observe(self, e: Edge) -> bool:
        if self.known(e):
            raise RuntimeError(f"edge {e} already evaluated")
        valid = self.world.edges[e].valid
        self.status[e] = EdgeStatus.KNOWN_VALID if valid else EdgeStatus.KNOWN_INVALID
        return valid

    def sample(self, rng: random.Random) -> set[Edge]:
        """Edges present in one world drawn from the posterior."""
        present = set()
        for e in sorted(self.status):
            st = self.status[e]
            if st is EdgeStatus.KNOWN_VALID:
                present.add(e)
            elif st is EdgeStatus.UNKNOWN and rng.random() < self.world.edges[e].prior:
                present.add(e)
        return present

    def support(self) -> set[Edge]:
        """Edges that may still be valid under the posterior."""
        return {e for e, st in self.status.items()
                if st is EdgeStatus.KNOWN_VALID or (st is EdgeStatus.UNKNOWN and self.world.edges[e].prior > 0)}


@dataclass
class RegretTrace:
    deltas: list[int] = field(default_factory=list)

    def record(self, delta: int) -> None:
        if delta < 0:
            raise ValueError("regret is non-negative")
        self.deltas.append(delta)

    @property
    def cumulative(self) -> list[int]:
        out, total = [], 0
        for d in self.deltas:
            total += d
            out.append(total)
        return out

    @property
    def total(self) -> int:
        return sum(self.deltas)


@dataclass
class LazyResult:
    path: list[int] | None
    wmq_used: int
    trace: RegretTrace
    iterations: int


def bfs_path(world: GraphWorld, edges: set[Edge]) -> list[int] | None:
    """Fewest-hop source-to-target path using only ``edges``; ties broken by vertex id."""
    parent = {world.source: None}
    q = deque([world.source])
    while q:
        u = q.popleft()
        if u == world.target:
            path = [u]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1]
        for v in world.out(u):
            if v not in parent and (u, v) in edges:
                parent[v] = u
                q.append(v)
    return None


def _path_edges(path: list[int]) -> list[Edge]:
    return list(zip(path, path[1:]))


def _lazy_loop(world: GraphWorld, T: int, propose: Callable[[EdgeBelief], list[int] | None]) -> LazyResult:
    belief = EdgeBelief(world)
    trace = RegretTrace()
    queries = 0
    no_path_penalty = len(world.vertices) - 1
    for t in range(1, T + 1):
        if bfs_path(world, belief.support()) is None:
            raise NoPathExists("no source-target path can be valid under the posterior")
        path = propose(belief)
        if path is None:
            trace.record(no_path_penalty)
            continue
        invalid = 0
        for e in _path_edges(path):
            if belief.known(e):
                invalid += belief.status[e] is EdgeStatus.KNOWN_INVALID
                continue
            queries += 1
            if not belief.observe(e):
                invalid += 1
        trace.record(invalid)
        if invalid == 0:
            return LazyResult(path, queries, trace, t)
    return LazyResult(None, queries, trace, T)


def run_lazysp_psrl(world: GraphWorld, T: int = 100, seed: int = 0,
                    attempts: int = SAMPLE_ATTEMPTS) -> LazyResult:
    """Sample a world from the posterior, evaluate its shortest path, repeat.

    The posterior is conditioned on a source-target path existing (the loop
    already stops when none can), by rejection over ``attempts`` draws. If
    every draw is pathless the shortest path through the support is used.
    """
    if T < 1:
        raise ValueError("T must be at least 1")
    rng = random.Random(seed)

    def propose(belief: EdgeBelief) -> list[int] | None:
        for _ in range(attempts):
            path = bfs_path(world, belief.sample(rng))
            if path is not None:
                return path
        return bfs_path(world, belief.support())

    return _lazy_loop(world, T, propose)


def run_random_paths(world: GraphWorld, T: int = 100, seed: int = 0) -> LazyResult:
    """Baseline: propose a random simple path through edges not yet known to be invalid."""
    rng = random.Random(seed)

    def propose(belief: EdgeBelief) -> list[int] | None:
        support = belief.support()
        # restrict to vertices that can still reach the target so the walk never dead-ends
        rev: dict[int, list[int]] = {v: [] for v in world.vertices}
        for u, v in support:
            rev[v].append(u)
        alive = {world.target}
        q = deque([world.target])
        while q:
            v = q.popleft()
            for u in rev[v]:
                if u not in alive:
                    alive.add(u)
                    q.append(u)
        # randomized depth-first walk; backtracks out of revisits
        stack = [(world.source, [world.source])]
        while stack:
            u, path = stack.pop()
            if u == world.target:
                return path
            nbrs = [v for v in world.out(u) if (u, v) in support and v in alive and v not in path]
            rng.shuffle(nbrs)
            stack.extend((v, path + [v]) for v in nbrs)
        return None

    return _lazy_loop(world, T, propose)


def astar_edge_evaluations(world: GraphWorld) -> tuple[list[int] | None, int]:
    """A* with the perfect heuristic; every outgoing edge of an expanded vertex is evaluated once."""
    h = world.true_distances_to_target()
    if world.source not in h:
        return None, 0
    evaluated: set[Edge] = set()
    g = {world.source: 0}
    parent = {world.source: None}
    heap = [(h[world.source], h[world.source], world.source)]
    closed = set()
    while heap:
        _, _, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == world.target:
            path = [u]
            while parent[path[-1]] is not None:
                path.append(parent[path[-1]])
            return path[::-1], len(evaluated)
        closed.add(u)
        for v in world.out(u):
            e = (u, v)
            evaluated.add(e)
            if not world.edges[e].valid or v not in h:
                continue
            ng = g[u] + 1
            if ng < g.get(v, ng + 1):
                g[v] = ng
                parent[v] = u
                heapq.heappush(heap, (ng + h[v], h[v], v))
    return None, len(evaluated)


def random_graph_world(n_vertices: int, seed: int, max_out_degree: int = 4, p_valid: float = 0.8,
                       prior: float | None = None, require_path: bool = True) -> GraphWorld:
    """Random digraph with Bernoulli(p_valid) edge validity; source 0, target n-1.

    ``prior=None`` sets every edge prior to ``p_valid``.
    """
    rng = random.Random(seed)
    prior = p_valid if prior is None else prior
    for _ in range(1000):
        edges: dict[Edge, EdgeInfo] = {}
        for u in range(n_vertices):
            others = [v for v in range(n_vertices) if v != u]
            for v in rng.sample(others, rng.randint(1, max_out_degree)):
                edges[(u, v)] = EdgeInfo(rng.random() < p_valid, prior)
        world = GraphWorld(list(range(n_vertices)), edges, 0, n_vertices - 1)
        if not require_path or world.source in world.true_distances_to_target():
            return world
    raise RuntimeError("could not draw a graph with a valid source-target path")


def chain_world(length: int = 5, dummies_per_vertex: int = 2) -> GraphWorld:
    """Chain 0 -> 1 -> ... -> length, each chain vertex also pointing at dead-end dummies."""
    edges: dict[Edge, EdgeInfo] = {}
    next_id = length + 1
    for u in range(length):
        edges[(u, u + 1)] = EdgeInfo(True, 1.0)
        for _ in range(dummies_per_vertex):
            edges[(u, next_id)] = EdgeInfo(True, 1.0)
            next_id += 1
    return GraphWorld(list(range(next_id)), edges, 0, length)


def mean_regret_curve(traces: Iterable[RegretTrace], T: int) -> list[float]:
    """Per-iteration regret averaged over runs; finished runs contribute 0 afterwards."""
    traces = list(traces)
    curve = []
    for t in range(T):
        curve.append(sum(tr.deltas[t] if t < len(tr.deltas) else 0 for tr in traces) / len(traces))
    return curve
