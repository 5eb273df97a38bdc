"""Directed graph model for survivable network design.

An :class:`Instance` is a directed graph with arc costs and integer
capacities, a root vertex that produces flow, a set of terminal vertices
that each demand one unit, and two budgets: ``k`` simultaneous arc
failures must be survived, at most ``kp`` arcs may be protected against
failure.

Every solver component works on the :class:`AugmentedInstance`, which
adds a super sink ``s`` and one fictive arc per terminal (cost 0,
capacity 1).  Routing ``|T|`` units from the root to ``s`` is then the
single feasibility currency: a design survives a failure set iff the
surviving selected arcs still carry ``|T|`` units.

Example
-------
>>> inst = Instance(3, (Arc(0, 1, 1, 1), Arc(0, 2, 2, 1), Arc(1, 2, 1, 1)),
...                 root=0, terminals=(2,), k=1, kp=0)
>>> aug = augment(inst)
>>> max_flow(aug, ArcMask.full(aug)).value
1
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

SINK_LABEL = "s"


class GraphError(ValueError):
    """Raised for structurally invalid instances, masks, or cuts."""


@dataclass(frozen=True)
class Arc:
    """Directed arc with a nonnegative cost and a nonnegative integer capacity."""

    tail: int
    head: int
    cost: float
    capacity: int


@dataclass(frozen=True)
class Instance:
    """Problem input before super-sink augmentation.

    ``terminals`` is kept sorted, ``labels`` maps internal vertex ids to the
    external names used in files (defaults to "1".."n").
    """

    vertex_count: int
    arcs: tuple[Arc, ...]
    root: int
    terminals: tuple[int, ...]
    k: int
    kp: int
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "arcs", tuple(self.arcs))
        object.__setattr__(self, "terminals", tuple(sorted(self.terminals)))
        if not self.labels:
            object.__setattr__(
                self, "labels", tuple(str(i + 1) for i in range(self.vertex_count))
            )
        self._validate()

    def _validate(self) -> None:
        n = self.vertex_count
        if n <= 0:
            raise GraphError("instance needs at least one vertex")
        if len(self.labels) != n:
            raise GraphError("labels must cover every vertex")
        if not 0 <= self.root < n:
            raise GraphError(f"root {self.root} out of range")
        seen_pairs: set[tuple[int, int]] = set()
        for a in self.arcs:
            if not (0 <= a.tail < n and 0 <= a.head < n):
                raise GraphError(f"arc ({a.tail},{a.head}) references unknown vertex")
            if a.tail == a.head:
                raise GraphError(f"self-loop on vertex {a.tail}")
            if (a.tail, a.head) in seen_pairs:
                raise GraphError(f"parallel arc ({a.tail},{a.head})")
            seen_pairs.add((a.tail, a.head))
            if a.cost < 0:
                raise GraphError(f"negative cost on arc ({a.tail},{a.head})")
            if a.capacity < 0 or int(a.capacity) != a.capacity:
                raise GraphError(
                    f"capacity of arc ({a.tail},{a.head}) must be a nonnegative integer"
                )
        terms = self.terminals
        if len(set(terms)) != len(terms):
            raise GraphError("duplicate terminal")
        for t in terms:
            if not 0 <= t < n:
                raise GraphError(f"terminal {t} out of range")
            if t == self.root:
                raise GraphError("root cannot be a terminal")
        if self.k < 0 or self.kp < 0:
            raise GraphError("budgets must be nonnegative")
        if self.k + self.kp > len(self.arcs):
            raise GraphError(
                f"k + kp = {self.k + self.kp} exceeds arc count {len(self.arcs)}"
            )


@dataclass(frozen=True)
class AugmentedInstance:
    """Instance plus super sink and fictive terminal arcs.

    Arcs 0..initial_arc_count-1 are the original ("initial") arcs; the
    remaining ones are fictive arcs (terminal -> sink), one per terminal in
    sorted terminal order, each with cost 0 and capacity 1.
    """

    vertex_count: int
    arcs: tuple[Arc, ...]
    root: int
    terminals: tuple[int, ...]
    k: int
    kp: int
    sink: int
    initial_arc_count: int
    labels: tuple[str, ...]

    @property
    def demand(self) -> int:
        """Units of flow that must reach the sink: one per terminal."""
        return len(self.terminals)

    @property
    def arc_count(self) -> int:
        return len(self.arcs)

    @property
    def initial_arcs(self) -> range:
        return range(self.initial_arc_count)

    @property
    def fictive_arcs(self) -> range:
        return range(self.initial_arc_count, len(self.arcs))

    def is_fictive(self, arc: int) -> bool:
        return arc >= self.initial_arc_count

    def capacities(self) -> np.ndarray:
        return np.array([a.capacity for a in self.arcs], dtype=np.int64)

    def costs(self) -> np.ndarray:
        return np.array([a.cost for a in self.arcs], dtype=np.float64)

    def arc_index(self, tail: int, head: int) -> int:
        for i, a in enumerate(self.arcs):
            if a.tail == tail and a.head == head:
                return i
        raise GraphError(f"no arc ({tail},{head})")


def augment(instance: Instance) -> AugmentedInstance:
    """Attach the super sink and one unit-capacity fictive arc per terminal."""
    if SINK_LABEL in instance.labels:
        raise GraphError(f"vertex label {SINK_LABEL!r} is reserved for the super sink")
    sink = instance.vertex_count
    fictive = tuple(Arc(t, sink, 0.0, 1) for t in instance.terminals)
    return AugmentedInstance(
        vertex_count=instance.vertex_count + 1,
        arcs=instance.arcs + fictive,
        root=instance.root,
        terminals=instance.terminals,
        k=instance.k,
        kp=instance.kp,
        sink=sink,
        initial_arc_count=len(instance.arcs),
        labels=instance.labels + (SINK_LABEL,),
    )


class ArcMask:
    """Effective per-arc capacities of a (possibly attacked) design.

    A selected arc keeps its capacity unless it is failed while
    unprotected; everything else drops to zero.  Fictive arcs can never
    fail.
    """

    __slots__ = ("capacities",)

    def __init__(self, aug: AugmentedInstance, capacities: np.ndarray):
        capacities = np.asarray(capacities, dtype=np.int64)
        if capacities.shape != (aug.arc_count,):
            raise GraphError("mask length must match arc count")
        if np.any(capacities < 0):
            raise GraphError("mask capacities must be nonnegative")
        full = aug.capacities()
        if np.any(capacities > full):
            raise GraphError("mask may not exceed arc capacity")
        self.capacities = capacities

    @staticmethod
    def full(aug: AugmentedInstance) -> "ArcMask":
        return ArcMask(aug, aug.capacities())

    @staticmethod
    def for_design(
        aug: AugmentedInstance,
        selected: Iterable[int],
        protected: Iterable[int] = (),
        failed: Iterable[int] = (),
    ) -> "ArcMask":
        selected = set(selected)
        protected = set(protected)
        failed = set(failed)
        for arc in failed:
            if aug.is_fictive(arc):
                raise GraphError("fictive arcs never fail")
        caps = np.zeros(aug.arc_count, dtype=np.int64)
        for i, a in enumerate(aug.arcs):
            if i not in selected:
                continue
            if i in failed and i not in protected:
                continue
            caps[i] = a.capacity
        return ArcMask(aug, caps)


@dataclass(frozen=True)
class CutSet:
    """A root/sink bipartition and the arcs entering its sink side.

    ``sink_side`` contains the sink and never the root.  ``arcs`` holds the
    indices of every arc crossing into the sink side, sorted.
    """

    sink_side: frozenset[int]
    arcs: tuple[int, ...]

    @staticmethod
    def from_sink_side(aug: AugmentedInstance, vertices: Iterable[int]) -> "CutSet":
        side = frozenset(vertices)
        if aug.sink not in side:
            raise GraphError("cut sink side must contain the super sink")
        if aug.root in side:
            raise GraphError("cut sink side must not contain the root")
        if not all(0 <= v < aug.vertex_count for v in side):
            raise GraphError("cut references unknown vertex")
        crossing = tuple(
            i
            for i, a in enumerate(aug.arcs)
            if a.tail not in side and a.head in side
        )
        return CutSet(sink_side=side, arcs=crossing)

    def capacity(self, mask: ArcMask) -> int:
        return int(sum(mask.capacities[i] for i in self.arcs))


@dataclass(frozen=True)
class FlowResult:
    """Max-flow value plus one integral per-arc routing that attains it."""

    value: int
    flow: np.ndarray


def _dinic(
    n: int,
    tails: Sequence[int],
    heads: Sequence[int],
    caps: Sequence[int],
    source: int,
    sink: int,
) -> tuple[int, list[int]]:
    # adjacency of edge ids; edge 2i is arc i forward, 2i+1 its residual
    m = len(tails)
    to = [0] * (2 * m)
    cap = [0] * (2 * m)
    adj: list[list[int]] = [[] for _ in range(n)]
    for i in range(m):
        to[2 * i] = heads[i]
        cap[2 * i] = int(caps[i])
        to[2 * i + 1] = tails[i]
        adj[tails[i]].append(2 * i)
        adj[heads[i]].append(2 * i + 1)

    total = 0
    while True:
        level = [-1] * n
        level[source] = 0
        queue = collections.deque([source])
        while queue:
            v = queue.popleft()
            for e in adj[v]:
                if cap[e] > 0 and level[to[e]] < 0:
                    level[to[e]] = level[v] + 1
                    queue.append(to[e])
        if level[sink] < 0:
            break
        it = [0] * n

        def push(v: int, limit: int) -> int:
            if v == sink:
                return limit
            while it[v] < len(adj[v]):
                e = adj[v][it[v]]
                w = to[e]
                if cap[e] > 0 and level[w] == level[v] + 1:
                    got = push(w, min(limit, cap[e]))
                    if got > 0:
                        cap[e] -= got
                        cap[e ^ 1] += got
                        return got
                it[v] += 1
            level[v] = -1
            return 0

        while True:
            pushed = push(source, 1 << 60)
            if pushed == 0:
                break
            total += pushed
    return total, cap


def max_flow(
    aug: AugmentedInstance,
    mask: ArcMask,
    source: int | None = None,
    sink: int | None = None,
) -> FlowResult:
    """Exact max flow under the mask's capacities (integral by construction)."""
    source = aug.root if source is None else source
    sink = aug.sink if sink is None else sink
    tails = [a.tail for a in aug.arcs]
    heads = [a.head for a in aug.arcs]
    value, residual = _dinic(
        aug.vertex_count, tails, heads, mask.capacities, source, sink
    )
    flow = np.array(
        [int(mask.capacities[i]) - residual[2 * i] for i in range(aug.arc_count)],
        dtype=np.int64,
    )
    return FlowResult(value=value, flow=flow)


def min_cut(
    aug: AugmentedInstance,
    mask: ArcMask,
    source: int | None = None,
    sink: int | None = None,
) -> CutSet:
    """A minimum root/sink cut under the mask; its capacity equals max_flow."""
    source = aug.root if source is None else source
    sink = aug.sink if sink is None else sink
    tails = [a.tail for a in aug.arcs]
    heads = [a.head for a in aug.arcs]
    _, residual = _dinic(aug.vertex_count, tails, heads, mask.capacities, source, sink)
    # vertices still reachable in the residual network form the root side
    adj: list[list[tuple[int, int]]] = [[] for _ in range(aug.vertex_count)]
    for i in range(aug.arc_count):
        adj[tails[i]].append((heads[i], residual[2 * i]))
        adj[heads[i]].append((tails[i], residual[2 * i + 1]))
    reachable = [False] * aug.vertex_count
    reachable[source] = True
    queue = collections.deque([source])
    while queue:
        v = queue.popleft()
        for w, c in adj[v]:
            if c > 0 and not reachable[w]:
                reachable[w] = True
                queue.append(w)
    side = frozenset(v for v in range(aug.vertex_count) if not reachable[v])
    return CutSet.from_sink_side(aug, side)
