"""Instance and design files, plus the random instance generator.

Instance format (one record per line, ``c`` lines are comments)::

    c optional comment
    p cprsnp <vertices> <arcs>
    r <vertex>
    t <vertex>
    a <tail> <head> <cost> <capacity>
    b <k> <kp>

Vertices are 1-based positive integers.  Exactly one ``p``, one ``r`` and
one ``b`` line; one ``a`` line per arc.  A design file lists selected and
protected initial arcs::

    y <tail> <head>
    p <tail> <head>

Fictive arcs never appear in files.
"""

from __future__ import annotations

import io
import math
import random
from typing import Iterable

from .graph import Arc, ArcMask, AugmentedInstance, GraphError, Instance, augment, max_flow, min_cut
from .formulations import Design

FORMAT_NAME = "cprsnp"


class ParseError(ValueError):
    """Malformed input file; the message carries the 1-based line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def _number(token: str, line_no: int, what: str) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(line_no, f"{what} {token!r} is not a number") from None


def _positive_int(token: str, line_no: int, what: str) -> int:
    try:
        value = int(token)
    except ValueError:
        raise ParseError(line_no, f"{what} {token!r} is not an integer") from None
    if value <= 0:
        raise ParseError(line_no, f"{what} must be positive, got {value}")
    return value


def parse_instance(text: str) -> Instance:
    vertex_count: int | None = None
    arc_count: int | None = None
    root: int | None = None
    terminals: list[int] = []
    arcs: list[Arc] = []
    seen_pairs: set[tuple[int, int]] = set()
    budgets: tuple[int, int] | None = None

    def vertex(token: str, line_no: int) -> int:
        v = _positive_int(token, line_no, "vertex")
        assert vertex_count is not None
        if v > vertex_count:
            raise ParseError(line_no, f"vertex {v} outside 1..{vertex_count}")
        return v - 1

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        fields = line.split()
        kind = fields[0]
        if kind == "p":
            if vertex_count is not None:
                raise ParseError(line_no, "duplicate p line")
            if len(fields) != 4 or fields[1] != FORMAT_NAME:
                raise ParseError(line_no, f"expected 'p {FORMAT_NAME} <vertices> <arcs>'")
            vertex_count = _positive_int(fields[2], line_no, "vertex count")
            arc_count = _positive_int(fields[3], line_no, "arc count")
            continue
        if vertex_count is None:
            raise ParseError(line_no, "p line must come before graph data")
        if kind == "r":
            if root is not None:
                raise ParseError(line_no, "duplicate r line")
            if len(fields) != 2:
                raise ParseError(line_no, "expected 'r <vertex>'")
            root = vertex(fields[1], line_no)
        elif kind == "t":
            if len(fields) != 2:
                raise ParseError(line_no, "expected 't <vertex>'")
            t = vertex(fields[1], line_no)
            if t in terminals:
                raise ParseError(line_no, f"duplicate terminal {fields[1]}")
            terminals.append(t)
        elif kind == "a":
            if len(fields) != 5:
                raise ParseError(line_no, "expected 'a <tail> <head> <cost> <capacity>'")
            tail = vertex(fields[1], line_no)
            head = vertex(fields[2], line_no)
            if tail == head:
                raise ParseError(line_no, "self-loop")
            if (tail, head) in seen_pairs:
                raise ParseError(line_no, f"parallel arc {fields[1]} -> {fields[2]}")
            seen_pairs.add((tail, head))
            cost = _number(fields[3], line_no, "cost")
            if cost < 0:
                raise ParseError(line_no, "negative cost")
            capacity = _number(fields[4], line_no, "capacity")
            if capacity < 0 or capacity != int(capacity):
                raise ParseError(line_no, "capacity must be a nonnegative integer")
            arcs.append(Arc(tail, head, cost, int(capacity)))
        elif kind == "b":
            if budgets is not None:
                raise ParseError(line_no, "duplicate b line")
            if len(fields) != 3:
                raise ParseError(line_no, "expected 'b <k> <kp>'")
            try:
                budgets = (int(fields[1]), int(fields[2]))
            except ValueError:
                raise ParseError(line_no, "budgets must be integers") from None
            if budgets[0] < 0 or budgets[1] < 0:
                raise ParseError(line_no, "budgets must be nonnegative")
        else:
            raise ParseError(line_no, f"unknown record {kind!r}")

    last = text.count("\n") + 1
    if vertex_count is None:
        raise ParseError(last, "missing p line")
    if root is None:
        raise ParseError(last, "missing r line")
    if budgets is None:
        raise ParseError(last, "missing b line")
    if arc_count != len(arcs):
        raise ParseError(
            last, f"p line promises {arc_count} arcs, file has {len(arcs)}"
        )
    try:
        return Instance(
            vertex_count=vertex_count,
            arcs=tuple(arcs),
            root=root,
            terminals=tuple(terminals),
            k=budgets[0],
            kp=budgets[1],
        )
    except GraphError as exc:
        raise ParseError(last, str(exc)) from None


def write_instance(instance: Instance) -> str:
    out = io.StringIO()
    out.write(f"p {FORMAT_NAME} {instance.vertex_count} {len(instance.arcs)}\n")
    out.write(f"r {instance.root + 1}\n")
    for t in instance.terminals:
        out.write(f"t {t + 1}\n")
    for arc in instance.arcs:
        cost = int(arc.cost) if float(arc.cost).is_integer() else arc.cost
        out.write(f"a {arc.tail + 1} {arc.head + 1} {cost} {arc.capacity}\n")
    out.write(f"b {instance.k} {instance.kp}\n")
    return out.getvalue()


def load_instance(path) -> Instance:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_instance(fh.read())


def save_instance(instance: Instance, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(write_instance(instance))


# ---------------------------------------------------------------------------
# design files


def parse_design(text: str, aug: AugmentedInstance) -> Design:
    index: dict[tuple[int, int], int] = {
        (arc.tail, arc.head): i
        for i, arc in enumerate(aug.arcs)
        if not aug.is_fictive(i)
    }
    selected: set[int] = set()
    protected: set[int] = set()
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        fields = line.split()
        if fields[0] not in ("y", "p") or len(fields) != 3:
            raise ParseError(line_no, "expected 'y <tail> <head>' or 'p <tail> <head>'")
        tail = _positive_int(fields[1], line_no, "vertex") - 1
        head = _positive_int(fields[2], line_no, "vertex") - 1
        arc = index.get((tail, head))
        if arc is None:
            raise ParseError(line_no, f"no arc {fields[1]} -> {fields[2]}")
        (selected if fields[0] == "y" else protected).add(arc)
    if not protected <= selected:
        raise ParseError(
            text.count("\n") + 1, "protected arcs must be selected"
        )
    return Design.canonical(aug, selected, protected)


def write_design(design: Design, aug: AugmentedInstance) -> str:
    out = io.StringIO()
    for a in sorted(design.selected):
        if aug.is_fictive(a):
            continue
        arc = aug.arcs[a]
        out.write(f"y {arc.tail + 1} {arc.head + 1}\n")
    for a in sorted(design.protected):
        arc = aug.arcs[a]
        out.write(f"p {arc.tail + 1} {arc.head + 1}\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# generator


class GenerationError(ValueError):
    """Parameter combination cannot yield a feasible instance."""


def generate(
    nodes: int,
    terminals: int,
    arcs: int,
    capacity_mode: str = "uniform",
    seed: int = 0,
    k: int = 1,
    kp: int = 0,
    uniform_capacity: int | None = None,
    cost_range: tuple[int, int] = (1, 20),
) -> Instance:
    """Random instance that always routes |T| units with everything selected.

    A random arborescence from the root reaches every vertex; extra arcs are
    drawn uniformly from the remaining vertex pairs, preferring arcs across a
    minimum cut while the network cannot carry the demand yet.
    """
    if nodes < 2:
        raise GenerationError("need at least two vertices")
    if not 0 <= terminals < nodes:
        raise GenerationError("terminal count must be in 0..nodes-1")
    if arcs < nodes - 1:
        raise GenerationError("need at least nodes-1 arcs for the backbone")
    if arcs > nodes * (nodes - 1):
        raise GenerationError("more arcs than ordered vertex pairs")
    if capacity_mode not in ("uniform", "random"):
        raise GenerationError(f"unknown capacity mode {capacity_mode!r}")
    if k + kp > arcs:
        raise GenerationError("k + kp exceeds the arc count")
    rng = random.Random(seed)
    root = 0
    term_set = sorted(rng.sample(range(1, nodes), terminals))
    if uniform_capacity is None:
        uniform_capacity = max(1, math.ceil(terminals / 2))

    def draw_capacity() -> int:
        if capacity_mode == "uniform":
            return uniform_capacity
        return rng.randint(1, max(1, terminals))

    def draw_cost() -> int:
        return rng.randint(*cost_range)

    chosen: dict[tuple[int, int], Arc] = {}

    def add_arc(tail: int, head: int) -> None:
        chosen[(tail, head)] = Arc(tail, head, float(draw_cost()), draw_capacity())

    # spanning arborescence: every vertex hangs off an already reached one
    order = list(range(1, nodes))
    rng.shuffle(order)
    reached = [root]
    for v in order:
        add_arc(rng.choice(reached), v)
        reached.append(v)

    def all_missing() -> list[tuple[int, int]]:
        return [
            (i, j)
            for i in range(nodes)
            for j in range(nodes)
            if i != j and (i, j) not in chosen
        ]

    def snapshot() -> AugmentedInstance:
        inst = Instance(
            vertex_count=nodes,
            arcs=tuple(chosen[key] for key in sorted(chosen)),
            root=root,
            terminals=tuple(term_set),
            k=0,
            kp=0,
        )
        return augment(inst)

    # top up to feasibility: arcs across a minimum cut raise the max flow
    while len(chosen) < arcs:
        aug = snapshot()
        if max_flow(aug, ArcMask.full(aug)).value >= terminals:
            break
        cut = min_cut(aug, ArcMask.full(aug))
        side = cut.sink_side
        crossing = [
            (i, j)
            for (i, j) in all_missing()
            if i not in side and j in side and j != aug.sink
        ]
        if not crossing:
            raise GenerationError("cannot reach feasibility within the arc budget")
        add_arc(*rng.choice(crossing))

    missing = all_missing()
    extra = arcs - len(chosen)
    if extra:
        for tail, head in rng.sample(missing, extra):
            add_arc(tail, head)

    aug = snapshot()
    if max_flow(aug, ArcMask.full(aug)).value < terminals:
        raise GenerationError("cannot reach feasibility within the arc budget")
    return Instance(
        vertex_count=nodes,
        arcs=tuple(chosen[key] for key in sorted(chosen)),
        root=root,
        terminals=tuple(term_set),
        k=k,
        kp=kp,
    )


def instance_label(instance: Instance) -> str:
    return f"{instance.vertex_count}-{len(instance.terminals)}-{len(instance.arcs)}"
