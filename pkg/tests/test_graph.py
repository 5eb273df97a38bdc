"""Graph model, masks, cuts, and the max-flow kernel."""

import random

import numpy as np
import pytest

from conftest import brute_min_cut_value, lp_max_flow, triangle
from cprsnp.graph import (
    Arc,
    ArcMask,
    CutSet,
    GraphError,
    Instance,
    augment,
    max_flow,
    min_cut,
)


def test_instance_rejects_bad_structure():
    good = dict(root=0, terminals=(1,), k=0, kp=0)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 0, 1, 1),), **good)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 1, 1, 1), Arc(0, 1, 2, 1)), **good)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 3, 1, 1),), **good)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 1, -1, 1),), **good)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 1, 1, -2),), **good)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 1, 1, 1),), root=0, terminals=(0,), k=0, kp=0)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 1, 1, 1),), root=0, terminals=(1, 1), k=0, kp=0)
    with pytest.raises(GraphError):
        Instance(2, (Arc(0, 1, 1, 1),), root=0, terminals=(1,), k=1, kp=1)


def test_terminals_are_sorted():
    inst = Instance(
        4,
        (Arc(0, 1, 1, 1), Arc(0, 2, 1, 1), Arc(0, 3, 1, 1)),
        root=0,
        terminals=(3, 1),
        k=0,
        kp=0,
    )
    assert inst.terminals == (1, 3)


def test_augment_layout():
    aug = augment(triangle())
    assert aug.vertex_count == 4
    assert aug.sink == 3
    assert aug.demand == 1
    assert aug.initial_arc_count == 3
    assert list(aug.fictive_arcs) == [3]
    fict = aug.arcs[3]
    assert (fict.tail, fict.head, fict.cost, fict.capacity) == (2, 3, 0.0, 1)
    assert aug.is_fictive(3) and not aug.is_fictive(2)
    assert aug.arc_index(2, 3) == 3
    with pytest.raises(GraphError):
        aug.arc_index(3, 0)


def test_augment_rejects_reserved_label():
    inst = Instance(
        2, (Arc(0, 1, 1, 1),), root=0, terminals=(1,), k=0, kp=0, labels=("r", "s")
    )
    with pytest.raises(GraphError):
        augment(inst)


def test_mask_validation():
    aug = augment(triangle())
    full = ArcMask.full(aug)
    assert full.capacities.tolist() == [1, 1, 1, 1]
    with pytest.raises(GraphError):
        ArcMask(aug, np.array([2, 0, 0, 0]))
    with pytest.raises(GraphError):
        ArcMask(aug, np.array([-1, 0, 0, 0]))
    with pytest.raises(GraphError):
        ArcMask(aug, np.zeros(3, dtype=int))
    with pytest.raises(GraphError):
        ArcMask.for_design(aug, range(4), failed=[3])


def test_mask_for_design():
    aug = augment(triangle())
    mask = ArcMask.for_design(aug, {0, 2, 3})
    assert mask.capacities.tolist() == [1, 0, 1, 1]
    failed = ArcMask.for_design(aug, {0, 2, 3}, failed=[2])
    assert failed.capacities.tolist() == [1, 0, 0, 1]
    saved = ArcMask.for_design(aug, {0, 2, 3}, protected=[2], failed=[2])
    assert saved.capacities.tolist() == [1, 0, 1, 1]


def test_triangle_flow_values():
    aug = augment(triangle())
    assert max_flow(aug, ArcMask.full(aug)).value == 1
    # to the terminal itself both paths add up
    assert max_flow(aug, ArcMask.full(aug), sink=2).value == 2
    # losing the middle arc leaves the direct path only
    half = ArcMask.for_design(aug, {1, 3})
    assert max_flow(aug, half).value == 1
    assert max_flow(aug, ArcMask.for_design(aug, {0, 2})).value == 0


def test_flow_conservation_and_bounds():
    aug = augment(triangle())
    res = max_flow(aug, ArcMask.full(aug))
    flow = res.flow
    assert np.all(flow >= 0) and np.all(flow <= ArcMask.full(aug).capacities)
    for v in range(aug.vertex_count):
        if v in (aug.root, aug.sink):
            continue
        inflow = sum(flow[i] for i, a in enumerate(aug.arcs) if a.head == v)
        outflow = sum(flow[i] for i, a in enumerate(aug.arcs) if a.tail == v)
        assert inflow == outflow


def test_cutset_from_sink_side():
    aug = augment(triangle())
    cut = CutSet.from_sink_side(aug, {2, 3})
    assert cut.arcs == (1, 2)
    assert cut.capacity(ArcMask.full(aug)) == 2
    only_sink = CutSet.from_sink_side(aug, {3})
    assert only_sink.arcs == (3,)
    with pytest.raises(GraphError):
        CutSet.from_sink_side(aug, {2})
    with pytest.raises(GraphError):
        CutSet.from_sink_side(aug, {0, 3})


def _random_augmented(rng: random.Random):
    n = rng.randint(3, 7)
    pairs = [(i, j) for i in range(n) for j in range(n) if i != j]
    rng.shuffle(pairs)
    count = rng.randint(n - 1, len(pairs))
    arcs = tuple(Arc(t, h, 1.0, rng.randint(0, 3)) for t, h in pairs[:count])
    terminals = tuple(rng.sample(range(1, n), rng.randint(1, n - 1)))
    inst = Instance(n, arcs, root=0, terminals=terminals, k=0, kp=0)
    return augment(inst)


@pytest.mark.parametrize("seed", range(40))
def test_max_flow_matches_lp_and_cut_enumeration(seed):
    rng = random.Random(seed)
    aug = _random_augmented(rng)
    caps = ArcMask.full(aug).capacities.copy()
    for i in range(len(caps)):
        if rng.random() < 0.3:
            caps[i] = 0
    mask = ArcMask(aug, caps)
    value = max_flow(aug, mask).value
    assert value == pytest.approx(lp_max_flow(aug, mask), abs=1e-6)
    assert value == brute_min_cut_value(aug, mask)


@pytest.mark.parametrize("seed", range(20))
def test_min_cut_is_tight_and_valid(seed):
    rng = random.Random(100 + seed)
    aug = _random_augmented(rng)
    mask = ArcMask.full(aug)
    value = max_flow(aug, mask).value
    cut = min_cut(aug, mask)
    assert aug.sink in cut.sink_side and aug.root not in cut.sink_side
    assert cut.capacity(mask) == value
