"""MILP formulations of protected survivable network design.

Three exact master problems over binary selection variables ``y`` and
protection variables ``p``:

* cut-set master: every root/sink cut must keep ``|T|`` units of capacity
  after the worst deletion of at most ``k`` unprotected selected arcs,
  linearized with one loss variable per cut and one row per deletion subset;
* flow master: one unit-preserving flow per failure scenario, where failed
  unprotected arcs lose their capacity;
* attacker-expansion master ("bilevel"): one row per extreme point of the
  attacker/min-cut polytope, generated on demand.

The builders only assemble models; the delayed generation lives in
:mod:`cprsnp.separation` and :mod:`cprsnp.engine`.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .graph import ArcMask, AugmentedInstance, CutSet, max_flow
from .milp import MilpModel

DEFAULT_ROW_CAP = 10**6


class FormulationError(ValueError):
    """Raised for model inputs that violate a builder's contract."""


class NonVertexSolution(RuntimeError):
    """A solver returned fractional values where a 0/1 vertex was guaranteed."""


# ---------------------------------------------------------------------------
# value types


@dataclass(frozen=True)
class Design:
    """Arc selection plus protected subset, canonical form.

    Canonical means: all fictive arcs selected, protection only on selected
    initial arcs, protection budget respected.
    """

    selected: frozenset[int]
    protected: frozenset[int]

    @staticmethod
    def canonical(
        aug: AugmentedInstance,
        selected: Iterable[int],
        protected: Iterable[int] = (),
    ) -> "Design":
        sel = frozenset(selected) | frozenset(aug.fictive_arcs)
        prot = frozenset(protected) & sel
        prot = frozenset(a for a in prot if not aug.is_fictive(a))
        if len(prot) > aug.kp:
            raise FormulationError(
                f"{len(prot)} protected arcs exceed the budget {aug.kp}"
            )
        for a in sel:
            if not 0 <= a < aug.arc_count:
                raise FormulationError(f"unknown arc index {a}")
        return Design(selected=sel, protected=prot)

    def is_canonical(self, aug: AugmentedInstance) -> bool:
        return (
            frozenset(aug.fictive_arcs) <= self.selected
            and self.protected <= self.selected
            and all(not aug.is_fictive(a) for a in self.protected)
            and len(self.protected) <= aug.kp
        )

    def cost(self, aug: AugmentedInstance) -> float:
        return float(sum(aug.arcs[a].cost for a in self.selected))

    def mask(self, aug: AugmentedInstance, failed: Iterable[int] = ()) -> ArcMask:
        return ArcMask.for_design(aug, self.selected, self.protected, failed)


@dataclass(frozen=True)
class FailureScenario:
    """A set of initial arcs assumed to fail simultaneously."""

    arcs: frozenset[int]

    @staticmethod
    def of(aug: AugmentedInstance, arcs: Iterable[int]) -> "FailureScenario":
        arcset = frozenset(arcs)
        for a in arcset:
            if not 0 <= a < aug.arc_count:
                raise FormulationError(f"unknown arc index {a}")
            if aug.is_fictive(a):
                raise FormulationError("fictive arcs cannot fail")
        return FailureScenario(arcs=arcset)

    def sorted_arcs(self) -> tuple[int, ...]:
        return tuple(sorted(self.arcs))


@dataclass(frozen=True)
class ExtremePoint:
    """0/1 vertex of the attacker-cut polytope used for master rows.

    ``attack`` marks failed arcs (at most ``k``, never fictive), ``lam`` and
    ``gam`` are the two per-arc cut multipliers, ``mu`` the per-vertex side
    indicator (1 at the root, 0 at the sink), ``ell`` the product
    ``attack * gam``.
    """

    attack: tuple[int, ...]
    lam: tuple[int, ...]
    gam: tuple[int, ...]
    mu: tuple[int, ...]
    ell: tuple[int, ...]

    def validate(self, aug: AugmentedInstance) -> None:
        m, n = aug.arc_count, aug.vertex_count
        for name, vec, size in (
            ("attack", self.attack, m),
            ("lam", self.lam, m),
            ("gam", self.gam, m),
            ("mu", self.mu, n),
            ("ell", self.ell, m),
        ):
            if len(vec) != size:
                raise FormulationError(f"{name} has length {len(vec)}, expected {size}")
            if any(v not in (0, 1) for v in vec):
                raise FormulationError(f"{name} must be 0/1")
        if sum(self.attack) > aug.k:
            raise FormulationError("attack exceeds the failure budget")
        if any(self.attack[a] for a in aug.fictive_arcs):
            raise FormulationError("attack on a fictive arc")
        if self.mu[aug.root] != 1 or self.mu[aug.sink] != 0:
            raise FormulationError("mu must be 1 at the root and 0 at the sink")
        for i, arc in enumerate(aug.arcs):
            if self.lam[i] + self.gam[i] - self.mu[arc.tail] + self.mu[arc.head] < 0:
                raise FormulationError(f"dual feasibility violated on arc {i}")
            if not (
                self.ell[i] <= self.attack[i]
                and self.ell[i] <= self.gam[i]
                and self.ell[i] >= self.gam[i] + self.attack[i] - 1
            ):
                raise FormulationError(f"ell is not attack*gam on arc {i}")


@dataclass(frozen=True)
class CutRows:
    """A cut plus an explicit list of deletion subsets to expose as rows.

    ``subsets=None`` means "enumerate every subset of at most k non-fictive
    cut arcs"; an explicit tuple is used by the engine for cuts whose full
    enumeration would be too large.
    """

    cut: CutSet
    subsets: tuple[tuple[int, ...], ...] | None = None


# ---------------------------------------------------------------------------
# evaluation helpers


def eval_MS(
    aug: AugmentedInstance, cut: CutSet, design: Design, k: int | None = None
) -> int:
    """Worst capacity loss of the cut: the k largest capacities among its
    selected, unprotected, non-fictive arcs (all of them if fewer than k)."""
    k = aug.k if k is None else k
    vulnerable = sorted(
        (
            aug.arcs[a].capacity
            for a in cut.arcs
            if not aug.is_fictive(a)
            and a in design.selected
            and a not in design.protected
        ),
        reverse=True,
    )
    return int(sum(vulnerable[:k]))


def cut_residual(aug: AugmentedInstance, cut: CutSet, design: Design) -> int:
    """Capacity the cut retains after its worst feasible failure."""
    total = sum(aug.arcs[a].capacity for a in cut.arcs if a in design.selected)
    return int(total) - eval_MS(aug, cut, design)


def point_row_value(
    aug: AugmentedInstance,
    selected: Iterable[int],
    protected: Iterable[int],
    lam: Sequence[float],
    gam: Sequence[float],
    ell: Sequence[float],
) -> float:
    """Value of the master row generated by (lam, gam, ell) at a design.

    Monotone nondecreasing in both the selection and the protection as long
    as lam and gam are nonnegative.
    """
    sel = set(selected)
    prot = set(protected)
    total = 0.0
    for a, arc in enumerate(aug.arcs):
        u = arc.capacity
        if a in sel:
            total += u * lam[a]
        total += u * gam[a] - u * ell[a]
        if a in prot:
            total += u * gam[a]
    return total


def _subset_rows(
    m_arcs: Sequence[int], k: int, include_smaller: bool
) -> Iterable[tuple[int, ...]]:
    top = min(k, len(m_arcs))
    sizes = range(1, top + 1) if include_smaller else ([top] if top else [])
    for size in sizes:
        yield from itertools.combinations(m_arcs, size)


def count_cut_rows(
    aug: AugmentedInstance,
    cut: CutSet,
    k: int | None = None,
    include_smaller: bool = True,
) -> int:
    """Number of deletion-subset rows full enumeration would emit for a cut."""
    k = aug.k if k is None else k
    m = sum(1 for a in cut.arcs if not aug.is_fictive(a))
    top = min(k, m)
    sizes = range(1, top + 1) if include_smaller else ([top] if top else [])
    return int(sum(math.comb(m, j) for j in sizes))


# ---------------------------------------------------------------------------
# master builders


def _add_design_vars(model: MilpModel, aug: AugmentedInstance):
    y_var = []
    p_var = []
    for a in range(aug.arc_count):
        fict = aug.is_fictive(a)
        y_var.append(
            model.add_var(f"y{a}", lb=1.0 if fict else 0.0, ub=1.0, integer=True)
        )
    for a in range(aug.arc_count):
        fict = aug.is_fictive(a)
        p_var.append(
            model.add_var(f"p{a}", lb=0.0, ub=0.0 if fict else 1.0, integer=True)
        )
    model.set_objective(
        {y_var[a]: aug.arcs[a].cost for a in range(aug.arc_count)}, minimize=True
    )
    return y_var, p_var


def _design_from(aug: AugmentedInstance, y_var, p_var, values) -> Design:
    sel = {a for a in range(aug.arc_count) if values[y_var[a]] > 0.5}
    prot = {a for a in range(aug.arc_count) if values[p_var[a]] > 0.5}
    return Design.canonical(aug, sel, prot)


@dataclass
class CutsetMaster:
    model: MilpModel
    y_var: list[int]
    p_var: list[int]
    loss_var: list[int]
    cut_subsets: list[tuple[tuple[int, ...], ...]]
    cuts: list[CutSet]
    aug: AugmentedInstance

    def design_from(self, values) -> Design:
        return _design_from(self.aug, self.y_var, self.p_var, values)

    def completion(self, design: Design) -> np.ndarray | None:
        """Full assignment extending a design, if one is feasible."""
        x = np.zeros(self.model.num_vars)
        for a in range(self.aug.arc_count):
            x[self.y_var[a]] = 1.0 if a in design.selected else 0.0
            x[self.p_var[a]] = 1.0 if a in design.protected else 0.0
        for ci, subsets in enumerate(self.cut_subsets):
            loss = 0
            for sub in subsets:
                loss = max(
                    loss,
                    sum(
                        self.aug.arcs[a].capacity
                        * (
                            (a in design.selected) - (a in design.protected)
                        )
                        for a in sub
                    ),
                )
            x[self.loss_var[ci]] = float(loss)
        return x if self.model.check_assignment(x) else None


def build_cutset_master(
    aug: AugmentedInstance,
    cuts: Sequence[CutSet | CutRows],
    include_strengthening_rows: bool = True,
    row_cap: int = DEFAULT_ROW_CAP,
) -> CutsetMaster:
    """Selection/protection master constrained by the given cuts.

    Each cut contributes a surviving-capacity row and one row per deletion
    subset bounding its loss variable from below.  ``include_strengthening_rows``
    also emits rows for subsets smaller than k, which keeps the model exact
    when protection is allowed off the selection and when a cut has fewer
    than k deletable arcs.
    """
    model = MilpModel("cutset_master")
    y_var, p_var = _add_design_vars(model, aug)
    model.add_constr(
        {p_var[a]: 1.0 for a in range(aug.arc_count)},
        "<=",
        float(aug.kp),
        "protection_budget",
    )
    loss_var: list[int] = []
    cut_subsets: list[tuple[tuple[int, ...], ...]] = []
    cut_list: list[CutSet] = []
    for ci, entry in enumerate(cuts):
        if isinstance(entry, CutRows):
            cut, explicit = entry.cut, entry.subsets
        else:
            cut, explicit = entry, None
        if cut.sink_side == frozenset({aug.sink}):
            raise FormulationError("cut isolating only the super sink is not allowed")
        if explicit is None:
            n_rows = count_cut_rows(aug, cut, include_smaller=include_strengthening_rows)
            if n_rows > row_cap:
                raise FormulationError(
                    f"cut needs {n_rows} rows, above the cap {row_cap}"
                )
            non_fictive = [a for a in cut.arcs if not aug.is_fictive(a)]
            subsets = tuple(
                _subset_rows(non_fictive, aug.k, include_strengthening_rows)
            )
        else:
            subsets = tuple(tuple(sorted(sub)) for sub in explicit)
            for sub in subsets:
                if any(aug.is_fictive(a) for a in sub):
                    raise FormulationError("deletion subset contains a fictive arc")
        mvar = model.add_var(f"loss{ci}", lb=0.0)
        loss_var.append(mvar)
        cut_subsets.append(subsets)
        cut_list.append(cut)
        coeffs = {y_var[a]: float(aug.arcs[a].capacity) for a in cut.arcs}
        coeffs[mvar] = -1.0
        model.add_constr(coeffs, ">=", float(aug.demand), f"cut{ci}_capacity")
        for si, sub in enumerate(subsets):
            row = {mvar: 1.0}
            for a in sub:
                u = float(aug.arcs[a].capacity)
                row[y_var[a]] = row.get(y_var[a], 0.0) - u
                row[p_var[a]] = row.get(p_var[a], 0.0) + u
            model.add_constr(row, ">=", 0.0, f"cut{ci}_loss{si}")
    return CutsetMaster(model, y_var, p_var, loss_var, cut_subsets, cut_list, aug)


@dataclass
class FlowMaster:
    model: MilpModel
    y_var: list[int]
    p_var: list[int]
    x_var: list[list[int]]
    scenarios: list[FailureScenario]
    aug: AugmentedInstance

    def design_from(self, values) -> Design:
        return _design_from(self.aug, self.y_var, self.p_var, values)

    def completion(self, design: Design) -> np.ndarray | None:
        x = np.zeros(self.model.num_vars)
        for a in range(self.aug.arc_count):
            x[self.y_var[a]] = 1.0 if a in design.selected else 0.0
            x[self.p_var[a]] = 1.0 if a in design.protected else 0.0
        for fi, scenario in enumerate(self.scenarios):
            mask = design.mask(self.aug, failed=scenario.arcs)
            result = max_flow(self.aug, mask)
            if result.value < self.aug.demand:
                return None
            for a in range(self.aug.arc_count):
                x[self.x_var[fi][a]] = float(result.flow[a])
        return x if self.model.check_assignment(x) else None


def build_flow_master(
    aug: AugmentedInstance, scenarios: Sequence[FailureScenario]
) -> FlowMaster:
    """Selection/protection master with one explicit flow per failure scenario."""
    seen: set[frozenset[int]] = set()
    for sc in scenarios:
        for a in sc.arcs:
            if aug.is_fictive(a):
                raise FormulationError("scenario contains a fictive arc")
        if sc.arcs in seen:
            raise FormulationError("duplicate failure scenario")
        seen.add(sc.arcs)
    model = MilpModel("flow_master")
    y_var, p_var = _add_design_vars(model, aug)
    model.add_constr(
        {p_var[a]: 1.0 for a in range(aug.arc_count)},
        "<=",
        float(aug.kp),
        "protection_budget",
    )
    for a in aug.initial_arcs:
        model.add_constr(
            {p_var[a]: 1.0, y_var[a]: -1.0}, "<=", 0.0, f"p_le_y{a}"
        )
    x_var: list[list[int]] = []
    in_arcs: list[list[int]] = [[] for _ in range(aug.vertex_count)]
    out_arcs: list[list[int]] = [[] for _ in range(aug.vertex_count)]
    for a, arc in enumerate(aug.arcs):
        out_arcs[arc.tail].append(a)
        in_arcs[arc.head].append(a)
    for fi, scenario in enumerate(scenarios):
        xs = [
            model.add_var(f"x{fi}_{a}", lb=0.0, ub=float(aug.arcs[a].capacity))
            for a in range(aug.arc_count)
        ]
        x_var.append(xs)
        for v in range(aug.vertex_count):
            if v in (aug.root, aug.sink):
                continue
            row = {xs[a]: 1.0 for a in in_arcs[v]}
            for a in out_arcs[v]:
                row[xs[a]] = row.get(xs[a], 0.0) - 1.0
            model.add_constr(row, "=", 0.0, f"balance{fi}_v{v}")
        model.add_constr(
            {xs[a]: 1.0 for a in in_arcs[aug.sink]},
            "=",
            float(aug.demand),
            f"balance{fi}_sink",
        )
        for a in range(aug.arc_count):
            model.add_constr(
                {xs[a]: 1.0, y_var[a]: -float(aug.arcs[a].capacity)},
                "<=",
                0.0,
                f"cap{fi}_a{a}",
            )
        for a in scenario.sorted_arcs():
            model.add_constr(
                {xs[a]: 1.0, p_var[a]: -float(aug.arcs[a].capacity)},
                "<=",
                0.0,
                f"failcap{fi}_a{a}",
            )
    return FlowMaster(model, y_var, p_var, x_var, list(scenarios), aug)


@dataclass
class BilevelMaster:
    model: MilpModel
    y_var: list[int]
    p_var: list[int]
    points: list[ExtremePoint]
    aug: AugmentedInstance

    def design_from(self, values) -> Design:
        return _design_from(self.aug, self.y_var, self.p_var, values)

    def completion(self, design: Design) -> np.ndarray | None:
        x = np.zeros(self.model.num_vars)
        for a in range(self.aug.arc_count):
            x[self.y_var[a]] = 1.0 if a in design.selected else 0.0
            x[self.p_var[a]] = 1.0 if a in design.protected else 0.0
        return x if self.model.check_assignment(x) else None


def build_bilevel_master(
    aug: AugmentedInstance, points: Sequence[ExtremePoint]
) -> BilevelMaster:
    """Selection/protection master with one guarantee row per attacker vertex."""
    model = MilpModel("bilevel_master")
    y_var, p_var = _add_design_vars(model, aug)
    model.add_constr(
        {p_var[a]: 1.0 for a in range(aug.arc_count)},
        "<=",
        float(aug.kp),
        "protection_budget",
    )
    for a in aug.initial_arcs:
        model.add_constr({p_var[a]: 1.0, y_var[a]: -1.0}, "<=", 0.0, f"p_le_y{a}")
    for h, pt in enumerate(points):
        pt.validate(aug)
        row: dict[int, float] = {}
        const = 0.0
        for a, arc in enumerate(aug.arcs):
            u = float(arc.capacity)
            if pt.lam[a]:
                row[y_var[a]] = u * pt.lam[a]
            if pt.gam[a]:
                row[p_var[a]] = u * pt.gam[a]
            const += u * pt.gam[a] - u * pt.ell[a]
        model.add_constr(row, ">=", float(aug.demand) - const, f"point{h}")
    return BilevelMaster(model, y_var, p_var, list(points), aug)


# ---------------------------------------------------------------------------
# separation / attack models


@dataclass
class TwoLpModel:
    model: MilpModel
    b_var: list[int]
    lam_var: list[int]
    gam_var: list[int]
    mu_var: list[int]
    ell_var: list[int]
    aug: AugmentedInstance

    def extract_point(self, values, tol: float = 1e-6) -> ExtremePoint:
        def take(indices) -> tuple[int, ...]:
            out = []
            for idx in indices:
                v = float(values[idx])
                r = round(v)
                if abs(v - r) > tol or r not in (0, 1):
                    raise NonVertexSolution(
                        f"variable {idx} has non-binary value {v!r}"
                    )
                out.append(int(r))
            return tuple(out)

        point = ExtremePoint(
            attack=take(self.b_var),
            lam=take(self.lam_var),
            gam=take(self.gam_var),
            mu=take(self.mu_var),
            ell=take(self.ell_var),
        )
        point.validate(self.aug)
        return point


def build_2lp(aug: AugmentedInstance, design: Design) -> TwoLpModel:
    """Attacker's problem at a fixed design: pick at most k failures so the
    best surviving cut is as cheap as possible.  The optimum equals the
    post-attack max flow of the design; variables land on a 0/1 vertex."""
    model = MilpModel("attack_2lp")
    m = aug.arc_count
    b_var = [
        model.add_var(
            f"b{a}", lb=0.0, ub=0.0 if aug.is_fictive(a) else 1.0, integer=True
        )
        for a in range(m)
    ]
    lam_var = [model.add_var(f"lam{a}", 0.0, 1.0) for a in range(m)]
    gam_var = [model.add_var(f"gam{a}", 0.0, 1.0) for a in range(m)]
    mu_var = []
    for v in range(aug.vertex_count):
        lo = 1.0 if v == aug.root else 0.0
        hi = 0.0 if v == aug.sink else 1.0
        mu_var.append(model.add_var(f"mu{v}", lo, hi))
    ell_var = [model.add_var(f"ell{a}", 0.0, 1.0) for a in range(m)]
    model.add_constr({b_var[a]: 1.0 for a in range(m)}, "<=", float(aug.k), "attack_budget")
    for a, arc in enumerate(aug.arcs):
        model.add_constr(
            {
                lam_var[a]: 1.0,
                gam_var[a]: 1.0,
                mu_var[arc.tail]: -1.0,
                mu_var[arc.head]: 1.0,
            },
            ">=",
            0.0,
            f"dual{a}",
        )
        model.add_constr({ell_var[a]: 1.0, b_var[a]: -1.0}, "<=", 0.0, f"lin_b{a}")
        model.add_constr({ell_var[a]: 1.0, gam_var[a]: -1.0}, "<=", 0.0, f"lin_g{a}")
        model.add_constr(
            {ell_var[a]: 1.0, gam_var[a]: -1.0, b_var[a]: -1.0},
            ">=",
            -1.0,
            f"lin_bg{a}",
        )
    obj: dict[int, float] = {}
    for a, arc in enumerate(aug.arcs):
        u = float(arc.capacity)
        if a in design.selected:
            obj[lam_var[a]] = u
        obj[gam_var[a]] = u * (2.0 if a in design.protected else 1.0)
        obj[ell_var[a]] = -u
    model.set_objective(obj, minimize=True)
    return TwoLpModel(model, b_var, lam_var, gam_var, mu_var, ell_var, aug)


@dataclass
class CutSearchModel:
    """Shared shape of the min-cut style search MIPs (binary side indicator)."""

    model: MilpModel
    lam_var: list[int]
    gam_var: list[int]
    mu_var: list[int]
    aug: AugmentedInstance

    def sink_side(self, values, tol: float = 1e-6) -> frozenset[int]:
        side = set()
        for v in range(self.aug.vertex_count):
            val = float(values[self.mu_var[v]])
            if abs(val - round(val)) > tol:
                raise NonVertexSolution(f"mu{v} has non-binary value {val!r}")
            if val <= 0.5:
                side.add(v)
        return frozenset(side)

    def cut_from(self, values, tol: float = 1e-6) -> CutSet:
        return CutSet.from_sink_side(self.aug, self.sink_side(values, tol))


def _cut_search_base(aug: AugmentedInstance, name: str) -> CutSearchModel:
    model = MilpModel(name)
    m = aug.arc_count
    lam_var = [model.add_var(f"lam{a}", 0.0, 1.0) for a in range(m)]
    gam_var = [
        model.add_var(f"gam{a}", 0.0, 0.0 if aug.is_fictive(a) else 1.0)
        for a in range(m)
    ]
    mu_var = []
    for v in range(aug.vertex_count):
        lo = 1.0 if v == aug.root else 0.0
        hi = 0.0 if v == aug.sink else 1.0
        mu_var.append(model.add_var(f"mu{v}", lo, hi, integer=True))
    for a, arc in enumerate(aug.arcs):
        model.add_constr(
            {
                lam_var[a]: 1.0,
                gam_var[a]: 1.0,
                mu_var[arc.tail]: -1.0,
                mu_var[arc.head]: 1.0,
            },
            ">=",
            0.0,
            f"dual{a}",
        )
    model.add_constr({gam_var[a]: 1.0 for a in range(m)}, "<=", float(aug.k), "drop_budget")
    return CutSearchModel(model, lam_var, gam_var, mu_var, aug)


def build_cutset_separation(aug: AugmentedInstance, design: Design) -> CutSearchModel:
    """Find the cut whose post-attack capacity under the design is smallest.

    gam marks cut arcs written off as failed (budget k, never fictive); the
    objective counts the surviving selected capacity, so protected arcs
    always count.
    """
    search = _cut_search_base(aug, "cutset_separation")
    obj: dict[int, float] = {}
    for a, arc in enumerate(aug.arcs):
        if a not in design.selected:
            continue
        u = float(arc.capacity)
        obj[search.lam_var[a]] = u
        if a in design.protected:
            obj[search.gam_var[a]] = u
    search.model.set_objective(obj, minimize=True)
    return search


def build_strengthening(
    aug: AugmentedInstance,
    design: Design,
    weighted_gamma: bool = True,
) -> CutSearchModel:
    """Find a failing cut that touches as few arcs as possible.

    Feasible iff some cut drops below demand after at most k failures of the
    design's unprotected arcs; infeasible for survivable designs.  With
    ``weighted_gamma`` the protected term counts capacities (the default,
    consistent with every other capacity sum); without it, raw arc counts.
    """
    search = _cut_search_base(aug, "cut_strengthening")
    row: dict[int, float] = {}
    for a, arc in enumerate(aug.arcs):
        u = float(arc.capacity)
        if a in design.selected:
            row[search.lam_var[a]] = u
        if a in design.protected:
            row[search.gam_var[a]] = u if weighted_gamma else 1.0
    search.model.add_constr(row, "<=", float(aug.demand) - 1.0, "below_demand")
    search.model.set_objective(
        {search.lam_var[a]: 1.0 for a in range(aug.arc_count)}, minimize=True
    )
    return search


@dataclass
class InnerFlowModel:
    model: MilpModel
    x_var: list[int]
    aug: AugmentedInstance


def build_inner_flow(
    aug: AugmentedInstance,
    design: Design,
    attack: FailureScenario | Iterable[int] = (),
) -> InnerFlowModel:
    """LP of the flow the design still carries under a fixed attack.

    The polytope is integral (its constraint matrix is an incidence matrix
    with duplicated capacity rows), so simplex vertices are integer flows
    and the optimum equals the masked max flow.
    """
    failed = attack.arcs if isinstance(attack, FailureScenario) else frozenset(attack)
    for a in failed:
        if aug.is_fictive(a):
            raise FormulationError("fictive arcs cannot fail")
    model = MilpModel("inner_flow")
    x_var = []
    for a, arc in enumerate(aug.arcs):
        cap = float(arc.capacity) if a in design.selected else 0.0
        x_var.append(model.add_var(f"x{a}", 0.0, cap))
    in_arcs: list[list[int]] = [[] for _ in range(aug.vertex_count)]
    out_arcs: list[list[int]] = [[] for _ in range(aug.vertex_count)]
    for a, arc in enumerate(aug.arcs):
        out_arcs[arc.tail].append(a)
        in_arcs[arc.head].append(a)
    for v in range(aug.vertex_count):
        if v in (aug.root, aug.sink):
            continue
        row = {x_var[a]: 1.0 for a in in_arcs[v]}
        for a in out_arcs[v]:
            row[x_var[a]] = row.get(x_var[a], 0.0) - 1.0
        model.add_constr(row, "=", 0.0, f"balance{v}")
    for a in aug.initial_arcs:
        u = float(aug.arcs[a].capacity)
        limit = u * (1.0 - (a in failed) + (a in design.protected))
        model.add_constr({x_var[a]: 1.0}, "<=", limit, f"attack_cap{a}")
    obj = {x_var[a]: 1.0 for a in out_arcs[aug.root]}
    for a in in_arcs[aug.root]:
        obj[x_var[a]] = obj.get(x_var[a], 0.0) - 1.0
    model.set_objective(obj, minimize=False)
    return InnerFlowModel(model, x_var, aug)
