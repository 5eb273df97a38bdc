"""Delayed constraint-and-column generation driver.

One loop serves all three formulations: solve the restricted master as a
MIP, ask the matching oracle whether the optimal design survives every
attack, and either stop (optimal), grow the master, or run out of time.

The master optimum is a lower bound that never decreases; a survivable
incumbent built upfront (exact protection search on the all-arcs design)
provides the upper bound, warm starts every master solve, and is what a
timeout falls back to.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass

from .graph import AugmentedInstance, ArcMask, CutSet, max_flow
from .formulations import (
    CutRows,
    Design,
    ExtremePoint,
    FailureScenario,
    build_bilevel_master,
    build_cutset_master,
    build_flow_master,
    count_cut_rows,
)
from .milp import SolveStatus, solve_mip
from .separation import (
    SeparationTimeout,
    separate_bilevel,
    separate_cutset,
    separate_scenario,
)
from .separation import strengthen as strengthen_point

log = logging.getLogger(__name__)

FORMULATIONS = ("cutset", "flow", "bilevel")


class EngineError(RuntimeError):
    """The generation loop reached a state that should be impossible."""


@dataclass(frozen=True)
class EngineOptions:
    time_limit_s: float = 2000.0
    strengthen: bool = True
    seed: int = 0
    scenario_brute_limit: int = 100_000
    lazy_cut_row_limit: int = 20_000
    cutset_row_cap: int = 10**6
    weighted_gamma: bool = True


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    master_objective: float
    separation_value: float | None
    rows_added: int
    columns_added: int
    seconds: float

    def line(self, formulation: str, include_time: bool = False) -> str:
        parts = [
            f"formulation={formulation}",
            f"iter={self.iteration}",
            f"master_obj={self.master_objective:g}",
            "sep_value="
            + ("none" if self.separation_value is None else f"{self.separation_value:g}"),
            f"rows_added={self.rows_added}",
            f"cols_added={self.columns_added}",
        ]
        if include_time:
            parts.append(f"elapsed={self.seconds:.3f}")
        return " ".join(parts)


@dataclass
class Solution:
    status: SolveStatus
    design: Design | None
    cost: float | None
    gap: float | None
    iterations: int
    log: tuple[IterationRecord, ...]
    formulation: str
    seconds: float = 0.0

    def log_lines(self, include_time: bool = False) -> list[str]:
        return [rec.line(self.formulation, include_time) for rec in self.log]


def initial_rows(aug: AugmentedInstance, formulation: str):
    """Seed objects for the restricted master.

    cutset: the single cut separating the root from everything else;
    flow: the lexicographically first k-subset of initial arcs;
    bilevel: nothing.
    """
    if formulation == "cutset":
        side = frozenset(range(aug.vertex_count)) - {aug.root}
        return [CutSet.from_sink_side(aug, side)]
    if formulation == "flow":
        first = tuple(range(min(aug.k, aug.initial_arc_count)))
        return [FailureScenario.of(aug, first)]
    if formulation == "bilevel":
        return []
    raise ValueError(f"unknown formulation {formulation!r}")


def _worst_subset(aug: AugmentedInstance, cut: CutSet, design: Design) -> tuple[int, ...]:
    """Deletion subset realizing eval_MS for the design: top-k capacities
    among the cut's selected unprotected non-fictive arcs."""
    vulnerable = sorted(
        (
            a
            for a in cut.arcs
            if not aug.is_fictive(a)
            and a in design.selected
            and a not in design.protected
        ),
        key=lambda a: (-aug.arcs[a].capacity, a),
    )
    return tuple(sorted(vulnerable[: aug.k]))


class _CutPool:
    """Cut bookkeeping for the cut-set master, including lazy large cuts."""

    def __init__(self, aug: AugmentedInstance, options: EngineOptions):
        self.aug = aug
        self.options = options
        self.entries: dict[frozenset[int], CutRows] = {}

    def master_cuts(self) -> list[CutRows]:
        return list(self.entries.values())

    def seed(self, cut: CutSet) -> None:
        """Install a cut with no design context (lazy cuts start rowless)."""
        rows = count_cut_rows(self.aug, cut)
        lazy = rows > self.options.lazy_cut_row_limit
        self.entries[cut.sink_side] = CutRows(cut, () if lazy else None)

    def add(self, cut: CutSet, design: Design) -> int:
        """Record a violated cut; returns the number of rows this adds."""
        key = cut.sink_side
        if key not in self.entries:
            rows = count_cut_rows(self.aug, cut)
            if rows <= self.options.lazy_cut_row_limit:
                self.entries[key] = CutRows(cut, None)
                return rows + 1
            subset = _worst_subset(self.aug, cut, design)
            self.entries[key] = CutRows(cut, (subset,))
            return 2
        entry = self.entries[key]
        if entry.subsets is None:
            raise EngineError("fully enumerated cut separated twice")
        subset = _worst_subset(self.aug, cut, design)
        if subset in entry.subsets:
            raise EngineError("cut row separated twice; master is stalled")
        self.entries[key] = CutRows(entry.cut, entry.subsets + (subset,))
        return 1


def _feasible_incumbent(
    aug: AugmentedInstance, options: EngineOptions, remaining
) -> Design | None:
    """Survivable design used as upper bound: all arcs plus a protection
    search branching on witness scenarios (the all-arcs selection is
    protectable iff the instance is feasible at all)."""

    def probe(design: Design, budget: int) -> Design | None:
        violation = separate_scenario(
            aug,
            design,
            time_limit_s=remaining(),
            brute_force_limit=options.scenario_brute_limit,
        )
        if violation is None:
            return design
        if budget == 0:
            return None
        for arc in violation.scenario.sorted_arcs():
            found = probe(
                Design(design.selected, design.protected | {arc}), budget - 1
            )
            if found is not None:
                return found
        return None

    # complete: more selection never hurts, so the all-arcs design with the
    # best protection is feasible iff anything is; every feasible protection
    # must hit each witness scenario, hence the branching below is exhaustive
    return probe(Design.canonical(aug, range(aug.arc_count)), aug.kp)


def solve(
    aug: AugmentedInstance,
    formulation: str,
    options: EngineOptions = EngineOptions(),
) -> Solution:
    """Run generation to optimality, infeasibility, or the time limit."""
    if formulation not in FORMULATIONS:
        raise ValueError(f"unknown formulation {formulation!r}")
    t0 = time.perf_counter()
    demand = aug.demand
    records: list[IterationRecord] = []

    def elapsed() -> float:
        return time.perf_counter() - t0

    def remaining() -> float:
        return options.time_limit_s - elapsed()

    def finish(status, design, cost, gap) -> Solution:
        sol = Solution(
            status=status,
            design=design,
            cost=cost,
            gap=gap,
            iterations=len(records),
            log=tuple(records),
            formulation=formulation,
            seconds=elapsed(),
        )
        log.info(
            "formulation=%s status=%s cost=%s gap=%s iterations=%d",
            formulation,
            status.value,
            "none" if cost is None else f"{cost:g}",
            "none" if gap is None else f"{gap:.4f}",
            len(records),
        )
        return sol

    if max_flow(aug, ArcMask.full(aug)).value < demand:
        return finish(SolveStatus.INFEASIBLE, None, None, None)

    try:
        incumbent = _feasible_incumbent(aug, options, remaining)
    except SeparationTimeout:
        incumbent = None  # ran out of time while probing; unresolved
    else:
        if incumbent is None:
            return finish(SolveStatus.INFEASIBLE, None, None, None)
    upper = incumbent.cost(aug) if incumbent is not None else math.inf
    lower = 0.0  # costs are nonnegative

    def timeout_solution() -> Solution:
        if incumbent is None:
            return finish(SolveStatus.FEASIBLE, None, None, None)
        gap = max(0.0, (upper - lower) / max(abs(upper), 1e-9))
        return finish(SolveStatus.FEASIBLE, incumbent, upper, gap)

    cut_pool = _CutPool(aug, options)
    scenarios: list[FailureScenario] = []
    points: list[ExtremePoint] = []
    seen_scenarios: set[frozenset[int]] = set()
    for obj in initial_rows(aug, formulation):
        if formulation == "cutset":
            cut_pool.seed(obj)
        elif formulation == "flow":
            scenarios.append(obj)
            seen_scenarios.add(obj.arcs)
    log.info(
        "formulation=%s start demand=%d arcs=%d k=%d kp=%d seed=%d strengthen=%s",
        formulation,
        demand,
        aug.arc_count,
        aug.k,
        aug.kp,
        options.seed,
        options.strengthen,
    )

    iteration = 0
    while True:
        iteration += 1
        if remaining() <= 0:
            return timeout_solution()
        if formulation == "cutset":
            master = build_cutset_master(
                aug, cut_pool.master_cuts(), row_cap=options.cutset_row_cap
            )
        elif formulation == "flow":
            master = build_flow_master(aug, scenarios)
        else:
            master = build_bilevel_master(aug, points)
        warm = master.completion(incumbent) if incumbent is not None else None
        res = solve_mip(master.model, time_limit_s=remaining(), incumbent=warm)
        if res.status == SolveStatus.INFEASIBLE:
            return finish(SolveStatus.INFEASIBLE, None, None, None)
        if res.status != SolveStatus.OPTIMAL:
            if res.bound is not None:
                lower = max(lower, res.bound)
            return timeout_solution()
        if res.objective < lower - 1e-6:
            raise EngineError(
                f"master objective decreased: {res.objective} < {lower}"
            )
        lower = max(lower, res.objective)
        design = master.design_from(res.values)
        if incumbent is not None and lower >= upper - 1e-6:
            # incumbent already matches the proven bound
            records.append(
                IterationRecord(iteration, res.objective, None, 0, 0, elapsed())
            )
            return finish(SolveStatus.OPTIMAL, incumbent, upper, 0.0)
        try:
            if formulation == "cutset":
                violation = separate_cutset(aug, design, time_limit_s=remaining())
            elif formulation == "flow":
                violation = separate_scenario(
                    aug,
                    design,
                    time_limit_s=remaining(),
                    brute_force_limit=options.scenario_brute_limit,
                )
            else:
                violation = separate_bilevel(aug, design, time_limit_s=remaining())
                if violation is not None and options.strengthen:
                    violation = strengthen_point(
                        aug,
                        design,
                        violation,
                        time_limit_s=remaining(),
                        weighted_gamma=options.weighted_gamma,
                    )
        except SeparationTimeout:
            return timeout_solution()

        if violation is None:
            cost = design.cost(aug)
            records.append(
                IterationRecord(
                    iteration, res.objective, float(demand), 0, 0, elapsed()
                )
            )
            rec = records[-1]
            log.info(rec.line(formulation, include_time=True))
            return finish(SolveStatus.OPTIMAL, design, cost, 0.0)

        if formulation == "cutset":
            rows_added = cut_pool.add(violation.cut, design)
            cols_added = 1
        elif formulation == "flow":
            if violation.scenario.arcs in seen_scenarios:
                raise EngineError("scenario separated twice; master is stalled")
            seen_scenarios.add(violation.scenario.arcs)
            scenarios.append(violation.scenario)
            rows_added = (
                aug.vertex_count - 1 + aug.arc_count + len(violation.scenario.arcs)
            )
            cols_added = aug.arc_count
        else:
            if violation.point in points:
                raise EngineError("extreme point separated twice; master is stalled")
            points.append(violation.point)
            rows_added = 1
            cols_added = 0
        records.append(
            IterationRecord(
                iteration,
                res.objective,
                float(violation.value),
                rows_added,
                cols_added,
                elapsed(),
            )
        )
        log.info(records[-1].line(formulation, include_time=True))
