"""Small exact MILP kernel.

LP relaxations are solved with HiGHS dual simplex through
``scipy.optimize.linprog`` (basic solutions, 1e-7 feasibility tolerance,
anti-cycling safeguards built in).  Binary/integer models go through a
hand-rolled branch and bound:

* branching on the most fractional integer variable, ties by lowest index,
* best-bound node selection, ties by depth (deeper first) then insertion,
* optional wall-clock limit; the reported bound stays valid at all times,
* optional warm start: a candidate assignment is checked against the model
  and installed as the initial incumbent when feasible.

Everything is deterministic for a fixed model: no randomized choices, no
threads.
"""

from __future__ import annotations

import enum
import heapq
import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

INT_TOL = 1e-6
FEAS_TOL = 1e-7


class MilpError(ValueError):
    """Raised for malformed models or solver-level failures."""


class SolveStatus(enum.Enum):
    OPTIMAL = "Optimal"
    FEASIBLE = "Feasible"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True)
class SolveResult:
    """Outcome of an LP or MIP solve.

    ``objective`` and ``bound`` are in the model's own sense; for a
    minimization ``bound <= objective`` whenever both are present.  ``gap``
    is ``(objective - bound) / max(|objective|, 1e-9)`` on the internal
    minimization form, clamped at zero.
    """

    status: SolveStatus
    objective: float | None
    values: np.ndarray | None
    bound: float | None = None
    gap: float | None = None
    seconds: float = 0.0
    nodes: int = 0


@dataclass
class _Constraint:
    coeffs: dict[int, float]
    sense: str
    rhs: float
    name: str


class MilpModel:
    """Mutable model container: variables, linear constraints, one objective."""

    def __init__(self, name: str = "model", minimize: bool = True):
        self.name = name
        self.minimize = minimize
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._integer: list[bool] = []
        self._var_names: list[str] = []
        self._objective: dict[int, float] = {}
        self._constraints: list[_Constraint] = []
        self._cache: tuple | None = None

    # -- construction -------------------------------------------------

    def add_var(
        self,
        name: str | None = None,
        lb: float = 0.0,
        ub: float = math.inf,
        integer: bool = False,
    ) -> int:
        if lb > ub:
            raise MilpError(f"variable {name}: lb {lb} > ub {ub}")
        idx = len(self._lb)
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._integer.append(bool(integer))
        self._var_names.append(name if name is not None else f"x{idx}")
        self._cache = None
        return idx

    def add_constr(
        self,
        coeffs: Mapping[int, float],
        sense: str,
        rhs: float,
        name: str | None = None,
    ) -> None:
        if sense not in ("<=", ">=", "="):
            raise MilpError(f"unknown sense {sense!r}")
        if not math.isfinite(rhs):
            raise MilpError("constraint rhs must be finite")
        clean: dict[int, float] = {}
        for var, coef in coeffs.items():
            if not 0 <= var < len(self._lb):
                raise MilpError(f"constraint references unknown variable {var}")
            if not math.isfinite(coef):
                raise MilpError("constraint coefficients must be finite")
            if coef != 0.0:
                clean[int(var)] = float(coef)
        cname = name if name is not None else f"c{len(self._constraints)}"
        self._constraints.append(_Constraint(clean, sense, float(rhs), cname))
        self._cache = None

    def set_objective(self, coeffs: Mapping[int, float], minimize: bool = True) -> None:
        for var in coeffs:
            if not 0 <= var < len(self._lb):
                raise MilpError(f"objective references unknown variable {var}")
        self._objective = {int(v): float(c) for v, c in coeffs.items() if c != 0.0}
        self.minimize = minimize
        self._cache = None

    # -- inspection ---------------------------------------------------

    @property
    def num_vars(self) -> int:
        return len(self._lb)

    @property
    def num_constraints(self) -> int:
        return len(self._constraints)

    def constraint_names(self) -> list[str]:
        return [c.name for c in self._constraints]

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self._lb), np.array(self._ub)

    def integer_indices(self) -> np.ndarray:
        return np.flatnonzero(np.array(self._integer, dtype=bool))

    def lp_text(self) -> str:
        """Plain-text dump in LP style, for debugging."""
        lines = [("Minimize" if self.minimize else "Maximize")]
        terms = [
            f"{c:+g} {self._var_names[v]}" for v, c in sorted(self._objective.items())
        ]
        lines.append("  " + (" ".join(terms) if terms else "0"))
        lines.append("Subject To")
        for con in self._constraints:
            body = " ".join(
                f"{c:+g} {self._var_names[v]}" for v, c in sorted(con.coeffs.items())
            )
            lines.append(f"  {con.name}: {body or '0'} {con.sense} {con.rhs:g}")
        lines.append("Bounds")
        for i, (lo, hi) in enumerate(zip(self._lb, self._ub)):
            lines.append(f"  {lo:g} <= {self._var_names[i]} <= {hi:g}")
        ints = [self._var_names[i] for i in self.integer_indices()]
        if ints:
            lines.append("Integers")
            lines.append("  " + " ".join(ints))
        lines.append("End")
        return "\n".join(lines)

    def check_assignment(self, values: Sequence[float], tol: float = 1e-6) -> bool:
        """True iff the assignment satisfies bounds, integrality, and rows."""
        x = np.asarray(values, dtype=float)
        if x.shape != (self.num_vars,):
            return False
        lb, ub = self.bounds()
        if np.any(x < lb - tol) or np.any(x > ub + tol):
            return False
        for i in self.integer_indices():
            if abs(x[i] - round(x[i])) > tol:
                return False
        for con in self._constraints:
            lhs = sum(c * x[v] for v, c in con.coeffs.items())
            if con.sense == "<=" and lhs > con.rhs + tol:
                return False
            if con.sense == ">=" and lhs < con.rhs - tol:
                return False
            if con.sense == "=" and abs(lhs - con.rhs) > tol:
                return False
        return True

    def objective_value(self, values: Sequence[float]) -> float:
        x = np.asarray(values, dtype=float)
        return float(sum(c * x[v] for v, c in self._objective.items()))

    # -- matrix assembly (cached) --------------------------------------

    def _matrices(self):
        if self._cache is not None:
            return self._cache
        n = self.num_vars
        c = np.zeros(n)
        for v, coef in self._objective.items():
            c[v] = coef
        rows_ub: list[tuple[dict[int, float], float]] = []
        rows_eq: list[tuple[dict[int, float], float]] = []
        for con in self._constraints:
            if con.sense == "<=":
                rows_ub.append((con.coeffs, con.rhs))
            elif con.sense == ">=":
                rows_ub.append(({v: -k for v, k in con.coeffs.items()}, -con.rhs))
            else:
                rows_eq.append((con.coeffs, con.rhs))

        def build(rows):
            if not rows:
                return None, None
            data, ri, ci, rhs = [], [], [], []
            for r, (coeffs, b) in enumerate(rows):
                rhs.append(b)
                for v, k in coeffs.items():
                    ri.append(r)
                    ci.append(v)
                    data.append(k)
            mat = sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), n))
            return mat, np.array(rhs)

        a_ub, b_ub = build(rows_ub)
        a_eq, b_eq = build(rows_eq)
        self._cache = (c, a_ub, b_ub, a_eq, b_eq)
        return self._cache


def _run_lp(model: MilpModel, lb: np.ndarray, ub: np.ndarray):
    c, a_ub, b_ub, a_eq, b_eq = model._matrices()
    sign = 1.0 if model.minimize else -1.0
    res = linprog(
        sign * c,
        A_ub=a_ub,
        b_ub=b_ub,
        A_eq=a_eq,
        b_eq=b_eq,
        bounds=np.column_stack((lb, ub)),
        method="highs-ds",
    )
    return res, sign


def solve_lp(model: MilpModel) -> SolveResult:
    """Solve the continuous relaxation exactly; integrality flags are ignored."""
    t0 = time.perf_counter()
    lb, ub = model.bounds()
    res, sign = _run_lp(model, lb, ub)
    dt = time.perf_counter() - t0
    if res.status == 0:
        obj = sign * float(res.fun)
        return SolveResult(
            SolveStatus.OPTIMAL, obj, np.array(res.x), bound=obj, gap=0.0, seconds=dt
        )
    if res.status == 2:
        return SolveResult(SolveStatus.INFEASIBLE, None, None, seconds=dt)
    if res.status == 3:
        return SolveResult(SolveStatus.UNBOUNDED, None, None, seconds=dt)
    raise MilpError(f"LP solver failed on {model.name}: {res.message}")


def _gap(objective: float, bound: float) -> float:
    return max(0.0, (objective - bound) / max(abs(objective), 1e-9))


def solve_mip(
    model: MilpModel,
    time_limit_s: float | None = None,
    incumbent: Sequence[float] | None = None,
    int_tol: float = INT_TOL,
) -> SolveResult:
    """Branch-and-bound over the integer variables of the model.

    ``incumbent`` is an optional warm-start assignment; it is installed only
    after passing :meth:`MilpModel.check_assignment`.  With a time limit the
    returned status is FEASIBLE and ``bound`` still underestimates (in the
    minimization sense) every feasible objective.
    """
    t0 = time.perf_counter()
    lb0, ub0 = model.bounds()
    int_idx = model.integer_indices()
    sign = 1.0 if model.minimize else -1.0

    def out_of_time() -> bool:
        return time_limit_s is not None and time.perf_counter() - t0 > time_limit_s

    best_obj = math.inf  # internal minimization sense
    best_x: np.ndarray | None = None
    if incumbent is not None and model.check_assignment(incumbent):
        best_x = np.asarray(incumbent, dtype=float)
        best_obj = sign * model.objective_value(best_x)

    nodes = 0
    seq = 0
    # heap entries: (parent bound, -depth, seq, lb, ub)
    heap: list[tuple[float, int, int, np.ndarray, np.ndarray]] = [
        (-math.inf, 0, 0, lb0, ub0)
    ]
    root_handled = False

    def finish(status: SolveStatus, open_bounds: Iterable[float]) -> SolveResult:
        dt = time.perf_counter() - t0
        lower = min(list(open_bounds) + [best_obj], default=best_obj)
        if best_x is None:
            obj = None
            gap = None
        else:
            obj = sign * best_obj
            gap = _gap(best_obj, lower) if math.isfinite(lower) else None
        bound = sign * lower if math.isfinite(lower) else None
        return SolveResult(status, obj, best_x, bound=bound, gap=gap, seconds=dt, nodes=nodes)

    while heap:
        parent_bound, negdepth, _, nlb, nub = heapq.heappop(heap)
        if parent_bound >= best_obj - 1e-9:
            # best-bound order: everything left is at least as bad
            heap.clear()
            break
        if out_of_time():
            return finish(SolveStatus.FEASIBLE, [parent_bound] + [h[0] for h in heap])
        res, _ = _run_lp(model, nlb, nub)
        nodes += 1
        if res.status == 2:
            continue
        if res.status == 3:
            if int_idx.size == 0 or not root_handled:
                return SolveResult(
                    SolveStatus.UNBOUNDED, None, None, seconds=time.perf_counter() - t0,
                    nodes=nodes,
                )
            raise MilpError(f"unbounded node LP in {model.name}")
        if res.status != 0:
            raise MilpError(f"LP solver failed on {model.name}: {res.message}")
        node_bound = float(res.fun)  # internal min sense
        x = np.array(res.x)
        if node_bound >= best_obj - 1e-9:
            root_handled = True
            continue
        frac = np.abs(x[int_idx] - np.round(x[int_idx])) if int_idx.size else np.array([])
        fractional = np.flatnonzero(frac > int_tol)
        if fractional.size == 0:
            best_obj = node_bound
            best_x = x
            root_handled = True
            continue
        if not root_handled:
            root_handled = True
            # one-shot rounding heuristic: fix integers to nearest, repair LP
            rlb, rub = lb0.copy(), ub0.copy()
            rounded = np.clip(np.round(x[int_idx]), lb0[int_idx], ub0[int_idx])
            rlb[int_idx] = rounded
            rub[int_idx] = rounded
            hres, _ = _run_lp(model, rlb, rub)
            if hres.status == 0 and float(hres.fun) < best_obj:
                hx = np.array(hres.x)
                if model.check_assignment(hx):
                    best_obj = float(hres.fun)
                    best_x = hx
        # most fractional first, ties by lowest variable index
        scores = np.minimum(frac[fractional], 1.0 - frac[fractional])
        pick = fractional[int(np.argmax(scores))]
        var = int(int_idx[pick])
        depth = -negdepth + 1
        down_ub = nub.copy()
        down_ub[var] = math.floor(x[var])
        up_lb = nlb.copy()
        up_lb[var] = math.ceil(x[var])
        seq += 1
        heapq.heappush(heap, (node_bound, -depth, seq, nlb, down_ub))
        seq += 1
        heapq.heappush(heap, (node_bound, -depth, seq, up_lb, nub))

    if best_x is None:
        return SolveResult(
            SolveStatus.INFEASIBLE, None, None, seconds=time.perf_counter() - t0,
            nodes=nodes,
        )
    dt = time.perf_counter() - t0
    return SolveResult(
        SolveStatus.OPTIMAL,
        sign * best_obj,
        best_x,
        bound=sign * best_obj,
        gap=0.0,
        seconds=dt,
        nodes=nodes,
    )
