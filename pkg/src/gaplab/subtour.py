"""Subtour elimination LP solved by cutting planes in exact rationals.

The returned solution is certified: degrees hold exactly, the exact
global min cut of the support is >= 2, and 0 <= x_e <= 1.  A basic
feasible solution of the pooled relaxation that passes exact separation
is automatically an extreme point of the full subtour polytope, since
the relaxation contains it.

A float (HiGHS) pre-pass only seeds the cut pool; every returned number
comes from the exact simplex.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .errors import (
    DisconnectedSupport,
    InfeasibleInput,
    IterationLimit,
    ParseError,
    TooLarge,
    Unbounded,
)
from .instances import Instance
from .mincut import stoer_wagner
from .rationals import frac_str, to_fraction

_ZERO = Fraction(0)
_ONE = Fraction(1)


class ExactSimplex:
    """Dense two-phase tableau simplex over Fractions.

    Dantzig pricing with a Bland fallback after a degenerate stall, which
    guarantees termination.  Minimization, variables >= 0.
    """

    def __init__(self, n_vars: int, iteration_cap: int = 20000):
        self.n_vars = n_vars
        self.rows: list[list[Fraction]] = []  # coefficients, rhs last
        self.iteration_cap = iteration_cap

    def add_constraint(self, coeffs: dict, rhs, kind: str) -> None:
        """kind '=' or '>=' (a surplus column is appended later for '>=')."""
        self.rows.append((dict(coeffs), to_fraction(rhs), kind))

    def solve(self, costs: dict):
        n_struct = self.n_vars
        surplus_rows = [i for i, (_, _, kind) in enumerate(self.rows) if kind == ">="]
        n_surplus = len(surplus_rows)
        n_rows = len(self.rows)
        n_total = n_struct + n_surplus + n_rows  # + artificials
        art0 = n_struct + n_surplus

        tableau = []
        surplus_idx = {}
        for k, i in enumerate(surplus_rows):
            surplus_idx[i] = n_struct + k
        for i, (coeffs, rhs, kind) in enumerate(self.rows):
            row = [_ZERO] * (n_total + 1)
            for j, a in coeffs.items():
                row[j] = to_fraction(a)
            if kind == ">=":
                row[surplus_idx[i]] = Fraction(-1)
            row[art0 + i] = _ONE
            row[-1] = rhs
            if rhs < 0:
                raise InfeasibleInput("negative rhs not supported")
            tableau.append(row)

        basis = [art0 + i for i in range(n_rows)]

        # phase-1 reduced costs: minimize sum of artificials
        obj1 = [_ZERO] * (n_total + 1)
        for row in tableau:
            for j in range(n_total + 1):
                if row[j]:
                    obj1[j] -= row[j]
        for i in range(n_rows):
            obj1[art0 + i] = _ZERO

        pivots = self._run(tableau, basis, obj1, allowed=n_total)
        if -obj1[-1] > 0:
            raise InfeasibleInput("phase 1 ended with positive infeasibility")

        # drive artificials out of the basis; drop redundant rows
        keep = []
        for i in range(n_rows):
            if basis[i] >= art0:
                piv_col = next(
                    (j for j in range(art0) if tableau[i][j] != 0), None
                )
                if piv_col is None:
                    continue  # redundant row
                self._pivot(tableau, basis, None, i, piv_col)
            keep.append(i)
        tableau = [tableau[i] for i in keep]
        basis = [basis[i] for i in keep]
        for row in tableau:
            del row[art0:-1]
        n_total = art0

        # phase-2 reduced costs from scratch
        obj = [_ZERO] * (n_total + 1)
        for j, c in costs.items():
            obj[j] = to_fraction(c)
        for i, b in enumerate(basis):
            cb = obj[b]
            if cb:
                for j in range(n_total + 1):
                    if tableau[i][j]:
                        obj[j] -= cb * tableau[i][j]
        self._run(tableau, basis, obj, allowed=n_total, start_pivots=pivots)

        values = {}
        for i, b in enumerate(basis):
            values[b] = tableau[i][-1]
        x = {j: values.get(j, _ZERO) for j in range(n_struct)}
        objective = -obj[-1]
        return x, objective

    def _run(self, tableau, basis, obj, allowed, start_pivots=0):
        pivots = start_pivots
        stall = 0
        bland = False
        while True:
            if pivots > self.iteration_cap:
                raise IterationLimit(f"simplex exceeded {self.iteration_cap} pivots")
            enter = None
            if bland:
                for j in range(allowed):
                    if obj[j] < 0:
                        enter = j
                        break
            else:
                best = _ZERO
                for j in range(allowed):
                    if obj[j] < best:
                        best = obj[j]
                        enter = j
            if enter is None:
                return pivots
            # ratio test, ties broken by smallest basis var (anti-cycling aid)
            leave = None
            best_ratio = None
            for i, row in enumerate(tableau):
                a = row[enter]
                if a > 0:
                    ratio = row[-1] / a
                    if best_ratio is None or ratio < best_ratio or (
                        ratio == best_ratio and basis[i] < basis[leave]
                    ):
                        best_ratio = ratio
                        leave = i
            if leave is None:
                raise Unbounded("unbounded objective; invalid metric or bug")
            degenerate = tableau[leave][-1] == 0
            self._pivot(tableau, basis, obj, leave, enter)
            pivots += 1
            if degenerate:
                stall += 1
                if stall > 30:
                    bland = True
            else:
                stall = 0
                bland = False

    @staticmethod
    def _pivot(tableau, basis, obj, leave, enter):
        piv = tableau[leave][enter]
        row = tableau[leave]
        inv = 1 / piv
        for j in range(len(row)):
            if row[j]:
                row[j] *= inv
        targets = tableau if obj is None else tableau + [obj]
        for r in targets:
            if r is row:
                continue
            f = r[enter]
            if f:
                for j in range(len(row)):
                    if row[j]:
                        r[j] -= f * row[j]
        basis[leave] = enter


@dataclass
class LpSolution:
    """Optimal basic solution of the subtour LP with its certificate."""

    name: str
    n: int
    x: dict  # (u, v) u < v -> Fraction, zeros omitted
    cost: dict  # (u, v) -> Fraction for support edges
    objective: Fraction
    binding_cuts: list = field(default_factory=list)  # vertex-id lists
    extremal: bool = True

    def support_edges(self):
        return sorted(self.x.items())

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "edges": [
                {
                    "u": u,
                    "v": v,
                    "x_num": x.numerator,
                    "x_den": x.denominator,
                    "cost": frac_str(self.cost[(u, v)]),
                }
                for (u, v), x in self.support_edges()
            ],
            "objective_num": self.objective.numerator,
            "objective_den": self.objective.denominator,
            "binding_cuts": [sorted(c) for c in self.binding_cuts],
            "extremal": self.extremal,
        }

    def dump(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json_dict(), indent=1) + "\n")

    @staticmethod
    def from_json_dict(data: dict) -> "LpSolution":
        x = {}
        cost = {}
        for e in data["edges"]:
            key = (e["u"], e["v"])
            x[key] = Fraction(e["x_num"], e["x_den"])
            cost[key] = to_fraction(e["cost"])
        return LpSolution(
            name=data["name"],
            n=data["n"],
            x=x,
            cost=cost,
            objective=Fraction(data["objective_num"], data["objective_den"]),
            binding_cuts=[list(c) for c in data["binding_cuts"]],
            extremal=data.get("extremal", True),
        )

    @staticmethod
    def load(path) -> "LpSolution":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"cannot read LP solution {path}: {exc}") from exc
        return LpSolution.from_json_dict(data)


def separate_min_cut(x: dict, n: int):
    """Exact separation oracle for the subtour constraints.

    Returns (side, value) for a global min cut with value < 2, or None.
    Raises DisconnectedSupport when the positive support is disconnected.
    """
    edges = [(u, v, w) for (u, v), w in x.items() if w > 0]
    value, side = stoer_wagner(n, edges)
    if value < 2:
        return sorted(side), value
    return None


def _all_pairs(n: int):
    return [(u, v) for u in range(n) for v in range(u + 1, n)]


def _cut_coeffs(pair_index: dict, side) -> dict:
    inside = set(side)
    coeffs = {}
    for (u, v), j in pair_index.items():
        if (u in inside) != (v in inside):
            coeffs[j] = _ONE
    return coeffs


def _exact_solve_with_pool(inst: Instance, pool, iteration_cap) -> tuple[dict, Fraction]:
    pairs = _all_pairs(inst.n)
    pair_index = {p: j for j, p in enumerate(pairs)}
    lp = ExactSimplex(len(pairs), iteration_cap=iteration_cap)
    for v in range(inst.n):
        coeffs = {pair_index[p]: _ONE for p in pairs if v in p}
        lp.add_constraint(coeffs, 2, "=")
    for side in pool:
        lp.add_constraint(_cut_coeffs(pair_index, side), 2, ">=")
    costs = {pair_index[p]: inst.d(*p) for p in pairs}
    xvec, objective = lp.solve(costs)
    x = {p: xvec[pair_index[p]] for p in pairs if xvec[pair_index[p]] != 0}
    return x, objective


def _float_seed_pool(inst: Instance, pool, max_rounds=60):
    """Cheap HiGHS cutting-plane loop; only the discovered cuts are kept."""
    try:
        from scipy.optimize import linprog
    except ImportError:  # pragma: no cover
        return
    pairs = _all_pairs(inst.n)
    pair_index = {p: j for j, p in enumerate(pairs)}
    c = [float(inst.d(*p)) for p in pairs]
    a_eq = []
    for v in range(inst.n):
        row = [0.0] * len(pairs)
        for p in pairs:
            if v in p:
                row[pair_index[p]] = 1.0
        a_eq.append(row)
    b_eq = [2.0] * inst.n
    known = {frozenset(side) for side in pool}
    for _ in range(max_rounds):
        a_ub, b_ub = [], []
        for side in pool:
            inside = set(side)
            row = [0.0] * len(pairs)
            for p in pairs:
                if (p[0] in inside) != (p[1] in inside):
                    row[pair_index[p]] = -1.0
            a_ub.append(row)
            b_ub.append(-2.0)
        res = linprog(
            c, A_ub=a_ub or None, b_ub=b_ub or None, A_eq=a_eq, b_eq=b_eq,
            bounds=(0, None), method="highs",
        )
        if not res.success:
            return
        xf = {p: res.x[pair_index[p]] for p in pairs if res.x[pair_index[p]] > 1e-9}
        try:
            value, side = stoer_wagner(inst.n, [(u, v, w) for (u, v), w in xf.items()])
        except DisconnectedSupport as exc:
            side, value = exc.component, 0.0
        if value >= 2 - 1e-7:
            return
        key = frozenset(side)
        if key in known:
            return
        known.add(key)
        pool.append(sorted(side))


def solve_subtour_lp(inst: Instance, max_cuts: int = 400,
                     iteration_cap: int = 60000) -> LpSolution:
    """Optimal extreme point of the subtour LP, certified exactly."""
    inst.validate(check_triangle=False)
    pool: list[list[int]] = []
    _float_seed_pool(inst, pool)
    known = {frozenset(s) for s in pool}
    while True:
        x, objective = _exact_solve_with_pool(inst, pool, iteration_cap)
        try:
            found = separate_min_cut(x, inst.n)
        except DisconnectedSupport as exc:
            found = (exc.component, _ZERO)
        if found is None:
            break
        side, _value = found
        key = frozenset(side)
        if key in known:
            raise IterationLimit("separation returned a pooled cut; numeric bug")
        known.add(key)
        pool.append(list(side))
        if len(pool) > max_cuts:
            raise IterationLimit(f"cut pool exceeded {max_cuts}")

    for x_e in x.values():
        if not (0 <= x_e <= 1):
            raise InfeasibleInput(f"optimal x outside [0,1]: {x_e}")
    binding = [side for side in pool
               if sum(x.get(p, _ZERO) for p in _boundary_pairs(side, inst.n)) == 2]
    cost = {p: inst.d(*p) for p in x}
    return LpSolution(
        name=inst.name, n=inst.n, x=dict(sorted(x.items())), cost=cost,
        objective=objective, binding_cuts=binding, extremal=True,
    )


def _boundary_pairs(side, n: int):
    inside = set(side)
    for u in range(n):
        for v in range(u + 1, n):
            if (u in inside) != (v in inside):
                yield (u, v)


def solve_subtour_lp_bruteforce(inst: Instance, iteration_cap: int = 120000) -> LpSolution:
    """Static full-LP solve: all proper cuts as rows, no separation loop.

    Oracle path for small n; constraints are enumerated up front so the
    separation logic never runs.
    """
    if inst.n > 12:
        raise TooLarge("brute-force LP limited to n <= 12")
    pool = []
    # root the enumeration at vertex n-1: every proper cut has a side
    # avoiding it, and sizes 1 and n-1 are included
    rest = list(range(inst.n - 1))
    for mask in range(1, 1 << len(rest)):
        side = [rest[i] for i in range(len(rest)) if mask >> i & 1]
        pool.append(side)
    x, objective = _exact_solve_with_pool(inst, pool, iteration_cap)
    cost = {p: inst.d(*p) for p in x}
    binding = [side for side in pool
               if sum(x.get(p, _ZERO) for p in _boundary_pairs(side, inst.n)) == 2]
    return LpSolution(
        name=inst.name, n=inst.n, x=dict(sorted(x.items())), cost=cost,
        objective=objective, binding_cuts=binding, extremal=True,
    )


def verify_termination_certificate(sol: LpSolution) -> bool:
    """Re-running separation on a returned solution must yield none."""
    return separate_min_cut(sol.x, sol.n) is None
