"""Small dense LP solver: two-phase primal simplex with Bland's rule.

Solves  max c.x  subject to  A x <= b,  x >= 0  (selected variables may be
declared free).  Sized for the region computations here: a handful of
variables and constraints, doubles throughout.  Bland's pivoting rule makes
cycling impossible, so no perturbation machinery is needed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

PIVOT_TOL = 1e-11
COST_TOL = 1e-11
FEAS_TOL = 1e-9


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: Optional[tuple[float, ...]]
    value: Optional[float]


def solve_lp(
    objective: Sequence[float],
    lhs: Sequence[Sequence[float]],
    rhs: Sequence[float],
    *,
    maximize: bool = True,
    free: Sequence[int] = (),
) -> LPResult:
    """Solve max (or min) objective.x with lhs x <= rhs, x >= 0.

    ``free`` lists variable indices exempt from the nonnegativity bound;
    they are split internally into a difference of two nonnegative parts.
    """
    n_orig = len(objective)
    if any(len(row) != n_orig for row in lhs):
        raise ValueError("constraint row width does not match objective length")
    if len(lhs) != len(rhs):
        raise ValueError("constraint count does not match rhs length")
    free = sorted(set(free))
    if any(j < 0 or j >= n_orig for j in free):
        raise ValueError("free variable index out of range")

    # Split free variables: x_j = x_j+ - x_j-; the negative parts are
    # appended after the original columns.
    def extend(row: Sequence[float]) -> list[float]:
        return list(row) + [-row[j] for j in free]

    sign = 1.0 if maximize else -1.0
    cost = [sign * c for c in extend(objective)]
    rows = [extend(row) for row in lhs]
    n = n_orig + len(free)
    m = len(rows)

    # Equality form: flip rows with negative rhs, then slack (+1 on its own
    # row after a possible flip) or artificial basis per row.
    b = list(map(float, rhs))
    tableau: list[list[float]] = []
    slack_sign = []
    for i in range(m):
        row = [float(v) for v in rows[i]]
        bi = b[i]
        if bi < 0.0:
            row = [-v for v in row]
            bi = -bi
            slack_sign.append(-1.0)
        else:
            slack_sign.append(1.0)
        tableau.append(row + [0.0] * m + [bi])
    for i in range(m):
        tableau[i][n + i] = slack_sign[i]

    total = n + m  # columns before rhs
    basis = []
    artificial = set()
    art_cols = []
    for i in range(m):
        if slack_sign[i] > 0:
            basis.append(n + i)
        else:
            col = total + len(art_cols)
            art_cols.append(col)
            artificial.add(col)
            basis.append(col)
    if art_cols:
        for i in range(m):
            tableau[i] = tableau[i][:-1] + [0.0] * len(art_cols) + [tableau[i][-1]]
        for i, bvar in enumerate(basis):
            if bvar in artificial:
                tableau[i][bvar] = 1.0
        total += len(art_cols)

    def pivot(r: int, c: int) -> None:
        piv = tableau[r][c]
        inv = 1.0 / piv
        tableau[r] = [v * inv for v in tableau[r]]
        prow = tableau[r]
        for i in range(m):
            if i == r:
                continue
            f = tableau[i][c]
            if f != 0.0:
                tableau[i] = [v - f * p for v, p in zip(tableau[i], prow)]
        basis[r] = c

    def reduced_costs(c_full: list[float]) -> list[float]:
        # z_j - c_j via the current basis; Bland needs signs only.
        y = [c_full[basis[i]] for i in range(m)]
        out = []
        for j in range(total):
            zj = sum(y[i] * tableau[i][j] for i in range(m))
            out.append(zj - c_full[j])
        return out

    def run_phase(c_full: list[float], banned: set[int]) -> str:
        while True:
            red = reduced_costs(c_full)
            enter = -1
            for j in range(total):
                if j in banned:
                    continue
                if red[j] < -COST_TOL:
                    enter = j
                    break
            if enter < 0:
                return "optimal"
            leave, best = -1, None
            for i in range(m):
                a = tableau[i][enter]
                if a > PIVOT_TOL:
                    ratio = tableau[i][-1] / a
                    if (
                        best is None
                        or ratio < best - PIVOT_TOL
                        or (abs(ratio - best) <= PIVOT_TOL and basis[i] < basis[leave])
                    ):
                        best, leave = ratio, i
            if leave < 0:
                return "unbounded"
            pivot(leave, enter)

    if art_cols:
        phase1_cost = [0.0] * total
        for col in art_cols:
            phase1_cost[col] = -1.0
        status = run_phase(phase1_cost, banned=set())
        z1 = sum(
            phase1_cost[basis[i]] * tableau[i][-1] for i in range(m)
        )
        if status != "optimal" or z1 < -FEAS_TOL:
            return LPResult("infeasible", None, None)
        # Drive artificials out of the basis where possible.
        for i in range(m):
            if basis[i] in artificial:
                for j in range(total):
                    if j not in artificial and abs(tableau[i][j]) > PIVOT_TOL:
                        pivot(i, j)
                        break
                # A row whose only nonzeros are artificial is redundant and
                # stays basic at level zero; banning the columns suffices.

    phase2_cost = cost + [0.0] * (total - n)
    status = run_phase(phase2_cost, banned=artificial)
    if status == "unbounded":
        return LPResult("unbounded", None, None)

    solution = [0.0] * total
    for i in range(m):
        solution[basis[i]] = tableau[i][-1]
    x = solution[:n_orig]
    for k, j in enumerate(free):
        x[j] -= solution[n_orig + k]
    value = sum(o * v for o, v in zip(objective, x))
    return LPResult("optimal", tuple(x), value)
