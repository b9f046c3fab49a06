"""LP relaxations of packing programs, solved by a dense simplex.

Two relaxations are used throughout:

  plain         max { w.x : A x <= b, 0 <= x <= 1 }
  strengthened  additionally sum_{j in big(i)} x_j <= 1 for every row i,
                where big(i) = { j : a_ij > 1/2 }.

The strengthened form closes the factor-2 integrality gap that single
big items cause; its optimum is never above the plain optimum, and the
two coincide when no coefficient exceeds 1/2.

The solver is a from-scratch primal simplex on the slack form with
Bland's anti-cycling rule, which also makes the returned vertex
deterministic.  Box constraints x_j <= 1 enter as explicit rows, so the
all-slack basis is feasible and no phase-1 is needed.  Desk-scale only.
"""

from __future__ import annotations

import numpy as np

from .core import FractionalSolution, require_valid
from .errors import InternalInvariantError, UnboundedError

PIVOT_TOL = 1e-9


def big_sets(inst):
    """big(i) = { j : a_ij > 1/2 } for each row i, as frozensets."""
    bigs = {i: set() for i in range(inst.m)}
    for j, col in enumerate(inst.columns):
        for i, a in col:
            if a > 0.5:
                bigs[i].add(j)
    return {i: frozenset(s) for i, s in bigs.items()}


def simplex_maximize(c, D, f):
    """max c.x s.t. D x <= f, x >= 0, with f >= 0 componentwise.

    Returns (x, objective).  Bland's rule: entering variable is the
    lowest-index column with positive reduced profit, leaving row is the
    minimum-ratio row whose basic variable has the lowest index.
    """
    c = np.asarray(c, dtype=float)
    D = np.asarray(D, dtype=float)
    f = np.asarray(f, dtype=float)
    r, n = D.shape
    if np.any(f < 0):
        raise InternalInvariantError("simplex requires nonnegative rhs")

    # tableau rows: [D | I | f]; bottom row: [-c | 0 | 0]
    T = np.zeros((r + 1, n + r + 1))
    T[:r, :n] = D
    T[:r, n : n + r] = np.eye(r)
    T[:r, -1] = f
    T[r, :n] = -c
    basis = list(range(n, n + r))

    max_iters = 50 * (n + r) + 1000
    for _ in range(max_iters):
        reduced = T[r, : n + r]
        candidates = np.nonzero(reduced < -PIVOT_TOL)[0]
        if candidates.size == 0:
            x = np.zeros(n + r)
            x[basis] = T[:r, -1]
            xo = np.clip(x[:n], 0.0, None)
            return xo, float(c @ xo)
        enter = int(candidates[0])  # Bland: smallest index
        col = T[:r, enter]
        rows = np.nonzero(col > PIVOT_TOL)[0]
        if rows.size == 0:
            raise UnboundedError("LP unbounded along column %d" % enter)
        ratios = T[rows, -1] / col[rows]
        best = ratios.min()
        tied = rows[ratios <= best + 1e-12]
        leave = min(tied, key=lambda i: basis[i])  # Bland on basic index
        piv = T[leave, enter]
        T[leave, :] /= piv
        for i in range(r + 1):
            if i != leave and abs(T[i, enter]) > 0:
                T[i, :] -= T[i, enter] * T[leave, :]
        basis[leave] = enter
    raise InternalInvariantError("simplex failed to converge")


def build_relaxation(inst, strengthen):
    """Assemble (c, D, f) for the chosen relaxation, box rows included."""
    n, m = inst.n, inst.m
    bigs = big_sets(inst) if strengthen else {}
    extra = [i for i in range(m) if strengthen and bigs[i]]
    D = np.zeros((m + len(extra) + n, n))
    f = np.zeros(m + len(extra) + n)
    for j, col in enumerate(inst.columns):
        for i, a in col:
            D[i, j] = a
    f[:m] = inst.capacities
    for r, i in enumerate(extra):
        for j in bigs[i]:
            D[m + r, j] = 1.0
        f[m + r] = 1.0
    base = m + len(extra)
    D[base : base + n, :] = np.eye(n)
    f[base : base + n] = 1.0
    return np.asarray(inst.weights, dtype=float), D, f


def solve_packing_lp(inst, strengthen=True):
    """Optimal vertex of the (optionally strengthened) relaxation.

    Deterministic for a fixed instance; the objective is exact to well
    under 1e-7 at desk scale.
    """
    require_valid(inst)
    c, D, f = build_relaxation(inst, strengthen)
    x, _ = simplex_maximize(c, D, f)
    x = np.clip(x, 0.0, 1.0)
    slack = D @ x - f
    if slack.max(initial=0.0) > 1e-7:
        raise InternalInvariantError("simplex returned an infeasible point")
    return FractionalSolution(x=tuple(float(v) for v in x),
                              objective=float(c @ x))
