"""Instance model for column-sparse packing programs.

A packing instance is the data of the program

    max { w . x : A x <= b, x in {0,1}^n }

with A stored column-wise: column j is the list of (row, coefficient)
pairs with coefficient in (0, 1], so the number of nonzero rows of a
column is its sparsity.  Capacities are normalized to b_i >= 1.  The
rounding pipelines in this package consume instances together with a
fractional LP solution and produce item sets that are feasible by
construction; `check_feasible` is the single shared notion of
feasibility (1e-9 additive tolerance) used everywhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np

from .errors import ValidationError

FEAS_TOL = 1e-9

Column = tuple[tuple[int, float], ...]
ItemSet = frozenset


@dataclass(frozen=True)
class PackingInstance:
    """Column-wise packing program data.

    columns[j] lists the (row, coefficient) pairs of item j; rows are
    0-based.  `k` is an optional declared sparsity bound; when absent,
    algorithms fall back to the measured `column_sparsity`.
    """

    n: int
    m: int
    capacities: tuple
    weights: tuple
    columns: tuple
    k: int | None = None

    @cached_property
    def row_members(self):
        """For each row i, the tuple of (item, coefficient) pairs on it."""
        members = [[] for _ in range(self.m)]
        for j, col in enumerate(self.columns):
            for i, a in col:
                members[i].append((j, a))
        return tuple(tuple(ms) for ms in members)

    @cached_property
    def column_rows(self):
        """For each item j, the tuple of rows it participates in."""
        return tuple(tuple(i for i, _ in col) for col in self.columns)

    def coefficient(self, i, j):
        """a_ij, or 0.0 when item j does not touch row i."""
        for r, a in self.columns[j]:
            if r == i:
                return a
        return 0.0


def make_instance(capacities, weights, columns, k=None):
    """Normalize raw lists into a PackingInstance (no validation)."""
    cols = tuple(tuple((int(i), float(a)) for i, a in col) for col in columns)
    return PackingInstance(
        n=len(cols),
        m=len(capacities),
        capacities=tuple(float(b) for b in capacities),
        weights=tuple(float(w) for w in weights),
        columns=cols,
        k=k,
    )


@dataclass(frozen=True)
class FractionalSolution:
    """A point x in [0,1]^n with its objective value w . x."""

    x: tuple
    objective: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple

    @property
    def ok(self):
        return not self.violations


def validate_instance(inst):
    """Structural checks; returns a report rather than raising.

    Checked: dimension consistency, row indices in range, no duplicate
    row within a column, coefficients in (0, 1], weights >= 0,
    capacities >= 1, and |C(j)| <= k when a sparsity k is declared.
    """
    v = []
    if inst.n != len(inst.columns):
        v.append(f"n={inst.n} but {len(inst.columns)} columns")
    if inst.m != len(inst.capacities):
        v.append(f"m={inst.m} but {len(inst.capacities)} capacities")
    if len(inst.weights) != inst.n:
        v.append(f"{len(inst.weights)} weights for n={inst.n}")
    for j, w in enumerate(inst.weights):
        if not (w >= 0.0):
            v.append(f"weight[{j}]={w} negative")
    for i, b in enumerate(inst.capacities):
        if not (b >= 1.0):
            v.append(f"capacity[{i}]={b} below 1")
    for j, col in enumerate(inst.columns):
        rows = [i for i, _ in col]
        if len(set(rows)) != len(rows):
            v.append(f"column {j} repeats a row")
        for i, a in col:
            if not (0 <= i < inst.m):
                v.append(f"column {j} row index {i} out of range")
            if not (0.0 < a <= 1.0):
                v.append(f"a[{i},{j}]={a} outside (0,1]")
        if inst.k is not None and len(col) > inst.k:
            v.append(f"column {j} has {len(col)} rows, declared k={inst.k}")
    if inst.k is not None and inst.k < 1:
        v.append(f"declared k={inst.k} below 1")
    return ValidationReport(tuple(v))


def require_valid(inst):
    """Raise ValidationError unless the instance validates cleanly."""
    rep = validate_instance(inst)
    if not rep.ok:
        raise ValidationError("; ".join(rep.violations))
    return inst


def column_sparsity(inst):
    """max_j |C(j)|; zero for an instance whose columns are all empty."""
    return max((len(col) for col in inst.columns), default=0) if inst.n else 0


def usage_vector(inst, chosen):
    """Row loads sum_{j in chosen} a_ij as a dense vector."""
    u = np.zeros(inst.m)
    for j in chosen:
        for i, a in inst.columns[j]:
            u[i] += a
    return u


def check_feasible(inst, chosen):
    """True iff every row load is within capacity (+1e-9)."""
    chosen = frozenset(chosen)
    for j in chosen:
        if not (0 <= j < inst.n):
            raise ValidationError(f"item {j} out of range")
    u = usage_vector(inst, chosen)
    return bool(np.all(u <= np.asarray(inst.capacities) + FEAS_TOL))


def objective_value(inst, chosen):
    return float(sum(inst.weights[j] for j in chosen))


# ---------------------------------------------------------------------------
# JSON interchange

def instance_to_dict(inst):
    d = {
        "n": inst.n,
        "m": inst.m,
        "capacities": list(inst.capacities),
        "weights": list(inst.weights),
        "columns": [[[i, a] for i, a in col] for col in inst.columns],
    }
    if inst.k is not None:
        d["k"] = inst.k
    return d


def instance_from_dict(d):
    try:
        inst = make_instance(
            d["capacities"], d["weights"], d["columns"], k=d.get("k")
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed instance JSON: {exc}") from exc
    if inst.n != d.get("n", inst.n) or inst.m != d.get("m", inst.m):
        raise ValidationError("declared n/m disagree with column data")
    return require_valid(inst)


def save_instance(inst, path):
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=1)
        fh.write("\n")


def load_instance(path):
    with open(path) as fh:
        return instance_from_dict(json.load(fh))
