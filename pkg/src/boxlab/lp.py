"""Exact rational linear programming and the effect-membership predicates.

The solver is a two-phase revised simplex over ``Fraction`` with Bland's rule,
so it terminates without tolerances.  Columns are stored sparse with integer
numerators, which keeps pricing cheap when there are many more columns than
rows (the convex-hull programs have one column per known effect).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .core import (
    DomainError,
    Scenario,
    _Vector,
    det_basis,
    det_matrix,
    fingerprint,
    identity_rep,
)

try:  # gmpy2 rationals are much faster than Fraction in the pivot loops
    from gmpy2 import mpq as _Q
except ImportError:  # pragma: no cover
    _Q = Fraction

LE, EQ, GE = "<=", "=", ">="
_RELATIONS = {LE, EQ, GE, "≤", "≥", "=="}
_NORMAL_REL = {"≤": LE, "≥": GE, "==": EQ}


@dataclass
class LinearProgram:
    """``sense`` ∈ {"max", "min"}.  Rows are ``(coeffs, relation, rhs)``.

    ``coeffs`` is a dense sequence of length ``num_vars`` or a sparse mapping
    ``{var: coef}``.  ``bounds`` holds ``(lower, upper)`` per variable with
    ``None`` for "unbounded"; when omitted every variable is ``>= 0``.
    """

    num_vars: int
    rows: list = field(default_factory=list)
    objective: Sequence = ()
    sense: str = "max"
    bounds: list | None = None

    def add_row(self, coeffs, relation, rhs):
        self.rows.append((coeffs, relation, rhs))


@dataclass
class LPResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Fraction | None = None
    point: tuple | None = None

    @property
    def feasible(self) -> bool:
        return self.status != "infeasible"


def _sparse(coeffs, n) -> dict:
    if isinstance(coeffs, Mapping):
        out = {}
        for j, c in coeffs.items():
            if not 0 <= j < n:
                raise DomainError(f"variable index {j} out of range")
            c = Fraction(c)
            if c:
                out[j] = c
        return out
    coeffs = list(coeffs)
    if len(coeffs) != n:
        raise DomainError(f"row has {len(coeffs)} coefficients, expected {n}")
    return {j: Fraction(c) for j, c in enumerate(coeffs) if c}


class _Simplex:
    """min c·y  s.t.  A y = b,  y >= 0,  b >= 0 (columns sparse)."""

    def __init__(self, m, cols, cost, b):
        self.m = m
        self.cols = cols  # list of (rows, int_vals, den)
        self.cost = [_Q(int(c.numerator), int(c.denominator)) for c in cost]
        self.b = [_Q(int(v.numerator), int(v.denominator)) for v in b]

    def _column(self, j):
        rows, vals, den = self.cols[j]
        return rows, vals, den

    def _dcol(self, j):
        rows, vals, den = self.cols[j]
        out = []
        Binv = self.Binv
        for i in range(self.m):
            Bi = Binv[i]
            s = 0
            for r, v in zip(rows, vals):
                bir = Bi[r]
                if bir:
                    s += bir * v
            out.append(_Q(s, den) if s else _Q(0))
        return out

    def run(self, basis, cost, allowed):
        """Iterate from a feasible basis.  Returns "optimal" or "unbounded"."""
        m = self.m
        while True:
            # duals y = c_B Binv
            y = [_Q(0)] * m
            for i in range(m):
                cb = cost[basis[i]]
                if cb:
                    Bi = self.Binv[i]
                    for r in range(m):
                        if Bi[r]:
                            y[r] += cb * Bi[r]
            q = math.lcm(*(int(v.denominator) for v in y)) if m else 1
            Y = [int(v * q) for v in y]
            entering = -1
            in_basis = self._in_basis
            for j in allowed:
                if in_basis[j]:
                    continue
                rows, vals, den = self.cols[j]
                dot = 0
                for r, v in zip(rows, vals):
                    yr = Y[r]
                    if yr:
                        dot += yr * v
                c = cost[j]
                # sign of c - dot/(q*den)
                if c.numerator * q * den < c.denominator * dot:
                    entering = j
                    break
            if entering < 0:
                return "optimal"
            d = self._dcol(entering)
            leave = -1
            best = None
            for i in range(m):
                if d[i] > 0:
                    ratio = self.xB[i] / d[i]
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave < 0:
                return "unbounded"
            self._pivot(basis, leave, entering, d)

    def _pivot(self, basis, r, j, d):
        m = self.m
        piv = d[r]
        Br = [v / piv for v in self.Binv[r]]
        self.Binv[r] = Br
        xr = self.xB[r] / piv
        self.xB[r] = xr
        nz = [(k, v) for k, v in enumerate(Br) if v]
        for i in range(m):
            if i != r and d[i]:
                f = d[i]
                Bi = self.Binv[i]
                for k, v in nz:
                    Bi[k] -= f * v
                self.xB[i] -= f * xr
        self._in_basis[basis[r]] = False
        self._in_basis[j] = True
        basis[r] = j

    def solve(self, n_struct, initial):
        """``initial[i]`` is a column usable as the starting basic variable of row i,
        or None to add an artificial.  Returns (status, y-values, objective)."""
        m = self.m
        n0 = len(self.cols)
        basis = []
        artificial = []
        for i in range(m):
            if initial[i] is not None:
                basis.append(initial[i])
            else:
                self.cols.append(([i], [1], 1))
                artificial.append(len(self.cols) - 1)
                basis.append(len(self.cols) - 1)
        ntot = len(self.cols)
        self._in_basis = [False] * ntot
        for j in basis:
            self._in_basis[j] = True
        # every initial basic column is a unit column, so Binv = I
        self.Binv = [[_Q(int(i == k)) for k in range(m)] for i in range(m)]
        self.xB = list(self.b)
        if artificial:
            cost1 = [_Q(0)] * ntot
            for j in artificial:
                cost1[j] = _Q(1)
            self.run(basis, cost1, range(ntot))
            if sum(self.xB[i] for i in range(m) if basis[i] >= n0) != 0:
                return "infeasible", None
            # drive zero-valued artificials out where possible
            art = set(artificial)
            for i in range(m):
                if basis[i] in art:
                    for j in range(n0):
                        if self._in_basis[j]:
                            continue
                        d = self._dcol(j)
                        if d[i] != 0:
                            self._pivot(basis, i, j, d)
                            break
        cost2 = list(self.cost) + [_Q(0)] * (ntot - n0)
        status = self.run(basis, cost2, range(n0))
        if status == "unbounded":
            return "unbounded", None
        y = [Fraction(0)] * n0
        for i in range(m):
            if basis[i] < n0:
                v = self.xB[i]
                y[basis[i]] = Fraction(int(v.numerator), int(v.denominator))
        return "optimal", y


def _int_column(entries: dict) -> tuple:
    rows = sorted(entries)
    den = math.lcm(*(entries[r].denominator for r in rows)) if rows else 1
    return rows, [int(entries[r] * den) for r in rows], den


def solve(lp: LinearProgram) -> LPResult:
    """Exact optimum of ``lp`` (or an infeasible/unbounded verdict)."""
    n = lp.num_vars
    if lp.sense not in ("max", "min"):
        raise DomainError(f"unknown sense {lp.sense!r}")
    objective = list(lp.objective) if len(lp.objective) else [0] * n
    if len(objective) != n:
        raise DomainError("objective length differs from num_vars")
    bounds = lp.bounds if lp.bounds is not None else [(0, None)] * n
    if len(bounds) != n:
        raise DomainError("bounds length differs from num_vars")

    # x_j = offset_j + sum_k sign * y_k over its standard-form columns
    var_cols: list[list[tuple[int, int]]] = []
    offset = []
    extra_rows = []
    ny = 0
    for j, (lo, hi) in enumerate(bounds):
        lo = None if lo is None else Fraction(lo)
        hi = None if hi is None else Fraction(hi)
        if lo is not None and hi is not None and hi < lo:
            return LPResult("infeasible")
        if lo is not None:
            var_cols.append([(ny, 1)])
            offset.append(lo)
            if hi is not None:
                extra_rows.append(({j: 1}, LE, hi))
            ny += 1
        elif hi is not None:
            var_cols.append([(ny, -1)])
            offset.append(hi)
            ny += 1
        else:
            var_cols.append([(ny, 1), (ny + 1, -1)])
            offset.append(Fraction(0))
            ny += 2

    rows = []
    for coeffs, rel, rhs in list(lp.rows) + extra_rows:
        if rel not in _RELATIONS:
            raise DomainError(f"unknown relation {rel!r}")
        rel = _NORMAL_REL.get(rel, rel)
        sp = _sparse(coeffs, n)
        rhs = Fraction(rhs) - sum(c * offset[j] for j, c in sp.items())
        ysp: dict[int, Fraction] = {}
        for j, c in sp.items():
            for k, sgn in var_cols[j]:
                ysp[k] = ysp.get(k, 0) + sgn * c
        rows.append((ysp, rel, rhs))

    m = len(rows)
    col_entries: list[dict] = [dict() for _ in range(ny)]
    b = []
    initial: list = [None] * m
    slack_entries = []
    for i, (ysp, rel, rhs) in enumerate(rows):
        flip = rhs < 0
        sgn = -1 if flip else 1
        for k, c in ysp.items():
            if c:
                col_entries[k][i] = sgn * c
        b.append(sgn * rhs)
        if rel != EQ:
            s = 1 if rel == LE else -1
            slack_entries.append((i, sgn * s))
    cols = [_int_column(ent) for ent in col_entries]
    cost = [Fraction(0)] * ny
    for j in range(n):
        c = Fraction(objective[j])
        if lp.sense == "max":
            c = -c
        for k, sgn in var_cols[j]:
            cost[k] += sgn * c
    for i, s in slack_entries:
        cols.append(([i], [s], 1))
        cost.append(Fraction(0))
        if s == 1:
            initial[i] = len(cols) - 1

    simplex = _Simplex(m, cols, cost, b)
    status, y = simplex.solve(ny, initial)
    if status != "optimal":
        return LPResult(status)
    point = []
    for j in range(n):
        val = offset[j] + sum(sgn * y[k] for k, sgn in var_cols[j])
        point.append(val)
    value = sum((Fraction(objective[j]) * point[j] for j in range(n)), Fraction(0))
    return LPResult("optimal", value, tuple(point))


# ------------------------------------------------------------- predicates


def _basis_fingerprint(scenario: Scenario, v: _Vector) -> list[Fraction]:
    D = det_matrix(scenario)[det_basis(scenario)]
    nums, den = v.scaled_ints()
    return [Fraction(int(x), den) for x in D.astype(object) @ nums]


def has_nonnegative_rep(scenario: Scenario, target: Sequence[Fraction]) -> bool:
    """Is there a vector v >= 0 whose basis fingerprint equals ``target``?

    Equivalent to: some representation of the effect, shifted by no-signalling
    moves, is componentwise nonnegative.
    """
    D = det_matrix(scenario)[det_basis(scenario)]
    lp = LinearProgram(scenario.dimension(), sense="min", objective=[0] * scenario.dimension())
    for row, t in zip(D, target):
        lp.add_row({k: 1 for k in np.nonzero(row)[0]}, EQ, t)
    return solve(lp).status == "optimal"


def is_valid_effect(scenario: Scenario, e: _Vector, identity: _Vector | None = None) -> bool:
    """True iff 0 <= <e, s> <= 1 for every no-signalling state s.

    Checked as two feasibility problems: some move-shifted copy of ``e`` is
    nonnegative, and likewise for ``u - e``.  ``identity`` may name the
    identity representation used for ``u`` (any one works).
    """
    if e.scenario != scenario:
        raise DomainError("effect scenario mismatch")
    u = identity if identity is not None else identity_rep(scenario)
    if not e.is_nonnegative() and not has_nonnegative_rep(scenario, _basis_fingerprint(scenario, e)):
        return False
    comp = u - e
    if comp.is_nonnegative():
        return True
    return has_nonnegative_rep(scenario, _basis_fingerprint(scenario, comp))


def hull_lp_from_fingerprints(target: Sequence[Fraction], fps: np.ndarray, fp_den: int = 1) -> bool:
    """Is ``target`` a convex combination of rows of ``fps / fp_den``?

    Rows are fingerprints restricted to a spanning set of deterministic states.
    """
    target = [Fraction(t) for t in target]
    n = fps.shape[0]
    if n == 0:
        return False
    lp = LinearProgram(n, sense="min", objective=[0] * n)
    fpsT = np.asarray(fps).T
    for r in range(fpsT.shape[0]):
        row = fpsT[r]
        nz = np.nonzero(row)[0]
        lp.add_row({int(k): Fraction(int(row[k]), fp_den) for k in nz}, EQ, target[r])
    lp.add_row({k: 1 for k in range(n)}, EQ, 1)
    return solve(lp).status == "optimal"


def support_filter(target_full: np.ndarray, fps_full: np.ndarray) -> np.ndarray:
    """Rows that can carry weight in a convex decomposition of ``target_full``.

    A nonnegative row that is positive where the target is zero must get zero
    weight; rows with negative entries are always kept.
    """
    zero = target_full == 0
    bad = (fps_full[:, zero] > 0).any(axis=1) & ~(fps_full < 0).any(axis=1)
    return np.nonzero(~bad)[0]


def in_convex_hull(e: _Vector, known: Iterable[_Vector]) -> bool:
    """Is ``e`` a convex combination of ``known`` up to no-signalling moves?"""
    known = list(known)
    if not known:
        return False
    sc = e.scenario
    for k in known:
        if k.scenario != sc:
            raise DomainError("scenario mismatch")
    fps = [fingerprint(k) for k in known]
    den = math.lcm(*(f.denominator for fp in fps for f in fp))
    F = np.array([[int(f * den) for f in fp] for fp in fps], dtype=object)
    target = fingerprint(e)
    tden = math.lcm(*(f.denominator for f in target))
    T = np.array([int(f * tden) for f in target], dtype=object)
    keep = support_filter(T, F)
    if keep.size == 0:
        return False
    basis = det_basis(sc)
    return hull_lp_from_fingerprints([target[i] for i in basis], F[keep][:, basis], den)
