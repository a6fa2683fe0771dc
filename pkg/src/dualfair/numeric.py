"""Exact rational arithmetic and a vertex-optimal simplex solver.

All public quantities are :class:`fractions.Fraction`.  The LP solver is a
two-phase bounded-variable primal simplex with Bland's rule, so it terminates
on degenerate inputs and always stops at a basic feasible solution (a
vertex).  Pivoting runs on gmpy2 rationals, which are exact and several
times faster than Fraction; results are converted back.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational as _RationalABC
from typing import Iterable, Sequence

from gmpy2 import mpq

Rational = Fraction

LE, GE, EQ = "<=", ">=", "="
_RELATIONS = (LE, GE, EQ)


class Infeasible(Exception):
    """No point satisfies every constraint."""


class Unbounded(Exception):
    """The objective grows without bound over the feasible region."""


class RejectsNonTernary(ValueError):
    """A matrix handed to the TUM form check has an entry outside {0, 1, -1}."""


def rational(x) -> Fraction:
    """Convert ``x`` to an exact Fraction.

    Accepts ints, Fractions (and other exact rationals) and strings such as
    ``"3"``, ``"-2/7"``.  Floats and bools are refused: they would silently
    smuggle rounding into comparisons that must be exact.
    """
    if isinstance(x, bool):
        raise TypeError("bool is not a rational value")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, _RationalABC):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        s = x.strip()
        if not s or any(ch in s for ch in ".eE_ "):
            raise ValueError(f"not an exact rational literal: {x!r}")
        return Fraction(s)
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def is_integral(x: Fraction) -> bool:
    return x.denominator == 1


def ceil_div(x: Fraction) -> int:
    return math.ceil(x)


@dataclass(frozen=True)
class LinearProgram:
    """``maximize objective @ x`` subject to rows and per-variable bounds.

    ``rows`` holds ``(coefficients, relation, rhs)`` triples with relation one
    of ``"<="``, ``">="``, ``"="``.  ``lower``/``upper`` give per-variable
    bounds, ``None`` meaning unbounded; the default is ``x >= 0``.
    """

    objective: tuple[Fraction, ...]
    rows: tuple[tuple[tuple[Fraction, ...], str, Fraction], ...] = ()
    lower: tuple[Fraction | None, ...] | None = None
    upper: tuple[Fraction | None, ...] | None = None

    def __post_init__(self):
        nvar = len(self.objective)
        obj = tuple(rational(c) for c in self.objective)
        rows = []
        for coeffs, rel, rhs in self.rows:
            if rel not in _RELATIONS:
                raise ValueError(f"unknown relation {rel!r}")
            if len(coeffs) != nvar:
                raise ValueError(f"row has {len(coeffs)} coefficients, expected {nvar}")
            rows.append((tuple(rational(a) for a in coeffs), rel, rational(rhs)))
        lower = self.lower if self.lower is not None else (Fraction(0),) * nvar
        upper = self.upper if self.upper is not None else (None,) * nvar
        if len(lower) != nvar or len(upper) != nvar:
            raise ValueError("bounds must have one entry per variable")
        lower = tuple(None if b is None else rational(b) for b in lower)
        upper = tuple(None if b is None else rational(b) for b in upper)
        for lo, hi in zip(lower, upper):
            if lo is not None and hi is not None and lo > hi:
                raise ValueError("lower bound exceeds upper bound")
        object.__setattr__(self, "objective", obj)
        object.__setattr__(self, "rows", tuple(rows))
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    def row_activity(self, i: int, x: Sequence[Fraction]) -> Fraction:
        return sum((a * xi for a, xi in zip(self.rows[i][0], x) if a), Fraction(0))

    def is_feasible(self, x: Sequence[Fraction]) -> bool:
        for j, xj in enumerate(x):
            lo, hi = self.lower[j], self.upper[j]
            if lo is not None and xj < lo:
                return False
            if hi is not None and xj > hi:
                return False
        for i, (_, rel, rhs) in enumerate(self.rows):
            act = self.row_activity(i, x)
            if rel == LE and act > rhs or rel == GE and act < rhs or rel == EQ and act != rhs:
                return False
        return True

    def tight_set(self, x: Sequence[Fraction]) -> frozenset:
        """Constraints active at ``x``: ``("row", i)``, ``("lower", j)``, ``("upper", j)``."""
        tight = set()
        for i, (_, _, rhs) in enumerate(self.rows):
            if self.row_activity(i, x) == rhs:
                tight.add(("row", i))
        for j, xj in enumerate(x):
            if self.lower[j] is not None and xj == self.lower[j]:
                tight.add(("lower", j))
            if self.upper[j] is not None and xj == self.upper[j]:
                tight.add(("upper", j))
        return frozenset(tight)


@dataclass(frozen=True)
class VertexSolution:
    values: tuple[Fraction, ...]
    objective_value: Fraction
    tight_rows: frozenset = field(default_factory=frozenset)
    pivots: int = 0

    def fractional_indices(self) -> list[int]:
        return [j for j, x in enumerate(self.values) if x.denominator != 1]


# --- standard-form transformation --------------------------------------------
#
# Every original variable x_j becomes  x_j = offset_j + sign_j * y_a  (- y_b for
# free variables) with y >= 0 and an optional finite upper bound on y.


def _to_standard(lp: LinearProgram):
    cols = []  # per y-column: (orig index, sign)
    ub = []
    offset = [Fraction(0)] * lp.n_vars
    mapping = []  # orig j -> list of (col, sign)
    for j in range(lp.n_vars):
        lo, hi = lp.lower[j], lp.upper[j]
        if lo is not None:
            offset[j] = lo
            mapping.append([(len(cols), 1)])
            cols.append((j, 1))
            ub.append(None if hi is None else hi - lo)
        elif hi is not None:
            offset[j] = hi
            mapping.append([(len(cols), -1)])
            cols.append((j, -1))
            ub.append(None)
        else:
            mapping.append([(len(cols), 1), (len(cols) + 1, -1)])
            cols.extend([(j, 1), (j, -1)])
            ub.extend([None, None])
    ny = len(cols)
    a_rows, rels, rhs = [], [], []
    for coeffs, rel, b in lp.rows:
        row = [Fraction(0)] * ny
        shift = Fraction(0)
        for j, a in enumerate(coeffs):
            if not a:
                continue
            shift += a * offset[j]
            for col, sign in mapping[j]:
                row[col] += a * sign
        a_rows.append(row)
        rels.append(rel)
        rhs.append(b - shift)
    cost = [Fraction(0)] * ny
    for j, c in enumerate(lp.objective):
        for col, sign in mapping[j]:
            cost[col] += c * sign
    return a_rows, rels, rhs, cost, ub, offset, mapping


_ZERO = mpq(0)


def _q(x):
    return None if x is None else mpq(x)


def _frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


class _Tableau:
    """Dense bounded-variable simplex tableau over mpq."""

    def __init__(self, a_rows, rhs, ub, basis, beta):
        self.t = a_rows  # B^-1 A
        self.ub = ub  # per column, None = +inf
        self.basis = basis  # row -> column
        self.beta = beta  # values of basic variables
        self.at_upper = [False] * len(ub)
        self.pivots = 0

    def reduced_costs(self, cost):
        d = list(cost)
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                row = self.t[r]
                for k, a in enumerate(row):
                    if a:
                        d[k] -= cb * a
        return d

    def value(self, k):
        if k in self._basic_pos:
            return self.beta[self._basic_pos[k]]
        return self.ub[k] if self.at_upper[k] else _ZERO

    def run(self, cost, blocked):
        """Maximize ``cost`` from the current basis.  Returns False if unbounded."""
        d = self.reduced_costs(cost)
        t, ub, beta, basis = self.t, self.ub, self.beta, self.basis
        ncols = len(ub)
        while True:
            basic = set(basis)
            enter = -1
            for k in range(ncols):
                if k in basic or blocked[k]:
                    continue
                dk = d[k]
                if (dk > 0 and not self.at_upper[k]) or (dk < 0 and self.at_upper[k]):
                    enter = k
                    break
            if enter < 0:
                return True
            direction = -1 if self.at_upper[enter] else 1
            # ratio test; Bland: smallest leaving column index on ties
            best = ub[enter]
            leave_row = -1
            leave_to_upper = False
            for r, row in enumerate(t):
                a = row[enter] * direction
                if not a:
                    continue
                b = basis[r]
                if a > 0:
                    lim = beta[r] / a
                    to_upper = False
                else:
                    if ub[b] is None:
                        continue
                    lim = (ub[b] - beta[r]) / (-a)
                    to_upper = True
                if (
                    best is None
                    or lim < best
                    or (lim == best and leave_row >= 0 and b < basis[leave_row])
                ):
                    best, leave_row, leave_to_upper = lim, r, to_upper
            if best is None:
                return False
            step = best
            if step:
                for r, row in enumerate(t):
                    a = row[enter]
                    if a:
                        beta[r] -= direction * step * a
            if leave_row < 0:
                # bound flip of the entering variable, no basis change
                self.at_upper[enter] = not self.at_upper[enter]
                continue
            entering_value = (ub[enter] if self.at_upper[enter] else _ZERO) + direction * step
            leaving = basis[leave_row]
            self.at_upper[leaving] = leave_to_upper
            self.at_upper[enter] = False
            self._pivot(leave_row, enter, d)
            beta[leave_row] = entering_value

    def _pivot(self, p, q, d):
        t = self.t
        prow = t[p]
        inv = 1 / prow[q]
        if inv != 1:
            prow = [a * inv for a in prow]
            t[p] = prow
        nz = [(k, a) for k, a in enumerate(prow) if a]
        for r, row in enumerate(t):
            if r == p:
                continue
            f = row[q]
            if f:
                for k, a in nz:
                    row[k] -= f * a
        f = d[q]
        if f:
            for k, a in nz:
                d[k] -= f * a
        self.basis[p] = q
        self.pivots += 1

    def values(self):
        self._basic_pos = {b: r for r, b in enumerate(self.basis)}
        return [self.value(k) for k in range(len(self.ub))]


def solve_vertex_optimal(lp: LinearProgram) -> VertexSolution:
    """Maximize ``lp`` exactly and return an optimal vertex.

    Raises :class:`Infeasible` or :class:`Unbounded`.  Entering variables are
    chosen by lowest index (Bland), which makes the result deterministic.
    """
    a_rows, rels, rhs, cost, ub, offset, mapping = _to_standard(lp)
    ny = len(cost)
    nrows = len(a_rows)

    # a structural variable with ub < 0 can only come from lo > hi, rejected earlier
    # slacks: +1 for <=, -1 for >=
    slack_col = {}
    for i, rel in enumerate(rels):
        if rel != EQ:
            slack_col[i] = ny + len(slack_col)
    nslack = len(slack_col)
    ncols = ny + nslack
    rows = []
    for i in range(nrows):
        row = a_rows[i] + [Fraction(0)] * nslack
        if i in slack_col:
            row[slack_col[i]] = Fraction(1 if rels[i] == LE else -1)
        rows.append(row)
    b = list(rhs)
    for i in range(nrows):
        if b[i] < 0:
            rows[i] = [-a for a in rows[i]]
            b[i] = -b[i]
    col_ub = list(ub) + [None] * nslack

    basis = []
    art_cols = []
    for i in range(nrows):
        s = slack_col.get(i)
        if s is not None and rows[i][s] == 1:
            basis.append(s)
        else:
            art_cols.append(ncols + len(art_cols))
            basis.append(art_cols[-1])
    total = ncols + len(art_cols)
    art_of_row = {}
    k = 0
    for i in range(nrows):
        if basis[i] >= ncols:
            art_of_row[i] = k
            k += 1
    for i in range(nrows):
        ext = [Fraction(0)] * len(art_cols)
        if i in art_of_row:
            ext[art_of_row[i]] = Fraction(1)
        rows[i] = rows[i] + ext
    col_ub += [None] * len(art_cols)

    rows = [[mpq(a) for a in row] for row in rows]
    b = [mpq(x) for x in b]
    col_ub = [_q(x) for x in col_ub]
    tab = _Tableau(rows, b, col_ub, basis, list(b))
    if art_cols:
        phase1 = [_ZERO] * ncols + [mpq(-1)] * len(art_cols)
        tab.run(phase1, [False] * total)
        vals = tab.values()
        if any(vals[c] for c in art_cols):
            raise Infeasible("phase one ended with positive artificial mass")
        # artificials stay (possibly basic) at zero; pin them there
        for c in art_cols:
            tab.ub[c] = _ZERO
    blocked = [False] * ncols + [True] * len(art_cols)
    phase2 = [mpq(c) for c in cost] + [_ZERO] * (total - ny)
    if not tab.run(phase2, blocked):
        raise Unbounded("objective unbounded above")

    y = [_frac(v) for v in tab.values()]
    x = []
    for j in range(lp.n_vars):
        xj = offset[j]
        for col, sign in mapping[j]:
            xj += sign * y[col]
        x.append(xj)
    x = tuple(x)
    objective = sum((c * xj for c, xj in zip(lp.objective, x) if c), Fraction(0))
    return VertexSolution(x, objective, lp.tight_set(x), tab.pivots)


def is_totally_unimodular_bipartite_form(matrix: Sequence[Sequence]) -> bool:
    """Recognize the two-block sufficient condition for total unimodularity.

    True iff the rows can be split into two blocks such that each block has
    entries of a single sign (all in {0, 1} or all in {0, -1}) and every
    column has at most one nonzero inside each block.  Only a sufficient
    condition: a TUM matrix may still answer False.
    """
    rows = [list(r) for r in matrix]
    for r in rows:
        for a in r:
            if a not in (0, 1, -1):
                raise RejectsNonTernary(f"entry {a!r} is not in {{0, 1, -1}}")
    if not rows:
        return True
    ncols = len(rows[0])
    sign = []
    for r in rows:
        s = {1 if a > 0 else -1 for a in r if a}
        if len(s) > 1:
            return False
        sign.append(s.pop() if s else 0)
    # rows sharing a column must go to different blocks
    adj = [set() for _ in rows]
    for c in range(ncols):
        nz = [i for i, r in enumerate(rows) if r[c]]
        if len(nz) > 2:
            return False
        if len(nz) == 2:
            i, j = nz
            adj[i].add(j)
            adj[j].add(i)
    side = [-1] * len(rows)
    components = []
    for start in range(len(rows)):
        if side[start] >= 0:
            continue
        side[start] = 0
        comp = [start]
        stack = [start]
        while stack:
            i = stack.pop()
            for j in adj[i]:
                if side[j] < 0:
                    side[j] = 1 - side[i]
                    comp.append(j)
                    stack.append(j)
                elif side[j] == side[i]:
                    return False  # odd cycle: no 2-block split exists
        components.append(comp)
    # each component may be flipped; blocks must be sign-uniform
    for s0, s1 in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
        want = (s0, s1)
        ok = True
        for comp in components:
            fits = []
            for flip in (0, 1):
                fits.append(
                    all(sign[i] == 0 or sign[i] == want[side[i] ^ flip] for i in comp)
                )
            if not any(fits):
                ok = False
                break
        if ok:
            return True
    return False


def matrix_rank(rows: Iterable[Sequence[Fraction]]) -> int:
    """Exact rank by Gaussian elimination over the rationals."""
    m = [list(map(Fraction, r)) for r in rows]
    rank = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        piv = next((r for r in range(rank, len(m)) if m[r][c]), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank]
        for r in range(len(m)):
            if r != rank and m[r][c]:
                f = m[r][c] / p[c]
                m[r] = [a - f * b for a, b in zip(m[r], p)]
        rank += 1
    return rank
