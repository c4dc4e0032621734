"""Exact sparse linear algebra over ℤ and ℚ.

Matrices are dictionaries of nonzero entries.  Elimination runs on dense
row lists of Python integers or ``Fraction`` objects, which is ample for the
complexes this package handles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

Scalar = object  # int or Fraction


class DimensionError(ValueError):
    pass


class SparseMatrix:
    """rows × cols matrix keyed by (row, col); zeros are never stored."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries: Optional[Dict[Tuple[int, int], Scalar]] = None):
        self.rows, self.cols = rows, cols
        self.entries: Dict[Tuple[int, int], Scalar] = {}
        for (r, c), v in (entries or {}).items():
            if not (0 <= r < rows and 0 <= c < cols):
                raise DimensionError(f"entry ({r}, {c}) outside a {rows}×{cols} matrix")
            if v:
                self.entries[(r, c)] = v

    @classmethod
    def from_dense(cls, rows: Sequence[Sequence[Scalar]], cols: Optional[int] = None) -> "SparseMatrix":
        m = len(rows)
        n = cols if cols is not None else (len(rows[0]) if m else 0)
        return cls(m, n, {(i, j): v for i, row in enumerate(rows) for j, v in enumerate(row) if v})

    @classmethod
    def identity(cls, n: int) -> "SparseMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    def dense(self) -> List[List[Scalar]]:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (r, c), v in self.entries.items():
            out[r][c] = v
        return out

    def transpose(self) -> "SparseMatrix":
        return SparseMatrix(self.cols, self.rows, {(c, r): v for (r, c), v in self.entries.items()})

    def __matmul__(self, other: "SparseMatrix") -> "SparseMatrix":
        if self.cols != other.rows:
            raise DimensionError(f"cannot multiply {self.rows}×{self.cols} by {other.rows}×{other.cols}")
        by_row: Dict[int, List[Tuple[int, Scalar]]] = {}
        for (r, c), v in other.entries.items():
            by_row.setdefault(r, []).append((c, v))
        acc: Dict[Tuple[int, int], Scalar] = {}
        for (r, k), v in self.entries.items():
            for c, w in by_row.get(k, ()):
                acc[(r, c)] = acc.get((r, c), 0) + v * w
        return SparseMatrix(self.rows, other.cols, acc)

    def __eq__(self, other):
        return (isinstance(other, SparseMatrix) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def __repr__(self):
        return f"SparseMatrix({self.rows}×{self.cols}, nnz={len(self.entries)})"

    def matvec(self, x: Sequence[Scalar]) -> List[Scalar]:
        if len(x) != self.cols:
            raise DimensionError("vector length does not match column count")
        out = [0] * self.rows
        for (r, c), v in self.entries.items():
            if x[c]:
                out[r] += v * x[c]
        return out

    def vecmat(self, y: Sequence[Scalar]) -> List[Scalar]:
        if len(y) != self.rows:
            raise DimensionError("vector length does not match row count")
        out = [0] * self.cols
        for (r, c), v in self.entries.items():
            if y[r]:
                out[c] += y[r] * v
        return out

    def dump(self) -> str:
        """Coordinate text format: a header line then one ``row col value`` line per entry."""
        lines = [f"{self.rows} {self.cols} {len(self.entries)}"]
        for (r, c) in sorted(self.entries):
            lines.append(f"{r} {c} {self.entries[(r, c)]}")
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str) -> "SparseMatrix":
        head, *body = [ln for ln in text.splitlines() if ln.strip()]
        rows, cols, _ = (int(t) for t in head.split())
        ent = {}
        for ln in body:
            r, c, v = ln.split()
            val = Fraction(v)
            ent[(int(r), int(c))] = int(val) if val.denominator == 1 else val
        return cls(rows, cols, ent)


@dataclass
class AbelianGroupPresentation:
    rank: int
    torsion: List[int] = field(default_factory=list)

    def __post_init__(self):
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise ValueError("invariant factors must divide successively")

    def __add__(self, other: "AbelianGroupPresentation") -> "AbelianGroupPresentation":
        return AbelianGroupPresentation(self.rank + other.rank,
                                        invariant_factors(self.torsion + other.torsion))

    def __str__(self):
        parts = []
        if self.rank:
            parts.append("ℤ" if self.rank == 1 else f"ℤ^{self.rank}")
        parts += [f"ℤ/{t}" for t in self.torsion]
        return " ⊕ ".join(parts) if parts else "0"

    def to_json(self) -> dict:
        return {"rank": self.rank, "torsion": list(self.torsion)}


def invariant_factors(orders: Sequence[int]) -> List[int]:
    """Invariant factors of ⊕ ℤ/orders."""
    if not orders:
        return []
    D = [[0] * len(orders) for _ in orders]
    for i, o in enumerate(orders):
        D[i][i] = o
    d, _, _ = smith_normal_form(SparseMatrix.from_dense(D))
    return [x for x in d.diagonal() if x not in (0, 1)]


# -- Smith normal form ----------------------------------------------------------

@dataclass
class SmithForm:
    """U·A·V = D with U, V unimodular; stored densely."""

    D: List[List[int]]
    U: List[List[int]]
    V: List[List[int]]
    rank: int

    def diagonal(self) -> List[int]:
        return [self.D[i][i] for i in range(min(len(self.D), len(self.D[0]) if self.D else 0))]


def smith_normal_form(A: SparseMatrix):
    """Return (D, U, V) as SparseMatrix objects with U·A·V = D."""
    sf = smith(A)
    m, n = A.rows, A.cols
    D = SparseMatrix.from_dense(sf.D, n)
    D.rows = m
    return _Diag(D, sf), SparseMatrix.from_dense(sf.U, m), SparseMatrix.from_dense(sf.V, n)


class _Diag(SparseMatrix):
    __slots__ = ("form",)

    def __init__(self, D: SparseMatrix, form: SmithForm):
        super().__init__(D.rows, D.cols, D.entries)
        self.form = form

    def diagonal(self) -> List[int]:
        return [self.entries.get((i, i), 0) for i in range(min(self.rows, self.cols))]


def smith(A: SparseMatrix) -> SmithForm:
    """Smith normal form by smallest-pivot gcd elimination."""
    m, n = A.rows, A.cols
    M = A.dense()
    for row in M:
        for v in row:
            if isinstance(v, Fraction) and v.denominator != 1:
                raise ValueError("smith_normal_form needs an integral matrix")
    M = [[int(v) for v in row] for row in M]
    U = [[int(i == j) for j in range(m)] for i in range(m)]
    V = [[int(i == j) for j in range(n)] for i in range(n)]

    def swap_rows(i, j):
        if i != j:
            M[i], M[j] = M[j], M[i]
            U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        if i != j:
            for row in M:
                row[i], row[j] = row[j], row[i]
            for row in V:
                row[i], row[j] = row[j], row[i]

    def add_row(src, dst, q):  # row dst += q * row src
        if q:
            rs, rd = M[src], M[dst]
            for k in range(n):
                if rs[k]:
                    rd[k] += q * rs[k]
            us, ud = U[src], U[dst]
            for k in range(m):
                if us[k]:
                    ud[k] += q * us[k]

    def add_col(src, dst, q):  # col dst += q * col src
        if q:
            for row in M:
                if row[src]:
                    row[dst] += q * row[src]
            for row in V:
                if row[src]:
                    row[dst] += q * row[src]

    t = 0
    while t < min(m, n):
        best = None
        for i in range(t, m):
            row = M[i]
            for j in range(t, n):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, i, j = best
        swap_rows(t, i)
        swap_cols(t, j)
        while True:
            p = M[t][t]
            changed = False
            for i in range(t + 1, m):
                if M[i][t]:
                    add_row(t, i, -(M[i][t] // p))
                    if M[i][t]:
                        changed = True
            for j in range(t + 1, n):
                if M[t][j]:
                    add_col(t, j, -(M[t][j] // p))
                    if M[t][j]:
                        changed = True
            if changed:
                # move the smallest leftover in row/column t to the pivot
                cand = [(abs(M[i][t]), i, t) for i in range(t, m) if M[i][t]]
                cand += [(abs(M[t][j]), t, j) for j in range(t, n) if M[t][j]]
                _, i, j = min(cand)
                swap_rows(t, i)
                swap_cols(t, j)
                continue
            bad = None
            for i in range(t + 1, m):
                for j in range(t + 1, n):
                    if M[i][j] % p:
                        bad = i
                        break
                if bad is not None:
                    break
            if bad is None:
                break
            add_row(bad, t, 1)
        if M[t][t] < 0:
            M[t] = [-v for v in M[t]]
            U[t] = [-v for v in U[t]]
        t += 1
    return SmithForm(M, U, V, t)


def determinant(rows: Sequence[Sequence[Scalar]]) -> Fraction:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    M = [[Fraction(v) for v in r] for r in rows]
    n = len(M)
    sign, prev = 1, Fraction(1)
    for k in range(n - 1):
        if M[k][k] == 0:
            sw = next((i for i in range(k + 1, n) if M[i][k] != 0), None)
            if sw is None:
                return Fraction(0)
            M[k], M[sw] = M[sw], M[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) / prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1] if n else Fraction(1)


# -- affine solving --------------------------------------------------------------

@dataclass
class AffineSolution:
    x: List[Scalar]
    kernel: List[List[Scalar]]


@dataclass
class Infeasibility:
    """A functional y with yA = 0 (or integral, over ℤ) and y·b ≠ 0 (or non-integral)."""

    y: List[Fraction]
    ring: str

    def verify(self, A: SparseMatrix, b: Sequence[Scalar]) -> bool:
        yA = A.vecmat(self.y)
        yb = sum((yi * bi for yi, bi in zip(self.y, b)), Fraction(0))
        if self.ring == "Q":
            return all(v == 0 for v in yA) and yb != 0
        return all(Fraction(v).denominator == 1 for v in yA) and Fraction(yb).denominator != 1 or (
            all(v == 0 for v in yA) and yb != 0)


def _check_dims(A: SparseMatrix, b: Sequence[Scalar]):
    if len(b) != A.rows:
        raise DimensionError(f"right-hand side has length {len(b)}, matrix has {A.rows} rows")


def solve_affine(A: SparseMatrix, b: Sequence[Scalar], ring: str = "Z", smith_form: Optional[SmithForm] = None):
    """Solve A x = b over ℤ or ℚ; returns AffineSolution or Infeasibility."""
    _check_dims(A, b)
    if ring == "Q":
        return _solve_rational(A, b)
    if ring != "Z":
        raise ValueError("ring must be 'Z' or 'Q'")
    sf = smith_form or smith(A)
    m, n, r = A.rows, A.cols, sf.rank
    Ub = [sum((Fraction(u) * bi for u, bi in zip(sf.U[i], b) if u and bi), Fraction(0)) for i in range(m)]
    for i in range(r, m):
        if Ub[i] != 0:
            return Infeasibility([Fraction(u) for u in sf.U[i]], "Z")
    y = []
    for i in range(r):
        q = Ub[i] / sf.D[i][i]
        if q.denominator != 1:
            return Infeasibility([Fraction(u, sf.D[i][i]) for u in sf.U[i]], "Z")
        y.append(int(q))
    x = [sum(sf.V[j][i] * y[i] for i in range(r)) for j in range(n)]
    kernel = [[sf.V[j][i] for j in range(n)] for i in range(r, n)]
    return AffineSolution(x, kernel)


def rref(rows: List[List[Fraction]], ncols: int):
    """In-place reduced row echelon form; returns pivot columns."""
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, len(rows)) if rows[i][c] != 0), None)
        if p is None:
            continue
        rows[r], rows[p] = rows[p], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        pr = rows[r]
        for i in range(len(rows)):
            if i != r and rows[i][c] != 0:
                f = rows[i][c]
                ri = rows[i]
                rows[i] = [a - f * bb if bb else a for a, bb in zip(ri, pr)]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    return pivots


def _solve_rational(A: SparseMatrix, b: Sequence[Scalar]):
    m, n = A.rows, A.cols
    D = A.dense()
    aug = [[Fraction(v) for v in D[i]] + [Fraction(b[i])] + [Fraction(int(i == k)) for k in range(m)]
           for i in range(m)]
    pivots = rref(aug, n)
    r = len(pivots)
    for i in range(r, m):
        if aug[i][n] != 0:
            return Infeasibility(aug[i][n + 1:], "Q")
    x = [Fraction(0)] * n
    for i, c in enumerate(pivots):
        x[c] = aug[i][n]
    free = [c for c in range(n) if c not in set(pivots)]
    kernel = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for i, c in enumerate(pivots):
            v[c] = -aug[i][f]
        kernel.append(v)
    return AffineSolution(x, kernel)


def left_kernel(A: SparseMatrix) -> List[List[Fraction]]:
    """A basis of {y : yA = 0} over ℚ, each row scaled to be primitive integral."""
    m, n = A.rows, A.cols
    D = A.dense()
    aug = [[Fraction(v) for v in D[i]] + [Fraction(int(i == k)) for k in range(m)] for i in range(m)]
    r = len(rref(aug, n))
    return [integral_primitive(row[n:]) for row in aug[r:]]


def integral_primitive(v: Sequence[Fraction]) -> List[int]:
    from math import gcd
    den = 1
    for x in v:
        den = den * Fraction(x).denominator // gcd(den, Fraction(x).denominator)
    w = [int(Fraction(x) * den) for x in v]
    g = 0
    for x in w:
        g = gcd(g, x)
    return [x // g for x in w] if g else w


def rank_q(A: SparseMatrix) -> int:
    rows = [[Fraction(v) for v in r] for r in A.dense()]
    return len(rref(rows, A.cols)) if rows else 0


@dataclass
class MixedSolution:
    x_int: List[int]
    x_rat: List[Fraction]


@dataclass
class MixedInfeasibility:
    """φ with φ·A_rat = 0, φ·A_int integral and φ·b not integral (or φ·A_int = 0, φ·b ≠ 0)."""

    phi: List[Fraction]

    def verify(self, A_int: SparseMatrix, A_rat: SparseMatrix, b: Sequence[Scalar]) -> bool:
        if any(v != 0 for v in A_rat.vecmat(self.phi)):
            return False
        pa = A_int.vecmat(self.phi)
        pb = Fraction(sum((p * bi for p, bi in zip(self.phi, b)), Fraction(0)))
        if all(Fraction(v).denominator == 1 for v in pa) and pb.denominator != 1:
            return True
        return all(v == 0 for v in pa) and pb != 0


def solve_mixed(A_int: SparseMatrix, A_rat: SparseMatrix, b: Sequence[Scalar], *, left=None):
    """Solve A_int·m + A_rat·r = b with m integral and r rational.

    The rational block is eliminated by a left kernel L; the integral block then
    solves (L·A_int) m = L·b over ℤ and the rational part is recovered last.
    """
    _check_dims(A_int, b)
    _check_dims(A_rat, b)
    L = left if left is not None else left_kernel(A_rat)
    LA = SparseMatrix(len(L), A_int.cols, {})
    for i, row in enumerate(L):
        vals = A_int.vecmat(row)
        for j, v in enumerate(vals):
            if v:
                LA.entries[(i, j)] = v
    Lb = [sum((Fraction(li) * bi for li, bi in zip(row, b) if li and bi), Fraction(0)) for row in L]
    sol = solve_affine(LA, Lb, "Z")
    if isinstance(sol, Infeasibility):
        phi = [Fraction(0)] * A_int.rows
        for coef, row in zip(sol.y, L):
            if coef:
                for k, v in enumerate(row):
                    if v:
                        phi[k] += coef * v
        return MixedInfeasibility(phi)
    m = sol.x
    resid = [Fraction(bi) - ai for bi, ai in zip(b, A_int.matvec(m))]
    rs = _solve_rational(A_rat, resid)
    if isinstance(rs, Infeasibility):  # cannot happen when L spans the left kernel
        raise ArithmeticError("rational stage failed after integral stage succeeded")
    return MixedSolution([int(v) for v in m], rs.x)


# -- cohomology ------------------------------------------------------------------

def coboundary_matrix(base, k: int) -> SparseMatrix:
    """δ: C^k → C^{k+1} on normalized relative integral cochains."""
    from .simplicial import boundary_matrix
    ent, rows, cols = boundary_matrix(base, k + 1)
    return SparseMatrix(cols, rows, {(c, r): v for (r, c), v in ent.items()})


def _integral_cohomology(base, k: int) -> AbelianGroupPresentation:
    from .simplicial import as_pair
    if k < 0:
        return AbelianGroupPresentation(0)
    pair = as_pair(base)
    dim_k = len(pair.rel_cells(k))
    if dim_k == 0:
        return AbelianGroupPresentation(0)
    out_form = smith(coboundary_matrix(base, k))
    in_form = smith(coboundary_matrix(base, k - 1)) if k >= 1 else None
    in_rank = in_form.rank if in_form else 0
    torsion = [abs(in_form.D[i][i]) for i in range(in_rank) if abs(in_form.D[i][i]) > 1] if in_form else []
    return AbelianGroupPresentation(dim_k - out_form.rank - in_rank, torsion)


def cohomology(base, n: int, coeff_degree: int = 0, coefficients=None) -> AbelianGroupPresentation:
    """Cohomology of a simplicial set or pair.

    With ``coefficients`` given, returns total-degree cohomology
    ⊕_j H^{n-j}(X; ℤ)^{rank Λ^j}; otherwise H^{n-coeff_degree}(X; ℤ).
    """
    from .simplicial import ambient_of
    if coefficients is None:
        return _integral_cohomology(base, n - coeff_degree)
    top = ambient_of(base).dimension
    total = AbelianGroupPresentation(0)
    for k in range(0, top + 1):
        r = coefficients.rank(n - k)
        if r:
            h = _integral_cohomology(base, k)
            for _ in range(r):
                total = total + h
    return total
