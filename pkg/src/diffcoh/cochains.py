"""Normalized cochains with graded coefficients.

A cochain of total degree n assigns to each nondegenerate k-cell a value in the
coefficient group of degree n-k.  Coefficient rings here are monogenic (rank at
most one in each degree, generator of even degree), so a value is a single
integer or fraction.  Cells of the subcomplex of a pair carry no slot.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .simplicial import (Pair, ProductSet, SimplicialMap, SimplicialSet, Simplex, ambient_of, as_pair,
                         identity, surjection_from_set)


# -- sign conventions --------------------------------------------------------
# Every sign used by the chain-level operations lives here.

def face_sign(i: int) -> int:
    """Sign of d_i in the boundary ∂ = Σ (-1)^i d_i."""
    return -1 if i & 1 else 1


def shuffle_sign(mu: Sequence[int]) -> int:
    """Sign of the (p,q)-shuffle whose first block is ``mu`` (sorted)."""
    return -1 if sum(m - i for i, m in enumerate(mu)) & 1 else 1


def cup1_sign(p: int, q: int, i: int) -> int:
    """Sign of the i-th summand of the Steenrod cup-1 of a p- and a q-cochain."""
    return -1 if ((p - i) * (q + 1)) & 1 else 1


def koszul(a: int, b: int) -> int:
    return -1 if (a * b) & 1 else 1


# -- coefficients ------------------------------------------------------------

class GradedCoefficients:
    """Monogenic graded ring Λ = ℤ·{u^e : lo ≤ e ≤ hi} with |u| = gen_degree.

    ``lo``/``hi`` may be ``None`` for an unbounded range.  With hi finite the
    ring is truncated (u^e = 0 for e > hi).  The realification ρ is the
    identity on the monomial basis.
    """

    def __init__(self, name: str, gen_degree: Optional[int] = None, lo: Optional[int] = 0, hi: Optional[int] = 0):
        if gen_degree is not None and (gen_degree == 0 or gen_degree % 2):
            raise ValueError("the generator must have nonzero even degree")
        if lo is not None and lo > 0:
            raise ValueError("exponent range must contain 0")
        self.name = name
        self.gen_degree = gen_degree
        self.lo, self.hi = lo, hi
        if gen_degree is None:
            self.lo = self.hi = 0

    @property
    def key(self):
        return (self.gen_degree, self.lo, self.hi)

    def __eq__(self, other):
        return isinstance(other, GradedCoefficients) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"GradedCoefficients({self.name})"

    def exponent(self, j: int) -> Optional[int]:
        if self.gen_degree is None:
            return 0 if j == 0 else None
        if j % self.gen_degree:
            return None
        e = j // self.gen_degree
        if (self.lo is not None and e < self.lo) or (self.hi is not None and e > self.hi):
            return None
        return e

    def rank(self, j: int) -> int:
        return 0 if self.exponent(j) is None else 1

    def mult(self, j1: int, j2: int) -> int:
        """Structure constant of basis(j1)·basis(j2) in basis(j1+j2)."""
        if self.rank(j1) and self.rank(j2) and self.rank(j1 + j2):
            return 1
        return 0

    def label(self, j: int) -> str:
        e = self.exponent(j)
        if e is None:
            return "0"
        return "1" if e == 0 else ("u" if e == 1 else f"u^{e}")

    def degree_of_label(self, label: str) -> int:
        label = label.strip()
        if label == "1":
            return 0
        if label == "u":
            e = 1
        elif label.startswith("u^"):
            e = int(label[2:])
        else:
            raise ValueError(f"unknown coefficient label {label!r}")
        if self.gen_degree is None or self.rank(e * self.gen_degree) == 0:
            raise ValueError(f"coefficient {label!r} not in {self.name}")
        return e * self.gen_degree

    def to_json(self) -> dict:
        if self.gen_degree is None:
            return {"kind": "integers"}
        if self.lo is None and self.hi is None:
            return {"kind": "laurent", "generator_degree": self.gen_degree}
        return {"kind": "polynomial", "generator_degree": self.gen_degree, "truncation": self.hi}

    @classmethod
    def from_json(cls, d: dict) -> "GradedCoefficients":
        kind = d.get("kind", "integers")
        g = d.get("generator_degree", -2)
        if kind == "integers":
            return integers()
        if kind == "laurent":
            return laurent(g)
        if kind == "polynomial":
            return polynomial(g, d.get("truncation"))
        raise ValueError(f"unknown coefficient kind {kind!r}")


def integers() -> GradedCoefficients:
    return GradedCoefficients("ℤ")


def laurent(gen_degree: int = -2) -> GradedCoefficients:
    return GradedCoefficients(f"ℤ[u,u⁻¹],|u|={gen_degree}", gen_degree, None, None)


def polynomial(gen_degree: int = -2, truncation: Optional[int] = None) -> GradedCoefficients:
    tag = f"/u^{truncation + 1}" if truncation is not None else ""
    return GradedCoefficients(f"ℤ[u]{tag},|u|={gen_degree}", gen_degree, 0, truncation)


# -- cochains ----------------------------------------------------------------

def slots(base, n: int, coeff: GradedCoefficients) -> List[str]:
    """Cells carrying a coordinate for total degree n."""
    pair = as_pair(base)
    X = pair.ambient
    key = ("slots", id(pair), n, coeff.key)
    hit = X._cache.get(key)
    if hit is None:
        hit = [c for k in range(X.dimension + 1) if coeff.rank(n - k) for c in pair.rel_cells(k)]
        X._cache[key] = hit
    return hit


def _faces_nd(X: SimplicialSet) -> Dict[str, List[Tuple[int, str]]]:
    """cell -> [(sign, nondegenerate face cell)], cached."""
    hit = X._cache.get("faces_nd")
    if hit is None:
        hit = {}
        for c in X.all_cells():
            k = X.dim_of[c]
            out = []
            if k:
                for i, (z, eta) in enumerate(X.faces[c]):
                    if eta == identity(k - 1):
                        out.append((face_sign(i), z))
            hit[c] = out
        X._cache["faces_nd"] = hit
    return hit


def _aw_table(X: SimplicialSet) -> Dict[str, List[Tuple[int, Optional[str], Optional[str]]]]:
    """cell -> [(p, front p-face cell or None, back face cell or None)], cached."""
    hit = X._cache.get("aw")
    if hit is None:
        hit = {}
        for c in X.all_cells():
            k = X.dim_of[c]
            out = []
            for p in range(k + 1):
                f = X.restrict(c, tuple(range(p + 1)))
                b = X.restrict(c, tuple(range(p, k + 1)))
                out.append((p, f[0] if f[1] == identity(p) else None,
                            b[0] if b[1] == identity(k - p) else None))
            hit[c] = out
        X._cache["aw"] = hit
    return hit


class Cochain:
    """A normalized cochain of total degree ``n``."""

    __slots__ = ("base", "n", "coeff", "values", "rational")

    def __init__(self, base, n: int, coeff: GradedCoefficients, values: Optional[Dict[str, object]] = None,
                 rational: bool = False, *, check: bool = True):
        self.base = base
        self.n = n
        self.coeff = coeff
        self.rational = rational
        vals = {}
        if values:
            if check:
                allowed = set(slots(base, n, coeff))
                for c, v in values.items():
                    if not v:
                        continue
                    if c not in allowed:
                        raise ValueError(f"cell {c!r} has no slot in degree {n}")
                    if not rational and isinstance(v, Fraction) and v.denominator != 1:
                        raise ValueError(f"non-integral value {v} on {c!r} for an integral cochain")
                    vals[c] = v if rational else int(v)
            else:
                vals = {c: v for c, v in values.items() if v}
        self.values = vals

    # -- construction -----------------------------------------------------
    @classmethod
    def zero(cls, base, n, coeff, rational=False):
        return cls(base, n, coeff, {}, rational)

    @classmethod
    def random(cls, base, n, coeff, rng: random.Random, rational=False, bound=3, density=1.0):
        vals = {}
        for c in slots(base, n, coeff):
            if rng.random() <= density:
                v = rng.randint(-bound, bound)
                if rational:
                    v = Fraction(v, rng.choice((1, 1, 2, 3)))
                vals[c] = v
        return cls(base, n, coeff, vals, rational)

    @classmethod
    def from_vector(cls, base, n, coeff, vec: Sequence, rational=False):
        return cls(base, n, coeff, dict(zip(slots(base, n, coeff), vec)), rational)

    def to_vector(self) -> List:
        z = Fraction(0) if self.rational else 0
        return [self.values.get(c, z) for c in slots(self.base, self.n, self.coeff)]

    @property
    def ambient(self) -> SimplicialSet:
        return ambient_of(self.base)

    # -- arithmetic -------------------------------------------------------
    def _like(self, values, rational=None):
        return Cochain(self.base, self.n, self.coeff, values,
                       self.rational if rational is None else rational, check=False)

    def _compat(self, other: "Cochain"):
        if not isinstance(other, Cochain):
            raise TypeError("expected a Cochain")
        if other.n != self.n or other.coeff != self.coeff or as_pair(other.base) is not as_pair(self.base):
            raise ValueError("incompatible cochains (base, degree or coefficients differ)")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._compat(other)
        vals = dict(self.values)
        for c, v in other.values.items():
            vals[c] = vals.get(c, 0) + v
        return self._like(vals, self.rational or other.rational)

    def __neg__(self) -> "Cochain":
        return self._like({c: -v for c, v in self.values.items()})

    def __sub__(self, other: "Cochain") -> "Cochain":
        return self + (-other)

    def scale(self, s) -> "Cochain":
        rational = self.rational or (isinstance(s, Fraction) and s.denominator != 1)
        return self._like({c: v * s for c, v in self.values.items()}, rational)

    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, Cochain):
            return NotImplemented
        return (self.n == other.n and self.coeff == other.coeff
                and as_pair(self.base) is as_pair(other.base) and self.values == other.values)

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.values.items()))))

    def is_zero(self) -> bool:
        return not self.values

    def __repr__(self):
        kind = "V" if self.rational else "Λ"
        return f"Cochain(deg={self.n}, {kind}, {dict(sorted(self.values.items()))})"

    def rho(self) -> "Cochain":
        return self._like({c: Fraction(v) for c, v in self.values.items()}, True)

    def integral(self) -> "Cochain":
        for c, v in self.values.items():
            if Fraction(v).denominator != 1:
                raise ValueError(f"value {v} on {c!r} is not integral")
        return self._like({c: int(v) for c, v in self.values.items()}, False)

    def value(self, x: Simplex):
        """Evaluate on a possibly degenerate simplex of the ambient set."""
        cell, eta = x
        if eta != identity(len(eta) - 1) or len(eta) - 1 != self.ambient.dim_of[cell]:
            return 0
        return self.values.get(cell, 0)

    def on_chain(self, chain: "Chain"):
        return sum((k * self.value(s) for s, k in chain.terms.items()), 0)

    def to_json(self) -> dict:
        return {"degree": self.n, "rational": self.rational,
                "values": {c: str(v) for c, v in sorted(self.values.items())}}


def cochain_space(base, n, coeff) -> int:
    return len(slots(base, n, coeff))


# -- δ, cup, pullback ---------------------------------------------------------

def coboundary(u: Cochain) -> Cochain:
    pair = as_pair(u.base)
    X = pair.ambient
    fnd = _faces_nd(X)
    vals: Dict[str, object] = {}
    for c in slots(u.base, u.n + 1, u.coeff):
        s = 0
        for sg, z in fnd[c]:
            v = u.values.get(z)
            if v:
                s += sg * v
        if s:
            vals[c] = s
    return Cochain(u.base, u.n + 1, u.coeff, vals, u.rational, check=False)


delta = coboundary


def cup(u: Cochain, v: Cochain) -> Cochain:
    """Alexander–Whitney cup product."""
    if ambient_of(u.base) is not ambient_of(v.base):
        raise ValueError("incompatible bases for cup product")
    if u.coeff != v.coeff:
        raise ValueError("incompatible coefficients for cup product")
    base = _cup_base(u.base, v.base)
    X = ambient_of(base)
    aw = _aw_table(X)
    coeff = u.coeff
    n = u.n + v.n
    vals = {}
    uv, vv = u.values, v.values
    for c in slots(base, n, coeff):
        k = X.dim_of[c]
        s = 0
        for p, f, b in aw[c]:
            if f is None or b is None:
                continue
            a1 = uv.get(f)
            if not a1:
                continue
            a2 = vv.get(b)
            if not a2:
                continue
            m = coeff.mult(u.n - p, v.n - (k - p))
            if m:
                s += m * a1 * a2
        if s:
            vals[c] = s
    return Cochain(base, n, coeff, vals, u.rational or v.rational, check=False)


def _cup_base(a, b):
    """Relative cochains multiply into the larger relative part (union of subcomplexes)."""
    pa, pb = as_pair(a), as_pair(b)
    if pa is pb or pb.is_absolute():
        return a
    if pa.is_absolute():
        return b
    if pa.sub_cells >= pb.sub_cells:
        return a
    if pb.sub_cells >= pa.sub_cells:
        return b
    cells = pa.sub_cells | pb.sub_cells
    key = ("union", pa.sub_cells, pb.sub_cells)
    X = pa.ambient
    hit = X._cache.get(key)
    if hit is None:
        hit = Pair.from_subcells(X, cells)
        X._cache[key] = hit
    return hit


def pullback(f: SimplicialMap, u: Cochain, base=None) -> Cochain:
    """f*u on ``base`` (defaults to the source of f, absolute)."""
    base = base if base is not None else f.source
    if ambient_of(base) is not f.source:
        raise ValueError("base does not match the source of the map")
    if ambient_of(u.base) is not f.target:
        raise ValueError("cochain does not live on the target of the map")
    vals = {}
    idmemo: Dict[int, Tuple[int, ...]] = {}
    pair = as_pair(base)
    sub_cells = pair.sub_cells
    for c in f.source.all_cells():
        k = f.source.dim_of[c]
        if not u.coeff.rank(u.n - k):
            continue
        y, zeta = f.of_cell(c)
        ident = idmemo.setdefault(k, identity(k))
        if zeta != ident:
            continue
        v = u.values.get(y)
        if v:
            if c in sub_cells:
                raise ValueError(f"pullback does not vanish on the subcomplex (cell {c!r})")
            vals[c] = v
    return Cochain(base, u.n, u.coeff, vals, u.rational, check=False)


def restrict_to(u: Cochain, base) -> Cochain:
    """Reinterpret ``u`` on another pair structure over the same ambient set."""
    allowed = set(slots(base, u.n, u.coeff))
    vals = {}
    for c, v in u.values.items():
        if c not in allowed:
            raise ValueError(f"value on {c!r} is not allowed on the target pair")
        vals[c] = v
    return Cochain(base, u.n, u.coeff, vals, u.rational, check=False)


def restrict_to_sub(u: Cochain, pair: Pair) -> Cochain:
    """i*u for the inclusion of the subcomplex."""
    return pullback(pair.inclusion, u, pair.sub)


def extend_by_zero(u: Cochain, pair: Pair) -> Cochain:
    """A cochain on the subcomplex, extended by zero to the ambient set."""
    return Cochain(pair.ambient, u.n, u.coeff, dict(u.values), u.rational, check=False)


def unit_cochain(base, coeff, rational=False) -> Cochain:
    X = ambient_of(base)
    return Cochain(base, 0, coeff, {v: 1 for v in as_pair(base).rel_cells(0)}, rational)


def dual_cochain(base, cell: str, coeff, rational=False) -> Cochain:
    return Cochain(base, ambient_of(base).dim_of[cell], coeff, {cell: 1}, rational)


# -- cup-1 -------------------------------------------------------------------

def cup1(u: Cochain, v: Cochain) -> Cochain:
    """Steenrod cup-1 product.

    For cell degrees a, b and a simplex x of dimension a+b-1:
    Σ_{i<a} cup1_sign(a,b,i) · u(x[0..i, i+b..]) · v(x[i..i+b]).
    """
    if ambient_of(u.base) is not ambient_of(v.base):
        raise ValueError("incompatible bases for cup-1")
    base = _cup_base(u.base, v.base)
    X = ambient_of(base)
    coeff = u.coeff
    n = u.n + v.n - 1
    vals = {}
    for c in slots(base, n, coeff):
        k = X.dim_of[c]
        s = 0
        for a in range(1, k + 1):
            b = k + 1 - a
            if not (coeff.rank(u.n - a) and coeff.rank(v.n - b)):
                continue
            m = coeff.mult(u.n - a, v.n - b)
            if not m:
                continue
            for i in range(a):
                outer = tuple(range(i + 1)) + tuple(range(i + b, k + 1))
                inner = tuple(range(i, i + b + 1))
                fu = X.restrict(c, outer)
                if fu[1] != identity(a):
                    continue
                x1 = u.values.get(fu[0])
                if not x1:
                    continue
                fv = X.restrict(c, inner)
                if fv[1] != identity(b):
                    continue
                x2 = v.values.get(fv[0])
                if not x2:
                    continue
                s += cup1_sign(a, b, i) * m * x1 * x2
        if s:
            vals[c] = s
    return Cochain(base, n, coeff, vals, u.rational or v.rational, check=False)


# -- chains ------------------------------------------------------------------

class Chain:
    """A formal sum of simplices of ``space``; degenerate terms drop on normalisation."""

    def __init__(self, space: SimplicialSet, terms: Optional[Dict[Simplex, object]] = None):
        self.space = space
        self.terms: Dict[Simplex, object] = {}
        for s, k in (terms or {}).items():
            if k and s[1] == identity(len(s[1]) - 1):
                self.terms[s] = self.terms.get(s, 0) + k
        self.terms = {s: k for s, k in self.terms.items() if k}

    @classmethod
    def of(cls, space, cell, k=1):
        return cls(space, {space.nondeg(cell): k})

    def __add__(self, other):
        t = dict(self.terms)
        for s, k in other.terms.items():
            t[s] = t.get(s, 0) + k
        return Chain(self.space, t)

    def scale(self, k):
        return Chain(self.space, {s: k * v for s, v in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, Chain) and self.space is other.space and self.terms == other.terms

    def boundary(self) -> "Chain":
        X = self.space
        t: Dict[Simplex, object] = {}
        for s, k in self.terms.items():
            d = len(s[1]) - 1
            for i in range(d + 1 if d else 0):
                f = X.face(s, i)
                t[f] = t.get(f, 0) + face_sign(i) * k
        return Chain(X, t)

    def push(self, f: SimplicialMap) -> "Chain":
        t: Dict[Simplex, object] = {}
        for s, k in self.terms.items():
            y = f(s)
            t[y] = t.get(y, 0) + k
        return Chain(f.target, t)


def ez_simplices(P: ProductSet, a: Simplex, b: Simplex) -> List[Tuple[int, Simplex]]:
    """Signed simplices of the shuffle map on a ⊗ b (degenerate ones included)."""
    X, Y = P.factors
    p, q = len(a[1]) - 1, len(b[1]) - 1
    out = []
    for mu in itertools.combinations(range(p + q), p):
        nu = tuple(j for j in range(p + q) if j not in mu)
        sa = X.apply(a, surjection_from_set(p + q, nu))
        sb = Y.apply(b, surjection_from_set(p + q, mu))
        out.append((shuffle_sign(mu), P.pair_simplex(sa, sb)))
    return out


def ez_shuffle(a: Chain, b: Chain, P: ProductSet) -> Chain:
    """Eilenberg–Zilber shuffle map C(X) ⊗ C(Y) → C(X×Y)."""
    t: Dict[Simplex, object] = {}
    for sa, ka in a.terms.items():
        for sb, kb in b.terms.items():
            for sg, s in ez_simplices(P, sa, sb):
                t[s] = t.get(s, 0) + sg * ka * kb
    return Chain(P, t)


def alexander_whitney(c: Chain, P: ProductSet) -> Dict[Tuple[Simplex, Simplex], object]:
    """AW: C(X×Y) → C(X) ⊗ C(Y), normalized on both sides."""
    X, Y = P.factors
    out: Dict[Tuple[Simplex, Simplex], object] = {}
    for s, k in c.terms.items():
        a, b = P.split(s)
        n = len(s[1]) - 1
        for p in range(n + 1):
            fa = X.apply(a, tuple(range(p + 1)))
            bb = Y.apply(b, tuple(range(p, n + 1)))
            if fa[1] != identity(p) or bb[1] != identity(n - p):
                continue
            out[(fa, bb)] = out.get((fa, bb), 0) + k
    return {key: v for key, v in out.items() if v}


# -- integration along the interval ---------------------------------------------

def _fiber_edge(P: ProductSet) -> str:
    F = P.factors[0]
    edges = F.cells_of(1)
    if F.dimension != 1 or len(edges) != 1:
        raise ValueError("the first factor must be Δ¹ or the minimal circle")
    return edges[0]


def prism_terms(P: ProductSet, x: Simplex) -> List[Tuple[int, str, int]]:
    """B([I] ⊗ x) as (sign, nondegenerate cell, piece index j) on P = Δ¹×X or S¹×X.

    Piece j is the prism simplex whose interval coordinate jumps after vertex j.
    """
    key = ("prism", x)
    hit = P._cache.get(key)
    if hit is None:
        e = _fiber_edge(P)
        F = P.factors[0]
        hit = []
        for j, (sg, s) in enumerate(ez_simplices(P, F.nondeg(e), x)):
            if s[1] == identity(len(s[1]) - 1):
                hit.append((sg, s[0], j))
        P._cache[key] = hit
    return hit


def integrate_interval(u: Cochain, target=None) -> Cochain:
    """∫ u(x) = u(B([I]⊗x)) for u on I×X or S¹×X (or a pair over it).

    ``target`` is the base of the result; it defaults to the second factor.
    For the circle this equals integration after pulling back along the
    quotient Δ¹ → S¹.
    """
    P = ambient_of(u.base)
    if not isinstance(P, ProductSet):
        raise ValueError("integration needs a cochain on a product with an interval or circle factor")
    Xb = target if target is not None else P.factors[1]
    X = ambient_of(Xb)
    if X is not P.factors[1]:
        raise ValueError("target does not match the second factor")
    vals = {}
    for c in slots(Xb, u.n - 1, u.coeff):
        s = 0
        for sg, cell, _ in prism_terms(P, X.nondeg(c)):
            v = u.values.get(cell)
            if v:
                s += sg * v
        if s:
            vals[c] = s
    return Cochain(Xb, u.n - 1, u.coeff, vals, u.rational, check=False)


def cylinder_pair(base):
    """(I×X, I×A) for a pair (X, A); returns (pair, i0, i1, pr)."""
    from .simplicial import cylinder
    pair = as_pair(base)
    C, i0, i1, pr = cylinder(pair.ambient)
    key = ("cylpair", id(pair))
    hit = C._cache.get(key)
    if hit is None:
        if pair.is_absolute():
            hit = as_pair(C)
        else:
            sub = [c for c in C.all_cells() if C.coords[c][1][0] in pair.sub_cells]
            hit = Pair.from_subcells(C, sub, name=f"I×{pair.sub.name}")
        C._cache[key] = hit
    return hit, i0, i1, pr


def cob_witness(v: Cochain, cyl_base) -> Cochain:
    """A cocycle E on I×(X,A) with i0*E = 0 and i1*E = δv.

    E = δF where F(σ) is v(pr2 σ) when the interval coordinate of the first
    vertex of σ is 1 and 0 otherwise.
    """
    C = ambient_of(cyl_base)
    vals = {}
    for c in slots(cyl_base, v.n, v.coeff):
        a, b = C.coords[c]
        if C.factors[0].apply(a, (0,))[0] != "1":
            continue
        if b[1] != identity(len(b[1]) - 1):
            continue
        val = v.values.get(b[0])
        if val:
            vals[c] = val
    F = Cochain(cyl_base, v.n, v.coeff, vals, v.rational, check=False)
    return coboundary(F)
