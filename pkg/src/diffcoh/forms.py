"""Rational polynomial (Sullivan) forms on simplicial sets.

On the standard k-simplex a form is written in the independent coordinates
t1..tk (with t0 = 1 - t1 - ... - tk) as a dictionary

    {(I, alpha): coefficient}

meaning ``coefficient * t^alpha dt_I`` with ``I`` a sorted tuple of indices in
1..k.  A ``PLForm`` stores one such local form per nondegenerate cell and per
coefficient degree; compatible families are the model of forms on the base.
"""

from __future__ import annotations

import math
import random
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple

from .cochains import Cochain, GradedCoefficients, slots, prism_terms
from .linalg import AffineSolution, SparseMatrix, solve_affine
from .simplicial import (Pair, ProductSet, SimplicialMap, SimplicialSet, Simplex, ambient_of, as_pair,
                         coface, identity)

Mono = Tuple[Tuple[int, ...], Tuple[int, ...]]
Local = Dict[Mono, Fraction]


class BudgetExceeded(ArithmeticError):
    def __init__(self, message: str, required: Optional[int] = None):
        super().__init__(message)
        self.required = required


@dataclass(frozen=True)
class FormDegreeBudget:
    cap: int = 3
    limit: int = 12

    def __post_init__(self):
        if self.cap < 1:
            raise ValueError("cap must be at least 1")
        if self.limit < self.cap:
            raise ValueError("limit must be at least cap")

    def caps(self, start: Optional[int] = None):
        c = max(self.cap, start or 1)
        while c < self.limit:
            yield c
            c *= 2
        yield self.limit


DEFAULT_BUDGET = FormDegreeBudget()


# -- polynomials and local forms ------------------------------------------------

def poly_mul(p: Dict, q: Dict) -> Dict:
    out: Dict = {}
    for a, x in p.items():
        for b, y in q.items():
            e = tuple(i + j for i, j in zip(a, b))
            out[e] = out.get(e, 0) + x * y
    return {e: v for e, v in out.items() if v}


def lf_add(a: Local, b: Local, s=1) -> Local:
    out = dict(a)
    for m, v in b.items():
        w = out.get(m, 0) + s * v
        if w:
            out[m] = w
        else:
            out.pop(m, None)
    return out


def lf_scale(a: Local, s) -> Local:
    if not s:
        return {}
    return {m: v * s for m, v in a.items()}


def lf_degree(a: Local) -> int:
    """Form degree of a homogeneous local form (-1 for zero)."""
    return len(next(iter(a))[0]) if a else -1


def poly_degree(a: Local) -> int:
    return max((sum(al) for (_, al) in a), default=0)


def _merge_sign(I: Tuple[int, ...], J: Tuple[int, ...]) -> int:
    inv = 0
    for i in I:
        for j in J:
            if i > j:
                inv += 1
    return -1 if inv & 1 else 1


def lf_wedge(a: Local, b: Local) -> Local:
    out: Dict = {}
    for (I, al), x in a.items():
        sI = set(I)
        for (J, be), y in b.items():
            if sI.intersection(J):
                continue
            sg = _merge_sign(I, J)
            key = (tuple(sorted(I + J)), tuple(p + q for p, q in zip(al, be)))
            out[key] = out.get(key, 0) + sg * x * y
    return {m: v for m, v in out.items() if v}


def lf_d(a: Local) -> Local:
    out: Dict = {}
    for (I, al), x in a.items():
        for j0, e in enumerate(al):
            j = j0 + 1
            if not e or j in I:
                continue
            pos = sum(1 for i in I if i < j)
            sg = -1 if pos & 1 else 1
            nal = al[:j0] + (e - 1,) + al[j0 + 1:]
            key = (tuple(sorted(I + (j,))), nal)
            out[key] = out.get(key, 0) + sg * e * x
    return {m: v for m, v in out.items() if v}


def lf_integrate(a: Local, k: int) -> Fraction:
    """∫_{Δ^k} of the top-degree part, oriented by dt1∧…∧dtk."""
    top = tuple(range(1, k + 1))
    s = Fraction(0)
    for (I, al), x in a.items():
        if I == top:
            s += x * _simplex_moment(al)
    return s


@lru_cache(maxsize=None)
def _simplex_moment(al: Tuple[int, ...]) -> Fraction:
    num = 1
    for e in al:
        num *= math.factorial(e)
    return Fraction(num, math.factorial(sum(al) + len(al)))


def lf_cone(a: Local) -> Local:
    """Radial homotopy K about vertex 0: dK + Kd = id - evaluation at 0."""
    out: Dict = {}
    for (I, al), x in a.items():
        if not I:
            continue
        w = Fraction(x, sum(al) + len(I))
        for l, i in enumerate(I):
            nal = al[:i - 1] + (al[i - 1] + 1,) + al[i:]
            key = (I[:l] + I[l + 1:], nal)
            out[key] = out.get(key, 0) + (-w if l & 1 else w)
    return {m: v for m, v in out.items() if v}


def lf_at_origin(a: Local, k: int) -> Fraction:
    return a.get(((), (0,) * k), Fraction(0))


def lf_constant(k: int, c=1) -> Local:
    return {((), (0,) * k): Fraction(c)} if c else {}


# -- linear substitution -------------------------------------------------------

@lru_cache(maxsize=None)
def _coordinate_images(theta: Tuple[int, ...], k: int):
    """Images of t_j and dt_j (j=1..k) under the affine map Δ^m → Δ^k of theta."""
    m = len(theta) - 1
    zero = (0,) * m

    def s_poly(l):
        if l == 0:
            p = {zero: Fraction(1)}
            for i in range(m):
                e = tuple(int(i == r) for r in range(m))
                p[e] = Fraction(-1)
            return p
        return {tuple(int(l - 1 == r) for r in range(m)): Fraction(1)}

    def ds_form(l):
        if l == 0:
            return {((i,), zero): Fraction(-1) for i in range(1, m + 1)}
        return {((l,), zero): Fraction(1)}

    t_img, dt_img = [], []
    for j in range(1, k + 1):
        p: Dict = {}
        f: Local = {}
        for l, tl in enumerate(theta):
            if tl == j:
                for e, v in s_poly(l).items():
                    p[e] = p.get(e, 0) + v
                f = lf_add(f, ds_form(l))
        t_img.append({e: v for e, v in p.items() if v})
        dt_img.append(f)
    return t_img, dt_img


_POW_CACHE: Dict = {}


def _poly_pow(theta, k, j, e):
    key = (theta, k, j, e)
    hit = _POW_CACHE.get(key)
    if hit is None:
        if e == 0:
            hit = {(0,) * (len(theta) - 1): Fraction(1)}
        else:
            hit = poly_mul(_poly_pow(theta, k, j, e - 1), _coordinate_images(theta, k)[0][j])
        _POW_CACHE[key] = hit
    return hit


_PB_CACHE: Dict = {}


def _pullback_mono(mono: Mono, theta: Tuple[int, ...], k: int) -> Local:
    key = (mono, theta, k)
    hit = _PB_CACHE.get(key)
    if hit is not None:
        return hit
    I, al = mono
    m = len(theta) - 1
    p = {(0,) * m: Fraction(1)}
    for j, e in enumerate(al):
        if e:
            p = poly_mul(p, _poly_pow(theta, k, j, e))
    form: Local = {((), ex): v for ex, v in p.items()}
    _, dt_img = _coordinate_images(theta, k)
    for i in I:
        form = lf_wedge(form, dt_img[i - 1])
        if not form:
            break
    _PB_CACHE[key] = form
    return form


def lf_pullback(a: Local, theta: Sequence[int], k: int) -> Local:
    """Pull a local form on Δ^k back along the simplicial operator theta: [m] → [k]."""
    theta = tuple(theta)
    if theta == tuple(range(k + 1)):
        return a
    out: Dict = {}
    for mono, x in a.items():
        for m2, y in _pullback_mono(mono, theta, k).items():
            out[m2] = out.get(m2, 0) + x * y
    return {m: v for m, v in out.items() if v}


# -- Whitney forms -------------------------------------------------------------

@lru_cache(maxsize=None)
def _barycentric(k: int):
    """Local forms for t_0..t_k and dt_0..dt_k on Δ^k."""
    zero = (0,) * k
    t = [{((), zero): Fraction(1)}]
    for i in range(1, k + 1):
        t[0][((), tuple(int(r == i - 1) for r in range(k)))] = Fraction(-1)
    for i in range(1, k + 1):
        t.append({((), tuple(int(r == i - 1) for r in range(k))): Fraction(1)})
    dt = [lf_d(x) for x in t]
    return t, dt


_WHITNEY: Dict = {}


def whitney_elementary(k: int, J: Tuple[int, ...]) -> Local:
    """ω_J = p! Σ_l (-1)^l t_{j_l} dt_{J∖j_l} on Δ^k."""
    key = (k, J)
    hit = _WHITNEY.get(key)
    if hit is None:
        t, dt = _barycentric(k)
        p = len(J) - 1
        hit = {}
        for l, j in enumerate(J):
            term = t[j]
            for jj in J:
                if jj != j:
                    term = lf_wedge(term, dt[jj])
            hit = lf_add(hit, term, (-1) ** l * math.factorial(p))
        _WHITNEY[key] = hit
    return hit


# -- PL forms ------------------------------------------------------------------

class PLForm:
    """A compatible family of local forms of total degree ``n``.

    ``comps[cell][j]`` is the local form with coefficient degree j (form degree
    n - j) on the nondegenerate cell.  On a pair, cells of the subcomplex carry
    the zero form.
    """

    __slots__ = ("base", "n", "coeff", "comps")

    def __init__(self, base, n: int, coeff: GradedCoefficients, comps: Optional[Dict[str, Dict[int, Local]]] = None):
        self.base = base
        self.n = n
        self.coeff = coeff
        self.comps = {}
        for c, d in (comps or {}).items():
            dd = {j: f for j, f in d.items() if f}
            if dd:
                self.comps[c] = dd

    @property
    def ambient(self) -> SimplicialSet:
        return ambient_of(self.base)

    @classmethod
    def zero(cls, base, n, coeff):
        return cls(base, n, coeff, {})

    @classmethod
    def constant(cls, base, coeff, c=1):
        X = ambient_of(base)
        return cls(base, 0, coeff, {x: {0: lf_constant(X.dim_of[x], c)} for x in X.all_cells()})

    def local(self, cell: str, j: int) -> Local:
        return self.comps.get(cell, {}).get(j, {})

    def on_simplex(self, x: Simplex) -> Dict[int, Local]:
        cell, eta = x
        k = self.ambient.dim_of[cell]
        return {j: lf_pullback(f, eta, k) for j, f in self.comps.get(cell, {}).items()}

    def _like(self, comps, n=None):
        return PLForm(self.base, self.n if n is None else n, self.coeff, comps)

    def _compat(self, other):
        if self.n != other.n or self.coeff != other.coeff or as_pair(self.base) is not as_pair(other.base):
            raise ValueError("incompatible forms")

    def __add__(self, other: "PLForm") -> "PLForm":
        self._compat(other)
        out = {c: dict(d) for c, d in self.comps.items()}
        for c, d in other.comps.items():
            od = out.setdefault(c, {})
            for j, f in d.items():
                od[j] = lf_add(od.get(j, {}), f)
        return self._like(out)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def scale(self, s) -> "PLForm":
        return self._like({c: {j: lf_scale(f, Fraction(s)) for j, f in d.items()} for c, d in self.comps.items()})

    __rmul__ = scale

    def __eq__(self, other):
        if not isinstance(other, PLForm):
            return NotImplemented
        return (self.n == other.n and self.coeff == other.coeff
                and as_pair(self.base) is as_pair(other.base) and self.comps == other.comps)

    __hash__ = None

    def is_zero(self) -> bool:
        return not self.comps

    def poly_degree(self) -> int:
        return max((poly_degree(f) for d in self.comps.values() for f in d.values()), default=0)

    def on_base(self, base) -> "PLForm":
        """Reinterpret on another pair structure over the same ambient set."""
        pair = as_pair(base)
        for c in self.comps:
            if c in pair.sub_cells:
                raise ValueError(f"form does not vanish on subcomplex cell {c!r}")
        return PLForm(base, self.n, self.coeff, self.comps)

    def __repr__(self):
        return f"PLForm(deg={self.n}, cells={len(self.comps)}, poly≤{self.poly_degree()})"

    # -- checks -----------------------------------------------------------
    def compatibility_defect(self) -> Optional[str]:
        X = self.ambient
        pair = as_pair(self.base)
        for c in X.all_cells():
            k = X.dim_of[c]
            if c in pair.sub_cells and c in self.comps:
                return f"nonzero on subcomplex cell {c!r}"
            for j in range(self.n - k, self.n + 1):
                if not self.coeff.rank(j) and self.local(c, j):
                    return f"component of degree {j} on {c!r} has no coefficient"
            for j, f in self.comps.get(c, {}).items():
                if lf_degree(f) != self.n - j:
                    return f"component {j} on {c!r} has wrong form degree"
            if k == 0:
                continue
            for i in range(k + 1):
                face = X.faces[c][i]
                got = {j: lf_pullback(f, coface(k, i), k) for j, f in self.comps.get(c, {}).items()}
                got = {j: f for j, f in got.items() if f}
                want = {j: f for j, f in self.on_simplex(face).items() if f}
                if got != want:
                    return f"restriction of {c!r} to face {i} disagrees with {face[0]!r}"
        return None

    def is_closed(self) -> bool:
        return exterior_d(self).is_zero()

    def to_json(self) -> dict:
        out = {}
        for c in sorted(self.comps):
            out[c] = {self.coeff.label(j): format_local(f) for j, f in sorted(self.comps[c].items())}
        return {"degree": self.n, "components": out}


# -- operations ----------------------------------------------------------------

def exterior_d(a: PLForm) -> PLForm:
    out = {}
    for c, d in a.comps.items():
        dd = {j: lf_d(f) for j, f in d.items()}
        out[c] = dd
    return a._like(out, a.n + 1)


def wedge(a: PLForm, b: PLForm, budget: FormDegreeBudget = DEFAULT_BUDGET) -> PLForm:
    """Graded-commutative product; coefficient degrees multiply in Λ⊗ℚ."""
    if ambient_of(a.base) is not ambient_of(b.base) or a.coeff != b.coeff:
        raise ValueError("incompatible forms for wedge")
    need = a.poly_degree() + b.poly_degree()
    if need > budget.limit:
        raise BudgetExceeded(f"wedge needs polynomial degree {need} > limit {budget.limit}", need)
    base = _wedge_base(a.base, b.base)
    co = a.coeff
    out = {}
    for c, da in a.comps.items():
        db = b.comps.get(c)
        if not db:
            continue
        acc: Dict[int, Local] = {}
        for j1, f1 in da.items():
            for j2, f2 in db.items():
                m = co.mult(j1, j2)
                if not m:
                    continue
                w = lf_wedge(f1, f2)
                if w:
                    acc[j1 + j2] = lf_add(acc.get(j1 + j2, {}), w)
        out[c] = acc
    return PLForm(base, a.n + b.n, co, out)


def _wedge_base(a, b):
    from .cochains import _cup_base
    return _cup_base(a, b)


def deRham(a: PLForm) -> Cochain:
    """R(a)(σ) = ∫_σ a."""
    X = a.ambient
    vals = {}
    for c in slots(a.base, a.n, a.coeff):
        k = X.dim_of[c]
        f = a.local(c, a.n - k)
        if f:
            v = lf_integrate(f, k)
            if v:
                vals[c] = v
    return Cochain(a.base, a.n, a.coeff, vals, rational=True, check=False)


def pullback_form(f: SimplicialMap, a: PLForm, base=None) -> PLForm:
    base = base if base is not None else f.source
    S = f.source
    out = {}
    sub = as_pair(base).sub_cells
    for c in S.all_cells():
        y = f.of_cell(c)
        loc = a.on_simplex(y)
        loc = {j: g for j, g in loc.items() if g}
        if loc:
            if c in sub:
                raise ValueError(f"pulled-back form does not vanish on subcomplex cell {c!r}")
            out[c] = loc
    return PLForm(base, a.n, a.coeff, out)


def restrict_form_to_sub(a: PLForm, pair: Pair) -> PLForm:
    return PLForm(pair.sub, a.n, a.coeff, {c: d for c, d in a.comps.items() if c in pair.sub_cells})


def whitney(u: Cochain) -> PLForm:
    """Whitney map W: cochains → forms, with R∘W = id and dW = Wδ."""
    X = ambient_of(u.base)
    co = u.coeff
    out = {}
    for c in X.all_cells():
        k = X.dim_of[c]
        acc: Dict[int, Local] = {}
        for p in range(0, k + 1):
            j = u.n - p
            if not co.rank(j):
                continue
            for J in _subsets(k, p):
                face = X.restrict(c, J)
                if face[1] != identity(p):
                    continue
                v = u.values.get(face[0])
                if v:
                    acc[j] = lf_add(acc.get(j, {}), whitney_elementary(k, J), Fraction(v))
        if acc:
            out[c] = acc
    return PLForm(u.base, u.n, co, out)


@lru_cache(maxsize=None)
def _subsets(k: int, p: int):
    import itertools
    return tuple(itertools.combinations(range(k + 1), p + 1))


def random_form(base, n: int, coeff: GradedCoefficients, rng: random.Random, factors: int = 1,
                terms: int = 2, closed: bool = False) -> PLForm:
    """A random compatible form: sums of W(f_1)…W(f_r)·W(u) with 0-cochains f_i.

    With ``closed`` the form is W(z) + d(random form of degree n-1) for a random
    cocycle-free construction: d of a random form plus the Whitney form of δ of
    a random cochain.
    """
    if closed:
        total = PLForm.zero(base, n, coeff)
        if n >= 1:
            total = total + exterior_d(random_form(base, n - 1, coeff, rng, factors, terms))
        z = _random_cocycle(base, n, coeff, rng)
        if z is not None:
            total = total + whitney(z)
        return total
    total = PLForm.zero(base, n, coeff)
    X = ambient_of(base)
    absolute = X
    for _ in range(terms):
        w = whitney(Cochain.random(base, n, coeff, rng, rational=True, bound=3))
        for _ in range(factors):
            f = whitney(Cochain.random(absolute, 0, _scalar_coefficients(coeff), rng, rational=True, bound=2))
            w = _scalar_times(f, w)
        total = total + w
    return total


def _scalar_coefficients(coeff):
    from .cochains import integers
    return coeff if coeff.rank(0) else integers()


def _scalar_times(f: PLForm, w: PLForm) -> PLForm:
    """Multiply by a coefficient-degree-0 function living on the absolute ambient set."""
    out = {}
    for c, d in w.comps.items():
        g = f.local(c, 0)
        if not g:
            continue
        out[c] = {j: lf_wedge(g, loc) for j, loc in d.items()}
    return PLForm(w.base, w.n, w.coeff, out)


def _random_cocycle(base, n, coeff, rng) -> Optional[Cochain]:
    """A random rational cocycle, assembled from a kernel basis of δ."""
    from .linalg import rank_q
    from .cochains import coboundary
    size = len(slots(base, n, coeff))
    if not size:
        return None
    basis = cocycle_basis(base, n, coeff)
    if not basis:
        return None
    vec = [Fraction(0)] * size
    for b in basis:
        c = rng.randint(-2, 2)
        if c:
            vec = [x + c * y for x, y in zip(vec, b)]
    return Cochain.from_vector(base, n, coeff, vec, rational=True)


def coboundary_matrix_of(base, n, coeff) -> SparseMatrix:
    """δ on total-degree-n cochains as a matrix in slot coordinates."""
    X = ambient_of(base)
    key = ("deltamat", id(as_pair(base)), n, coeff.key)
    hit = X._cache.get(key)
    if hit is None:
        from .cochains import _faces_nd
        src = slots(base, n, coeff)
        dst = slots(base, n + 1, coeff)
        col = {c: i for i, c in enumerate(src)}
        fnd = _faces_nd(X)
        ent = {}
        for r, c in enumerate(dst):
            for sg, z in fnd[c]:
                if z in col:
                    ent[(r, col[z])] = ent.get((r, col[z]), 0) + sg
        hit = SparseMatrix(len(dst), len(src), ent)
        X._cache[key] = hit
    return hit


def cocycle_basis(base, n, coeff) -> List[List[Fraction]]:
    X = ambient_of(base)
    key = ("cocycles", id(as_pair(base)), n, coeff.key)
    hit = X._cache.get(key)
    if hit is None:
        D = coboundary_matrix_of(base, n, coeff)
        sol = solve_affine(D, [0] * D.rows, "Q")
        hit = sol.kernel
        X._cache[key] = hit
    return hit


# -- fiber integration ---------------------------------------------------------

@lru_cache(maxsize=None)
def _prism_substitution(k: int, j: int):
    """Coordinates r_1..r_{k+1} of the prism piece τ_j in terms of (x_1..x_k, s).

    Variables are ordered x_1..x_k then s (index k+1).  Returns the images of
    r_l as linear polynomials and the bounds L_j, U_j of s as polynomials in x.
    """
    nv = k + 1

    def var(i):  # i in 1..k for x_i, k+1 for s
        return {tuple(int(r == i - 1) for r in range(nv)): Fraction(1)}

    one = {(0,) * nv: Fraction(1)}

    def x(m):  # barycentric x_m, m in 0..k
        if m == 0:
            p = dict(one)
            for i in range(1, k + 1):
                p[tuple(int(r == i - 1) for r in range(nv))] = Fraction(-1)
            return p
        return var(m)

    def addp(*ps, signs=None):
        out = {}
        for idx, p in enumerate(ps):
            sg = signs[idx] if signs else 1
            for e, v in p.items():
                out[e] = out.get(e, 0) + sg * v
        return {e: v for e, v in out.items() if v}

    s = var(k + 1)
    L = addp(*[x(m) for m in range(j + 1, k + 1)]) if j < k else {}
    U = addp(*[x(m) for m in range(j, k + 1)])
    r = []
    for l in range(0, k + 2):
        if l < j:
            r.append(x(l))
        elif l == j:
            r.append(addp(U, s, signs=[1, -1]))
        elif l == j + 1:
            r.append(addp(s, L, signs=[1, -1]))
        else:
            r.append(x(l - 1))
    return r[1:], L, U


_FIBER_CACHE: Dict = {}


def _substitute_mono(mono: Mono, k: int, j: int) -> Local:
    """Pull a monomial on the (k+1)-simplex τ_j back to (x, s)-coordinates."""
    key = (mono, k, j)
    hit = _FIBER_CACHE.get(key)
    if hit is not None:
        return hit
    r, _, _ = _prism_substitution(k, j)
    nv = k + 1
    I, al = mono
    p = {(0,) * nv: Fraction(1)}
    for idx, e in enumerate(al):
        for _ in range(e):
            p = poly_mul(p, r[idx])
    form: Local = {((), ex): v for ex, v in p.items()}
    for i in I:
        dr = lf_d({((), ex): v for ex, v in r[i - 1].items()})
        form = lf_wedge(form, dr)
        if not form:
            break
    _FIBER_CACHE[key] = form
    return form


def _integrate_s(f: Dict, k: int, L: Dict, U: Dict) -> Dict:
    """∫_L^U f ds for a polynomial f in (x_1..x_k, s); result in x_1..x_k."""
    out: Dict = {}
    powU = [{(0,) * (k + 1): Fraction(1)}]
    powL = [{(0,) * (k + 1): Fraction(1)}]
    top = max((e[k] for e in f), default=0) + 1
    for _ in range(top):
        powU.append(poly_mul(powU[-1], U))
        powL.append(poly_mul(powL[-1], L) if L else {})
    for e, v in f.items():
        a = e[k]
        base = {e[:k] + (0,): v / (a + 1)}
        diff = dict(powU[a + 1])
        for ee, vv in powL[a + 1].items():
            diff[ee] = diff.get(ee, 0) - vv
        for ee, vv in poly_mul(base, diff).items():
            out[ee[:k]] = out.get(ee[:k], 0) + vv
    return {e: v for e, v in out.items() if v}


def fiber_integrate(a: PLForm, target=None) -> PLForm:
    """∫ over the interval (or circle) factor, with ∫(ds∧β) = ∫β ds."""
    P = a.ambient
    if not isinstance(P, ProductSet):
        raise ValueError("fiber integration needs a form on I×X or S¹×X")
    Xb = target if target is not None else P.factors[1]
    X = ambient_of(Xb)
    sub = as_pair(Xb).sub_cells
    out = {}
    for c in X.all_cells():
        if c in sub:
            continue
        k = X.dim_of[c]
        acc: Dict[int, Local] = {}
        for _, cell, j_piece in prism_terms(P, X.nondeg(c)):
            for j, loc in a.comps.get(cell, {}).items():
                res = _fiber_piece(loc, k, j_piece)
                if res:
                    acc[j] = lf_add(acc.get(j, {}), res)
        acc = {j: f for j, f in acc.items() if f}
        if acc:
            out[c] = acc
    return PLForm(Xb, a.n - 1, a.coeff, out)


def _fiber_piece(loc: Local, k: int, jp: int) -> Local:
    _, L, U = _prism_substitution(k, jp)
    sub: Local = {}
    for mono, x in loc.items():
        for m2, y in _substitute_mono(mono, k, jp).items():
            sub[m2] = sub.get(m2, 0) + x * y
    s_idx = k + 1
    grouped: Dict[Tuple[int, ...], Dict] = {}
    for (I, al), v in sub.items():
        if not v or not I or I[-1] != s_idx:
            continue
        sign = -1 if (len(I) - 1) & 1 else 1
        grouped.setdefault(I[:-1], {})[al] = grouped.setdefault(I[:-1], {}).get(al, 0) + sign * v
    out: Local = {}
    for I, poly in grouped.items():
        for e, v in _integrate_s(poly, k, L, U).items():
            key = (I, e)
            out[key] = out.get(key, 0) + v
    return {m: v for m, v in out.items() if v}


# -- acyclic-models homotopy between wedge and cup ------------------------------

_B_CACHE: Dict = {}
_PSI_CACHE: Dict = {}


def _front_back_integral(a: Local, k: int, p: int, front: bool) -> Fraction:
    theta = tuple(range(p + 1)) if front else tuple(range(k - p, k + 1))
    return lf_integrate(lf_pullback(a, theta, k), p)


def _phi(a: Local, b: Local, k: int) -> Fraction:
    """(R(a∧b) - R(a)∪R(b)) on the standard k-simplex, for homogeneous a, b."""
    p, q = lf_degree(a), lf_degree(b)
    if p < 0 or q < 0 or p + q != k:
        return Fraction(0)
    val = lf_integrate(lf_wedge(a, b), k)
    fa = _front_back_integral(a, k, p, True)
    if fa:
        val -= fa * _front_back_integral(b, k, q, False)
    return val


def _psi(ma: Mono, mb: Mono, k: int) -> Fraction:
    key = (ma, mb, k)
    hit = _PSI_CACHE.get(key)
    if hit is not None:
        return hit
    a, b = {ma: Fraction(1)}, {mb: Fraction(1)}
    val = _phi(a, b, k)
    if k >= 1:
        for i in range(k + 1):
            th = coface(k, i)
            fa = lf_pullback(a, th, k)
            if not fa:
                continue
            fb = lf_pullback(b, th, k)
            if not fb:
                continue
            s = _b_local(fa, fb, k - 1)
            if s:
                val -= s if i % 2 == 0 else -s
    _PSI_CACHE[key] = val
    return val


def _b_mono(ma: Mono, mb: Mono, k: int) -> Fraction:
    """B on the standard k-simplex for monomials whose form degrees sum to k+1."""
    if k <= 0 or len(ma[0]) + len(mb[0]) != k + 1:
        return Fraction(0)
    key = (ma, mb, k)
    hit = _B_CACHE.get(key)
    if hit is not None:
        return hit
    val = Fraction(0)
    for mc, x in lf_cone({ma: Fraction(1)}).items():
        val += x * _psi(mc, mb, k)
    if not ma[0] and not any(ma[1]):
        for mc, x in lf_cone({mb: Fraction(1)}).items():
            val += x * _psi(ma, mc, k)
    _B_CACHE[key] = val
    return val


def _b_local(a: Local, b: Local, k: int) -> Fraction:
    s = Fraction(0)
    for ma, x in a.items():
        for mb, y in b.items():
            if len(ma[0]) + len(mb[0]) == k + 1:
                v = _b_mono(ma, mb, k)
                if v:
                    s += x * y * v
    return s


def b_homotopy(a: PLForm, b: PLForm, budget: FormDegreeBudget = DEFAULT_BUDGET) -> Cochain:
    """Natural B with δB(a⊗b) + B(d(a⊗b)) = R(a∧b) - R(a)∪R(b).

    Built by acyclic models on standard simplices with the contraction
    K⊗1 + ε⊗K of the tensor square of the polynomial de Rham complex.
    """
    if ambient_of(a.base) is not ambient_of(b.base) or a.coeff != b.coeff:
        raise ValueError("incompatible forms for b_homotopy")
    need = a.poly_degree() + b.poly_degree()
    if need > budget.limit:
        raise BudgetExceeded(f"b_homotopy needs polynomial degree {need} > limit {budget.limit}", need)
    base = _wedge_base(a.base, b.base)
    X = ambient_of(base)
    co = a.coeff
    n = a.n + b.n - 1
    vals = {}
    for c in slots(base, n, co):
        k = X.dim_of[c]
        da, db = a.comps.get(c), b.comps.get(c)
        if not da or not db:
            continue
        s = Fraction(0)
        for j1, f1 in da.items():
            for j2, f2 in db.items():
                if (a.n - j1) + (b.n - j2) != k + 1:
                    continue
                m = co.mult(j1, j2)
                if m:
                    s += m * _b_local(f1, f2, k)
        if s:
            vals[c] = s
    return Cochain(base, n, co, vals, rational=True, check=False)


def tensor_d_homotopy(a: PLForm, b: PLForm, budget: FormDegreeBudget = DEFAULT_BUDGET) -> Cochain:
    """B(d(a⊗b)) = B(da⊗b) + (-1)^|a| B(a⊗db)."""
    t1 = b_homotopy(exterior_d(a), b, budget)
    t2 = b_homotopy(a, exterior_d(b), budget)
    return t1 + t2.scale((-1) ** a.n)


# -- local solves: extension and primitives -------------------------------------

def _monomials(k: int, form_deg: int, cap: int):
    import itertools
    out = []
    for I in itertools.combinations(range(1, k + 1), form_deg):
        for tot in range(cap + 1):
            for al in _compositions(tot, k):
                out.append((I, al))
    return out


@lru_cache(maxsize=None)
def _compositions(total: int, parts: int):
    if parts == 0:
        return ((),) if total == 0 else ()
    out = []
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            out.append((first,) + rest)
    return tuple(out)


class _LocalSystem:
    """Unknown homogeneous local form on Δ^k with linear constraints."""

    def __init__(self, k: int, form_deg: int, cap: int):
        self.k, self.p, self.cap = k, form_deg, cap
        self.unknowns = _monomials(k, form_deg, cap)
        self.rows: List[Dict[int, Fraction]] = []
        self.rhs: List[Fraction] = []

    def _image(self, op, mono):
        return op({mono: Fraction(1)})

    def constrain(self, op, target: Local):
        """Require op(unknown) == target, where op is linear on local forms."""
        acc: Dict[Mono, Dict[int, Fraction]] = {}
        for idx, mono in enumerate(self.unknowns):
            for m2, v in op({mono: Fraction(1)}).items():
                acc.setdefault(m2, {})[idx] = v
        keys = set(acc) | set(target)
        for m2 in sorted(keys):
            row = acc.get(m2, {})
            rhs = target.get(m2, Fraction(0))
            if not row:
                if rhs:
                    self.rows.append({})
                    self.rhs.append(rhs)
                continue
            self.rows.append(row)
            self.rhs.append(rhs)

    def constrain_scalar(self, fn, value: Fraction):
        row = {}
        for idx, mono in enumerate(self.unknowns):
            v = fn({mono: Fraction(1)})
            if v:
                row[idx] = v
        self.rows.append(row)
        self.rhs.append(Fraction(value))

    def solve(self) -> Optional[Local]:
        if not self.rows:
            return {}
        A = SparseMatrix(len(self.rows), len(self.unknowns),
                         {(r, c): v for r, row in enumerate(self.rows) for c, v in row.items()})
        sol = solve_affine(A, self.rhs, "Q")
        if not isinstance(sol, AffineSolution):
            return None
        return {self.unknowns[i]: v for i, v in enumerate(sol.x) if v}


def _solve_cell(k, p, data_cap, constraints, budget: FormDegreeBudget) -> Local:
    last = None
    for cap in budget.caps(max(data_cap, 1)):
        sysm = _LocalSystem(k, p, cap)
        for kind, op, target in constraints:
            if kind == "form":
                sysm.constrain(op, target)
            else:
                sysm.constrain_scalar(op, target)
        sol = sysm.solve()
        if sol is not None:
            return sol
        last = cap
    raise BudgetExceeded(f"local solve on a {k}-cell infeasible up to polynomial degree {last}", None)


def extend_form(theta: PLForm, pair: Pair, budget: FormDegreeBudget = DEFAULT_BUDGET) -> PLForm:
    """A form on the ambient set of ``pair`` restricting to ``theta`` on the subcomplex."""
    X = pair.ambient
    comps: Dict[str, Dict[int, Local]] = {c: dict(d) for c, d in theta.comps.items() if c in pair.sub_cells}
    cap0 = theta.poly_degree()
    for k in range(1, X.dimension + 1):
        for c in X.cells_of(k):
            if c in pair.sub_cells:
                continue
            acc = {}
            for j in range(theta.n - k, theta.n + 1):
                if not theta.coeff.rank(j):
                    continue
                p = theta.n - j
                cons = []
                for i in range(k + 1):
                    z = X.faces[c][i]
                    zk = X.dim_of[z[0]]
                    tgt = lf_pullback(comps.get(z[0], {}).get(j, {}), z[1], zk)
                    cons.append(("form", (lambda f, i=i: lf_pullback(f, coface(k, i), k)), tgt))
                if all(not t for _, _, t in cons):
                    continue
                sol = _solve_cell(k, p, cap0, cons, budget)
                if sol:
                    acc[j] = sol
            if acc:
                comps[c] = acc
    return PLForm(X, theta.n, theta.coeff, comps)


def primitive(omega: PLForm, budget: FormDegreeBudget = DEFAULT_BUDGET, cochain: Optional[Cochain] = None) -> PLForm:
    """κ with dκ = ω on the same base (relative if ω is), or ValueError if ω is not exact.

    ``cochain`` optionally prescribes R(κ); it must satisfy δ(cochain) = R(ω).
    """
    from .cochains import coboundary
    base = omega.base
    X = ambient_of(base)
    pair = as_pair(base)
    co = omega.coeff
    n = omega.n
    if n == 0 and co.gen_degree is None:
        if omega.is_zero():
            return PLForm.zero(base, -1, co)
        raise ValueError("a nonzero 0-form is not exact")
    if not exterior_d(omega).is_zero():
        raise ValueError("form is not closed")
    R = deRham(omega)
    if cochain is None:
        D = coboundary_matrix_of(base, n - 1, co)
        sol = solve_affine(D, R.to_vector(), "Q")
        if not isinstance(sol, AffineSolution):
            raise ValueError("form is not exact: its de Rham cochain is not a coboundary")
        cochain = Cochain.from_vector(base, n - 1, co, sol.x, rational=True)
    elif coboundary(cochain) != R:
        raise ValueError("prescribed cochain does not bound R(ω)")
    comps: Dict[str, Dict[int, Local]] = {}
    cap0 = omega.poly_degree() + 1
    for k in range(0, X.dimension + 1):
        for c in X.cells_of(k):
            if c in pair.sub_cells:
                continue
            acc = {}
            for j in range(n - 1 - k, n):
                if not co.rank(j):
                    continue
                p = n - 1 - j
                if p < 0:
                    continue
                target_d = omega.local(c, j)
                cons = [("form", lf_d, target_d)]
                for i in range(k + 1 if k else 0):
                    z = X.faces[c][i]
                    zk = X.dim_of[z[0]]
                    tgt = lf_pullback(comps.get(z[0], {}).get(j, {}), z[1], zk)
                    cons.append(("form", (lambda f, i=i: lf_pullback(f, coface(k, i), k)), tgt))
                if p == k:
                    cons.append(("scalar", (lambda f, k=k: lf_integrate(f, k)), cochain.values.get(c, Fraction(0))))
                if all(not t for kind, _, t in cons):
                    continue
                sol = _solve_cell(k, p, cap0, cons, budget)
                if sol:
                    acc[j] = sol
            if acc:
                comps[c] = acc
    return PLForm(base, n - 1, co, comps)


# -- literals ------------------------------------------------------------------

_TERM = re.compile(r"\s*([+-])?\s*([^+-]+)")


def parse_local(text: str, k: int) -> Local:
    """Parse e.g. ``"1/2*t1^2*dt1 - 3*t2*dt1*dt2"`` on Δ^k."""
    text = text.replace(" ", "")
    if not text or text == "0":
        return {}
    out: Local = {}
    pos = 0
    if text[0] not in "+-":
        text = "+" + text
    for m in re.finditer(r"([+-])([^+-]+)", text):
        sign = -1 if m.group(1) == "-" else 1
        coef = Fraction(sign)
        al = [0] * k
        I: List[int] = []
        for fac in m.group(2).split("*"):
            if fac.startswith("dt"):
                i = int(fac[2:])
                if not 1 <= i <= k:
                    raise ValueError(f"dt{i} out of range on a {k}-simplex")
                if i in I:
                    coef = Fraction(0)
                pos_ = sum(1 for x in I if x > i)
                if pos_ & 1:
                    coef = -coef
                I.append(i)
            elif fac.startswith("t"):
                if "^" in fac:
                    v, e = fac[1:].split("^")
                    i, e = int(v), int(e)
                else:
                    i, e = int(fac[1:]), 1
                if not 1 <= i <= k:
                    raise ValueError(f"t{i} out of range on a {k}-simplex")
                al[i - 1] += e
            else:
                coef *= Fraction(fac)
        if coef:
            key = (tuple(sorted(I)), tuple(al))
            out[key] = out.get(key, 0) + coef
    del pos
    return {mm: v for mm, v in out.items() if v}


def format_local(a: Local) -> str:
    if not a:
        return "0"
    parts = []
    for (I, al), v in sorted(a.items()):
        facs = [f"t{i + 1}" + (f"^{e}" if e > 1 else "") for i, e in enumerate(al) if e]
        facs += [f"dt{i}" for i in I]
        body = "*".join([str(abs(v))] + facs) if (abs(v) != 1 or not facs) else "*".join(facs)
        parts.append(("-" if v < 0 else "+") + body)
    s = "".join(parts)
    return s[1:] if s.startswith("+") else s


def form_from_literal(base, n: int, coeff: GradedCoefficients, spec: Dict[str, Dict[str, str]]) -> PLForm:
    X = ambient_of(base)
    comps = {}
    for c, d in spec.items():
        k = X.dim_of[c]
        comps[c] = {coeff.degree_of_label(lab): parse_local(txt, k) for lab, txt in d.items()}
    f = PLForm(base, n, coeff, comps)
    err = f.compatibility_defect()
    if err:
        raise ValueError(f"form literal is not compatible: {err}")
    return f
