"""Differential cocycle triples in the Eilenberg–MacLane model.

A triple (c, ω, h) of total degree n on a simplicial set or pair consists of an
integral cocycle c, a closed PL form ω and a rational cochain h of degree n-1
with δh = R(ω) - ρ(c).  Two triples with the same form are equivalent when

    c1 - c0 = δb,    h1 - h0 = -ρ(b) + δk

for an integral b and a rational k, both vanishing on the subcomplex.  This is
the interval integral of the cylinder relation and is decided exactly by a
mixed integral/rational linear solve.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import cochains as cc
from .cochains import (Cochain, GradedCoefficients, coboundary, cup, cup1, integrate_interval, pullback, slots)
from .forms import (DEFAULT_BUDGET, FormDegreeBudget, PLForm, b_homotopy, coboundary_matrix_of, deRham,
                    exterior_d, extend_form, fiber_integrate, primitive, pullback_form, random_form,
                    restrict_form_to_sub, wedge, whitney)
from .linalg import (AffineSolution, Infeasibility, SparseMatrix, left_kernel, smith, solve_affine)
from .simplicial import (Pair, ProductSet, SimplicialMap, SimplicialSet, ambient_of, as_pair, circle_pair,
                         constant_map, identity_map, pair_map, product, projections)

EQUIVALENCE_SIGN = -1  # h1 - h0 = EQUIVALENCE_SIGN·ρ(b) + δk


class TripleError(ValueError):
    """A triple violates one of its defining equations."""

    def __init__(self, kind: str, cell: Optional[str], message: str):
        super().__init__(f"{kind}: {message}" + (f" (cell {cell!r})" if cell else ""))
        self.kind = kind
        self.cell = cell


# -- natural cochain expressions -------------------------------------------------

class Expr:
    """A natural cochain operation in the argument cocycles."""

    def __call__(self, args: Sequence[Cochain]) -> Cochain:
        raise NotImplementedError

    def __add__(self, other):
        return Sum(self, other)


@dataclass(frozen=True)
class Arg(Expr):
    index: int

    def __call__(self, args):
        return args[self.index]


@dataclass(frozen=True)
class Rho(Expr):
    inner: Expr

    def __call__(self, args):
        return self.inner(args).rho()


@dataclass(frozen=True)
class Cup(Expr):
    left: Expr
    right: Expr

    def __call__(self, args):
        return cup(self.left(args), self.right(args))


@dataclass(frozen=True)
class Cup1(Expr):
    left: Expr
    right: Expr

    def __call__(self, args):
        return cup1(self.left(args), self.right(args))


@dataclass(frozen=True)
class Scale(Expr):
    factor: Fraction
    inner: Expr

    def __call__(self, args):
        return self.inner(args).scale(Fraction(self.factor))


@dataclass(frozen=True)
class CoeffMul(Expr):
    """Multiply by u^power; shifts the total degree by power·|u|."""

    power: int
    inner: Expr

    def __call__(self, args):
        u = self.inner(args)
        g = u.coeff.gen_degree
        if g is None:
            raise ValueError("coefficient multiplication needs a graded coefficient ring")
        shift = self.power * g
        n = u.n + shift
        X = u.ambient
        vals = {}
        for c, v in u.values.items():
            j = u.n - X.dim_of[c]
            if u.coeff.mult(j, shift):
                vals[c] = v
        return Cochain(u.base, n, u.coeff, vals, u.rational)


@dataclass(frozen=True)
class Delta(Expr):
    inner: Expr

    def __call__(self, args):
        return coboundary(self.inner(args))


@dataclass(frozen=True)
class Sum(Expr):
    left: Expr
    right: Expr

    def __call__(self, args):
        return self.left(args) + self.right(args)


@dataclass(frozen=True)
class IntervalIntegral(Expr):
    """∫_I of a natural cochain on the cylinder, pulled back along pr."""

    inner: Expr

    def __call__(self, args):
        from .simplicial import cylinder
        base = args[0].base
        C, _, _, pr = cylinder(ambient_of(base))
        lifted = [pullback(pr, a) for a in args]
        return integrate_interval(self.inner(lifted))


@dataclass
class CorrectionData:
    """Correction cochain expressions for addition, negation and products (defaults 0)."""

    A: Optional[Expr] = None
    N: Optional[Expr] = None
    M: Optional[Expr] = None
    U: None = None

    def check(self, c0: Cochain, c1: Cochain) -> Optional[str]:
        """Defining coboundary equations: δA(c0,c1) = 0, δN(c0) = 0, δM(c0,c1) = 0."""
        for name, e, args in (("A", self.A, (c0, c1)), ("N", self.N, (c0,)), ("M", self.M, (c0, c1))):
            if e is None:
                continue
            v = e(args)
            if not coboundary(v).is_zero():
                return f"{name} does not satisfy its coboundary equation"
        return None


def natural_perturbation(n: int, coeff: GradedCoefficients, arity: int = 2) -> Optional[Expr]:
    """δ(E) of degree n-1 with E natural in degree-n cocycles, built from ∪₁ terms.

    δ commutes with multiplication by u and kills cup products of cocycles, so
    only ∪₁ can contribute.  E = u^k·(x ∪₁ y) for odd n and
    u^n·(x ∪₁ (x ∪₁ y)) for even n, with y = x for arity 1.  Needs a degree -2
    generator; over ℤ alone there is no such E.
    """
    if coeff.gen_degree != -2 or coeff.rank(-2) == 0:
        return None
    x = Arg(0)
    y = Arg(1) if arity == 2 else Arg(0)
    if n % 2:
        k = (n + 1) // 2
        inner: Expr = Cup1(x, y)
    else:
        k = n
        inner = Cup1(x, Cup1(x, y))
    if coeff.rank(-2 * k) == 0:
        return None
    return Delta(Rho(CoeffMul(k, inner)))


# -- triples ---------------------------------------------------------------------

class DifferentialTriple:
    __slots__ = ("base", "n", "coeff", "c", "omega", "h", "theta")

    def __init__(self, c: Cochain, omega: PLForm, h: Cochain, theta: Optional[Expr] = None,
                 check: bool = True):
        self.base = c.base
        self.n = c.n
        self.coeff = c.coeff
        self.c, self.omega, self.h = c, omega, h
        self.theta = theta
        if check:
            self.validate()

    @property
    def ambient(self) -> SimplicialSet:
        return ambient_of(self.base)

    def iota(self, c: Optional[Cochain] = None) -> Cochain:
        """The fundamental cocycle evaluated on c: ρ(c) - δΘ(c)."""
        c = self.c if c is None else c
        out = c.rho()
        if self.theta is not None:
            out = out - coboundary(self.theta([c]))
        return out

    def validate(self):
        c, w, h = self.c, self.omega, self.h
        if c.rational:
            raise TripleError("not-integral", None, "c must be integral")
        if as_pair(w.base) is not as_pair(c.base) or as_pair(h.base) is not as_pair(c.base):
            raise TripleError("base-mismatch", None, "c, ω and h must live on the same base")
        if w.n != self.n or h.n != self.n - 1:
            raise TripleError("degree-mismatch", None, "degrees of c, ω, h must be n, n, n-1")
        dc = coboundary(c)
        if dc.values:
            cell = sorted(dc.values)[0]
            raise TripleError("not-a-cocycle", cell, "δc ≠ 0")
        dw = exterior_d(w)
        if not dw.is_zero():
            cell = sorted(dw.comps)[0]
            raise TripleError("not-closed", cell, "dω ≠ 0")
        defect = coboundary(h) - (deRham(w) - self.iota())
        if defect.values:
            cell = sorted(defect.values)[0]
            raise TripleError("structure-equation-violated", cell, "δh ≠ R(ω) - ι(c)")

    def __eq__(self, other):
        """Equality of representatives (not of classes; see ``equivalent``)."""
        if not isinstance(other, DifferentialTriple):
            return NotImplemented
        a, b = self.normalized(), other.normalized()
        return a.c == b.c and a.omega == b.omega and a.h == b.h

    __hash__ = None

    def __repr__(self):
        return f"Triple(deg={self.n}, c={self.c.values}, h={self.h.values}, ω={self.omega!r})"

    def to_json(self) -> dict:
        return {"degree": self.n, "c": self.c.to_json(), "omega": self.omega.to_json(), "h": self.h.to_json()}

    def normalized(self) -> "DifferentialTriple":
        """The same class for the default fundamental cocycle ρ."""
        if self.theta is None:
            return self
        return DifferentialTriple(self.c, self.omega, self.h - self.theta([self.c]).rho())


def make_triple(c: Cochain, omega: PLForm, h: Cochain) -> DifferentialTriple:
    return DifferentialTriple(c, omega, h)


def zero_triple(base, n: int, coeff: GradedCoefficients) -> DifferentialTriple:
    return DifferentialTriple(Cochain.zero(base, n, coeff), PLForm.zero(base, n, coeff),
                              Cochain.zero(base, n - 1, coeff, rational=True))


def unit_triple(base, coeff: GradedCoefficients) -> DifferentialTriple:
    return DifferentialTriple(cc.unit_cochain(base, coeff), PLForm.constant(base, coeff, 1),
                              Cochain.zero(base, -1, coeff, rational=True))


# -- equivalence -----------------------------------------------------------------

@dataclass
class EquivalenceWitness:
    b: Cochain
    k: Cochain
    sign: int = EQUIVALENCE_SIGN

    def verify(self, t0: DifferentialTriple, t1: DifferentialTriple) -> bool:
        a0, a1 = t0.normalized(), t1.normalized()
        if a0.omega != a1.omega:
            return False
        if a1.c - a0.c != coboundary(self.b):
            return False
        return a1.h - a0.h == self.b.rho().scale(self.sign) + coboundary(self.k)

    def to_json(self) -> dict:
        return {"b": self.b.to_json(), "k": self.k.to_json(), "sign": self.sign}


@dataclass
class DistinctCertificate:
    """Why two triples are not equivalent.

    reason is one of "forms differ", "cocycles not cohomologous" or
    "connecting cochain obstruction".  ``functional`` is a rational functional
    on cochain slots proving the integral obstruction.
    """

    reason: str
    detail: str = ""
    functional: Optional[List[Fraction]] = None

    def to_json(self) -> dict:
        out = {"reason": self.reason, "detail": self.detail}
        if self.functional is not None:
            out["functional"] = [str(x) for x in self.functional]
        return out


class _Solver:
    """Cached linear data for deciding equivalence in degree n on one base."""

    def __init__(self, base, n: int, coeff: GradedCoefficients):
        self.base, self.n, self.coeff = base, n, coeff
        self.D1 = coboundary_matrix_of(base, n - 1, coeff)   # C^{n-1} → C^n
        self.D2 = coboundary_matrix_of(base, n - 2, coeff)   # C^{n-2} → C^{n-1}
        self.sf1 = smith(self.D1)
        r = self.sf1.rank
        ncol = self.D1.cols
        self.K = [[self.sf1.V[j][i] for j in range(ncol)] for i in range(r, ncol)]
        self.L = left_kernel(self.D2)
        LK = [[sum(l * kk for l, kk in zip(row, kv)) for kv in self.K] for row in self.L]
        self.LK = SparseMatrix.from_dense(LK, len(self.K)) if LK else SparseMatrix(0, len(self.K))
        self.sfLK = smith(self.LK)

    def decide(self, dc: Sequence[int], dh: Sequence[Fraction]):
        sol = solve_affine(self.D1, dc, "Z", self.sf1)
        if isinstance(sol, Infeasibility):
            return DistinctCertificate("cocycles not cohomologous",
                                       "c1 - c0 is not an integral coboundary", sol.y)
        b0 = sol.x
        w = [Fraction(x) + y for x, y in zip(dh, b0)]  # Δh + ρ(b0), since EQUIVALENCE_SIGN = -1
        Lw = [-sum((Fraction(l) * x for l, x in zip(row, w) if l and x), Fraction(0)) for row in self.L]
        sol2 = solve_affine(self.LK, Lw, "Z", self.sfLK)
        if isinstance(sol2, Infeasibility):
            phi = [Fraction(0)] * len(w)
            for coef, row in zip(sol2.y, self.L):
                if coef:
                    for i, v in enumerate(row):
                        if v:
                            phi[i] += coef * v
            return DistinctCertificate("connecting cochain obstruction",
                                       "h1 - h0 + ρ(b) is not a coboundary for any integral b", phi)
        m = sol2.x
        b = list(b0)
        for coef, kv in zip(m, self.K):
            if coef:
                b = [x + coef * y for x, y in zip(b, kv)]
        rhs = [x + y for x, y in zip(dh, b)]
        ksol = solve_affine(self.D2, rhs, "Q")
        if isinstance(ksol, Infeasibility):
            raise ArithmeticError("rational stage failed after integral stage succeeded")
        return b, ksol.x


def _solver(base, n, coeff) -> _Solver:
    X = ambient_of(base)
    key = ("solver", id(as_pair(base)), n, coeff.key)
    hit = X._cache.get(key)
    if hit is None:
        hit = _Solver(base, n, coeff)
        X._cache[key] = hit
    return hit


def equivalent(t0: DifferentialTriple, t1: DifferentialTriple):
    """An EquivalenceWitness if t0 ~ t1, otherwise a DistinctCertificate."""
    if as_pair(t0.base) is not as_pair(t1.base) or t0.n != t1.n or t0.coeff != t1.coeff:
        raise ValueError("base/degree mismatch")
    a0, a1 = t0.normalized(), t1.normalized()
    if a0.omega != a1.omega:
        diff = a1.omega - a0.omega
        return DistinctCertificate("forms differ", f"ω1 - ω0 ≠ 0 on cell {sorted(diff.comps)[0]!r}")
    s = _solver(t0.base, t0.n, t0.coeff)
    out = s.decide((a1.c - a0.c).to_vector(), (a1.h - a0.h).to_vector())
    if isinstance(out, DistinctCertificate):
        return out
    b, k = out
    wit = EquivalenceWitness(Cochain.from_vector(t0.base, t0.n - 1, t0.coeff, b),
                             Cochain.from_vector(t0.base, t0.n - 2, t0.coeff, k, rational=True))
    if not wit.verify(t0, t1):
        raise ArithmeticError("solver produced an invalid witness")
    return wit


def is_equivalent(t0, t1) -> bool:
    return isinstance(equivalent(t0, t1), EquivalenceWitness)


def compose_witnesses(w01: EquivalenceWitness, w12: EquivalenceWitness) -> EquivalenceWitness:
    return EquivalenceWitness(w01.b + w12.b, w01.k + w12.k, w01.sign)


def cohomologous(c0: Cochain, c1: Cochain):
    """An integral b with c1 - c0 = δb, or None."""
    D = coboundary_matrix_of(c0.base, c0.n - 1, c0.coeff)
    sol = solve_affine(D, (c1 - c0).to_vector(), "Z")
    if isinstance(sol, AffineSolution):
        return Cochain.from_vector(c0.base, c0.n - 1, c0.coeff, sol.x)
    return None


# -- structure maps --------------------------------------------------------------

def map_I(t: DifferentialTriple) -> Cochain:
    """Underlying cohomology class, represented by the cocycle c."""
    return t.c


def map_R(t: DifferentialTriple) -> PLForm:
    return t.omega


def map_a(theta: PLForm) -> DifferentialTriple:
    """a(Θ) = (0, dΘ, R(Θ))."""
    n = theta.n + 1
    return DifferentialTriple(Cochain.zero(theta.base, n, theta.coeff), exterior_d(theta), deRham(theta))


def chern_character_form(z: Cochain) -> PLForm:
    """A closed form representing ρ(z) for an integral cocycle z (the map ch)."""
    return whitney(z.rho())


def class_triple(c: Cochain) -> DifferentialTriple:
    """A triple lifting the class of the integral cocycle c: (c, W(ρc), 0)."""
    return DifferentialTriple(c, whitney(c.rho()), Cochain.zero(c.base, c.n - 1, c.coeff, rational=True))


# -- group structure -------------------------------------------------------------

def add(t0: DifferentialTriple, t1: DifferentialTriple, corrections: Optional[CorrectionData] = None):
    a0, a1 = t0.normalized(), t1.normalized()
    h = a0.h + a1.h
    if corrections is not None and corrections.A is not None:
        h = h + corrections.A([a0.c, a1.c])
    return DifferentialTriple(a0.c + a1.c, a0.omega + a1.omega, h)


def neg(t: DifferentialTriple, corrections: Optional[CorrectionData] = None):
    a = t.normalized()
    h = -a.h
    if corrections is not None and corrections.N is not None:
        h = h + corrections.N([a.c])
    return DifferentialTriple(-a.c, -a.omega, h)


def sub(t0, t1, corrections=None):
    return add(t0, neg(t1, corrections), corrections)


def change_of_cocycle(t: DifferentialTriple, theta: Expr) -> DifferentialTriple:
    """[c, ω, h] ↦ [c, ω, h + Θ(c)] for the fundamental cocycle ι' = ι - δΘ."""
    val = theta([t.c]).rho()
    if val.n != t.n - 1:
        raise TripleError("degree-mismatch", None, f"Θ must have degree {t.n - 1}, got {val.n}")
    total = theta if t.theta is None else Sum(t.theta, theta)
    return DifferentialTriple(t.c, t.omega, t.h + val, theta=total)


def pullback_triple(f: SimplicialMap, t: DifferentialTriple, base=None) -> DifferentialTriple:
    base = base if base is not None else f.source
    return DifferentialTriple(pullback(f, t.c, base), pullback_form(f, t.omega, base), pullback(f, t.h, base),
                              theta=t.theta)


def restrict_triple(t: DifferentialTriple, pair: Pair) -> DifferentialTriple:
    return DifferentialTriple(cc.restrict_to_sub(t.c, pair), restrict_form_to_sub(t.omega, pair),
                              cc.restrict_to_sub(t.h, pair), theta=t.theta)


def on_base(t: DifferentialTriple, base) -> DifferentialTriple:
    """Reinterpret a triple on another pair structure of the same ambient set."""
    return DifferentialTriple(cc.restrict_to(t.c, base), t.omega.on_base(base), cc.restrict_to(t.h, base),
                              theta=t.theta)


def homotopy_shift(t: DifferentialTriple, C: Cochain, cyl=None) -> DifferentialTriple:
    """(i1*C, ω, h - ∫_I ρ(C)) for a cocycle C on the cylinder with i0*C = c."""
    from .cochains import cylinder_pair
    cyl_pair, i0, i1, _ = cylinder_pair(t.base) if cyl is None else cyl
    if not coboundary(C).is_zero():
        raise ValueError("C is not a cocycle")
    if pullback(i0, C, t.base) != t.c:
        raise ValueError("i0*C differs from c")
    c1 = pullback(i1, C, t.base)
    out = DifferentialTriple(c1, t.omega, t.h - integrate_interval(C.rho(), t.base))
    if not is_equivalent(out, t):
        raise ArithmeticError("homotopy shift left the equivalence class")
    return out


# -- products --------------------------------------------------------------------

def product_even(t0: DifferentialTriple, t1: DifferentialTriple, corrections: Optional[CorrectionData] = None,
                 budget: FormDegreeBudget = DEFAULT_BUDGET, allow_odd: bool = False) -> DifferentialTriple:
    """Internal product on a common ambient set.

    h = B(ω0⊗ω1) + h0∪R(ω1) + (-1)^n R(ω0)∪h1 - h0∪δh1.
    """
    if not allow_odd and (t0.n % 2 or t1.n % 2):
        raise ValueError("product_even needs even degrees; use product_full")
    a0, a1 = t0.normalized(), t1.normalized()
    n = a0.n
    R0, R1 = deRham(a0.omega), deRham(a1.omega)
    c = cup(a0.c, a1.c)
    w = wedge(a0.omega, a1.omega, budget)
    h = b_homotopy(a0.omega, a1.omega, budget)
    h = h + cup(a0.h, R1) + cup(R0, a1.h).scale((-1) ** n) - cup(a0.h, coboundary(a1.h))
    if corrections is not None and corrections.M is not None:
        h = h + corrections.M([a0.c, a1.c])
    base = c.base
    return DifferentialTriple(c, w.on_base(base), cc.restrict_to(h, base))


def external_product(t0: DifferentialTriple, t1: DifferentialTriple, P: ProductSet, base=None,
                     budget: FormDegreeBudget = DEFAULT_BUDGET) -> DifferentialTriple:
    pr1, pr2 = projections(P)
    x = pullback_triple(pr1, t0, _lift_base(P, t0.base, 0))
    y = pullback_triple(pr2, t1, _lift_base(P, t1.base, 1))
    out = product_even(x, y, budget=budget, allow_odd=True)
    return out if base is None else on_base(out, base)


def _lift_base(P: ProductSet, base, which: int):
    """The pair structure on P pulled back from a pair on one factor."""
    pair = as_pair(base)
    if pair.is_absolute():
        return P
    key = ("liftpair", id(pair), which)
    hit = P._cache.get(key)
    if hit is None:
        cells = [c for c in P.all_cells() if P.coords[c][which][0] in pair.sub_cells]
        hit = Pair.from_subcells(P, cells)
        P._cache[key] = hit
    return hit


# -- integration over the circle --------------------------------------------------

class CircleBundle:
    """S¹×M with its pair (S¹×M, 1×M), the section i and projection pr2."""

    def __init__(self, M: SimplicialSet):
        self.M = M
        self.pair, self.i, self.pr2 = circle_pair(M)
        self.P: ProductSet = self.pair.ambient
        self.circle = self.P.factors[0]


def circle_bundle(M: SimplicialSet) -> CircleBundle:
    key = ("circlebundle",)
    hit = M._cache.get(key)
    if hit is None:
        hit = CircleBundle(M)
        M._cache[key] = hit
    return hit


def integrate_rel(t: DifferentialTriple, target=None) -> DifferentialTriple:
    """[c, ω, h] ↦ [∫c, ∫ω, -∫h] for t on (S¹×M, 1×M)."""
    P = t.ambient
    if not isinstance(P, ProductSet) or len(P.factors[0].cells_of(0)) != 1:
        raise ValueError("integrate_rel needs a triple on (S¹×M, 1×M)")
    pair = as_pair(t.base)
    S = P.factors[0]
    for c in P.all_cells():
        if P.coords[c][0][0] == S.basepoint and c not in pair.sub_cells:
            raise ValueError("integrate_rel needs the relative base (S¹×M, 1×M)")
    a = t.normalized()
    tgt = target if target is not None else P.factors[1]
    return DifferentialTriple(integrate_interval(a.c, tgt), fiber_integrate(a.omega, tgt),
                              -integrate_interval(a.h, tgt))


def relative_part(t: DifferentialTriple, bundle: CircleBundle, perturb=None) -> DifferentialTriple:
    """t - pr2* i* t, which vanishes on 1×M; an optional equivalent perturbation first."""
    a = t.normalized()
    if perturb is not None:
        a = add(a, perturb)
    back = pullback_triple(bundle.pr2, pullback_triple(bundle.i, a))
    y = sub(a, back)
    return on_base(y, bundle.pair)


def integrate_abs(t: DifferentialTriple, bundle: Optional[CircleBundle] = None, perturb=None):
    """∫_{S¹} of an absolute triple on S¹×M via its relative part."""
    P = t.ambient
    bundle = bundle or circle_bundle(P.factors[1])
    return integrate_rel(relative_part(t, bundle, perturb))


def null_triple(base, n, coeff, rng: random.Random, bound=2) -> DifferentialTriple:
    """A random triple equivalent to zero: (δb, 0, -ρb + δk)."""
    b = Cochain.random(base, n - 1, coeff, rng, bound=bound)
    k = Cochain.random(base, n - 2, coeff, rng, rational=True, bound=bound)
    return DifferentialTriple(coboundary(b), PLForm.zero(base, n, coeff), coboundary(k) - b.rho())


def circle_class(S: SimplicialSet, coeff: GradedCoefficients) -> DifferentialTriple:
    """The degree-1 class ẑ = [z, τ, 0] on the minimal circle."""
    e = S.cells_of(1)[0]
    z = Cochain(S, 1, coeff, {e: 1})
    return class_triple(z)


def suspend(x: DifferentialTriple, bundle: Optional[CircleBundle] = None,
            budget: FormDegreeBudget = DEFAULT_BUDGET, extra: Optional[DifferentialTriple] = None):
    """X̂ on (S¹×M, 1×M) with ∫X̂ equal to x exactly.

    X̂ = ẑ×x̂ + a(-pr1*τ ∧ pr2*W(∫B)), where the correction cancels the
    interval integral of the homotopy term.  ``extra`` adds a relative triple
    (another suspension choice).
    """
    M = x.ambient
    bundle = bundle or circle_bundle(M)
    a = x.normalized()
    if not as_pair(a.base).is_absolute():
        raise ValueError("suspend needs an absolute triple")
    zhat = circle_class(bundle.circle, a.coeff)
    X = external_product(zhat, a, bundle.P, budget=budget)
    X = on_base(X, bundle.pair)
    got = integrate_rel(X)
    gap = a.h - got.h
    if not gap.is_zero():
        pr1, pr2 = projections(bundle.P)
        theta = whitney(gap)
        tau = pullback_form(pr1, zhat.omega)
        corr = wedge(tau, pullback_form(pr2, theta), budget).scale(-1).on_base(bundle.pair)
        X = add(X, map_a(corr))
    if extra is not None:
        X = add(X, extra)
    elif integrate_rel(X) != a:
        raise ArithmeticError(f"suspension postcondition failed: {integrate_rel(X)!r} vs {a!r}")
    return X


def suspension_variant(x: DifferentialTriple, rng: random.Random, bundle: Optional[CircleBundle] = None,
                       budget: FormDegreeBudget = DEFAULT_BUDGET) -> DifferentialTriple:
    """Another X̂ with ∫X̂ ~ x: add a relative null triple and a(-τ∧ch(z) + dη)."""
    M = x.ambient
    bundle = bundle or circle_bundle(M)
    extra = null_triple(bundle.pair, x.n + 1, x.coeff, rng)
    pr1, pr2 = projections(bundle.P)
    zhat = circle_class(bundle.circle, x.coeff)
    tau = pullback_form(pr1, zhat.omega)
    zb = cocycle_lattice(M, x.n - 1, x.coeff)
    theta = PLForm.zero(M, x.n - 1, x.coeff)
    for v in zb:
        s = rng.randint(-1, 1)
        if s:
            theta = theta + whitney(Cochain.from_vector(M, x.n - 1, x.coeff, v).rho()).scale(s)
    if x.n >= 2:
        theta = theta + exterior_d(random_form(M, x.n - 2, x.coeff, rng))
    if not theta.is_zero():
        corr = wedge(tau, pullback_form(pr2, theta), budget).on_base(bundle.pair)
        extra = add(extra, map_a(corr))
    return suspend(x, bundle, budget, extra=extra)


def product_full(x: DifferentialTriple, y: DifferentialTriple, budget: FormDegreeBudget = DEFAULT_BUDGET,
                 X_hat: Optional[DifferentialTriple] = None, Y_hat: Optional[DifferentialTriple] = None):
    """Internal product in all degrees; odd factors are suspended and integrated."""
    if x.n % 2 == 0 and y.n % 2 == 0:
        return product_even(x, y, budget=budget)
    M = x.ambient
    if y.ambient is not M:
        raise ValueError("product_full needs a common base")
    if not (as_pair(x.base).is_absolute() and as_pair(y.base).is_absolute()):
        raise ValueError("odd-degree products are implemented for absolute triples")
    bundle = circle_bundle(M)
    pr2 = bundle.pr2
    if x.n % 2 == 1 and y.n % 2 == 0:
        Xh = X_hat or suspend(x, bundle, budget)
        prod = product_even(Xh, pullback_triple(pr2, y), budget=budget, allow_odd=True)
        return integrate_rel(on_base(prod, bundle.pair))
    if x.n % 2 == 0 and y.n % 2 == 1:
        Yh = Y_hat or suspend(y, bundle, budget)
        prod = product_even(pullback_triple(pr2, x), Yh, budget=budget, allow_odd=True)
        return integrate_rel(on_base(prod, bundle.pair))
    # odd × odd: S¹_Y × (S¹_X × M); integrate Ŷ's circle, then X̂'s.
    Xh = X_hat or suspend(x, bundle, budget)
    Yh = Y_hat or suspend(y, bundle, budget)
    outer = circle_bundle(bundle.P)
    Q = outer.P
    q1, q2 = projections(Q)
    lift_y = pair_map(q1, bundle.pr2.compose(q2), bundle.P)   # S¹_Y×(S¹_X×M) → S¹_Y×M
    Xq = pullback_triple(q2, Xh, _lift_base(Q, bundle.pair, 1))
    Yq = pullback_triple(lift_y, Yh, _twice_relative(Q, bundle))
    prod = product_even(Xq, Yq, budget=budget, allow_odd=True)
    both = _twice_relative(Q, bundle, both=True)
    prod = on_base(prod, both)
    inner = integrate_rel(on_base(prod, _twice_relative(Q, bundle, both=True)), target=bundle.pair)
    return integrate_rel(inner)


def _twice_relative(Q: ProductSet, bundle: CircleBundle, both: bool = False):
    """Pairs on S¹_Y×(S¹_X×M): relative to 1×(S¹×M), and optionally also to S¹×(1×M)."""
    key = ("twice", id(bundle), both)
    hit = Q._cache.get(key)
    if hit is None:
        S = Q.factors[0]
        cells = []
        for c in Q.all_cells():
            a, b = Q.coords[c]
            if a[0] == S.basepoint or (both and b[0] in bundle.pair.sub_cells):
                cells.append(c)
        hit = Pair.from_subcells(Q, cells)
        Q._cache[key] = hit
    return hit


def double_integral_anticommute_check(t: DifferentialTriple):
    """Check ∫∫τ*t ~ -∫∫t on S¹×(S¹×M); returns (ok, witness or certificate)."""
    Q = t.ambient
    inner_bundle = circle_bundle(Q.factors[1].factors[1])
    outer_bundle = circle_bundle(Q.factors[1])
    if outer_bundle.P is not Q:
        raise ValueError("triple must live on the cached S¹×(S¹×M)")
    swap = circle_swap(outer_bundle, inner_bundle)
    lhs = integrate_abs(integrate_abs(pullback_triple(swap, t), outer_bundle), inner_bundle)
    rhs = neg(integrate_abs(integrate_abs(t, outer_bundle), inner_bundle))
    res = equivalent(lhs, rhs)
    return isinstance(res, EquivalenceWitness), res


def circle_swap(outer: CircleBundle, inner: CircleBundle) -> SimplicialMap:
    """(a, (b, m)) ↦ (b, (a, m)) on S¹×(S¹×M)."""
    Q = outer.P
    q1, q2 = projections(Q)
    p1, p2 = projections(inner.P)
    inner_map = pair_map(q1, p2.compose(q2), inner.P)
    return pair_map(p1.compose(q2), inner_map, Q)


# -- lattices and random triples ---------------------------------------------------

def cocycle_lattice(base, n, coeff) -> List[List[int]]:
    """A ℤ-basis of integral cocycles of degree n."""
    X = ambient_of(base)
    key = ("zlattice", id(as_pair(base)), n, coeff.key)
    hit = X._cache.get(key)
    if hit is None:
        D = coboundary_matrix_of(base, n, coeff)
        sf = smith(D)
        hit = [[sf.V[j][i] for j in range(D.cols)] for i in range(sf.rank, D.cols)]
        X._cache[key] = hit
    return hit


def random_cocycle(base, n, coeff, rng, bound=2) -> Cochain:
    vec = [0] * len(slots(base, n, coeff))
    for v in cocycle_lattice(base, n, coeff):
        s = rng.randint(-bound, bound)
        if s:
            vec = [a + s * b for a, b in zip(vec, v)]
    return Cochain.from_vector(base, n, coeff, vec)


def random_triple(base, n, coeff, rng, *, kind: str = "any", factors: int = 1) -> DifferentialTriple:
    """Random valid triple: (c, W(ρc) + dΘ, R(Θ) + δv) with variations by kind.

    kind: "any", "kerI" (c a coboundary), "flat" (ω = 0).
    """
    if kind == "flat":
        return random_flat(base, n, coeff, rng)
    if kind == "kerI":
        c = coboundary(Cochain.random(base, n - 1, coeff, rng, bound=2))
    else:
        c = random_cocycle(base, n, coeff, rng)
    omega = whitney(c.rho())
    h = Cochain.zero(base, n - 1, coeff, rational=True)
    if n >= 1:
        theta = random_form(base, n - 1, coeff, rng, factors=factors)
        omega = omega + exterior_d(theta)
        h = deRham(theta)
        h = h + coboundary(Cochain.random(base, n - 2, coeff, rng, rational=True, bound=2))
    return DifferentialTriple(c, omega, h)


def torsion_lifts(base, n, coeff) -> List[Tuple[Cochain, Cochain]]:
    """(z, q) with z an integral cocycle basis element and ρz = δq, over the lattice."""
    X = ambient_of(base)
    key = ("torsionlifts", id(as_pair(base)), n, coeff.key)
    hit = X._cache.get(key)
    if hit is None:
        hit = []
        D = coboundary_matrix_of(base, n - 1, coeff)
        for v in cocycle_lattice(base, n, coeff):
            sol = solve_affine(D, v, "Q")
            if isinstance(sol, AffineSolution):
                hit.append((Cochain.from_vector(base, n, coeff, v),
                            Cochain.from_vector(base, n - 1, coeff, sol.x, rational=True)))
        X._cache[key] = hit
    return hit


def random_flat(base, n, coeff, rng) -> DifferentialTriple:
    """A random flat triple (c, 0, h) with δh = -ρc."""
    c = Cochain.zero(base, n, coeff)
    h = Cochain.zero(base, n - 1, coeff, rational=True)
    for z, q in torsion_lifts(base, n, coeff):
        s = rng.randint(-2, 2)
        if s:
            c = c + z.scale(s)
            h = h - q.scale(s)
    for v in cocycle_lattice(base, n - 1, coeff) if n >= 1 else []:
        s = Fraction(rng.randint(-3, 3), rng.choice((1, 2, 3, 5)))
        if s:
            h = h + Cochain.from_vector(base, n - 1, coeff, v).rho().scale(s)
    b = Cochain.random(base, n - 1, coeff, rng, bound=1)
    k = Cochain.random(base, n - 2, coeff, rng, rational=True, bound=1)
    c = c + coboundary(b)
    h = h - b.rho() + coboundary(k)
    return DifferentialTriple(c, PLForm.zero(base, n, coeff), h)


# -- the four-term axiom sequence -------------------------------------------------

def preimage_under_a(t: DifferentialTriple, budget: FormDegreeBudget = DEFAULT_BUDGET):
    """For t with I(t) = 0: Θ with a(Θ) ~ t and the witness, or None if I(t) ≠ 0."""
    a = t.normalized()
    b = cohomologous(Cochain.zero(a.base, a.n, a.coeff), a.c)
    if b is None:
        return None
    # t ~ (0, ω, h + ρb) via the witness (b, 0)
    h2 = a.h + b.rho()
    kappa = primitive(a.omega, budget) if a.n >= 1 else None
    if kappa is None or kappa.n < 0:
        theta = whitney(h2)
    else:
        theta = kappa + whitney(h2 - deRham(kappa))
    return theta


def preimage_under_ch(theta: PLForm, budget: FormDegreeBudget = DEFAULT_BUDGET):
    """If a(Θ) ~ 0: (integral cocycle z, η) with Θ = ch(z) + dη; else None."""
    t = map_a(theta)
    res = equivalent(t, zero_triple(theta.base, theta.n + 1, theta.coeff))
    if not isinstance(res, EquivalenceWitness):
        return None
    z = res.b
    rest = theta - chern_character_form(z)
    if theta.n == 0 and theta.coeff.gen_degree is None:
        return (z, None) if rest.is_zero() else None
    eta = primitive(rest, budget)
    return z, eta


def lift_through_a(t: DifferentialTriple, budget: FormDegreeBudget = DEFAULT_BUDGET):
    """For t with I(t) = 0, a Θ with a(Θ) ~ t; ``None`` when I(t) ≠ 0."""
    return preimage_under_a(t, budget)


# -- the pair sequence ------------------------------------------------------------

class PairSequence:
    """Maps of the six-term sequence of a pair (M, N) in degree n.

    Ê_flat^{n-1}(M) → Ê_flat^{n-1}(N) → Ê^n(M,N) → Ê^n(M) → Ê^n(N) → E^{n+1}(M,N)
    """

    def __init__(self, pair: Pair, n: int, coeff: GradedCoefficients):
        self.pair, self.n, self.coeff = pair, n, coeff
        self.M = pair.ambient
        self.N = pair.sub

    def _ext(self, u: Cochain) -> Cochain:
        """Extension by zero from N to M (absolute on M)."""
        vals = {self.pair.inclusion.of_cell(c)[0]: v for c, v in u.values.items()}
        return Cochain(self.M, u.n, u.coeff, vals, u.rational)

    def _res(self, u: Cochain) -> Cochain:
        return pullback(self.pair.inclusion, u, self.N)

    def restrict_flat(self, x: DifferentialTriple) -> DifferentialTriple:
        return pullback_triple(self.pair.inclusion, x, self.N)

    def connecting_flat(self, y: DifferentialTriple) -> DifferentialTriple:
        """(c, 0, h) on N ↦ (δc̃, 0, -ρc̃ - δh̃) on (M, N)."""
        if not y.omega.is_zero():
            raise ValueError("connecting map needs a flat class")
        y = y.normalized()
        ct, ht = self._ext(y.c), self._ext(y.h)
        c = cc.restrict_to(coboundary(ct), self.pair)
        h = cc.restrict_to(-ct.rho() - coboundary(ht), self.pair)
        return DifferentialTriple(c, PLForm.zero(self.pair, self.n, self.coeff), h)

    def forget(self, x: DifferentialTriple) -> DifferentialTriple:
        return on_base(x, self.M)

    def restrict(self, x: DifferentialTriple) -> DifferentialTriple:
        return pullback_triple(self.pair.inclusion, x, self.N)

    def connecting_top(self, y: DifferentialTriple) -> Cochain:
        """Ê^n(N) → E^{n+1}(M,N): the relative cocycle δc̃."""
        return cc.restrict_to(coboundary(self._ext(y.normalized().c)), self.pair)

    # -- preimages for the exactness checks -----------------------------------

    def preimage_restrict_flat(self, y: DifferentialTriple):
        """Flat x on M with x|N = y, when δ1(y) ~ 0."""
        res = equivalent(self.connecting_flat(y), zero_triple(self.pair, self.n, self.coeff))
        if not isinstance(res, EquivalenceWitness):
            return None
        b = on_base_cochain(res.b, self.M)
        k = on_base_cochain(res.k, self.M)
        y = y.normalized()
        # 0 - δc̃ = δb and 0 + ρc̃ + δh̃ = -ρb + δk
        c = self._ext(y.c) + b
        h = self._ext(y.h) - k
        return DifferentialTriple(c, PLForm.zero(self.M, self.n - 1, self.coeff), h)

    def preimage_connecting_flat(self, x: DifferentialTriple):
        """Flat y on N with δ1(y) ~ x, when x forgets to 0 on M."""
        res = equivalent(self.forget(x), zero_triple(self.M, self.n, self.coeff))
        if not isinstance(res, EquivalenceWitness):
            return None
        c = -self._res(res.b)
        h = self._res(res.k)
        return DifferentialTriple(c, PLForm.zero(self.N, self.n - 1, self.coeff), h)

    def preimage_forget(self, x: DifferentialTriple):
        """Relative x'' with x'' ~ x on M, when x|N ~ 0."""
        res = equivalent(self.restrict(x), zero_triple(self.N, self.n, self.coeff))
        if not isinstance(res, EquivalenceWitness):
            return None
        x = x.normalized()
        bt, kt = self._ext(res.b), self._ext(res.k)
        c = x.c + coboundary(bt)
        h = x.h - bt.rho() + coboundary(kt)
        return DifferentialTriple(cc.restrict_to(c, self.pair), x.omega.on_base(self.pair),
                                  cc.restrict_to(h, self.pair))

    def preimage_restrict(self, y: DifferentialTriple, budget: FormDegreeBudget = DEFAULT_BUDGET):
        """x on M with x|N = y exactly, when δ2(y) is a relative coboundary."""
        y = y.normalized()
        rel = self.connecting_top(y)
        b = cohomologous(Cochain.zero(self.pair, self.n + 1, self.coeff), rel)
        if b is None:
            return None
        c = self._ext(y.c) - on_base_cochain(b, self.M)
        z = class_triple(c)
        rest = sub(y, self.restrict(z))
        theta_N = preimage_under_a(rest, budget)
        theta = extend_form(theta_N, self.pair, budget)
        return add(z, map_a(theta))


def on_base_cochain(u: Cochain, base) -> Cochain:
    return Cochain(base, u.n, u.coeff, u.values, u.rational)


# -- checks ---------------------------------------------------------------------

def _payload(v):
    if hasattr(v, "to_json"):
        return v.to_json()
    if isinstance(v, (list, tuple)):
        return [_payload(x) for x in v]
    return v if isinstance(v, (int, str, bool, type(None))) else str(v)


@dataclass
class CheckResult:
    claim: str
    ok: bool
    detail: str = ""
    witness: Optional[dict] = None
    counterexample: Optional[dict] = None


class Tally:
    """Accumulates cases of one claim, keeping the first witness and first failure."""

    def __init__(self, claim: str):
        self.claim = claim
        self.ok = True
        self.cases = 0
        self.witness = None
        self.counterexample = None

    def check(self, outcome, **inputs) -> bool:
        self.cases += 1
        if isinstance(outcome, EquivalenceWitness):
            passed = True
            if self.witness is None:
                self.witness = outcome.to_json()
        elif isinstance(outcome, DistinctCertificate):
            passed = False
            inputs = dict(inputs, certificate=outcome)
        else:
            passed = bool(outcome)
        if not passed:
            self.ok = False
            if self.counterexample is None:
                self.counterexample = {k: _payload(v) for k, v in inputs.items()}
        return passed

    def result(self, detail: str = "") -> CheckResult:
        text = f"{self.cases} cases" + (f"; {detail}" if detail else "")
        return CheckResult(self.claim, self.ok, text, self.witness, self.counterexample)


def _tallies(*claims):
    return [Tally(c) for c in claims]


def check_axiom_sequence(base, n: int, coeff: GradedCoefficients, rng: random.Random, samples: int = 4,
                         budget: FormDegreeBudget = DEFAULT_BUDGET) -> List[CheckResult]:
    """Exactness of E^{n-1} → Ω^{n-1}/im d → Ê^n → E^n → 0 on generators and samples."""
    surj, ia, keri, ach, kera = _tallies("axioms.I-surjective", "axioms.I-after-a-zero", "axioms.kerI-in-image-a",
                                         "axioms.a-after-ch-zero", "axioms.ker-a-in-image-ch")
    for v in cocycle_lattice(base, n, coeff):
        z = Cochain.from_vector(base, n, coeff, v)
        surj.check(map_I(class_triple(z)) == z, cocycle=z)
    for _ in range(samples):
        th = random_form(base, n - 1, coeff, rng)
        ia.check(map_I(map_a(th)).is_zero(), form=th)
        t = random_triple(base, n, coeff, rng, kind="kerI")
        theta = preimage_under_a(t, budget)
        if theta is None:
            keri.check(False, triple=t, reason="no preimage under a")
        else:
            keri.check(equivalent(map_a(theta), t), triple=t, preimage=theta)
    for v in cocycle_lattice(base, n - 1, coeff):
        z = Cochain.from_vector(base, n - 1, coeff, v)
        ach.check(equivalent(map_a(chern_character_form(z)), zero_triple(base, n, coeff)), cocycle=z)
    for _ in range(samples):
        z = random_cocycle(base, n - 1, coeff, rng)
        th = chern_character_form(z)
        if n >= 2 or coeff.gen_degree is not None:
            th = th + exterior_d(random_form(base, n - 2, coeff, rng))
        got = preimage_under_ch(th, budget)
        if got is None:
            kera.check(False, form=th, reason="a(Θ) not equivalent to 0")
            continue
        z2, eta = got
        rebuilt = chern_character_form(z2)
        if eta is not None:
            rebuilt = rebuilt + exterior_d(eta)
        kera.check(rebuilt == th and coboundary(z2).is_zero(), form=th, cocycle=z2)
    return [t.result() for t in (surj, ia, keri, ach, kera)]


def torsion_example(rng: Optional[random.Random] = None) -> List[CheckResult]:
    """a(1/2) on the minimal circle is nonzero of order two over ℤ."""
    from .builtins import circle
    from .cochains import integers
    S = circle()
    Z = integers()
    half = PLForm.constant(S, Z, Fraction(1, 2))
    x = map_a(half)
    zero = zero_triple(S, 1, Z)
    nonzero, order2 = _tallies("axioms.half-is-nonzero", "axioms.half-has-order-two")
    res = equivalent(x, zero)
    nonzero.check(isinstance(res, DistinctCertificate), certificate=res if isinstance(res, EquivalenceWitness) else None)
    cert = res if isinstance(res, DistinctCertificate) else None
    order2.check(equivalent(add(x, x), zero), triple=x)
    out = [nonzero.result(cert.reason if cert else ""), order2.result()]
    if cert is not None:
        out[0].witness = cert.to_json()
    return out


def check_group_laws(base, n, coeff, rng, samples=3, corrections: Optional[CorrectionData] = None):
    tag = "perturbed" if corrections is not None else "default"
    assoc, comm, unit, inv = _tallies(*(f"group.{tag}.{k}" for k in ("associative", "commutative", "unit", "inverse")))
    z = zero_triple(base, n, coeff)
    for _ in range(samples):
        x, y, w = (random_triple(base, n, coeff, rng) for _ in range(3))
        assoc.check(equivalent(add(add(x, y, corrections), w, corrections),
                               add(x, add(y, w, corrections), corrections)), x=x, y=y, z=w)
        comm.check(equivalent(add(x, y, corrections), add(y, x, corrections)), x=x, y=y)
        unit.check(equivalent(add(x, z, corrections), x), x=x)
        inv.check(equivalent(add(x, neg(x, corrections), corrections), z), x=x)
    return [t.result() for t in (assoc, comm, unit, inv)]


def check_perturbation_invariance(base, n, coeff, rng, samples=3):
    """Perturbing A and N by δ of a natural expression leaves every class unchanged.

    The detail records whether the perturbation was nonzero on some sample;
    on small complexes δ often kills it.
    """
    T = Tally("group.perturbation-invariance")
    A = natural_perturbation(n, coeff, 2)
    N = natural_perturbation(n, coeff, 1)
    if A is None:
        return [T.result("no natural perturbation over these coefficients")]
    corr = CorrectionData(A=A, N=N)
    nontrivial = False
    for _ in range(samples):
        x, y = random_triple(base, n, coeff, rng), random_triple(base, n, coeff, rng)
        s0, s1 = add(x, y), add(x, y, corr)
        nontrivial |= s0.h != s1.h or neg(x).h != neg(x, corr).h
        T.check(equivalent(s0, s1), x=x, y=y)
        T.check(equivalent(neg(x), neg(x, corr)), x=x)
    T.nontrivial = nontrivial
    return [T.result("perturbation nonzero on samples" if nontrivial else "perturbation vanished on samples")]


def check_change_of_cocycle(base, n, coeff, rng, samples=3) -> List[CheckResult]:
    """Θ = 0 is the identity, Θ = δκ preserves classes, and changes compose additively."""
    ident, exact, comp = _tallies("change-of-cocycle.zero-is-identity", "change-of-cocycle.exact-is-trivial",
                                  "change-of-cocycle.composition")
    for _ in range(samples):
        t = random_triple(base, n, coeff, rng)
        zero_expr = _Const(Cochain.zero(base, n - 1, coeff, rational=True))
        ident.check(change_of_cocycle(t, zero_expr).normalized() == t, triple=t)
        kappa = Cochain.random(base, n - 2, coeff, rng, rational=True)
        de = _Const(coboundary(kappa))
        exact.check(equivalent(change_of_cocycle(t, de), t), triple=t)
        th1 = _Const(Cochain.random(base, n - 1, coeff, rng, rational=True))
        th2 = _Const(Cochain.random(base, n - 1, coeff, rng, rational=True))
        try:
            two = change_of_cocycle(change_of_cocycle(t, th1), th2)
            one = change_of_cocycle(t, Sum(th1, th2))
            comp.check(two.h == one.h and two.c == one.c, triple=t)
        except TripleError as e:
            comp.check(False, triple=t, error=str(e))
    return [t.result() for t in (ident, exact, comp)]


@dataclass(frozen=True)
class _Const(Expr):
    """A fixed cochain, ignoring the arguments (for tests of the change-of-cocycle rule)."""

    value: Cochain

    def __call__(self, args):
        return self.value


def check_homotopy_shift(base, n, coeff, rng, samples=3) -> List[CheckResult]:
    from .cochains import cob_witness, cylinder_pair
    T = Tally("homotopy.shift-preserves-class")
    cyl = cylinder_pair(base)
    cpair, i0, i1, pr = cyl
    for _ in range(samples):
        t = random_triple(base, n, coeff, rng)
        v = Cochain.random(base, n - 1, coeff, rng)
        C = pullback(pr, t.c, cpair) + cob_witness(v, cpair)
        # δF with F vanishing over the 0-end keeps i0*C = c
        P = ambient_of(cpair)
        F = Cochain.random(cpair, n - 1, coeff, rng)
        F = Cochain(cpair, n - 1, coeff, {c: x for c, x in F.values.items() if P.coords[c][0][0] != "0"})
        C = C + coboundary(F)
        try:
            out = homotopy_shift(t, C, cyl)
            T.check(equivalent(out, t), triple=t, v=v)
        except (ArithmeticError, ValueError) as e:
            T.check(False, triple=t, v=v, error=str(e))
    return [T.result()]


def check_transitivity(base, n, coeff, rng, chains=5, length=4) -> List[CheckResult]:
    """Witnesses along chains t0 ~ t1 ~ ... compose additively."""
    T = Tally("equivalence.transitive")
    for _ in range(chains):
        ts = [random_triple(base, n, coeff, rng)]
        for _ in range(length):
            ts.append(add(ts[-1], null_triple(base, n, coeff, rng)))
        total = None
        for a, b in zip(ts, ts[1:]):
            w = equivalent(a, b)
            if not isinstance(w, EquivalenceWitness):
                total = None
                break
            total = w if total is None else compose_witnesses(total, w)
        T.check(total is not None and total.verify(ts[0], ts[-1]), start=ts[0])
    return [T.result()]


def check_pair_sequence(pair: Pair, n: int, coeff: GradedCoefficients, rng: random.Random, samples: int = 3,
                        budget: FormDegreeBudget = DEFAULT_BUDGET) -> List[CheckResult]:
    """Exactness at the four interior nodes of the pair sequence, on samples."""
    S = PairSequence(pair, n, coeff)
    M, N = S.M, S.N
    zero_rel = zero_triple(pair, n, coeff)
    names = [f"pairs.{node}.{kind}" for node in ("flat-sub", "relative", "absolute", "sub")
             for kind in ("composite-zero", "kernel-in-image")]
    T = dict(zip(names, _tallies(*names)))
    for _ in range(samples):
        x = random_flat(M, n - 1, coeff, rng)
        T["pairs.flat-sub.composite-zero"].check(equivalent(S.connecting_flat(S.restrict_flat(x)), zero_rel), x=x)
        y = add(S.restrict_flat(x), null_triple(N, n - 1, coeff, rng))
        pre = S.preimage_restrict_flat(y)
        T["pairs.flat-sub.kernel-in-image"].check(
            pre is not None and equivalent(S.restrict_flat(pre), y), y=y)

        yN = random_flat(N, n - 1, coeff, rng)
        T["pairs.relative.composite-zero"].check(
            equivalent(S.forget(S.connecting_flat(yN)), zero_triple(M, n, coeff)), y=yN)
        xr = add(S.connecting_flat(yN), null_triple(pair, n, coeff, rng))
        pre = S.preimage_connecting_flat(xr)
        T["pairs.relative.kernel-in-image"].check(pre is not None and equivalent(S.connecting_flat(pre), xr), x=xr)

        r = random_triple(pair, n, coeff, rng)
        T["pairs.absolute.composite-zero"].check(S.restrict(S.forget(r)) == zero_triple(N, n, coeff), x=r)
        xa = add(S.forget(r), null_triple(M, n, coeff, rng))
        pre = S.preimage_forget(xa)
        T["pairs.absolute.kernel-in-image"].check(pre is not None and equivalent(S.forget(pre), xa), x=xa)

        xm = random_triple(M, n, coeff, rng)
        top = S.connecting_top(S.restrict(xm))
        T["pairs.sub.composite-zero"].check(
            cohomologous(Cochain.zero(pair, n + 1, coeff), top) is not None, x=xm)
        yn = add(S.restrict(xm), null_triple(N, n, coeff, rng))
        pre = S.preimage_restrict(yn, budget)
        T["pairs.sub.kernel-in-image"].check(pre is not None and S.restrict(pre) == yn, y=yn)
    return [t.result() for t in T.values()]


def check_ring_laws(base, coeff, rng, degrees=(0, 2), samples=2,
                    budget: FormDegreeBudget = DEFAULT_BUDGET) -> List[CheckResult]:
    """Unit, associativity, graded commutativity, bilinearity and a-linearity."""
    unit, assoc, comm, dist, alin = _tallies("ring.unit", "ring.associative", "ring.graded-commutative",
                                             "ring.bilinear", "ring.a-linear")
    one = unit_triple(base, coeff)

    def mul(a, b):
        return product_full(a, b, budget)

    for _ in range(samples):
        p, q, r = (rng.choice(degrees) for _ in range(3))
        x, y, z = (random_triple(base, d, coeff, rng) for d in (p, q, r))
        unit.check(equivalent(mul(one, x), x), x=x)
        unit.check(equivalent(mul(x, one), x), x=x)
        assoc.check(equivalent(mul(mul(x, y), z), mul(x, mul(y, z))), x=x, y=y, z=z)
        yx = mul(y, x)
        comm.check(equivalent(mul(x, y), yx if (p * q) % 2 == 0 else neg(yx)), x=x, y=y)
        y2 = random_triple(base, q, coeff, rng)
        dist.check(equivalent(mul(x, add(y, y2)), add(mul(x, y), mul(x, y2))), x=x, y=y, y2=y2)
        x2 = random_triple(base, p, coeff, rng)
        dist.check(equivalent(mul(add(x, x2), y), add(mul(x, y), mul(x2, y))), x=x, x2=x2, y=y)
        th = random_form(base, p - 1, coeff, rng)
        alin.check(equivalent(mul(map_a(th), y), map_a(wedge(th, y.omega, budget))), form=th, y=y)
    return [t.result() for t in (unit, assoc, comm, dist, alin)]


def check_ring_map(f: SimplicialMap, coeff, rng, degrees=(0, 2), samples=2,
                   budget: FormDegreeBudget = DEFAULT_BUDGET, label: str = "") -> List[CheckResult]:
    tag = f".{label}" if label else ""
    unit, mult = _tallies(f"ring.pullback-unital{tag}", f"ring.pullback-multiplicative{tag}")
    unit.check(pullback_triple(f, unit_triple(f.target, coeff)) == unit_triple(f.source, coeff))
    for _ in range(samples):
        x = random_triple(f.target, rng.choice(degrees), coeff, rng)
        y = random_triple(f.target, rng.choice(degrees), coeff, rng)
        lhs = pullback_triple(f, product_full(x, y, budget))
        rhs = product_full(pullback_triple(f, x), pullback_triple(f, y), budget)
        mult.check(equivalent(lhs, rhs), x=x, y=y)
    return [unit.result(), mult.result()]


def check_integration(M: SimplicialSet, n: int, coeff: GradedCoefficients, rng: random.Random, samples: int = 3,
                      budget: FormDegreeBudget = DEFAULT_BUDGET) -> List[CheckResult]:
    """Properties of ∫_{S¹} on S¹×M for triples of degree n+1."""
    bundle = circle_bundle(M)
    P = bundle.P
    well, lin, rcomm, icomm, anti, vanish, rel = _tallies(
        "integration.well-defined", "integration.additive", "integration.commutes-with-R",
        "integration.commutes-with-I", "integration.anticommutes-with-a", "integration.kills-pullbacks",
        "integration.relative-agrees")
    for _ in range(samples):
        t = random_triple(P, n + 1, coeff, rng)
        u = random_triple(P, n + 1, coeff, rng)
        base_int = integrate_abs(t, bundle)
        alt = integrate_abs(t, bundle, perturb=null_triple(P, n + 1, coeff, rng))
        well.check(equivalent(alt, base_int), triple=t)
        lin.check(equivalent(integrate_abs(add(t, u), bundle), add(base_int, integrate_abs(u, bundle))), x=t, y=u)
        rcomm.check(base_int.omega == fiber_integrate(relative_part(t, bundle).omega, M), triple=t)
        icomm.check(base_int.c == integrate_interval(t.c, M), triple=t)
        th = random_form(P, n, coeff, rng)
        anti.check(integrate_abs(map_a(th), bundle) == neg(map_a(fiber_integrate(th, M))), form=th)
        s = random_triple(M, n + 1, coeff, rng)
        vanish.check(integrate_abs(pullback_triple(bundle.pr2, s), bundle) == zero_triple(M, n, coeff), triple=s)
        r = random_triple(bundle.pair, n + 1, coeff, rng)
        rel.check(integrate_abs(on_base(r, P), bundle) == integrate_rel(r), triple=r)
    return [t.result() for t in (well, lin, rcomm, icomm, anti, vanish, rel)]


def check_integration_natural(f: SimplicialMap, n: int, coeff, rng, samples=3) -> List[CheckResult]:
    """f*∫x̂ ~ ∫(id×f)*x̂ for f: M' → M."""
    T = Tally("integration.natural")
    src, tgt = circle_bundle(f.source), circle_bundle(f.target)
    q1, q2 = projections(src.P)
    idf = pair_map(_circle_identity(src, tgt).compose(q1), f.compose(q2), tgt.P)
    for _ in range(samples):
        t = random_triple(tgt.P, n + 1, coeff, rng)
        lhs = pullback_triple(f, integrate_abs(t, tgt))
        rhs = integrate_abs(pullback_triple(idf, t), src)
        T.check(equivalent(lhs, rhs), triple=t)
    return [T.result()]


def _circle_identity(src: CircleBundle, tgt: CircleBundle) -> SimplicialMap:
    return SimplicialMap(src.circle, tgt.circle, {c: tgt.circle.nondeg(c) for c in src.circle.all_cells()})


def check_double_integral(M: SimplicialSet, n: int, coeff, rng, samples=3) -> List[CheckResult]:
    T = Tally("integration.double-integral-anticommutes")
    Q = circle_bundle(circle_bundle(M).P).P
    for _ in range(samples):
        t = random_triple(Q, n + 2, coeff, rng)
        ok, res = double_integral_anticommute_check(t)
        T.check(res, triple=t)
    return [T.result()]


def check_odd_products(M: SimplicialSet, coeff: GradedCoefficients, rng: random.Random, samples: int = 2,
                       budget: FormDegreeBudget = DEFAULT_BUDGET, variants: int = 2) -> List[CheckResult]:
    """Suspension exactness, independence of the suspension and agreement with the cup product."""
    bundle = circle_bundle(M)
    exact, indep, cupok, consist = _tallies(
        "products-odd.suspension-integrates-back", "products-odd.independent-of-suspension",
        "products-odd.matches-cup-product", "products-odd.two-routes-agree")
    for _ in range(samples):
        x = random_triple(M, 1, coeff, rng)
        y = random_triple(M, rng.choice((0, 1, 2)), coeff, rng)
        X = suspend(x, bundle, budget)
        exact.check(integrate_rel(X) == x, x=x)
        p0 = product_full(x, y, budget, X_hat=X)
        for _ in range(variants):
            alt = suspension_variant(x, rng, bundle, budget)
            indep.check(equivalent(integrate_rel(alt), x), x=x)
            indep.check(equivalent(p0, product_full(x, y, budget, X_hat=alt)), x=x, y=y)
        cupok.check(cohomologous(p0.c, cup(x.c, y.c)) is not None, x=x, y=y)
        if y.n % 2 == 1:
            Y = suspend(y, bundle, budget)
            lhs = integrate_rel(on_base(product_even(X, pullback_triple(bundle.pr2, y), budget=budget,
                                                     allow_odd=True), bundle.pair))
            rhs = integrate_rel(on_base(product_even(pullback_triple(bundle.pr2, x), Y, budget=budget,
                                                     allow_odd=True), bundle.pair))
            consist.check(equivalent(lhs, neg(rhs)), x=x, y=y)
    return [t.result() for t in (exact, indep, cupok, consist)]


def check_circle_classes_on_torus(coeff: GradedCoefficients) -> List[CheckResult]:
    """x̂×ŷ for the two circle classes on T²: cup pairing and anticommutativity."""
    from .builtins import circle, torus
    T2 = torus()
    pr1, pr2 = projections(T2)
    z = circle_class(circle(), coeff)
    x, y = pullback_triple(pr1, z), pullback_triple(pr2, z)
    cupok, anti = _tallies("products-odd.circle-classes-cup-pairing", "products-odd.circle-classes-anticommute")
    xy = product_full(x, y)
    cupok.check(cohomologous(xy.c, cup(x.c, y.c)) is not None, x=x, y=y)
    anti.check(equivalent(xy, neg(product_full(y, x))), x=x, y=y)
    return [cupok.result(), anti.result()]


def check_integration_product(M: SimplicialSet, coeff: GradedCoefficients, rng: random.Random, samples: int = 2,
                              degrees=((1, 0), (2, 0), (1, 2)),
                              budget: FormDegreeBudget = DEFAULT_BUDGET) -> List[CheckResult]:
    """(∫x̂)×ŷ ~ ∫(x̂ × pr2*ŷ) for x̂ on S¹×M and ŷ on M."""
    T = Tally("ring.integration-compatible")
    bundle = circle_bundle(M)
    for _ in range(samples):
        p, q = rng.choice(degrees)
        x = random_triple(bundle.P, p, coeff, rng)
        y = random_triple(M, q, coeff, rng)
        lhs = product_full(integrate_abs(x, bundle), y, budget)
        rhs = integrate_abs(product_full(x, pullback_triple(bundle.pr2, y), budget), bundle)
        T.check(equivalent(lhs, rhs), x=x, y=y)
    return [T.result()]


def check_external_product(X: SimplicialSet, Y: SimplicialSet, coeff: GradedCoefficients, rng: random.Random,
                           samples: int = 2, degrees=(0, 2), budget: FormDegreeBudget = DEFAULT_BUDGET):
    """I(x̂×ŷ) = I(x̂)×I(ŷ) on X×Y against the cross product of cocycles."""
    T = Tally("ring.external-matches-cross-product")
    P, pr1, pr2 = product(X, Y)
    for _ in range(samples):
        x = random_triple(X, rng.choice(degrees), coeff, rng)
        y = random_triple(Y, rng.choice(degrees), coeff, rng)
        prod = external_product(x, y, P, budget=budget)
        cross = cup(pullback(pr1, x.c), pullback(pr2, y.c))
        T.check(cohomologous(prod.c, cross) is not None, x=x, y=y)
    return [T.result()]


# -- invariants -----------------------------------------------------------------

def invariants(base, n: int, coeff: GradedCoefficients) -> dict:
    """Structural data of Ê^n: E^n, the image of R in cohomology and the flat part.

    R hits the closed forms whose de Rham class is integral, a lattice of rank
    equal to the free rank of E^n.  The flat part is an extension of the
    torsion of E^n by a torus with one circle per free summand of E^{n-1}.
    """
    from .linalg import cohomology
    En = cohomology(base, n, coefficients=coeff)
    En1 = cohomology(base, n - 1, coefficients=coeff)
    return {
        "E^n": str(En),
        "E^n_json": En.to_json(),
        "rank_image_R_in_cohomology": En.rank,
        "flat_circle_factors": En1.rank,
        "flat_torsion": list(En.torsion),
    }
