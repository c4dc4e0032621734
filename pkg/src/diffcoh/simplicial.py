"""Finite simplicial sets, simplicial maps, products, cylinders and pairs.

A simplex of a simplicial set is stored as ``(cell, eta)`` where ``cell`` names
a nondegenerate simplex and ``eta`` is a monotone surjection
``[n] -> [dim cell]`` written as the tuple of its values.  The simplex is
nondegenerate exactly when ``eta`` is the identity.  Every simplicial operator
is a monotone map ``theta: [m] -> [n]`` and acts by precomposition followed by
normalisation through the face table.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

Simplex = Tuple[str, Tuple[int, ...]]


class PresentationError(ValueError):
    """A presentation violates the simplicial-set axioms."""


def identity(k: int) -> Tuple[int, ...]:
    return tuple(range(k + 1))


def degeneracy_set(eta: Sequence[int]) -> frozenset:
    return frozenset(j for j in range(len(eta) - 1) if eta[j] == eta[j + 1])


def surjection_from_set(n: int, dset: Iterable[int]) -> Tuple[int, ...]:
    """The monotone surjection on ``[n]`` collapsing exactly ``j ~ j+1`` for j in dset."""
    dset = set(dset)
    out = [0]
    for j in range(n):
        out.append(out[-1] if j in dset else out[-1] + 1)
    return tuple(out)


def coface(n: int, i: int) -> Tuple[int, ...]:
    """delta_i : [n-1] -> [n], skipping i."""
    return tuple(j for j in range(n + 1) if j != i)


def codegeneracy(n: int, i: int) -> Tuple[int, ...]:
    """sigma_i : [n+1] -> [n], hitting i twice."""
    return tuple(j if j <= i else j - 1 for j in range(n + 2))


def word_to_eta(word: str, base_dim: int) -> Tuple[int, ...]:
    idx = parse_word(word)
    return surjection_from_set(base_dim + len(idx), idx)


def parse_word(word: str) -> List[int]:
    word = word.strip()
    if not word:
        return []
    parts = word.split(",") if "," in word else list(word)
    idx = [int(p) for p in parts]
    if sorted(set(idx), reverse=True) != idx:
        raise PresentationError(f"degeneracy word {word!r} is not in normal form (strictly decreasing)")
    return idx


def eta_to_word(eta: Sequence[int]) -> str:
    idx = sorted(degeneracy_set(eta), reverse=True)
    if any(i >= 10 for i in idx):
        return ",".join(str(i) for i in idx)
    return "".join(str(i) for i in idx)


def simplex_label(x: Simplex) -> str:
    cell, eta = x
    idx = sorted(degeneracy_set(eta), reverse=True)
    if not idx:
        return cell
    return "".join(f"s{i}" for i in idx) + " " + cell


def _image_factor(theta: Sequence[int]):
    """Split a monotone map into (sorted image, surjection onto its positions)."""
    image = sorted(set(theta))
    pos = {v: p for p, v in enumerate(image)}
    return tuple(image), tuple(pos[v] for v in theta)


class SimplicialSet:
    """A finite simplicial set given by nondegenerate cells and their faces."""

    def __init__(self, name: str, cells: Dict[int, List[str]], faces: Dict[str, Tuple[Simplex, ...]],
                 basepoint: Optional[str] = None, *, validate: bool = True, bare: Optional[set] = None):
        self.name = name
        self.cells = {int(k): list(v) for k, v in sorted(cells.items())}
        self.dim_of: Dict[str, int] = {}
        for k, names in self.cells.items():
            for c in names:
                if c in self.dim_of:
                    raise PresentationError(f"duplicate cell {c!r}")
                self.dim_of[c] = k
        self.faces = {c: tuple((z, tuple(e)) for z, e in fs) for c, fs in faces.items()}
        for c in self.dim_of:
            self.faces.setdefault(c, ())
        self.basepoint = basepoint
        self._bare = set(bare or ())
        self._restrict_memo: Dict[Tuple[str, Tuple[int, ...]], Simplex] = {}
        self._cache: dict = {}
        if validate:
            self.validate()

    # -- basic data -------------------------------------------------------
    @property
    def dimension(self) -> int:
        return max((k for k, v in self.cells.items() if v), default=-1)

    def cells_of(self, k: int) -> List[str]:
        return self.cells.get(k, [])

    def all_cells(self) -> List[str]:
        return [c for k in sorted(self.cells) for c in self.cells[k]]

    def counts(self) -> List[int]:
        return [len(self.cells_of(k)) for k in range(self.dimension + 1)]

    def nondeg(self, cell: str) -> Simplex:
        return (cell, identity(self.dim_of[cell]))

    def __repr__(self):
        return f"SimplicialSet({self.name!r}, counts={self.counts()})"

    # -- operators --------------------------------------------------------
    def restrict(self, cell: str, verts: Tuple[int, ...]) -> Simplex:
        """The face of ``cell`` spanned by the sorted vertex tuple ``verts``."""
        k = self.dim_of[cell]
        if len(verts) == k + 1:
            return (cell, identity(k))
        key = (cell, verts)
        hit = self._restrict_memo.get(key)
        if hit is not None:
            return hit
        vs = set(verts)
        i = max(j for j in range(k + 1) if j not in vs)
        z = self.faces[cell][i]
        theta = tuple(v if v < i else v - 1 for v in verts)
        out = self.apply(z, theta)
        self._restrict_memo[key] = out
        return out

    def apply(self, x: Simplex, theta: Sequence[int]) -> Simplex:
        """Act on simplex ``x`` by the monotone operator ``theta``."""
        cell, eta = x
        comp = tuple(eta[t] for t in theta)
        image, sigma = _image_factor(comp)
        z, zeta = self.restrict(cell, image)
        return (z, tuple(zeta[s] for s in sigma))

    def face(self, x: Simplex, i: int) -> Simplex:
        return self.apply(x, coface(len(x[1]) - 1, i))

    def degeneracy(self, x: Simplex, i: int) -> Simplex:
        return self.apply(x, codegeneracy(len(x[1]) - 1, i))

    def vertex(self, x: Simplex, j: int) -> Simplex:
        return self.apply(x, (j,))

    # -- validation -------------------------------------------------------
    def validate(self) -> None:
        for c, k in self.dim_of.items():
            if k == 0:
                if self.faces.get(c):
                    raise PresentationError(f"dimension mismatch: vertex {c!r} has faces")
                continue
            fs = self.faces.get(c)
            if fs is None or len(fs) != k + 1:
                raise PresentationError(f"dimension mismatch: cell {c!r} of dimension {k} needs {k + 1} faces")
            for i, (z, eta) in enumerate(fs):
                if z not in self.dim_of:
                    raise PresentationError(f"dangling face reference: d{i}({c}) -> {z!r}")
                if len(eta) != k:
                    raise PresentationError(f"dimension mismatch: d{i}({c}) must have dimension {k - 1}")
                dz = self.dim_of[z]
                if dz > k - 1:
                    raise PresentationError(f"dimension mismatch: d{i}({c}) targets {z!r} of dimension {dz}")
                if eta[0] != 0 or eta[-1] != dz or any(b - a not in (0, 1) for a, b in zip(eta, eta[1:])):
                    raise PresentationError(f"dimension mismatch: d{i}({c}) has a bad degeneracy word")
        for c in self.dim_of:
            if c not in self.faces:
                self.faces[c] = ()
        extra = set(self.faces) - set(self.dim_of)
        if extra:
            raise PresentationError(f"dangling face reference: faces given for unknown cells {sorted(extra)}")
        if self.basepoint is not None and self.dim_of.get(self.basepoint) != 0:
            raise PresentationError(f"basepoint {self.basepoint!r} is not a vertex")
        for k in sorted(self.cells):
            if k < 2:
                continue
            for c in self.cells[k]:
                x = self.nondeg(c)
                for j in range(k + 1):
                    for i in range(j):
                        lhs = self.face(self.faces[c][j], i)
                        rhs = self.face(self.faces[c][i], j - 1)
                        if lhs != rhs:
                            raise PresentationError(
                                f"identity violation on {c!r}: d{i}d{j} = {simplex_label(lhs)} "
                                f"but d{j - 1}d{i} = {simplex_label(rhs)}")
                del x

    # -- presentations ----------------------------------------------------
    def to_presentation(self) -> dict:
        out = {"cells": {str(k): list(v) for k, v in self.cells.items() if v}, "faces": {}}
        for c in self.all_cells():
            if self.dim_of[c] == 0:
                continue
            if c in self._bare:
                out["faces"][c] = [z for z, _ in self.faces[c]]
            else:
                out["faces"][c] = [[eta_to_word(e), z] for z, e in self.faces[c]]
        if self.basepoint is not None:
            out["basepoint"] = self.basepoint
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_presentation(), sort_keys=True)


def build(presentation: dict, name: str = "X") -> SimplicialSet:
    """Validate and build a simplicial set from its JSON presentation."""
    if not isinstance(presentation, dict) or "cells" not in presentation:
        raise PresentationError("presentation needs a 'cells' mapping")
    cells = {int(k): list(v) for k, v in presentation["cells"].items()}
    dim_of = {c: k for k, v in cells.items() for c in v}
    faces = {}
    bare = set()
    for c, fl in presentation.get("faces", {}).items():
        if c not in dim_of:
            raise PresentationError(f"dangling face reference: faces given for unknown cell {c!r}")
        k = dim_of[c]
        entries = []
        all_bare = all(isinstance(f, str) for f in fl)
        if all_bare:
            bare.add(c)
        for i, f in enumerate(fl):
            if isinstance(f, str):
                word, z = "", f
            else:
                word, z = f
            if z not in dim_of:
                raise PresentationError(f"dangling face reference: d{i}({c}) -> {z!r}")
            try:
                eta = word_to_eta(word, dim_of[z])
            except ValueError as exc:
                raise PresentationError(str(exc)) from None
            if len(eta) != k:
                raise PresentationError(
                    f"dimension mismatch: d{i}({c}) = {word!r}{z} has dimension {len(eta) - 1}, expected {k - 1}")
            entries.append((z, eta))
        faces[c] = tuple(entries)
    return SimplicialSet(presentation.get("name", name), cells, faces, presentation.get("basepoint"), bare=bare)


# -- maps ---------------------------------------------------------------------

class SimplicialMap:
    """A simplicial map given on nondegenerate cells."""

    def __init__(self, source: SimplicialSet, target: SimplicialSet, assignment: Dict[str, Simplex],
                 name: str = "f"):
        self.source = source
        self.target = target
        self.assignment = dict(assignment)
        self.name = name

    def __call__(self, x: Simplex) -> Simplex:
        y, zeta = self.assignment[x[0]]
        return (y, tuple(zeta[e] for e in x[1]))

    def of_cell(self, cell: str) -> Simplex:
        return self.assignment[cell]

    def compose(self, inner: "SimplicialMap") -> "SimplicialMap":
        """self ∘ inner."""
        return SimplicialMap(inner.source, self.target,
                             {c: self(inner.of_cell(c)) for c in inner.source.all_cells()},
                             name=f"{self.name}∘{inner.name}")

    def check(self) -> Optional[str]:
        """Exhaustive face check; returns a description of the first failure."""
        S, T = self.source, self.target
        for c in S.all_cells():
            if c not in self.assignment:
                return f"cell {c!r} unassigned"
            y = self.assignment[c]
            if len(y[1]) != S.dim_of[c] + 1:
                return f"cell {c!r} sent to wrong dimension"
            for i in range(S.dim_of[c] + 1 if S.dim_of[c] > 0 else 0):
                if self(S.faces[c][i]) != T.face(y, i):
                    return f"face d{i} of {c!r} not preserved"
        if S.basepoint is not None and T.basepoint is not None:
            if self.assignment[S.basepoint] != (T.basepoint, (0,)):
                return "basepoint not preserved"
        return None

    def same_as(self, other: "SimplicialMap") -> bool:
        return all(self.of_cell(c) == other.of_cell(c) for c in self.source.all_cells())


def identity_map(X: SimplicialSet) -> SimplicialMap:
    return SimplicialMap(X, X, {c: X.nondeg(c) for c in X.all_cells()}, name="id")


def constant_map(X: SimplicialSet, Y: SimplicialSet, vertex: str) -> SimplicialMap:
    return SimplicialMap(X, Y, {c: (vertex, (0,) * (X.dim_of[c] + 1)) for c in X.all_cells()},
                         name=f"const_{vertex}")


# -- products -----------------------------------------------------------------

class ProductSet(SimplicialSet):
    """X × Y with cells the nondegenerate pairs of simplices."""

    factors: Tuple[SimplicialSet, SimplicialSet]
    coords: Dict[str, Tuple[Simplex, Simplex]]
    lookup: Dict[Tuple[Simplex, Simplex], str]

    def pair_simplex(self, a: Simplex, b: Simplex) -> Simplex:
        """Normalise a pair of equal-dimension simplices into a simplex of the product."""
        common = degeneracy_set(a[1]) & degeneracy_set(b[1])
        n = len(a[1]) - 1
        if common:
            sigma = surjection_from_set(n, common)
            keep = [j for j in range(n + 1) if j == 0 or (j - 1) not in common]
            a = (a[0], tuple(a[1][j] for j in keep))
            b = (b[0], tuple(b[1][j] for j in keep))
        else:
            sigma = identity(n)
        return (self.lookup[(a, b)], sigma)

    def split(self, x: Simplex) -> Tuple[Simplex, Simplex]:
        a, b = self.coords[x[0]]
        X, Y = self.factors
        return X.apply(a, x[1]), Y.apply(b, x[1])


def product(X: SimplicialSet, Y: SimplicialSet, name: Optional[str] = None):
    """Return (X×Y, pr1, pr2)."""
    P = ProductSet.__new__(ProductSet)
    cells: Dict[int, List[str]] = {}
    coords: Dict[str, Tuple[Simplex, Simplex]] = {}
    lookup: Dict[Tuple[Simplex, Simplex], str] = {}
    top = X.dimension + Y.dimension
    for n in range(top + 1):
        names = []
        for p, q in itertools.product(range(min(n, X.dimension) + 1), range(min(n, Y.dimension) + 1)):
            if p + q < n:
                continue
            for da in itertools.combinations(range(n), n - p):
                rest = [j for j in range(n) if j not in da]
                for db in itertools.combinations(rest, n - q):
                    ea = surjection_from_set(n, da)
                    eb = surjection_from_set(n, db)
                    for x in X.cells_of(p):
                        for y in Y.cells_of(q):
                            a, b = (x, ea), (y, eb)
                            label = f"({simplex_label(a)},{simplex_label(b)})"
                            coords[label] = (a, b)
                            lookup[(a, b)] = label
                            names.append(label)
        cells[n] = names
    P.factors = (X, Y)
    P.coords = coords
    P.lookup = lookup
    faces: Dict[str, Tuple[Simplex, ...]] = {}
    for n in range(1, top + 1):
        for c in cells[n]:
            a, b = coords[c]
            fs = []
            for i in range(n + 1):
                fa, fb = X.face(a, i), Y.face(b, i)
                fs.append(P.pair_simplex(fa, fb))
            faces[c] = tuple(fs)
    bp = None
    if X.basepoint is not None and Y.basepoint is not None:
        bp = lookup[((X.basepoint, (0,)), (Y.basepoint, (0,)))]
    SimplicialSet.__init__(P, name or f"{X.name}×{Y.name}", cells, faces, bp, validate=False)
    pr1 = SimplicialMap(P, X, {c: coords[c][0] for c in P.all_cells()}, name="pr1")
    pr2 = SimplicialMap(P, Y, {c: coords[c][1] for c in P.all_cells()}, name="pr2")
    return P, pr1, pr2


def pair_map(f: SimplicialMap, g: SimplicialMap, P: ProductSet) -> SimplicialMap:
    """The map (f, g): Z → X×Y into an existing product P."""
    Z = f.source
    return SimplicialMap(Z, P, {c: P.pair_simplex(f.of_cell(c), g.of_cell(c)) for c in Z.all_cells()},
                         name=f"({f.name},{g.name})")


def product_of_maps(f: SimplicialMap, g: SimplicialMap, source: ProductSet, target: ProductSet) -> SimplicialMap:
    pr1 = SimplicialMap(source, source.factors[0], {c: source.coords[c][0] for c in source.all_cells()})
    pr2 = SimplicialMap(source, source.factors[1], {c: source.coords[c][1] for c in source.all_cells()})
    return pair_map(f.compose(pr1), g.compose(pr2), target)


def projections(P: ProductSet):
    pr1 = SimplicialMap(P, P.factors[0], {c: P.coords[c][0] for c in P.all_cells()}, name="pr1")
    pr2 = SimplicialMap(P, P.factors[1], {c: P.coords[c][1] for c in P.all_cells()}, name="pr2")
    return pr1, pr2


def twist(P: ProductSet, Q: Optional[ProductSet] = None) -> SimplicialMap:
    """X×Y → Y×X swapping the factors."""
    if Q is None:
        Q, _, _ = product(P.factors[1], P.factors[0])
    pr1, pr2 = projections(P)
    return pair_map(pr2, pr1, Q)


def diagonal(X: SimplicialSet, XX: Optional[ProductSet] = None):
    if XX is None:
        XX, _, _ = product(X, X)
    idm = identity_map(X)
    return pair_map(idm, idm, XX)


def associator(PQ: ProductSet, target: ProductSet) -> SimplicialMap:
    """(X×Y)×Z → X×(Y×Z)."""
    XY = PQ.factors[0]
    p1, p2 = projections(PQ)
    q1, q2 = projections(XY)
    inner = pair_map(q2.compose(p1), p2, target.factors[1])
    return pair_map(q1.compose(p1), inner, target)


def cylinder(X: SimplicialSet):
    """Return (Δ¹×X, i0, i1, pr)."""
    from .builtins import simplex
    I = simplex(1)
    C, _, pr = product(I, X, name=f"I×{X.name}")
    C.basepoint = None  # i1 is not pointed
    idm = identity_map(X)
    i0 = pair_map(constant_map(X, I, "0"), idm, C)
    i1 = pair_map(constant_map(X, I, "1"), idm, C)
    i0.name, i1.name = "i0", "i1"
    return C, i0, i1, pr


# -- pairs --------------------------------------------------------------------

@dataclass
class Pair:
    """A pair (ambient, sub) with sub a face-closed set of cells of ambient."""

    ambient: SimplicialSet
    sub: SimplicialSet
    inclusion: SimplicialMap
    sub_cells: frozenset = field(default_factory=frozenset)

    @classmethod
    def from_subcells(cls, ambient: SimplicialSet, names: Iterable[str], name: Optional[str] = None) -> "Pair":
        names = set(names)
        for c in names:
            for z, _ in ambient.faces[c]:
                if z not in names:
                    raise PresentationError(f"subcomplex not closed: face {z!r} of {c!r} missing")
        cells = {k: [c for c in v if c in names] for k, v in ambient.cells.items()}
        faces = {c: ambient.faces[c] for c in names}
        bp = ambient.basepoint if ambient.basepoint in names else None
        sub = SimplicialSet(name or f"sub({ambient.name})", cells, faces, bp, validate=False)
        inc = SimplicialMap(sub, ambient, {c: ambient.nondeg(c) for c in sub.all_cells()}, name="incl")
        return cls(ambient, sub, inc, frozenset(names))

    @classmethod
    def empty(cls, X: SimplicialSet) -> "Pair":
        return cls.from_subcells(X, [], name="∅")

    def is_absolute(self) -> bool:
        return not self.sub_cells

    def rel_cells(self, k: int) -> List[str]:
        return [c for c in self.ambient.cells_of(k) if c not in self.sub_cells]


def as_pair(base) -> Pair:
    if isinstance(base, Pair):
        return base
    p = base._cache.get("pair")
    if p is None:
        p = Pair.empty(base)
        base._cache["pair"] = p
    return p


def ambient_of(base) -> SimplicialSet:
    return base.ambient if isinstance(base, Pair) else base


def circle_pair(M: SimplicialSet):
    """(S¹×M, 1×M) with the maps i: M → S¹×M and pr2: S¹×M → M."""
    from .builtins import circle
    S = circle()
    P, _, pr2 = product(S, M, name=f"S¹×{M.name}")
    sub = [c for c in P.all_cells() if P.coords[c][0][0] == S.basepoint]
    pair = Pair.from_subcells(P, sub, name=f"1×{M.name}")
    i = pair_map(constant_map(M, S, S.basepoint), identity_map(M), P)
    i.name = "i"
    return pair, i, pr2


def boundary_matrix(base, n: int):
    """Matrix of ∂: C_n → C_{n-1} on normalized relative chains, as a dict."""
    pair = as_pair(base)
    X = pair.ambient
    rows = {c: r for r, c in enumerate(pair.rel_cells(n - 1))}
    cols = pair.rel_cells(n)
    entries: Dict[Tuple[int, int], int] = {}
    if n >= 1:
        for j, c in enumerate(cols):
            for i, (z, eta) in enumerate(X.faces[c]):
                if eta == identity(n - 1) and z in rows:
                    key = (rows[z], j)
                    v = entries.get(key, 0) + (-1) ** i
                    if v:
                        entries[key] = v
                    else:
                        entries.pop(key, None)
    return entries, len(rows), len(cols)
