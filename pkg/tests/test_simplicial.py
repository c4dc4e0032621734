import pytest

from diffcoh import builtins as B
from diffcoh.simplicial import (
    PresentationError, Pair, build, circle_pair, constant_map, cylinder, diagonal, identity_map,
    pair_map, product, projections, twist, word_to_eta, eta_to_word, boundary_matrix,
)


def test_builtin_counts():
    assert B.point().counts() == [1]
    assert B.circle().counts() == [1, 1]
    assert B.simplex(2).counts() == [3, 3, 1]
    assert B.rp2().counts() == [2, 3, 2]
    assert B.klein().counts() == [1, 3, 2]
    # the product triangulation of T² has a diagonal edge
    assert B.torus().counts() == [1, 3, 2]


def test_product_counts():
    I = B.simplex(1)
    P, _, _ = product(I, I)
    assert P.counts() == [4, 5, 2]
    C, _, _, _ = cylinder(B.torus())
    assert C.counts() == [2, 10, 14, 6]
    T2 = B.torus()
    T4, _, _ = product(T2, T2)
    assert T4.counts() == [1, 15, 50, 60, 24]


def test_products_validate():
    for X, Y in [(B.circle(), B.simplex(2)), (B.rp2(), B.simplex(1)), (B.torus(), B.circle())]:
        P, _, _ = product(X, Y)
        P.validate()


@pytest.mark.parametrize("name", ["point", "circle", "torus", "rp2", "klein", "simplex3", "sphere-boundary"])
def test_boundary_squares_to_zero(name):
    X = B.lookup(name)
    for n in range(2, X.dimension + 1):
        d1, _, _ = boundary_matrix(X, n)
        d0, _, _ = boundary_matrix(X, n - 1)
        comp = {}
        for (i, j), v in d1.items():
            for (k, i2), w in d0.items():
                if i2 == i:
                    comp[(k, j)] = comp.get((k, j), 0) + v * w
        assert all(v == 0 for v in comp.values())


def test_word_roundtrip():
    for eta in [(0,), (0, 0), (0, 1, 1), (0, 0, 1, 2)]:
        assert word_to_eta(eta_to_word(eta), eta[-1]) == eta


def test_face_identities_on_degenerate_simplices():
    X = B.rp2()
    for c in X.all_cells():
        x = X.nondeg(c)
        for i in range(len(x[1])):
            s = X.degeneracy(x, i)
            assert X.face(s, i) == x
            assert X.face(s, i + 1) == x


@pytest.mark.parametrize("pres, kind", [
    ({"cells": {"0": ["v"], "1": ["e"]}, "faces": {"e": ["v", "w"]}}, "dangling face reference"),
    ({"cells": {"0": ["v"], "1": ["e"]}, "faces": {"e": ["v"]}}, "dimension mismatch"),
    ({"cells": {"0": ["a", "b", "c"], "1": ["x", "y", "z"], "2": ["T"]},
      "faces": {"x": ["b", "a"], "y": ["c", "a"], "z": ["c", "b"], "T": ["z", "x", "y"]}}, "identity violation"),
])
def test_presentation_errors(pres, kind):
    with pytest.raises(PresentationError, match=kind):
        build(pres).validate()


def test_presentation_roundtrip():
    for X in [B.rp2(), B.klein(), B.circle()]:
        Y = build(X.to_presentation())
        assert Y.counts() == X.counts()
        assert Y.faces == X.faces


def test_maps_are_simplicial():
    T = B.torus()
    p1, p2 = projections(T)
    assert p1.check() is None and p2.check() is None
    d = diagonal(B.circle())
    assert d.check() is None
    sw = twist(T, T)
    assert sw.compose(sw).same_as(identity_map(T))
    assert pair_map(p1, p2, T).same_as(identity_map(T))


def test_cylinder_ends():
    X = B.rp2()
    C, i0, i1, pr = cylinder(X)
    for f in (i0, i1):
        assert f.check() is None
        assert pr.compose(f).same_as(identity_map(X))


def test_pairs():
    P = B.disk_pair()
    assert P.sub.counts() == [3, 3]
    assert P.rel_cells(2) == ["012"] and P.rel_cells(1) == []
    with pytest.raises(PresentationError, match="not closed"):
        Pair.from_subcells(B.simplex(2), ["01"])
    pair, i, pr2 = circle_pair(B.circle())
    assert pr2.compose(i).same_as(identity_map(B.circle()))
    assert pair.sub.counts() == [1, 1]
    assert Pair.empty(B.torus()).is_absolute()
