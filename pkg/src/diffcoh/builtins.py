"""The built-in complex library used by tests, jobs and the acceptance suite."""

from __future__ import annotations

import itertools
from functools import lru_cache

from .simplicial import Pair, SimplicialSet, build, circle_pair, product


def point() -> SimplicialSet:
    return _cached("point", lambda: build({"cells": {"0": ["pt"]}, "faces": {}, "basepoint": "pt"}, "point"))


def simplex(n: int) -> SimplicialSet:
    """Standard n-simplex; cells are named by their vertex strings, e.g. "012"."""
    if not 0 <= n <= 9:
        raise ValueError("simplex dimension must lie in 0..9")

    def make():
        cells, faces = {}, {}
        for k in range(n + 1):
            names = ["".join(map(str, s)) for s in itertools.combinations(range(n + 1), k + 1)]
            cells[str(k)] = names
            if k:
                for c in names:
                    faces[c] = [c[:i] + c[i + 1:] for i in range(k + 1)]
        return build({"cells": cells, "faces": faces, "basepoint": "0"}, f"Δ{n}")
    return _cached(f"simplex{n}", make)


def boundary_triangle() -> SimplicialSet:
    return _cached("sphere-boundary", lambda: build({
        "cells": {"0": ["0", "1", "2"], "1": ["01", "02", "12"]},
        "faces": {"01": ["1", "0"], "02": ["2", "0"], "12": ["2", "1"]},
        "basepoint": "0"}, "∂Δ2"))


def circle() -> SimplicialSet:
    """One vertex v, one edge e."""
    return _cached("circle", lambda: build({
        "cells": {"0": ["v"], "1": ["e"]},
        "faces": {"e": [["", "v"], ["", "v"]]},
        "basepoint": "v"}, "S¹"))


def torus() -> SimplicialSet:
    return _cached("torus", lambda: product(circle(), circle(), name="T²")[0])


def rp2() -> SimplicialSet:
    """Two-triangle projective plane: H² = ℤ/2."""
    return _cached("rp2", lambda: build({
        "cells": {"0": ["v", "w"], "1": ["a", "b", "c"], "2": ["U", "L"]},
        "faces": {"a": ["w", "v"], "b": ["w", "v"], "c": ["w", "w"],
                  "U": ["c", "b", "a"], "L": ["c", "a", "b"]},
        "basepoint": "v"}, "RP²"))


def klein() -> SimplicialSet:
    return _cached("klein", lambda: build({
        "cells": {"0": ["v"], "1": ["a", "b", "c"], "2": ["T1", "T2"]},
        "faces": {"a": ["v", "v"], "b": ["v", "v"], "c": ["v", "v"],
                  "T1": ["b", "a", "c"], "T2": ["a", "c", "b"]},
        "basepoint": "v"}, "K"))


def disk_pair() -> Pair:
    def make():
        D = simplex(2)
        return Pair.from_subcells(D, ["0", "1", "2", "01", "02", "12"], name="∂Δ2")
    return _cached("disk-pair", make)


def torus_pair() -> Pair:
    """(S¹×S¹, 1×S¹) as the circle pair over S¹."""
    return _cached("torus-pair", lambda: circle_pair(circle())[0])


COMPLEXES = {
    "point": point,
    "interval": lambda: simplex(1),
    "simplex1": lambda: simplex(1),
    "simplex2": lambda: simplex(2),
    "simplex3": lambda: simplex(3),
    "sphere-boundary": boundary_triangle,
    "circle": circle,
    "torus": torus,
    "rp2": rp2,
    "klein": klein,
}

PAIRS = {
    "disk-pair": disk_pair,
    "torus-pair": torus_pair,
}


def lookup(name: str):
    """A named built-in complex or pair."""
    if name in COMPLEXES:
        return COMPLEXES[name]()
    if name in PAIRS:
        return PAIRS[name]()
    if name.startswith("simplex") and name[7:].isdigit():
        return simplex(int(name[7:]))
    raise KeyError(f"unknown complex {name!r}; known: {sorted(COMPLEXES) + sorted(PAIRS)}")


_STORE: dict = {}


def _cached(key, make):
    obj = _STORE.get(key)
    if obj is None:
        obj = make()
        _STORE[key] = obj
    return obj
