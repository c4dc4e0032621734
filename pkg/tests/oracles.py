"""Independent oracles used by the tests.

The cylinder oracle decides equivalence straight from the definition: it looks
for a triple on I×X restricting to the two given triples, by one mixed
integral/rational solve over all cells of the cylinder.
"""

from fractions import Fraction

from diffcoh.cochains import Cochain, coboundary, cylinder_pair, pullback, slots
from diffcoh.forms import deRham, pullback_form
from diffcoh.linalg import MixedSolution, SparseMatrix, solve_mixed


def _matrix(fn, src_slots, make, rows_of):
    """Matrix of a linear map given on basis cochains."""
    cols = {}
    for j, _ in enumerate(src_slots):
        vec = [0] * len(src_slots)
        vec[j] = 1
        cols[j] = rows_of(fn(make(vec)))
    return None, {(i, j): v for j, col in cols.items() for i, v in enumerate(col) if v}


def cylinder_equivalent(t0, t1):
    """True iff some triple (C, pr*ω, H) on the cylinder restricts to t0 and t1."""
    if t0.omega != t1.omega:
        return False
    base, n, coeff = t0.base, t0.n, t0.coeff
    cyl, i0, i1, pr = cylinder_pair(base)
    sC, sH = slots(cyl, n, coeff), slots(cyl, n - 1, coeff)

    def mkC(v):
        return Cochain.from_vector(cyl, n, coeff, v)

    def mkH(v):
        return Cochain.from_vector(cyl, n - 1, coeff, v, rational=True)

    blocks_int, blocks_rat, rhs = [], [], []

    def add_block(f_int, f_rat, target):
        rows = len(target)
        ents_i, ents_r = {}, {}
        if f_int is not None:
            _, ents_i = _matrix(f_int, sC, mkC, lambda u: u.to_vector())
        if f_rat is not None:
            _, ents_r = _matrix(f_rat, sH, mkH, lambda u: u.to_vector())
        blocks_int.append((rows, ents_i))
        blocks_rat.append((rows, ents_r))
        rhs.extend(target)

    zero = lambda k: [0] * len(slots(cyl, k, coeff))
    add_block(lambda C: coboundary(C), None, zero(n + 1))
    add_block(lambda C: pullback(i0, C, base), None, t0.c.to_vector())
    add_block(lambda C: pullback(i1, C, base), None, t1.c.to_vector())
    target = deRham(pullback_form(pr, t0.omega, cyl)).to_vector()
    add_block(lambda C: C.rho(), lambda H: coboundary(H), target)
    add_block(None, lambda H: pullback(i0, H, base), t0.h.to_vector())
    add_block(None, lambda H: pullback(i1, H, base), t1.h.to_vector())

    def stack(blocks, ncols):
        ents, off = {}, 0
        for rows, e in blocks:
            for (i, j), v in e.items():
                ents[(i + off, j)] = v
            off += rows
        return SparseMatrix(off, ncols, ents)

    A_int = stack(blocks_int, len(sC))
    A_rat = stack(blocks_rat, len(sH))
    return isinstance(solve_mixed(A_int, A_rat, [Fraction(x) for x in rhs]), MixedSolution)
