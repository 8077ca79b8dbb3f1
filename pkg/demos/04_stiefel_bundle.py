"""
The Stiefel bundle over a flag manifold
=======================================

Points v = g p_n project to the flag of ranges ran(v p_j).  Block upper
triangular invertibles act on the right without moving the base point,
and the unitary reduction picks a partial isometry in each fibre.
"""
import numpy as np

from flagcalc.algebra import RandomSource, dagger, identity, random_unitary
from flagcalc.flag import random_flag
from flagcalc.stiefel import (
    random_structure_element,
    sigma_delta,
    stiefel_from_group,
    structure_action,
    unitary_reduce,
)

src = RandomSource(3)
m = 6
delta = random_flag(src, m, n=2, orthogonal=True)
print("template ranks:", delta.ranks)

g = (identity(m) + src.matrix(m, norm=0.5)) @ random_unitary(src, m)
v = stiefel_from_group(g, delta)
base = sigma_delta(v)

a = random_structure_element(src, delta)
moved = structure_action(v, a)
print("fibre moved by", np.linalg.norm(moved.v - v.v))
print("base point moved by", max(np.linalg.norm(p - q) for p, q in zip(sigma_delta(moved).projections, base.projections)))

w = unitary_reduce(v)
print("||w* w - p_n|| =", np.linalg.norm(dagger(w.v) @ w.v - delta.projections[-1]))
print("base point of w differs by", max(np.linalg.norm(p - q) for p, q in zip(sigma_delta(w).projections, base.projections)))
