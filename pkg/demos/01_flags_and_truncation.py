"""
Flags of idempotents and the diagonal truncation
================================================

A flag is a strictly increasing chain of idempotents.  Its blocks
q_j = p_j - p_{j-1} form a complete orthogonal system, and most of the
calculus is block selection.
"""
import numpy as np

from flagcalc.algebra import RandomSource
from flagcalc.flag import (
    alpha,
    alpha_inverse,
    canonical_projection_E,
    coordinate_flag,
    diagonal_truncation,
    kernel_split,
    make_flag,
    membership,
    random_flag,
    triangular_split,
)

np.set_printoptions(precision=3, suppress=True)

# The coordinate flag in M_3 has blocks e_11, e_22, e_33.
delta = coordinate_flag([1, 1, 1])
print("ranks of the blocks:", delta.ranks)

# Diagonal truncation keeps the block-diagonal part...
x = np.arange(1, 10, dtype=float).reshape(3, 3)
print("Phi(x) =\n", diagonal_truncation(delta, x).real)

# ...and E keeps the block upper triangular part.
print("E(x) =\n", canonical_projection_E(delta, x).real)

# Oblique flags work the same way.  Here p = [[1, 1], [0, 0]] is an
# idempotent that is not self-adjoint.
oblique = make_flag([np.array([[1.0, 1.0], [0.0, 0.0]])])
y = np.array([[1.0, 2.0], [3.0, 4.0]])
s = triangular_split(oblique, y)
print("oblique split, lower/diagonal/upper:")
print(s.lower.real, s.diagonal.real, s.upper.real, sep="\n")
print("reconstruction error:", np.linalg.norm(s.lower + s.diagonal + s.upper - y))

# The off-diagonal part of any matrix splits into a strictly lower and a
# strictly upper piece.
src = RandomSource(1)
d = random_flag(src, 6, n=3)
z = src.matrix(6)
z = z - diagonal_truncation(d, z)
low, up = kernel_split(d, z)
print("lower piece in TN(delta_hat):", membership(d, low, "TN_hat"))
print("upper piece in TN(delta):   ", membership(d, up, "TN"))

# Flags and complete orthogonal systems are two views of the same thing.
q = alpha_inverse(d)
back = alpha(q)
print("alpha round trip exact:", all(np.array_equal(a, b) for a, b in zip(back.projections, d.projections)))
