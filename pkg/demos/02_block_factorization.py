"""
Block LDU factorization along a flag
====================================

An invertible g whose compressions p_j g p_j are invertible factors uniquely
as g = L M U with L block lower unitriangular, M block diagonal and U block
upper unitriangular with respect to the flag.
"""
import numpy as np
import scipy.linalg

from flagcalc.algebra import RandomSource
from flagcalc.errors import NotInOmega
from flagcalc.flag import coordinate_flag, flag_factorize, membership, random_flag

np.set_printoptions(precision=3, suppress=True)

# The 2 x 2 example worked by hand.
delta = coordinate_flag([1, 1])
f = flag_factorize(delta, np.array([[2.0, 1.0], [1.0, 1.0]]))
print("L =\n", f.lower.real, "\nM =\n", f.middle.real, "\nU =\n", f.upper.real)

# A permutation has a zero corner and cannot be factored without pivoting.
try:
    flag_factorize(delta, np.array([[0.0, 1.0], [1.0, 0.0]]))
except NotInOmega as exc:
    print("swap matrix:", type(exc).__name__)

# Random oblique flag, random g = exp(x).  The two recursion orders give
# the same factors.
src = RandomSource(7)
d = random_flag(src, 8, n=3)
g = scipy.linalg.expm(src.matrix(8, norm=1.0))
fwd = flag_factorize(d, g, order="forward")
bwd = flag_factorize(d, g, order="backward")
print("||LMU - g|| / ||g|| =", np.linalg.norm(fwd.product() - g) / np.linalg.norm(g))
print("L in N(delta_hat):", membership(d, fwd.lower, "N_hat"))
print("M in D(delta):    ", membership(d, fwd.middle, "D"))
print("U in N(delta):    ", membership(d, fwd.upper, "N"))
print("orders agree to:  ", max(np.linalg.norm(a - b) for a, b in zip(
    (fwd.lower, fwd.middle, fwd.upper), (bwd.lower, bwd.middle, bwd.upper))))
