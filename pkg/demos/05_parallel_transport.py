"""
Horizontal lifts and parallel transport
=======================================

On U(n) -> Fl(delta) the connection form is the block-diagonal part of
u* X.  A curve of flags lifts to a curve of unitaries whose increments have
no block-diagonal component.
"""
import numpy as np

from flagcalc.algebra import RandomSource, dagger, identity, random_skew, random_unitary
from flagcalc.flag import random_flag
from flagcalc.stiefel import (
    base_velocity,
    conjugation_curve,
    connection_form_omega,
    horizontal_lift_flag,
    transport_frames,
    vertical_part,
)
from flagcalc.suites import rotation, rotation_curve

src = RandomSource(11)
m = 5
delta = random_flag(src, m, n=2, orthogonal=True)

# Split a tangent vector into vertical and horizontal parts.
u = random_unitary(src, m)
X = u @ random_skew(src, m, 1.0)
V = vertical_part(delta, u, X)
H = horizontal_lift_flag(delta, base_velocity(delta, u, X), u)
print("||X - (V + H)|| =", np.linalg.norm(X - V - H))
print("omega(H) =", np.linalg.norm(connection_form_omega(delta, u, H)))

# Transport along a random curve of flags.
curve = conjugation_curve(delta, random_skew(src, m, 1.0), 40, u)
r = transport_frames(delta, curve, u)
print("vertical content of increments:", r.max_vertical_residual)
print("distance to the final flag:    ", r.final_flag_residual)
print("unitarity defect:", np.linalg.norm(dagger(r.u) @ r.u - identity(m)))

# The rotating line in R^2: its horizontal lift is the rotation itself, and
# the integrator reproduces it to rounding for every step count.
for n in (50, 100, 200, 400):
    d2, c2 = rotation_curve(1.0, n)
    err = np.linalg.norm(transport_frames(d2, c2, identity(2)).u - rotation(1.0))
    print(f"N = {n:4d}: ||u_N - R(1)|| = {err:.1e}")
