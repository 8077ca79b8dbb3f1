"""
Connections in a local chart
============================

A linear connection over a chart is a Christoffel symbol Gamma(x)(y, xi).
The connector reads off vertical content; the horizontal lift is its kernel.
"""
import numpy as np

from flagcalc import connection as cn

scalar = cn.LocalConnection(1, 1, lambda x, y, xi: x * y * xi)

v = cn.TangentChartVector(x=1, xi=2, y=3, eta=4)
print("K(1, 2, 3, 4) =", cn.connector(scalar, v)[0])

h = cn.horizontal_lift(scalar, x=1, y=3, xi=2)
print("horizontal lift:", h.x[0], h.xi[0], h.y[0], h.eta[0], " connector:", cn.connector(scalar, h)[0])

# Pull back along (x, xi) -> (x^2, 2 xi).  With a constant fibre map the
# symbol becomes 2 x^3 y xi.
target = cn.LocalConnection(1, 1, lambda w, y, xi: w * y * xi)
morph = cn.BundleMorphismLocal(zeta=lambda x: x**2, d=lambda x: np.array([[2.0]]))
pulled = cn.pullback(target, morph)
print("pulled-back Gamma(1.5)(0.7, -2) =", pulled.gamma(1.5, 0.7, -2.0)[0], " expected", 2 * 1.5**3 * 0.7 * -2.0)

# When the fibre map varies with x the pulled-back symbol picks up d^-1 d'.
# The flat connection pulled back along d(x) = exp(x) is Gamma = y xi, and
# xi(x) = exp(-x) is parallel for it.
gauge = cn.pullback(cn.flat(1, 1), cn.BundleMorphismLocal(zeta=lambda x: x, d=lambda x: np.exp(x).reshape(1, 1)))
print("gauge term:", gauge.gamma(0.3, 1.0, 1.0)[0])
print("nabla exp(-x):", cn.covariant_derivative_chart(gauge, lambda x: np.exp(-x), 0.3, 1.0)[0])

# The commuting square d K = K~ T(morphism) on a random vector.
rng = np.random.default_rng(0)
vec = cn.TangentChartVector(*rng.standard_normal(4))
lhs = morph.d_at(vec.x) @ cn.connector(pulled, vec)
rhs = cn.connector(target, cn.pushforward(morph, vec))
print("commuting square residual:", abs(lhs - rhs)[0])
