"""Linear connections in local trivializations.

Over a chart ``U x E`` a linear connection is encoded by its Christoffel
symbol ``Gamma(x)(y, xi)``, bilinear in the base vector ``y`` and fiber vector
``xi``.  The connector and the horizontal lift are then

    K(x, xi, y, eta)     = eta + Gamma(x)(y, xi)
    gamma((x, y), xi)    = (x, xi, y, -Gamma(x)(y, xi))

and the vertical lift is ``(xi, eta) -> (x, xi, 0, eta)``.  The remaining
presentations of the same connection (the idempotent on TD and the map into
the fibered product) are algebraic combinations of these two, so they are
not stored separately.

Callables held by :class:`LocalConnection` and :class:`BundleMorphismLocal`
must be pure; instances are shared freely.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .algebra import DEFAULT_TOL, Tolerance, as_matrix
from .errors import DimensionMismatch, NotInvertible, SingularFiberMap

Christoffel = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]

# central-difference step factor: h = FD_STEP * (1 + ||x||)
FD_STEP = 1e-5


def _vec(v) -> np.ndarray:
    a = np.atleast_1d(np.asarray(v))
    if a.dtype.kind not in "fc":
        a = a.astype(float)
    return a


def fd_step(x: np.ndarray) -> float:
    return FD_STEP * (1.0 + float(np.linalg.norm(x)))


def directional_derivative(f: Callable, x, y, h: Optional[float] = None) -> np.ndarray:
    """Central difference ``(f(x + h y) - f(x - h y)) / 2h``."""
    x, y = _vec(x), _vec(y)
    h = fd_step(x) if h is None else h
    return (np.asarray(f(x + h * y)) - np.asarray(f(x - h * y))) / (2.0 * h)


def jacobian(f: Callable, x, h: Optional[float] = None) -> np.ndarray:
    """Central-difference Jacobian of a vector map."""
    x = _vec(x)
    cols = [directional_derivative(f, x, e, h) for e in np.eye(x.size)]
    return np.atleast_2d(np.stack([np.atleast_1d(c) for c in cols], axis=-1))


@dataclass(frozen=True)
class LocalConnection:
    """Christoffel symbol over a chart.

    ``base_dim=None`` accepts chart points of any dimension (used for
    pulled-back connections, whose source chart is only known on evaluation).
    """

    base_dim: Optional[int]
    fiber_dim: int
    christoffel: Christoffel

    def gamma(self, x, y, xi) -> np.ndarray:
        x, y, xi = _vec(x), _vec(y), _vec(xi)
        base = x.size if self.base_dim is None else self.base_dim
        if x.size != base or y.size != base or xi.size != self.fiber_dim:
            raise DimensionMismatch(
                f"expected base dim {self.base_dim} and fiber dim {self.fiber_dim}, "
                f"got x:{x.size} y:{y.size} xi:{xi.size}"
            )
        return _vec(self.christoffel(x, y, xi))


@dataclass(frozen=True)
class TangentChartVector:
    """Tangent vector ``(x, xi, y, eta)`` to the total space in a chart."""

    x: np.ndarray
    xi: np.ndarray
    y: np.ndarray
    eta: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x", "xi", "y", "eta"):
            object.__setattr__(self, name, _vec(getattr(self, name)))
        if self.x.size != self.y.size or self.xi.size != self.eta.size:
            raise DimensionMismatch("inconsistent chart vector dimensions")

    def velocity(self) -> np.ndarray:
        """The tangent part ``(y, eta)`` as one vector."""
        return np.concatenate([self.y, self.eta])


def flat(base_dim: int, fiber_dim: int) -> LocalConnection:
    return LocalConnection(base_dim, fiber_dim, lambda x, y, xi: np.zeros(fiber_dim, dtype=np.result_type(y, xi)))


def constant_christoffel(coeff) -> LocalConnection:
    """Gamma(x)(y, xi)_i = sum_{b,j} C[i, b, j] y_b xi_j, independent of x."""
    c = np.asarray(coeff)
    if c.ndim != 3 or c.shape[0] != c.shape[2]:
        raise DimensionMismatch("coefficient tensor must have shape (fiber, base, fiber)")
    return LocalConnection(c.shape[1], c.shape[0], lambda x, y, xi: np.einsum("ibj,b,j->i", c, y, xi))


def polynomial_christoffel(coeffs: Sequence) -> LocalConnection:
    """Christoffel symbol polynomial in the chart point.

    ``coeffs[k]`` has shape ``(fiber, base, fiber) + (base,) * k`` and
    contributes ``C_k[i, b, j, a_1..a_k] y_b xi_j x_{a_1} ... x_{a_k}``.
    """
    cs = [np.asarray(c) for c in coeffs]
    fiber, base = cs[0].shape[0], cs[0].shape[1]
    for k, c in enumerate(cs):
        if c.shape != (fiber, base, fiber) + (base,) * k:
            raise DimensionMismatch(f"coefficient {k} has shape {c.shape}")

    def christoffel(x, y, xi):
        out = 0.0
        for c in cs:
            t = np.einsum("ibj...,b,j->i...", c, y, xi)
            while t.ndim > 1:
                t = t @ x
            out = out + t
        return out

    return LocalConnection(base, fiber, christoffel)


def bilinearity_residual(conn: LocalConnection, x, y1, y2, xi1, xi2, s: complex) -> float:
    """Largest deviation from bilinearity of ``Gamma(x)`` on the given samples."""
    g = conn.gamma
    r1 = g(x, s * _vec(y1) + _vec(y2), xi1) - (s * g(x, y1, xi1) + g(x, y2, xi1))
    r2 = g(x, y1, s * _vec(xi1) + _vec(xi2)) - (s * g(x, y1, xi1) + g(x, y1, xi2))
    return float(max(np.linalg.norm(r1), np.linalg.norm(r2)))


def connector(conn: LocalConnection, v: TangentChartVector) -> np.ndarray:
    """Connection map ``K(x, xi, y, eta) = eta + Gamma(x)(y, xi)``."""
    return v.eta + conn.gamma(v.x, v.y, v.xi)


def horizontal_lift(conn: LocalConnection, x, y, xi) -> TangentChartVector:
    x, y, xi = _vec(x), _vec(y), _vec(xi)
    return TangentChartVector(x, xi, y, -conn.gamma(x, y, xi))


def vertical_lift(x, xi, eta) -> TangentChartVector:
    """Velocity of ``t -> xi + t eta`` inside the fiber over ``x``."""
    x, eta = _vec(x), _vec(eta)
    return TangentChartVector(x, xi, np.zeros_like(x), eta)


def vertical_projector(conn: LocalConnection, v: TangentChartVector) -> TangentChartVector:
    """The idempotent on TD: vertical lift of ``(xi, K(v))``."""
    return vertical_lift(v.x, v.xi, connector(conn, v))


def splitting_residual(conn: LocalConnection, v: TangentChartVector) -> float:
    """``||v - (vertical part + horizontal lift of its base projection)||``."""
    vert = vertical_projector(conn, v)
    hor = horizontal_lift(conn, v.x, v.y, v.xi)
    return float(np.linalg.norm(v.velocity() - (vert.velocity() + hor.velocity())))


@dataclass(frozen=True)
class BundleMorphismLocal:
    """Chart expression ``(x, xi) -> (zeta(x), d(x) xi)`` of a bundle morphism.

    Derivatives ``zeta_prime(x)`` (Jacobian) and ``d_prime(x, y)`` (derivative
    of ``d`` along ``y``) default to central differences.
    """

    zeta: Callable[[np.ndarray], np.ndarray]
    d: Callable[[np.ndarray], np.ndarray]
    zeta_prime: Optional[Callable[[np.ndarray], np.ndarray]] = None
    d_prime: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None

    def zeta_at(self, x) -> np.ndarray:
        return _vec(self.zeta(_vec(x)))

    def d_at(self, x, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
        m = np.atleast_2d(np.asarray(self.d(_vec(x))))
        if m.shape[0] != m.shape[1]:
            raise SingularFiberMap(f"fiber map must be square, got {m.shape}")
        s = np.linalg.svd(m, compute_uv=False)
        if s[-1] <= tol.algebraic_rel:
            raise SingularFiberMap(f"fiber map is singular at x (sigma_min={s[-1]:.3e})")
        return m

    def jac_zeta(self, x) -> np.ndarray:
        x = _vec(x)
        if self.zeta_prime is not None:
            return np.atleast_2d(np.asarray(self.zeta_prime(x)))
        return jacobian(self.zeta_at, x)

    def d_along(self, x, y) -> np.ndarray:
        x, y = _vec(x), _vec(y)
        if self.d_prime is not None:
            return np.atleast_2d(np.asarray(self.d_prime(x, y)))
        return directional_derivative(lambda z: np.atleast_2d(np.asarray(self.d(z))), x, y)


def pushforward(morphism: BundleMorphismLocal, v: TangentChartVector) -> TangentChartVector:
    """Tangent map of the morphism applied to a chart vector.

    The fiber velocity picks up the product-rule term ``(d'(x) y) xi``.
    """
    d = morphism.d_at(v.x)
    return TangentChartVector(
        morphism.zeta_at(v.x),
        d @ v.xi,
        morphism.jac_zeta(v.x) @ v.y,
        d @ v.eta + morphism.d_along(v.x, v.y) @ v.xi,
    )


def pullback(
    target: LocalConnection,
    morphism: BundleMorphismLocal,
    base_dim: Optional[int] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> LocalConnection:
    """Pull a connection back along a fiberwise-invertible bundle morphism.

    The result is the unique connector making ``d K = K~ o T(morphism)`` hold:

        Gamma(x)(y, xi) = d(x)^-1 [Gamma~(zeta(x))(zeta'(x) y, d(x) xi) + (d'(x) y) xi]

    For a fiber map ``d`` that is constant in ``x`` the last term vanishes.
    """

    def christoffel(x, y, xi):
        d = morphism.d_at(x, tol)
        rhs = target.gamma(morphism.zeta_at(x), morphism.jac_zeta(x) @ y, d @ xi)
        rhs = rhs + morphism.d_along(x, y) @ xi
        return np.linalg.solve(d, rhs)

    return LocalConnection(base_dim, target.fiber_dim, christoffel)


def compose(outer: BundleMorphismLocal, inner: BundleMorphismLocal) -> BundleMorphismLocal:
    """Morphism ``outer o inner``: ``x -> zeta_o(zeta_i(x))``, ``d = d_o(zeta_i(x)) d_i(x)``."""
    zeta_prime = None
    if outer.zeta_prime is not None and inner.zeta_prime is not None:
        def zeta_prime(x):
            return outer.jac_zeta(inner.zeta_at(x)) @ inner.jac_zeta(x)

    return BundleMorphismLocal(
        zeta=lambda x: outer.zeta_at(inner.zeta_at(x)),
        d=lambda x: np.atleast_2d(outer.d(inner.zeta_at(x))) @ np.atleast_2d(inner.d(x)),
        zeta_prime=zeta_prime,
    )


def covariant_derivative_chart(
    conn: LocalConnection,
    section: Callable[[np.ndarray], np.ndarray],
    x,
    y,
    derivative: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """``nabla_y section (x) = D section(x)[y] + Gamma(x)(y, section(x))``."""
    x, y = _vec(x), _vec(y)
    xi = _vec(section(x))
    if derivative is None:
        dxi = _vec(directional_derivative(section, x, y))
    else:
        dxi = _vec(derivative(x, y))
    return connector(conn, TangentChartVector(x, xi, y, dxi))


def _check_group_element(g) -> np.ndarray:
    g = as_matrix(g)
    s = np.linalg.svd(g, compute_uv=False)
    if s[-1] <= DEFAULT_TOL.algebraic_rel * s[0]:
        raise NotInvertible("group element is singular")
    return g


def tangent_group_mul(g1, X1, g2, X2) -> tuple[np.ndarray, np.ndarray]:
    """Product in the tangent group ``G x| g``: ``(g1 g2, Ad(g2^-1) X1 + X2)``."""
    g1, g2 = _check_group_element(g1), _check_group_element(g2)
    X1, X2 = as_matrix(X1), as_matrix(X2)
    return g1 @ g2, np.linalg.solve(g2, X1 @ g2) + X2


def tangent_group_inv(g, X) -> tuple[np.ndarray, np.ndarray]:
    g, X = _check_group_element(g), as_matrix(X)
    ginv = np.linalg.inv(g)
    return ginv, -(g @ X @ ginv)


def tangent_representation(g, X) -> np.ndarray:
    """Tangent of the tautological representation: ``[[g, 0], [g X, g]]``."""
    g, X = as_matrix(g), as_matrix(X)
    z = np.zeros_like(g)
    return np.block([[g, z], [g @ X, g]])
