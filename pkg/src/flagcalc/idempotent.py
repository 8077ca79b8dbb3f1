"""Idempotents, their order relation, and the orthogonal cross-section.

``p <= q`` means ``q p = p`` (one-sided, exactly as the order is defined on
idempotents); ``p ~ q`` means both ``p <= q`` and ``q <= p``.  Each class
contains exactly one orthogonal projection, returned by :func:`orthogonalize`.
"""
from __future__ import annotations

import numpy as np

from .algebra import DEFAULT_TOL, Tolerance, as_matrix, close, dagger, fro, identity
from .errors import DimensionMismatch, NotIdempotent

# Singular values of p above RANK_THRESHOLD * ||p||_2 count towards its rank.
RANK_THRESHOLD = 1e-8


def _pair(p, q):
    p, q = as_matrix(p), as_matrix(q)
    if p.shape != q.shape or p.shape[0] != p.shape[1]:
        raise DimensionMismatch(f"shapes {p.shape} and {q.shape} do not match")
    return p, q


def is_idempotent(p: np.ndarray, tol: float = DEFAULT_TOL.algebraic_rel) -> bool:
    p = as_matrix(p)
    return p.shape[0] == p.shape[1] and close(p @ p, p, tol)


def is_projection(p: np.ndarray, tol: float = DEFAULT_TOL.algebraic_rel) -> bool:
    p = as_matrix(p)
    return is_idempotent(p, tol) and close(dagger(p), p, tol)


def rank(p: np.ndarray) -> int:
    s = np.linalg.svd(as_matrix(p), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_THRESHOLD * s[0]))


def range_basis(x: np.ndarray, r: int | None = None) -> np.ndarray:
    """Orthonormal basis of the column space of ``x`` (rank ``r`` if given)."""
    u, s, _ = np.linalg.svd(as_matrix(x))
    if r is None:
        r = 0 if s.size == 0 or s[0] == 0.0 else int(np.sum(s > RANK_THRESHOLD * s[0]))
    return u[:, :r]


def range_projection(x: np.ndarray, r: int | None = None) -> np.ndarray:
    """Orthogonal projection onto ran(x)."""
    b = range_basis(x, r)
    q = b @ dagger(b)
    return 0.5 * (q + dagger(q))


def leq(p: np.ndarray, q: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    """True iff ``q p = p`` within ``exact_rel``."""
    p, q = _pair(p, q)
    return fro(q @ p - p) <= tol.exact_rel * (1.0 + fro(p))


def equivalent(p: np.ndarray, q: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> bool:
    return leq(p, q, tol) and leq(q, p, tol)


def orthogonalize(p: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Canonical orthogonal representative of the class of ``p``.

    This is the orthogonal projection onto ran(p), built from an orthonormal
    basis of the column space.
    """
    p = as_matrix(p)
    if not is_idempotent(p, tol.algebraic_rel):
        raise NotIdempotent("argument is not an idempotent")
    return range_projection(p)


def orthogonalize_algebraic(p: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Closed-form representative ``p (p + p* - 1)^-1``.

    Kept as an independent cross-check of :func:`orthogonalize`.
    """
    p = as_matrix(p)
    if not is_idempotent(p, tol.algebraic_rel):
        raise NotIdempotent("argument is not an idempotent")
    m = p.shape[0]
    # right division: solve X (p + p* - 1) = p
    q = np.linalg.solve(dagger(p + dagger(p) - identity(m)), dagger(p))
    return dagger(q)
