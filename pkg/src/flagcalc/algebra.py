"""Dense complex matrix *-algebra kernel.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  Approximate
equalities throughout the package use the relative Frobenius residual

    ||lhs - rhs||_F <= tol * (1 + ||rhs||_F)

with the thresholds collected in :class:`Tolerance`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    BranchCut,
    FormatError,
    NotIdempotent,
    NotSkewHermitian,
    NotUnitary,
    SingularCorner,
)

__all__ = [
    "Tolerance",
    "DEFAULT_TOL",
    "RandomSource",
    "as_matrix",
    "dagger",
    "fro",
    "residual",
    "close",
    "identity",
    "corner_basis",
    "corner_inverse",
    "exp_skew",
    "log_unitary",
    "random_unitary",
    "random_skew",
    "random_idempotent",
    "matrix_to_json",
    "matrix_from_json",
]


@dataclass(frozen=True)
class Tolerance:
    """Residual thresholds for approximate equalities."""

    algebraic_rel: float = 1e-9
    exact_rel: float = 1e-12
    transport_rel: float = 1e-6

    def __post_init__(self) -> None:
        for name in ("algebraic_rel", "exact_rel", "transport_rel"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.algebraic_rel < self.exact_rel:
            raise ValueError("algebraic_rel must be >= exact_rel")


DEFAULT_TOL = Tolerance()


def as_matrix(x: Any) -> np.ndarray:
    """Return ``x`` as a finite complex128 2-D array."""
    a = np.asarray(x, dtype=np.complex128)
    if a.ndim != 2:
        raise FormatError(f"expected a 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise FormatError("matrix has non-finite entries")
    return a


def dagger(x: np.ndarray) -> np.ndarray:
    return x.conj().T


def fro(x: np.ndarray) -> float:
    return float(np.linalg.norm(x))


def residual(lhs: np.ndarray, rhs: np.ndarray) -> float:
    """Relative Frobenius residual ``||lhs - rhs|| / (1 + ||rhs||)``."""
    return fro(lhs - rhs) / (1.0 + fro(rhs))


def close(lhs: np.ndarray, rhs: np.ndarray, tol: float) -> bool:
    return fro(lhs - rhs) <= tol * (1.0 + fro(rhs))


def identity(m: int) -> np.ndarray:
    return np.eye(m, dtype=np.complex128)


def corner_basis(p: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Factor an idempotent as ``p = R @ W`` with ``W @ R = 1_r``.

    ``R`` is an orthonormal basis of ran(p) and ``W = R* p``; the map
    ``x -> W x R`` is then a unital algebra isomorphism pAp -> M_r.  For an
    orthogonal projection ``W = R*``.
    """
    p = as_matrix(p)
    if not close(p @ p, p, tol.algebraic_rel):
        raise NotIdempotent("argument is not an idempotent")
    if p.shape[0] == 0:
        return p[:, :0], p[:0, :]
    u, s, _ = np.linalg.svd(p)
    r = int(np.sum(s > 1e-8 * max(s[0], 1e-300)))
    basis = u[:, :r]
    return basis, dagger(basis) @ p


def corner_inverse(g: np.ndarray, p: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Inverse of the compression ``pgp`` inside the corner algebra ``pAp``.

    Returns ``h = php`` with ``h (pgp) = (pgp) h = p``.  Raises
    :class:`SingularCorner` when the compression is numerically singular on
    ran(p).
    """
    g = as_matrix(g)
    basis, left = corner_basis(p, tol)
    if basis.shape[1] == 0:
        return np.zeros_like(g)
    block = left @ g @ basis
    sv = np.linalg.svd(block, compute_uv=False)
    if sv[-1] <= tol.algebraic_rel * sv[0] or sv[0] == 0.0:
        raise SingularCorner(
            f"compression is singular on ran(p): sigma_min={sv[-1]:.3e}, sigma_max={sv[0]:.3e}"
        )
    return basis @ np.linalg.solve(block, left)


def _check_skew(a: np.ndarray, tol: Tolerance) -> None:
    if not close(a, -dagger(a), tol.algebraic_rel):
        raise NotSkewHermitian("argument is not skew-hermitian")


def _check_unitary(u: np.ndarray, tol: Tolerance) -> None:
    if u.shape[0] != u.shape[1] or not close(dagger(u) @ u, identity(u.shape[0]), tol.algebraic_rel):
        raise NotUnitary("argument is not unitary")


def exp_skew(a: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Exponential of a skew-hermitian matrix via the spectrum of ``-i a``."""
    a = as_matrix(a)
    _check_skew(a, tol)
    h = -1j * a
    w, v = np.linalg.eigh(0.5 * (h + dagger(h)))
    return (v * np.exp(1j * w)) @ dagger(v)


def log_unitary(u: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Principal logarithm of a unitary; eigenphases in (-pi, pi).

    A unitary is normal, so its complex Schur form is diagonal up to rounding.
    """
    u = as_matrix(u)
    _check_unitary(u, tol)
    t, z = scipy.linalg.schur(u, output="complex")
    lam = np.diag(t)
    if np.any(np.abs(lam + 1.0) <= tol.algebraic_rel):
        raise BranchCut("unitary has an eigenvalue at -1")
    phase = np.angle(lam)
    a = (z * (1j * phase)) @ dagger(z)
    return 0.5 * (a - dagger(a))


class RandomSource:
    """Seeded complex random stream.

    Identical seeds reproduce identical streams bit for bit.  Sources are
    never shared between trials; :meth:`spawn` derives independent children.
    """

    def __init__(self, seed: int) -> None:
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._gen = np.random.Generator(np.random.PCG64(self.seed))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def spawn(self, key: int) -> "RandomSource":
        seq = np.random.SeedSequence(entropy=self.seed, spawn_key=(int(key),))
        return RandomSource(int(seq.generate_state(1, dtype=np.uint64)[0]))

    def integers(self, low: int, high: int) -> int:
        """Uniform integer in the closed range [low, high]."""
        return int(self._gen.integers(low, high + 1))

    def uniform(self, low: float = 0.0, high: float = 1.0) -> float:
        return float(self._gen.uniform(low, high))

    def gaussian(self, shape: Sequence[int] | int) -> np.ndarray:
        """Complex standard Gaussian array (E|z|^2 = 1)."""
        g = self._gen
        return (g.standard_normal(shape) + 1j * g.standard_normal(shape)) / np.sqrt(2.0)

    def matrix(self, m: int, norm: float | None = None) -> np.ndarray:
        x = self.gaussian((m, m))
        if norm is not None:
            x *= norm / np.linalg.norm(x, 2)
        return x


def random_unitary(src: RandomSource, m: int) -> np.ndarray:
    """Haar-distributed unitary from a phase-normalized QR factorization."""
    if m < 1:
        raise ValueError("dimension must be >= 1")
    q, r = np.linalg.qr(src.gaussian((m, m)))
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_skew(src: RandomSource, m: int, norm: float | None = None) -> np.ndarray:
    x = src.gaussian((m, m))
    a = 0.5 * (x - dagger(x))
    if norm is not None:
        a *= norm / np.linalg.norm(a, 2)
    return a


def random_idempotent(src: RandomSource, m: int, rank: int, orthogonal: bool = False) -> np.ndarray:
    """Idempotent ``s p s^-1`` of the given rank.

    ``p`` is a unitarily rotated coordinate projection and ``s = 1 + n`` with
    ``||n||_2 = 0.5`` keeps the similarity well conditioned.
    """
    if not 0 <= rank <= m:
        raise ValueError("rank must lie in [0, m]")
    u = random_unitary(src, m)
    p = (u[:, :rank]) @ dagger(u[:, :rank])
    if orthogonal:
        return p
    s = identity(m) + src.matrix(m, norm=0.5)
    return s @ p @ np.linalg.inv(s)


def matrix_to_json(x: np.ndarray) -> dict:
    x = as_matrix(x)
    rows, cols = x.shape
    return {
        "rows": rows,
        "cols": cols,
        "data": [[float(z.real), float(z.imag)] for z in x.ravel()],
    }


def matrix_from_json(obj: Any) -> np.ndarray:
    """Parse ``{"rows", "cols", "data": [[re, im], ...]}`` (row-major)."""
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad matrix object: {exc}") from None
    if rows < 1 or cols < 1:
        raise FormatError("rows and cols must be positive")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise FormatError(f"matrix data length {len(data) if isinstance(data, list) else '?'} != {rows}*{cols}")
    try:
        arr = np.array([complex(float(re), float(im)) for re, im in data], dtype=np.complex128)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad matrix entry: {exc}") from None
    return as_matrix(arr.reshape(rows, cols))
