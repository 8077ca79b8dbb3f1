"""Flags of idempotents and the block calculus attached to them.

A flag ``delta = (p_1, ..., p_n)`` is stored together with its complete
orthogonal system of blocks ``q_j = p_j - p_{j-1}`` (``p_0 = 0``,
``p_{n+1} = 1``).  Every operator here is evaluated in block form:

* :func:`diagonal_truncation` -- ``x -> sum_j q_j x q_j``, the projection onto
  the block-diagonal algebra D(delta);
* :func:`canonical_projection_E` -- projection onto the block upper
  triangular algebra Delta(delta) along TN(delta_hat);
* :func:`kernel_split` / :func:`triangular_split` -- the decomposition
  A = TN(delta_hat) + D(delta) + TN(delta);
* :func:`flag_factorize` -- g = L M U with L in N(delta_hat), M in D(delta)^x,
  U in N(delta), computed as a block LDU without pivoting.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Sequence

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    RandomSource,
    Tolerance,
    as_matrix,
    close,
    corner_inverse,
    dagger,
    fro,
    identity,
    matrix_from_json,
    matrix_to_json,
    random_unitary,
)
from .errors import (
    Degenerate,
    DimensionMismatch,
    FormatError,
    IndexOutOfRange,
    NotAChain,
    NotInKernel,
    NotInOmega,
    NotInvertible,
    NotOrthogonalFlag,
    NotOrthogonalSystem,
    SingularCorner,
)
from .idempotent import orthogonalize, range_basis, range_projection, rank

SPACES = ("D", "Delta", "Delta_hat", "N", "N_hat", "TN", "TN_hat", "KerPhi")


@dataclass(frozen=True, eq=False)
class Flag:
    """Strict chain ``0 < p_1 < ... < p_n < 1`` with its block system.

    Build instances with :func:`make_flag` or :func:`alpha`; the constructor
    itself does not validate.
    """

    projections: tuple[np.ndarray, ...]
    blocks: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def n(self) -> int:
        return len(self.projections)

    def p(self, j: int) -> np.ndarray:
        """``p_j`` with the conventions ``p_0 = 0`` and ``p_{n+1} = 1``."""
        if j == 0:
            return np.zeros((self.dim, self.dim), dtype=np.complex128)
        if j == self.n + 1:
            return identity(self.dim)
        return self.projections[j - 1]

    def p_hat(self, j: int) -> np.ndarray:
        return identity(self.dim) - self.p(j)

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(rank(q) for q in self.blocks)

    @property
    def is_orthogonal(self) -> bool:
        return isinstance(self, OrthoFlag)

    def hat(self) -> "Flag":
        """The reversed complement flag ``(1 - p_n, ..., 1 - p_1)``."""
        one = identity(self.dim)
        cls = OrthoFlag if self.is_orthogonal else Flag
        return cls(
            projections=tuple(one - p for p in reversed(self.projections)),
            blocks=tuple(reversed(self.blocks)),
        )

    def __repr__(self) -> str:
        return f"{type(self).__name__}(dim={self.dim}, n={self.n}, ranks={self.ranks})"


class OrthoFlag(Flag):
    """Flag whose projections are all self-adjoint."""


@dataclass(frozen=True, eq=False)
class OrthogonalSystem:
    """Complete system ``q_1, ..., q_{n+1}`` of mutually orthogonal idempotents.

    ``partial_sums`` caches ``q_1 + ... + q_k`` so that converting back and
    forth between systems and flags never recomputes (and re-rounds) data.
    """

    blocks: tuple[np.ndarray, ...]
    partial_sums: tuple[np.ndarray, ...]

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, j: int) -> np.ndarray:
        return self.blocks[j]

    def __iter__(self):
        return iter(self.blocks)


@dataclass(frozen=True)
class TriangularSplit:
    lower: np.ndarray
    upper: np.ndarray
    diagonal: np.ndarray


@dataclass(frozen=True)
class FlagFactorization:
    lower: np.ndarray
    middle: np.ndarray
    upper: np.ndarray

    def product(self) -> np.ndarray:
        return self.lower @ self.middle @ self.upper


def _scale(x: np.ndarray) -> float:
    return 1.0 + fro(x)


def _system_defect(blocks: Sequence[np.ndarray]) -> float:
    """Largest relative violation of ``q_j q_k = delta_jk q_j`` and ``sum q_j = 1``."""
    m = blocks[0].shape[0]
    worst = fro(sum(blocks) - identity(m)) / (1.0 + np.sqrt(m))
    for j, qj in enumerate(blocks):
        for k, qk in enumerate(blocks):
            target = qj if j == k else 0.0
            worst = max(worst, fro(qj @ qk - target) / (_scale(qj) * _scale(qk)) ** 0.5)
    return worst


def _check_square(mats: Iterable[np.ndarray]) -> tuple[np.ndarray, ...]:
    out = tuple(as_matrix(x) for x in mats)
    if not out:
        raise NotAChain("a flag needs at least one projection")
    m = out[0].shape[0]
    for x in out:
        if x.shape != (m, m):
            raise DimensionMismatch(f"expected {m}x{m} matrices, got {x.shape}")
    return out


def _finish(projections, blocks, tol: Tolerance) -> Flag:
    for q in blocks:
        if fro(q) <= tol.exact_rel:
            raise Degenerate("consecutive projections coincide (empty block)")
    hermitian = all(close(dagger(p), p, tol.exact_rel) for p in projections)
    cls = OrthoFlag if hermitian else Flag
    return cls(projections=tuple(projections), blocks=tuple(blocks))


def make_flag(projections: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> Flag:
    """Validate a chain of idempotents and attach its block system.

    Returns an :class:`OrthoFlag` when every projection is self-adjoint.
    """
    ps = _check_square(projections)
    m = ps[0].shape[0]
    padded = (np.zeros((m, m), dtype=np.complex128),) + ps + (identity(m),)
    blocks = tuple(padded[j + 1] - padded[j] for j in range(len(ps) + 1))
    if _system_defect(blocks) > tol.exact_rel:
        raise NotAChain("projections do not form an increasing chain of idempotents")
    return _finish(ps, blocks, tol)


def make_ortho_flag(projections: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> OrthoFlag:
    f = make_flag(projections, tol)
    if not isinstance(f, OrthoFlag):
        raise NotOrthogonalFlag("flag projections are not self-adjoint")
    return f


def orthogonal_system(blocks: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> OrthogonalSystem:
    """Validate a complete orthogonal system of nonzero idempotents."""
    try:
        qs = _check_square(blocks)
    except NotAChain:
        raise NotOrthogonalSystem("empty system") from None
    if len(qs) < 2:
        raise NotOrthogonalSystem("a system needs at least two idempotents")
    if _system_defect(qs) > tol.exact_rel:
        raise NotOrthogonalSystem("q_j q_k != delta_jk q_j or sum q_j != 1")
    if any(fro(q) <= tol.exact_rel for q in qs):
        raise NotOrthogonalSystem("system contains a zero idempotent")
    sums = tuple(np.cumsum(np.stack(qs[:-1]), axis=0))
    return OrthogonalSystem(blocks=qs, partial_sums=sums)


def alpha(q: OrthogonalSystem | Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> Flag:
    """Flag of partial sums ``p_k = q_1 + ... + q_k``."""
    if not isinstance(q, OrthogonalSystem):
        q = orthogonal_system(q, tol)
    return _finish(q.partial_sums, q.blocks, tol)


def alpha_inverse(delta: Flag) -> OrthogonalSystem:
    """Block system ``(p_1 - p_0, ..., p_{n+1} - p_n)`` of a flag."""
    return OrthogonalSystem(blocks=delta.blocks, partial_sums=delta.projections)


def _match(delta: Flag, x) -> np.ndarray:
    x = as_matrix(x)
    if x.shape != (delta.dim, delta.dim):
        raise DimensionMismatch(f"matrix shape {x.shape} does not match flag dimension {delta.dim}")
    return x


def diagonal_truncation(delta: Flag, x: np.ndarray) -> np.ndarray:
    x = _match(delta, x)
    return sum(q @ x @ q for q in delta.blocks)


def cpr_theta(q: OrthogonalSystem | Sequence[np.ndarray], a: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Compression ``a -> sum_j q_j a q_j`` by an orthogonal system."""
    if not isinstance(q, OrthogonalSystem):
        q = orthogonal_system(q, tol)
    a = as_matrix(a)
    return sum(b @ a @ b for b in q.blocks)


def canonical_projection_E(delta: Flag, a: np.ndarray) -> np.ndarray:
    """Projection of A onto Delta(delta) with kernel TN(delta_hat)."""
    a = _match(delta, a)
    return sum(q @ a @ delta.p_hat(j) for j, q in enumerate(delta.blocks))


def membership(delta: Flag, x: np.ndarray, space: str) -> float:
    """Largest Frobenius residual of the relations defining ``space``.

    ``space`` is one of ``D, Delta, Delta_hat, N, N_hat, TN, TN_hat, KerPhi``.
    """
    x = _match(delta, x)
    n = delta.n
    p, ph = delta.p, delta.p_hat
    if space == "D":
        res = [x @ p(j) - p(j) @ x for j in range(1, n + 1)]
    elif space == "Delta":
        res = [ph(j) @ x @ p(j) for j in range(1, n + 1)]
    elif space == "Delta_hat":
        res = [p(j) @ x @ ph(j) for j in range(1, n + 1)]
    elif space == "N":
        res = [ph(j - 1) @ x @ p(j) - ph(j - 1) @ p(j) for j in range(1, n + 2)]
    elif space == "N_hat":
        res = [p(j) @ x @ ph(j - 1) - p(j) @ ph(j - 1) for j in range(1, n + 2)]
    elif space == "TN":
        res = [ph(j - 1) @ x @ p(j) for j in range(1, n + 2)]
    elif space == "TN_hat":
        res = [p(j) @ x @ ph(j - 1) for j in range(1, n + 2)]
    elif space == "KerPhi":
        res = [diagonal_truncation(delta, x)]
    else:
        raise ValueError(f"unknown space {space!r}; expected one of {SPACES}")
    return max(fro(r) for r in res)


def kernel_split(delta: Flag, x: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Split ``x`` in Ker Phi into ``y + z`` with y in TN(delta_hat), z in TN(delta)."""
    x = _match(delta, x)
    if fro(diagonal_truncation(delta, x)) > tol.algebraic_rel * _scale(x):
        raise NotInKernel("diagonal truncation of x is not zero")
    n = delta.n
    p, ph = delta.p, delta.p_hat
    zero = np.zeros_like(x)
    y = sum((ph(j - 1) @ p(j) @ x @ p(j - 1) for j in range(2, n + 2)), zero)
    z = sum((p(j - 1) @ x @ p(j) @ ph(j - 1) for j in range(2, n + 2)), zero)
    return y, z


def triangular_split(delta: Flag, x: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> TriangularSplit:
    x = _match(delta, x)
    d = diagonal_truncation(delta, x)
    y, z = kernel_split(delta, x - d, tol)
    return TriangularSplit(lower=y, upper=z, diagonal=d)


def _check_invertible(g: np.ndarray, tol: Tolerance) -> None:
    s = np.linalg.svd(g, compute_uv=False)
    if s[0] == 0.0 or s[-1] <= tol.algebraic_rel * s[0]:
        raise NotInvertible("matrix is numerically singular")


def _factor_step(w, p, e, tol):
    """One block LDU step of ``w`` in the corner algebra with unit ``e``."""
    try:
        h = corner_inverse(w, p, tol)
    except SingularCorner as exc:
        raise NotInOmega(f"compression not invertible in its corner: {exc}") from None
    c = e - p
    lower = e + c @ w @ h
    upper = e + h @ w @ c
    head = p @ w @ p
    tail = c @ (w - w @ h @ w) @ c
    return lower, head, tail, upper


def flag_factorize(
    delta: Flag, g: np.ndarray, tol: Tolerance = DEFAULT_TOL, order: str = "forward"
) -> FlagFactorization:
    """Factor ``g = L M U`` with L in N(delta_hat), M in D(delta)^x, U in N(delta).

    ``order="forward"`` splits at the top projection ``p_n`` first and recurses
    into the corner ``p_n A p_n``; ``order="backward"`` splits off the block
    ``q_1`` first and recurses into ``(1 - p_1) A (1 - p_1)``.  Both produce the
    same (unique) factorization.
    """
    g = _match(delta, g)
    _check_invertible(g, tol)
    one = identity(delta.dim)
    lower, upper = one, one
    middle = np.zeros_like(g)
    w, e = g, one
    if order == "forward":
        for k in range(delta.n, 0, -1):
            p = delta.p(k)
            ls, head, tail, us = _factor_step(w, p, e, tol)
            lower = lower @ (ls + one - e)
            upper = (us + one - e) @ upper
            middle = middle + tail
            w, e = head, p
    elif order == "backward":
        for k in range(1, delta.n + 1):
            q = delta.blocks[k - 1]
            ls, head, tail, us = _factor_step(w, q, e, tol)
            lower = lower @ (ls + one - e)
            upper = (us + one - e) @ upper
            middle = middle + head
            w, e = tail, e - q
    else:
        raise ValueError("order must be 'forward' or 'backward'")
    return FlagFactorization(lower=lower, middle=middle + w, upper=upper)


def conjugate_flag(g: np.ndarray, delta: Flag) -> tuple[np.ndarray, ...]:
    """The tuple ``(g p_j g^-1)_j`` before re-canonicalization."""
    g = _match(delta, g)
    return tuple(g @ np.linalg.solve(g.T, p.T).T for p in delta.projections)


def flag_action(g: np.ndarray, delta: Flag, tol: Tolerance = DEFAULT_TOL) -> OrthoFlag:
    """Canonical orthogonal representative of ``g . [delta]``.

    The class of ``g p_j g^-1`` is fixed by its range ``g ran(p_j)``, so each
    component is the orthogonal projection onto ran(g p_j).
    """
    g = _match(delta, g)
    _check_invertible(g, tol)
    ranks = [rank(p) for p in delta.projections]
    return make_ortho_flag([range_projection(g @ p, r) for p, r in zip(delta.projections, ranks)], tol)


def canonical_flag(delta: Flag, tol: Tolerance = DEFAULT_TOL) -> OrthoFlag:
    """Orthogonal representative of the class of ``delta``."""
    if isinstance(delta, OrthoFlag):
        return delta
    return make_ortho_flag([orthogonalize(p, tol) for p in delta.projections], tol)


def pr_k(F: Flag, k: int) -> np.ndarray:
    """k-th component ``p_k`` (1-based), a point of the Grassmannian."""
    if not 1 <= k <= F.n:
        raise IndexOutOfRange(f"k={k} outside 1..{F.n}")
    return F.projections[k - 1]


def block_bases(F: OrthoFlag) -> tuple[np.ndarray, ...]:
    """Orthonormal bases of the blocks of an orthogonal flag."""
    if not isinstance(F, OrthoFlag):
        raise NotOrthogonalFlag("adapted bases need an orthogonal flag")
    return tuple(range_basis(q, r) for q, r in zip(F.blocks, F.ranks))


def adapted_frame(F: OrthoFlag) -> np.ndarray:
    """Unitary whose columns run through the blocks of ``F`` in order."""
    return np.hstack(block_bases(F))


def frame_between(template: OrthoFlag, F: OrthoFlag) -> np.ndarray:
    """A unitary ``u`` with ``u p_j(template) u* = p_j(F)`` for every j."""
    if template.ranks != F.ranks:
        raise NotOrthogonalFlag(f"flags have different block ranks {template.ranks} vs {F.ranks}")
    return adapted_frame(F) @ dagger(adapted_frame(template))


def coordinate_flag(ranks: Sequence[int]) -> OrthoFlag:
    """Orthogonal flag of coordinate projections with the given block ranks."""
    m = int(sum(ranks))
    edges = np.cumsum(ranks)[:-1]
    return make_ortho_flag([np.diag((np.arange(m) < r).astype(np.complex128)) for r in edges])


def random_ranks(src: RandomSource, m: int, n: int | None = None) -> tuple[int, ...]:
    """Block ranks (all positive, summing to ``m``) for an ``n``-step flag."""
    if m < 2:
        raise ValueError("flags need dimension >= 2")
    if n is None:
        n = src.integers(1, min(m - 1, 4))
    cuts = np.sort(src.generator.choice(np.arange(1, m), size=n, replace=False))
    edges = np.concatenate(([0], cuts, [m]))
    return tuple(int(r) for r in np.diff(edges))


def random_flag(
    src: RandomSource, m: int, n: int | None = None, orthogonal: bool = False, tol: Tolerance = DEFAULT_TOL
) -> Flag:
    """Random flag in M_m; oblique flags use a similarity with ``||s - 1||_2 = 0.5``."""
    ranks = random_ranks(src, m, n)
    edges = np.cumsum(ranks)[:-1]
    s = random_unitary(src, m)
    if orthogonal:
        cols = [s[:, :r] for r in edges]
        return make_flag([c @ dagger(c) for c in cols], tol)
    s = (identity(m) + src.matrix(m, norm=0.5)) @ s
    sinv = np.linalg.inv(s)
    return make_flag([s[:, :r] @ sinv[:r, :] for r in edges], tol)


def random_element(src: RandomSource, delta: Flag, space: str, norm: float = 1.0) -> np.ndarray:
    """Random matrix in one of the subspaces or groups attached to ``delta``."""
    x = src.matrix(delta.dim, norm=norm)
    if space == "A":
        return x
    if space == "D":
        return diagonal_truncation(delta, x)
    if space == "Delta":
        return canonical_projection_E(delta, x)
    if space == "Delta_hat":
        return canonical_projection_E(delta.hat(), x)
    if space == "TN":
        return canonical_projection_E(delta, x) - diagonal_truncation(delta, x)
    if space == "TN_hat":
        return x - canonical_projection_E(delta, x)
    if space == "KerPhi":
        return x - diagonal_truncation(delta, x)
    if space == "N":
        return identity(delta.dim) + random_element(src, delta, "TN", norm)
    if space == "N_hat":
        return identity(delta.dim) + random_element(src, delta, "TN_hat", norm)
    raise ValueError(f"unknown space {space!r}")


def flag_to_json(delta: Flag) -> dict:
    return {"dim": delta.dim, "projections": [matrix_to_json(p) for p in delta.projections]}


def flag_from_json(obj: Any, tol: Tolerance = DEFAULT_TOL) -> Flag:
    try:
        dim, items = int(obj["dim"]), obj["projections"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"bad flag object: {exc}") from None
    if not isinstance(items, list) or not items:
        raise FormatError("flag needs a nonempty projection list")
    ps = [matrix_from_json(x) for x in items]
    if any(p.shape != (dim, dim) for p in ps):
        raise FormatError(f"projection shapes do not match dim={dim}")
    return make_flag(ps, tol)


def system_to_json(q: OrthogonalSystem) -> dict:
    return {"blocks": [matrix_to_json(b) for b in q.blocks]}


def system_from_json(obj: Any, tol: Tolerance = DEFAULT_TOL) -> OrthogonalSystem:
    try:
        items = obj["blocks"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad system object: {exc}") from None
    if not isinstance(items, list):
        raise FormatError("blocks must be a list")
    return orthogonal_system([matrix_from_json(b) for b in items], tol)
