"""Stiefel bundles over flag manifolds and their unitary connection.

A Stiefel point is stored as the single matrix ``v = g p_n``; the tuple
``(v p_1, ..., v p_{n-1}, v)`` is derived on demand.  The bundle map sends
``v`` to the flag of orthogonal projections onto ``ran(v p_j)``.

For an orthogonal template flag ``delta`` the unitary group fibres over the
flag manifold ``Fl(delta)`` with structure group ``D^U(delta)`` (block-diagonal
unitaries).  The principal connection is the restriction of the diagonal
truncation to skew-hermitian matrices: at ``u`` a tangent vector ``X = u a``
has vertical part ``u Phi(a)`` and connection form ``omega(u, X) = Phi(a)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Sequence

import numpy as np

from .algebra import (
    DEFAULT_TOL,
    RandomSource,
    Tolerance,
    as_matrix,
    close,
    dagger,
    exp_skew,
    fro,
    identity,
    log_unitary,
    matrix_from_json,
    matrix_to_json,
    random_unitary,
)
from .errors import (
    DimensionMismatch,
    FormatError,
    InconsistentVelocities,
    IndexOutOfRange,
    NotCompatible,
    NotInStructureGroup,
    NotInvertible,
    NotOrthogonalFlag,
    NotTangent,
    NotUnitary,
    RankDeficient,
    StepTooLarge,
)
from .flag import (
    Flag,
    OrthoFlag,
    block_bases,
    diagonal_truncation,
    flag_from_json,
    flag_to_json,
    frame_between,
    make_ortho_flag,
    membership,
)
from .idempotent import RANK_THRESHOLD, rank

# largest allowed componentwise jump ||p_j(F_{k+1}) - p_j(F_k)||_F between samples
MAX_STEP = 0.2
# Newton iterations per transport step (the first one is the explicit predictor)
MAX_NEWTON = 12


def _ortho(delta: Flag) -> OrthoFlag:
    if not isinstance(delta, OrthoFlag):
        raise NotOrthogonalFlag("an orthogonal template flag is required")
    return delta


def _check_unitary(u: np.ndarray, tol: Tolerance) -> np.ndarray:
    u = as_matrix(u)
    if u.shape[0] != u.shape[1] or not close(dagger(u) @ u, identity(u.shape[0]), tol.algebraic_rel):
        raise NotUnitary("matrix is not unitary")
    return u


# ---------------------------------------------------------------------------
# Stiefel points


@dataclass(frozen=True, eq=False)
class StiefelPoint:
    v: np.ndarray
    flag: Flag

    def tuple(self) -> tuple[np.ndarray, ...]:
        """``(v p_1, ..., v p_{n-1}, v)``."""
        return tuple(self.v @ p for p in self.flag.projections[:-1]) + (self.v,)


class UnitaryStiefelPoint(StiefelPoint):
    """Stiefel point ``u p_n`` with ``v* v = p_n`` (a partial isometry)."""


def stiefel_point(v: np.ndarray, delta: Flag, tol: Tolerance = DEFAULT_TOL) -> StiefelPoint:
    """Validate ``v`` as an element ``g p_n`` of the Stiefel manifold over ``delta``."""
    v = as_matrix(v)
    if v.shape != (delta.dim, delta.dim):
        raise DimensionMismatch(f"shape {v.shape} does not match flag dimension {delta.dim}")
    pn = delta.projections[-1]
    if not close(v @ pn, v, tol.algebraic_rel):
        raise RankDeficient("v does not factor through p_n (v p_n != v)")
    if rank(v) != rank(pn):
        raise RankDeficient(f"rank(v)={rank(v)} differs from rank(p_n)={rank(pn)}")
    if isinstance(delta, OrthoFlag) and close(dagger(v) @ v, pn, tol.exact_rel):
        return UnitaryStiefelPoint(v, delta)
    return StiefelPoint(v, delta)


def stiefel_from_group(g: np.ndarray, delta: Flag, tol: Tolerance = DEFAULT_TOL) -> StiefelPoint:
    return stiefel_point(as_matrix(g) @ delta.projections[-1], delta, tol)


def stiefel_from_tuple(vs: Sequence[np.ndarray], delta: Flag, tol: Tolerance = DEFAULT_TOL) -> StiefelPoint:
    """Inverse of :meth:`StiefelPoint.tuple`; checks ``v_j = v_{j+1} p_j``."""
    vs = [as_matrix(x) for x in vs]
    if len(vs) != delta.n:
        raise DimensionMismatch(f"expected {delta.n} components, got {len(vs)}")
    if any(x.shape != (delta.dim, delta.dim) for x in vs):
        raise DimensionMismatch("component shapes do not match the flag dimension")
    for j in range(delta.n - 1):
        if not close(vs[j + 1] @ delta.projections[j], vs[j], tol.algebraic_rel):
            raise RankDeficient(f"component {j + 1} is not v_{j + 2} p_{j + 1}")
    return stiefel_point(vs[-1], delta, tol)


def sigma_delta(v: StiefelPoint, tol: Tolerance = DEFAULT_TOL) -> OrthoFlag:
    """Bundle projection: the flag of orthogonal projections onto ``ran(v p_j)``."""
    out = []
    for p in v.flag.projections:
        r = rank(p)
        u, s, _ = np.linalg.svd(v.v @ p)
        if r and s[r - 1] <= RANK_THRESHOLD * s[0]:
            raise RankDeficient("v p_j has lower rank than p_j")
        b = u[:, :r]
        q = b @ dagger(b)
        out.append(0.5 * (q + dagger(q)))
    return make_ortho_flag(out, tol)


def structure_action(v: StiefelPoint, a: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> StiefelPoint:
    """Right action of ``a`` in Delta(delta)^x: ``v -> v a p_n``.

    Only ``a p_n`` matters, so the action factors through the quotient of
    Delta(delta)^x by the isotropy group ``{g : g p_n = p_n}``.
    """
    delta = v.flag
    a = as_matrix(a)
    if a.shape != (delta.dim, delta.dim):
        raise DimensionMismatch("structure group element has the wrong shape")
    if membership(delta, a, "Delta") > tol.algebraic_rel * (1.0 + fro(a)):
        raise NotInStructureGroup("element is not block upper triangular for the flag")
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] <= tol.algebraic_rel * s[0]:
        raise NotInStructureGroup("element is not invertible")
    return stiefel_point(v.v @ a @ delta.projections[-1], delta, tol)


def _inv_sqrt_psd(m: np.ndarray) -> np.ndarray:
    w, vec = np.linalg.eigh(0.5 * (m + dagger(m)))
    if w.size and w[0] <= (RANK_THRESHOLD * max(w[-1], 1e-300)) ** 2:
        raise RankDeficient("Gram matrix is singular")
    return (vec / np.sqrt(w)) @ dagger(vec)


def unitary_reduce(v: StiefelPoint, tol: Tolerance = DEFAULT_TOL) -> UnitaryStiefelPoint:
    """Partial isometry ``w = v c`` with ``w* w = p_n`` in the same fibre.

    ``c`` is block upper triangular for the flag with positive diagonal
    blocks, obtained by block Gram-Schmidt in an adapted basis; each block is
    normalized by the inverse square root of its Gram matrix.  With a
    single projection this is the corner polar factor ``v (v* v)^{-1/2}``.
    """
    delta = _ortho(v.flag)
    bases = block_bases(delta)[: delta.n]
    done = np.zeros((delta.dim, 0), dtype=np.complex128)
    w = np.zeros_like(v.v)
    for b in bases:
        cols = v.v @ b
        cols = cols - done @ (dagger(done) @ cols)
        q = cols @ _inv_sqrt_psd(dagger(cols) @ cols)
        done = np.hstack([done, q])
        w = w + q @ dagger(b)
    return UnitaryStiefelPoint(w, delta)


def random_structure_element(src: RandomSource, delta: Flag, norm: float = 0.5) -> np.ndarray:
    """Invertible element ``1 + E(x)`` of Delta(delta) with ``||x||_2 = norm < 1``."""
    from .flag import canonical_projection_E

    return identity(delta.dim) + canonical_projection_E(delta, src.matrix(delta.dim, norm=norm))


def random_block_unitary(src: RandomSource, delta: OrthoFlag) -> np.ndarray:
    """Random element of D^U(delta) (block-diagonal unitary)."""
    out = np.zeros((delta.dim, delta.dim), dtype=np.complex128)
    for b in block_bases(_ortho(delta)):
        out += b @ random_unitary(src, b.shape[1]) @ dagger(b)
    return out


def stiefel_to_json(v: StiefelPoint) -> dict:
    return {"v": matrix_to_json(v.v), "flag": flag_to_json(v.flag)}


# ---------------------------------------------------------------------------
# Principal connection on U(A) -> Fl(delta)


def connection_form_omega(delta: OrthoFlag, u: np.ndarray, X: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """``omega(u, X) = Phi(u* X)``, a block-diagonal skew-hermitian matrix."""
    delta = _ortho(delta)
    u = _check_unitary(u, tol)
    a = dagger(u) @ as_matrix(X)
    if not close(a, -dagger(a), tol.algebraic_rel):
        raise NotTangent("u* X is not skew-hermitian")
    return diagonal_truncation(delta, a)


def vertical_part(delta: OrthoFlag, u: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Vertical projector ``X -> u Phi(u* X)``."""
    return u @ diagonal_truncation(delta, dagger(u) @ X)


def horizontal_part(delta: OrthoFlag, u: np.ndarray, X: np.ndarray) -> np.ndarray:
    return X - vertical_part(delta, u, X)


def fundamental_vector(u: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Infinitesimal right action of ``b`` in D^u(delta) at ``u``."""
    return u @ b


def right_translate(u: np.ndarray, X: np.ndarray, g: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Tangent map of ``u -> u g``."""
    return u @ g, X @ g


@dataclass(frozen=True, eq=False)
class FlagTangent:
    """Tangent vector to a flag manifold as projection velocities."""

    base: OrthoFlag
    velocities: tuple[np.ndarray, ...]


def flag_tangent(base: OrthoFlag, velocities: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> FlagTangent:
    """Validate velocities ``pdot_j`` (hermitian, ``pdot = pdot p + p pdot``)."""
    base = _ortho(base)
    vs = tuple(as_matrix(x) for x in velocities)
    if len(vs) != base.n:
        raise DimensionMismatch(f"expected {base.n} velocities, got {len(vs)}")
    for p, x in zip(base.projections, vs):
        if x.shape != p.shape:
            raise DimensionMismatch("velocity shape does not match the flag")
        if not close(dagger(x), x, tol.exact_rel):
            raise NotTangent("velocity is not hermitian")
        if not close(x @ p + p @ x, x, tol.algebraic_rel):
            raise NotTangent("velocity violates the linearized idempotency relation")
    return FlagTangent(base, vs)


def base_velocity(delta: OrthoFlag, u: np.ndarray, X: np.ndarray) -> FlagTangent:
    """Tangent map of ``u -> u delta u*``: ``pdot_j = u [u* X, p_j] u*``."""
    a = dagger(u) @ X
    F = make_ortho_flag([u @ p @ dagger(u) for p in delta.projections])
    vel = []
    for p in delta.projections:
        c = u @ (a @ p - p @ a) @ dagger(u)
        vel.append(0.5 * (c + dagger(c)))
    return FlagTangent(F, tuple(vel))


def _solve_horizontal(delta: OrthoFlag, bs: Sequence[np.ndarray]) -> tuple[np.ndarray, float]:
    """Horizontal skew ``a`` with ``[a, p_j] ~ b_j`` in the template frame.

    For block indices ``i < k`` every ``j`` with ``i <= j < k`` yields a
    candidate ``-(b_j)_{ik}`` for the ``(i, k)`` block of ``a``; candidates are
    averaged and their largest spread returned alongside ``a``.
    """
    bases = block_bases(delta)
    m = delta.dim
    a = np.zeros((m, m), dtype=np.complex128)
    spread = 0.0
    nb = len(bases)
    for i in range(nb):
        for k in range(i + 1, nb):
            cands = [-(dagger(bases[i]) @ bs[j] @ bases[k]) for j in range(i, k)]
            mean = sum(cands) / len(cands)
            spread = max([spread] + [fro(c - mean) for c in cands])
            blk = bases[i] @ mean @ dagger(bases[k])
            a += blk - dagger(blk)
    return a, spread


def _commutator_defect(delta: OrthoFlag, a: np.ndarray, bs: Sequence[np.ndarray]) -> float:
    return max(fro(a @ p - p @ a - b) / (1.0 + fro(b)) for p, b in zip(delta.projections, bs))


def horizontal_lift_flag(delta: OrthoFlag, t: FlagTangent, u: np.ndarray, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Horizontal tangent vector ``X = u a`` at ``u`` lying over ``t``.

    ``a`` is skew-hermitian with vanishing diagonal blocks (so ``omega(u, X) =
    0``) and ``u [a, p_j] u* = pdot_j`` for every j.
    """
    delta = _ortho(delta)
    u = _check_unitary(u, tol)
    for p, q in zip(delta.projections, t.base.projections):
        if not close(u @ p @ dagger(u), q, tol.algebraic_rel):
            raise NotCompatible("u does not carry the template flag to the tangent's base point")
    bs = [dagger(u) @ x @ u for x in t.velocities]
    a, _ = _solve_horizontal(delta, bs)
    if _commutator_defect(delta, a, bs) > tol.algebraic_rel:
        raise InconsistentVelocities("projection velocities do not come from one skew-hermitian generator")
    return u @ a


# ---------------------------------------------------------------------------
# Parallel transport


@dataclass(frozen=True)
class TransportResult:
    frames: list = field(repr=False)
    max_vertical_residual: float
    final_flag_residual: float

    @property
    def u(self) -> np.ndarray:
        return self.frames[-1]


def _flag_residual(delta: OrthoFlag, u: np.ndarray, F: Flag) -> float:
    return max(fro(u @ p @ dagger(u) - q) for p, q in zip(delta.projections, F.projections))


def transport_frames(
    delta: OrthoFlag,
    curve: Sequence[Flag],
    u0: Optional[np.ndarray] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> TransportResult:
    """Horizontal lift of a sampled flag curve starting at ``u0``.

    Each step solves for a horizontal generator ``a`` with
    ``u_k exp(a) delta exp(-a) u_k* = F_{k+1}``: the first iterate is the
    explicit first-order step from the projection increments, followed by
    Newton corrections against the remaining flag mismatch.  All iterates
    stay horizontal, so the increment ``log(u_k* u_{k+1})`` has no vertical
    component beyond rounding.
    """
    delta = _ortho(delta)
    curve = list(curve)
    if not curve:
        raise IndexOutOfRange("empty curve")
    if u0 is None:
        u0 = frame_between(delta, _ortho(curve[0]))
    u = _check_unitary(u0, tol)
    if _flag_residual(delta, u, curve[0]) > tol.transport_rel:
        raise NotCompatible("u0 does not carry the template flag to the first sample")
    frames = [u]
    max_vert = 0.0
    target = 1e-2 * tol.transport_rel
    for F0, F1 in zip(curve[:-1], curve[1:]):
        step = max(fro(p1 - p0) for p0, p1 in zip(F0.projections, F1.projections))
        if step > MAX_STEP:
            raise StepTooLarge(f"consecutive samples differ by {step:.3f} > {MAX_STEP}")
        a = np.zeros_like(u)
        for _ in range(MAX_NEWTON):
            w = u @ exp_skew(a) if a.any() else u
            rs = [dagger(w) @ q @ w - p for p, q in zip(delta.projections, F1.projections)]
            if max(fro(r) for r in rs) <= target:
                break
            c, spread = _solve_horizontal(delta, rs)
            if spread > 2.0 * max(step, tol.algebraic_rel):
                raise InconsistentVelocities(f"increments disagree across the chain (spread {spread:.3e})")
            a = a + c
        u_next = u @ exp_skew(a)
        inc = log_unitary(dagger(u) @ u_next)
        max_vert = max(max_vert, fro(diagonal_truncation(delta, inc)))
        u = u_next
        frames.append(u)
    return TransportResult(frames, max_vert, _flag_residual(delta, u, curve[-1]))


def parallel_transport(
    delta: OrthoFlag, curve: Sequence[Flag], u0: Optional[np.ndarray] = None, tol: Tolerance = DEFAULT_TOL
) -> np.ndarray:
    """Endpoint ``u_N`` of the horizontal lift (see :func:`transport_frames`)."""
    return transport_frames(delta, curve, u0, tol).u


def interpolate_samples(F0: OrthoFlag, F1: OrthoFlag, substeps: int) -> list[OrthoFlag]:
    """``substeps + 1`` flags from ``F0`` to ``F1`` along a unitary geodesic.

    Each block basis of ``F1`` is rotated to best match the corresponding
    block of ``F0`` (polar factor of the overlap), giving a unitary ``w``
    near the identity with ``w F0 w* = F1``; the samples are
    ``exp(s log w) F0 exp(-s log w)``.
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if F0.ranks != F1.ranks:
        raise NotCompatible(f"samples have different block ranks {F0.ranks} vs {F1.ranks}")
    b0, b1 = block_bases(F0), block_bases(F1)
    aligned = []
    for x, y in zip(b0, b1):
        l, _, r = np.linalg.svd(dagger(y) @ x)
        aligned.append(y @ l @ r)
    w = np.hstack(aligned) @ dagger(np.hstack(b0))
    z = log_unitary(w)
    out = []
    for k in range(substeps + 1):
        e = exp_skew((k / substeps) * z)
        out.append(make_ortho_flag([0.5 * (y + dagger(y)) for y in (e @ p @ dagger(e) for p in F0.projections)]))
    return out


def refine_curve(samples: Sequence[OrthoFlag], substeps: int) -> list[OrthoFlag]:
    """Insert ``substeps - 1`` interpolated flags between consecutive samples."""
    samples = list(samples)
    if substeps == 1:
        return samples
    out = [samples[0]]
    for F0, F1 in zip(samples[:-1], samples[1:]):
        out += interpolate_samples(F0, F1, substeps)[1:-1] + [F1]
    return out


def curve_from_json(obj: Any, tol: Tolerance = DEFAULT_TOL) -> tuple[OrthoFlag, list[OrthoFlag]]:
    """Parse ``{"template": flag, "samples": [flag, ...]}``."""
    try:
        template, samples = obj["template"], obj["samples"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"bad curve object: {exc}") from None
    if not isinstance(samples, list) or not samples:
        raise FormatError("curve needs a nonempty sample list")
    return _ortho(flag_from_json(template, tol)), [_ortho(flag_from_json(s, tol)) for s in samples]


def curve_to_json(template: OrthoFlag, samples: Sequence[OrthoFlag]) -> dict:
    return {"template": flag_to_json(template), "samples": [flag_to_json(s) for s in samples]}


def conjugation_curve(template: OrthoFlag, generator: np.ndarray, steps: int, u0: Optional[np.ndarray] = None) -> list[OrthoFlag]:
    """Samples ``F(t_k) = U(t_k) delta U(t_k)*`` with ``U(t) = exp(t Z) u0``, ``t_k = k/steps``."""
    u0 = identity(template.dim) if u0 is None else u0
    out = []
    for k in range(steps + 1):
        uk = exp_skew((k / steps) * generator) @ u0
        out.append(make_ortho_flag([0.5 * (x + dagger(x)) for x in (uk @ p @ dagger(uk) for p in template.projections)]))
    return out


# ---------------------------------------------------------------------------
# Tautological bundle


@dataclass(frozen=True, eq=False)
class TautologicalElement:
    """Point ``(v_1, ..., v_n)`` of the fibre over ``base``: ``p_j v_j = v_j``."""

    base: OrthoFlag
    vectors: tuple[np.ndarray, ...]


def tautological_element(base: OrthoFlag, vectors: Sequence[np.ndarray], tol: Tolerance = DEFAULT_TOL) -> TautologicalElement:
    vs = tuple(as_matrix(v) for v in vectors)
    if len(vs) != base.n:
        raise DimensionMismatch(f"expected {base.n} vectors, got {len(vs)}")
    for p, v in zip(base.projections, vs):
        if not close(p @ v, v, tol.exact_rel):
            raise DimensionMismatch("vector does not lie in the range of its projection")
    return TautologicalElement(base, vs)


def tautological_inner(s: TautologicalElement, t: TautologicalElement) -> complex:
    """Fibre inner product ``sum_j Tr(t_j* s_j)``."""
    return complex(sum(np.vdot(b, a) for a, b in zip(s.vectors, t.vectors)))


def covariant_derivative_taut(
    delta: OrthoFlag,
    curve: Sequence[Flag],
    section: Callable[[int], TautologicalElement],
    t_index: int,
    u0: Optional[np.ndarray] = None,
    frames: Optional[Sequence[np.ndarray]] = None,
    tol: Tolerance = DEFAULT_TOL,
) -> tuple[np.ndarray, ...]:
    """Covariant derivative of a tautological section along a sampled curve.

    With ``u(t)`` the horizontal frames, returns ``u(t) d/dt [u(t)* sigma(t)]``
    at ``t = t_index / N`` by central differences (``N = len(curve) - 1``).
    """
    n_steps = len(curve) - 1
    if not 1 <= t_index <= n_steps - 1:
        raise IndexOutOfRange(f"t_index must lie in 1..{n_steps - 1} for central differences")
    if frames is None:
        frames = transport_frames(delta, curve, u0, tol).frames
    dt = 1.0 / n_steps
    k = t_index
    ahead, behind = section(k + 1).vectors, section(k - 1).vectors
    uk, up, um = frames[k], frames[k + 1], frames[k - 1]
    return tuple(
        uk @ ((dagger(up) @ a) - (dagger(um) @ b)) / (2.0 * dt) for a, b in zip(ahead, behind)
    )
