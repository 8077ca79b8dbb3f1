"""Seeded invariant suites aggregated into machine-readable reports."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from . import connection as cn
from .algebra import (
    DEFAULT_TOL,
    RandomSource,
    Tolerance,
    dagger,
    fro,
    identity,
    random_skew,
    random_unitary,
    residual,
)
from .errors import BadDimension, UnknownSuite
from .flag import (
    alpha,
    alpha_inverse,
    canonical_projection_E,
    cpr_theta,
    diagonal_truncation,
    flag_factorize,
    kernel_split,
    make_ortho_flag,
    membership,
    random_element,
    random_flag,
)
from .stiefel import (
    base_velocity,
    conjugation_curve,
    connection_form_omega,
    horizontal_lift_flag,
    random_block_unitary,
    random_structure_element,
    sigma_delta,
    stiefel_from_group,
    structure_action,
    transport_frames,
    unitary_reduce,
    vertical_part,
)

SUITES = ("flags", "connections", "stiefel", "transport")
MIN_DIM, MAX_DIM = 2, 64
ROTATION_STEPS = (50, 100, 200, 400)


@dataclass
class SuiteReport:
    suite: str
    trials: int
    failures: int
    max_residual: float
    seed: int
    elapsed_ms: int
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        out = asdict(self)
        extra = out.pop("extra")
        out.update(extra)
        return out


def flags_trial(src: RandomSource, m: int, tol: Tolerance) -> float:
    orth = src.uniform() < 0.5
    delta = random_flag(src, m, orthogonal=orth, tol=tol)
    one = identity(m)
    x = src.matrix(m, norm=1.0)
    phi = diagonal_truncation(delta, x)
    res = [
        residual(diagonal_truncation(delta, phi), phi),
        residual(diagonal_truncation(delta.hat(), x), phi),
    ]
    if orth:
        res.append(residual(diagonal_truncation(delta, dagger(x)), dagger(phi)))
    a, b = random_element(src, delta, "Delta"), random_element(src, delta, "Delta")
    res.append(residual(diagonal_truncation(delta, a @ b), diagonal_truncation(delta, a) @ diagonal_truncation(delta, b)))
    e = canonical_projection_E(delta, x)
    res.append(residual(canonical_projection_E(delta, e), e))
    res.append(residual(canonical_projection_E(delta, one), one))
    z = random_element(src, delta, "TN_hat")
    res.append(fro(canonical_projection_E(delta, z)) / (1.0 + fro(z)))
    res.append(membership(delta, x - e, "TN_hat") / (1.0 + fro(x)))
    k = random_element(src, delta, "KerPhi")
    y, w = kernel_split(delta, k, tol)
    res += [residual(y + w, k), membership(delta, y, "TN_hat"), membership(delta, w, "TN")]
    low = random_element(src, delta, "N_hat", norm=0.5)
    mid = one + random_element(src, delta, "D", norm=0.5)
    up = random_element(src, delta, "N", norm=0.5)
    g = low @ mid @ up
    f = flag_factorize(delta, g, tol)
    res += [
        fro(f.product() - g) / fro(g),
        residual(f.lower, low),
        residual(f.middle, mid),
        residual(f.upper, up),
        membership(delta, f.lower - one, "TN_hat"),
        membership(delta, f.middle, "D"),
        membership(delta, f.upper - one, "TN"),
    ]
    q = alpha_inverse(delta)
    res.append(residual(cpr_theta(q, x, tol), diagonal_truncation(alpha(q, tol), x)))
    return max(res)


def _random_chart_data(src: RandomSource, dim: int):
    base = src.integers(1, min(dim, 4))
    fiber = src.integers(1, min(dim, 4))
    scale = 1.0 / np.sqrt(base * fiber)
    conn = cn.polynomial_christoffel(
        [scale * src.gaussian((fiber, base, fiber)), 0.3 * scale * src.gaussian((fiber, base, fiber, base))]
    )
    d0 = identity(fiber) + 0.3 * src.matrix(fiber, norm=1.0)
    dt = 0.1 * src.gaussian((fiber, fiber, base))
    a0 = src.gaussian((base, base))
    morph = cn.BundleMorphismLocal(zeta=lambda x: a0 @ x + 0.1 * x**2, d=lambda x: d0 + dt @ x)
    return base, fiber, conn, morph


def connections_trial(src: RandomSource, m: int, tol: Tolerance) -> float:
    base, fiber, conn, morph = _random_chart_data(src, m)
    x, y = 0.5 * src.gaussian(base), src.gaussian(base)
    xi, eta = src.gaussian(fiber), src.gaussian(fiber)
    v = cn.TangentChartVector(x, xi, y, eta)
    hor = cn.horizontal_lift(conn, x, y, xi)
    pulled = cn.pullback(conn, morph, base_dim=base, tol=tol)
    lhs = morph.d_at(x) @ cn.connector(pulled, v)
    rhs = cn.connector(conn, cn.pushforward(morph, v))
    d_const = morph.d_at(x)
    flat_back = cn.pullback(cn.flat(base, fiber), cn.BundleMorphismLocal(zeta=morph.zeta, d=lambda _x: d_const), base_dim=base)
    c0, c1 = src.gaussian(fiber), src.gaussian((fiber, base))
    target_section = lambda z: c0 + c1 @ z + 0.2 * c1 @ (z**2)
    section = lambda z: np.linalg.solve(morph.d_at(z), target_section(morph.zeta_at(z)))
    nab = cn.covariant_derivative_chart(pulled, section, x, y)
    nab_t = cn.covariant_derivative_chart(conn, target_section, morph.zeta_at(x), morph.jac_zeta(x) @ y)
    res = [
        float(np.linalg.norm(cn.connector(conn, hor))),
        cn.splitting_residual(conn, v) / (1.0 + float(np.linalg.norm(v.velocity()))),
        float(np.linalg.norm(lhs - rhs)) / (1.0 + float(np.linalg.norm(rhs))),
        float(np.linalg.norm(flat_back.gamma(x, y, xi))),
        float(np.linalg.norm(morph.d_at(x) @ nab - nab_t)) / (1.0 + float(np.linalg.norm(nab_t))),
    ]
    return max(res)


def stiefel_trial(src: RandomSource, m: int, tol: Tolerance) -> float:
    delta = random_flag(src, m, orthogonal=True, tol=tol)
    g = (identity(m) + src.matrix(m, norm=0.5)) @ random_unitary(src, m)
    v = stiefel_from_group(g, delta, tol)
    a = random_structure_element(src, delta)
    s0 = sigma_delta(v, tol)
    s1 = sigma_delta(structure_action(v, a, tol), tol)
    w = unitary_reduce(v, tol)
    sw = sigma_delta(w, tol)
    pn = delta.projections[-1]
    res = [residual(p1, p0) for p0, p1 in zip(s0.projections, s1.projections)]
    res += [residual(p1, p0) for p0, p1 in zip(s0.projections, sw.projections)]
    res.append(residual(dagger(w.v) @ w.v, pn))
    u = random_unitary(src, m)
    b = diagonal_truncation(delta, random_skew(src, m, 1.0))
    h = random_block_unitary(src, delta)
    X = u @ random_skew(src, m, 1.0)
    om = connection_form_omega(delta, u, X, tol)
    res.append(residual(connection_form_omega(delta, u, u @ b, tol), b))
    res.append(residual(connection_form_omega(delta, u @ h, X @ h, tol), dagger(h) @ om @ h))
    vert = vertical_part(delta, u, X)
    hor = horizontal_lift_flag(delta, base_velocity(delta, u, X), u, tol)
    res.append(residual(vert + hor, X))
    res.append(residual(vertical_part(delta, u, vert), vert))
    res.append(residual(vertical_part(delta, u @ h, X @ h), vert @ h))
    return max(res)


def transport_trial(src: RandomSource, m: int, tol: Tolerance) -> float:
    delta = random_flag(src, m, orthogonal=True, tol=tol)
    u0 = random_unitary(src, m)
    z = random_skew(src, m, 1.0)
    curve = conjugation_curve(delta, z, 20, u0)
    r = transport_frames(delta, curve, u0, tol)
    unit = fro(dagger(r.u) @ r.u - identity(m))
    return max(r.final_flag_residual, r.max_vertical_residual, unit)


def rotation(theta: float) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    return np.array([[c, -s], [s, c]], dtype=np.complex128)


def rotation_curve(theta: float, steps: int):
    """Template ``diag(1, 0)`` and samples ``R(theta t) p R(-theta t)``, ``t = k/steps``."""
    delta = make_ortho_flag([np.diag([1.0, 0.0]).astype(np.complex128)])
    return delta, conjugation_curve(delta, theta * np.array([[0, -1], [1, 0]], dtype=np.complex128), steps)


def rotation_table(theta: float = 1.0, steps=ROTATION_STEPS, tol: Tolerance = DEFAULT_TOL) -> list[dict]:
    """Endpoint error ``||u_N - R(theta)||_F`` of the transported rotation curve."""
    out = []
    for n in steps:
        delta, curve = rotation_curve(theta, n)
        u = transport_frames(delta, curve, identity(2), tol).u
        out.append({"N": n, "error": fro(u - rotation(theta))})
    return out


_TRIALS: dict[str, tuple[Callable, str]] = {
    "flags": (flags_trial, "algebraic_rel"),
    "connections": (connections_trial, "transport_rel"),
    "stiefel": (stiefel_trial, "algebraic_rel"),
    "transport": (transport_trial, "transport_rel"),
}


def suite_tolerance(name: str, tol: Tolerance = DEFAULT_TOL) -> float:
    if name == "all":
        return max(getattr(tol, attr) for _, attr in _TRIALS.values())
    if name not in _TRIALS:
        raise UnknownSuite(f"unknown suite {name!r}; choose from {', '.join(SUITES + ('all',))}")
    return getattr(tol, _TRIALS[name][1])


def run_suite(name: str, dim: int, trials: int, seed: int, tol: Tolerance = DEFAULT_TOL, threshold: float | None = None) -> SuiteReport:
    """Run a named invariant suite on ``trials`` seeded random instances.

    Trial ``t`` draws from its own stream spawned from ``seed``; its dimension is
    uniform in ``[2, dim]``.  A trial fails when its largest residual exceeds the
    suite tolerance (``threshold`` when given).
    """
    limit = suite_tolerance(name, tol) if threshold is None else float(threshold)
    if not MIN_DIM <= int(dim) <= MAX_DIM:
        raise BadDimension(f"dim must lie in [{MIN_DIM}, {MAX_DIM}], got {dim}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    start = time.perf_counter()
    names = SUITES if name == "all" else (name,)
    root = RandomSource(seed)
    failures, worst, count = 0, 0.0, 0
    for k, sub in enumerate(names):
        fn = _TRIALS[sub][0]
        suite_src = root.spawn(k) if name == "all" else root
        for t in range(trials):
            src = suite_src.spawn(t)
            r = fn(src, src.integers(MIN_DIM, dim), tol)
            worst = max(worst, r)
            failures += r > limit
            count += 1
    extra = {}
    if name in ("transport", "all"):
        extra["convergence"] = rotation_table(tol=tol)
    elapsed = int(round(1000 * (time.perf_counter() - start)))
    return SuiteReport(name, count, int(failures), float(worst), int(seed), elapsed, extra)
