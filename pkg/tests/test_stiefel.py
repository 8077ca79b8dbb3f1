import numpy as np
import pytest
import scipy.linalg
from hypothesis import given
from hypothesis import strategies as st

from conftest import assert_close
from flagcalc.algebra import RandomSource, dagger, exp_skew, identity, random_skew, random_unitary
from flagcalc.errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InconsistentVelocities,
    NotCompatible,
    NotInStructureGroup,
    NotOrthogonalFlag,
    NotTangent,
    NotUnitary,
    RankDeficient,
    StepTooLarge,
)
from flagcalc.flag import block_bases, coordinate_flag, diagonal_truncation, flag_action, make_flag, random_element, random_flag
from flagcalc.idempotent import orthogonalize_algebraic
from flagcalc.stiefel import (
    UnitaryStiefelPoint,
    base_velocity,
    conjugation_curve,
    connection_form_omega,
    covariant_derivative_taut,
    flag_tangent,
    horizontal_lift_flag,
    horizontal_part,
    interpolate_samples,
    parallel_transport,
    random_block_unitary,
    random_structure_element,
    refine_curve,
    sigma_delta,
    stiefel_from_group,
    stiefel_from_tuple,
    stiefel_point,
    structure_action,
    tautological_element,
    tautological_inner,
    transport_frames,
    unitary_reduce,
    vertical_part,
)
from flagcalc.suites import rotation, rotation_curve

seeds = st.integers(0, 2**32 - 1)
P2 = np.diag([1.0, 0.0]).astype(complex)


@st.composite
def stiefel_data(draw, max_dim=12):
    src = RandomSource(draw(seeds))
    m = draw(st.integers(2, max_dim))
    d = random_flag(src, m, orthogonal=True)
    g = (identity(m) + src.matrix(m, norm=0.5)) @ random_unitary(src, m)
    return d, stiefel_from_group(g, d), src


def flags_equal(a, b, tol):
    for p, q in zip(a.projections, b.projections):
        assert_close(p, q, tol)


class TestStiefelPoint:
    def test_tuple_recovery(self, src):
        d = random_flag(src, 6, n=3, orthogonal=True)
        v = stiefel_from_group(src.matrix(6) + 3 * np.eye(6), d)
        tup = v.tuple()
        assert len(tup) == 3
        assert np.array_equal(tup[-1], v.v)
        for x, p in zip(tup[:-1], d.projections):
            assert np.array_equal(x, v.v @ p)
        assert np.array_equal(stiefel_from_tuple(tup, d).v, v.v)

    def test_validation(self):
        d = make_flag([P2])
        with pytest.raises(RankDeficient):
            stiefel_point(np.eye(2), d)
        with pytest.raises(RankDeficient):
            stiefel_point(np.zeros((2, 2)), d)
        with pytest.raises(DimensionMismatch):
            stiefel_point(np.eye(3), d)
        d3 = coordinate_flag([1, 1, 1])
        v2 = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 0]])
        with pytest.raises(RankDeficient):
            stiefel_from_tuple([np.diag([0, 1, 0]), v2], d3)
        assert np.array_equal(stiefel_from_tuple([np.diag([1, 0, 0]), v2], d3).v, v2)
        with pytest.raises(DimensionMismatch):
            stiefel_from_tuple([P2, v2], d3)

    def test_unitary_points_are_detected(self, src):
        d = random_flag(src, 4, orthogonal=True)
        assert isinstance(stiefel_from_group(random_unitary(src, 4), d), UnitaryStiefelPoint)
        assert not isinstance(stiefel_from_group(2 * random_unitary(src, 4), d), UnitaryStiefelPoint)


class TestSigma:
    def test_identity_coset(self, src):
        d = random_flag(src, 5, orthogonal=True)
        flags_equal(sigma_delta(stiefel_point(d.projections[-1], d)), d, 1e-12)

    def test_unitary(self, src):
        d = random_flag(src, 5, orthogonal=True)
        u = random_unitary(src, 5)
        s = sigma_delta(stiefel_from_group(u, d))
        for p, q in zip(s.projections, d.projections):
            assert_close(p, u @ q @ dagger(u), 1e-12)

    @given(seed=seeds, m=st.integers(2, 12))
    def test_matches_conjugated_flag(self, seed, m):
        src = RandomSource(seed)
        d = random_flag(src, m, orthogonal=True)
        g = (identity(m) + src.matrix(m, norm=0.5)) @ random_unitary(src, m)
        s = sigma_delta(stiefel_from_group(g, d))
        for p, q in zip(s.projections, d.projections):
            assert_close(p, orthogonalize_algebraic(g @ q @ np.linalg.inv(g)), 1e-9)

    def test_rank_deficient(self):
        d = coordinate_flag([1, 1, 1])
        v = np.array([[1, 0, 0], [0, 1, 0], [0, 0, 0]], dtype=complex)
        pt = stiefel_point(v, d)
        bad = type(pt)(np.array([[1, 1, 0], [0, 0, 0], [0, 0, 0]], dtype=complex), d)
        with pytest.raises(RankDeficient):
            sigma_delta(bad)


class TestStructureAction:
    def test_unit(self, src):
        d = random_flag(src, 5, orthogonal=True)
        v = stiefel_from_group(src.matrix(5) + 3 * np.eye(5), d)
        assert_close(structure_action(v, np.eye(5)).v, v.v, 1e-15)

    @given(data=stiefel_data())
    def test_factors_through_p_n(self, data):
        d, v, src = data
        a = random_structure_element(src, d)
        w = src.matrix(d.dim, 1.0) @ d.p_hat(d.n)
        b = a @ (identity(d.dim) + w)
        assert_close(b @ d.projections[-1], a @ d.projections[-1], 1e-13)
        assert_close(structure_action(v, b).v, structure_action(v, a).v, 1e-12)

    @given(data=stiefel_data())
    def test_bundle_invariance(self, data):
        d, v, src = data
        a = random_structure_element(src, d)
        flags_equal(sigma_delta(structure_action(v, a)), sigma_delta(v), 1e-9)

    @given(data=stiefel_data())
    def test_freeness(self, data):
        d, v, src = data
        pn = d.projections[-1]
        fixing = identity(d.dim) + random_element(src, d, "Delta", 1.0) @ d.p_hat(d.n)
        assert_close(structure_action(v, fixing).v, v.v, 1e-12)
        moving = random_structure_element(src, d)
        assert np.linalg.norm(moving @ pn - pn) > 1e-3
        assert np.linalg.norm(structure_action(v, moving).v - v.v) > 1e-6

    @given(data=stiefel_data())
    def test_distinct_orbits_have_distinct_base_points(self, data):
        d, v, src = data
        m = d.dim
        other = stiefel_from_group((identity(m) + src.matrix(m, norm=0.5)) @ random_unitary(src, m), d)
        gap = max(np.linalg.norm(p - q) for p, q in zip(sigma_delta(v).projections, sigma_delta(other).projections))
        assert gap > 1e-6
        # moving along the orbit keeps the base point
        same = structure_action(other, random_structure_element(src, d))
        assert max(np.linalg.norm(p - q) for p, q in zip(sigma_delta(same).projections, sigma_delta(other).projections)) <= 1e-9

    def test_rejects_non_members(self):
        d = make_flag([P2])
        v = stiefel_point(P2, d)
        with pytest.raises(NotInStructureGroup):
            structure_action(v, np.array([[1, 0], [1, 1]]))
        with pytest.raises(NotInStructureGroup):
            structure_action(v, np.array([[1, 1], [0, 0]]))


class TestUnitaryReduce:
    def test_example(self):
        w = unitary_reduce(stiefel_point(np.array([[2, 0], [0, 0]]), make_flag([P2])))
        np.testing.assert_allclose(w.v, P2, atol=1e-15)

    def test_fixed_point(self, src):
        d = random_flag(src, 6, orthogonal=True)
        v = stiefel_from_group(random_unitary(src, 6), d)
        assert_close(unitary_reduce(v).v, v.v, 1e-13)

    @given(data=stiefel_data())
    def test_partial_isometry_in_same_fibre(self, data):
        d, v, _ = data
        w = unitary_reduce(v)
        assert_close(dagger(w.v) @ w.v, d.projections[-1], 1e-10)
        flags_equal(sigma_delta(w), sigma_delta(v), 1e-9)

    @given(seed=seeds, m=st.integers(2, 10))
    def test_single_step_is_corner_polar(self, seed, m):
        src = RandomSource(seed)
        d = random_flag(src, m, n=1, orthogonal=True)
        v = stiefel_from_group(identity(m) + src.matrix(m, 0.5), d)
        b = block_bases(d)[0]
        corner = dagger(b) @ dagger(v.v) @ v.v @ b
        expected = v.v @ b @ np.linalg.inv(scipy.linalg.sqrtm(corner)) @ dagger(b)
        assert_close(unitary_reduce(v).v, expected, 1e-10)

    def test_needs_orthogonal_flag(self):
        d = make_flag([np.array([[1.0, 1.0], [0.0, 0.0]])])
        v = stiefel_point(d.projections[0], d)
        with pytest.raises(NotOrthogonalFlag):
            unitary_reduce(v)


class TestConnectionForm:
    def test_example(self):
        a = np.array([[1j, 1], [-1, 1j]])
        np.testing.assert_allclose(connection_form_omega(make_flag([P2]), np.eye(2), a), np.diag([1j, 1j]))

    def test_errors(self):
        d = make_flag([P2])
        with pytest.raises(NotUnitary):
            connection_form_omega(d, 2 * np.eye(2), np.zeros((2, 2)))
        with pytest.raises(NotTangent):
            connection_form_omega(d, np.eye(2), np.eye(2))

    @given(data=stiefel_data())
    def test_generator_reproduction_and_equivariance(self, data):
        d, _, src = data
        m = d.dim
        u = random_unitary(src, m)
        b = diagonal_truncation(d, random_skew(src, m, 1.0))
        assert_close(connection_form_omega(d, u, u @ b), b, 1e-10)
        g = random_block_unitary(src, d)
        assert_close(dagger(g) @ g, identity(m), 1e-12)
        X = u @ random_skew(src, m, 1.0)
        om = connection_form_omega(d, u, X)
        assert_close(connection_form_omega(d, u @ g, X @ g), dagger(g) @ om @ g, 1e-10)

    @given(data=stiefel_data())
    def test_vertical_projector(self, data):
        d, _, src = data
        m = d.dim
        u, g = random_unitary(src, m), random_block_unitary(src, d)
        X = u @ random_skew(src, m, 1.0)
        v = vertical_part(d, u, X)
        assert_close(vertical_part(d, u, v), v, 1e-12)
        assert_close(vertical_part(d, u @ g, X @ g), v @ g, 1e-10)
        assert np.linalg.norm(connection_form_omega(d, u, horizontal_part(d, u, X))) <= 1e-12


class TestHorizontalLift:
    def test_zero(self, src):
        d = random_flag(src, 4, orthogonal=True)
        u = random_unitary(src, 4)
        t = base_velocity(d, u, np.zeros((4, 4)))
        assert np.linalg.norm(horizontal_lift_flag(d, t, u)) == 0.0

    def test_example(self):
        d = make_flag([P2])
        t = flag_tangent(d, [np.array([[0, -1], [-1, 0]])])
        a = horizontal_lift_flag(d, t, np.eye(2))
        np.testing.assert_allclose(a, [[0, 1], [-1, 0]], atol=1e-15)
        assert np.linalg.norm(a @ P2 - P2 @ a - t.velocities[0]) == 0.0
        assert np.linalg.norm(diagonal_truncation(d, a)) == 0.0

    @given(data=stiefel_data())
    def test_reconstruction(self, data):
        d, _, src = data
        m = d.dim
        u = random_unitary(src, m)
        X = u @ random_skew(src, m, 1.0)
        t = base_velocity(d, u, X)
        H = horizontal_lift_flag(d, t, u)
        assert_close(vertical_part(d, u, X) + H, X, 1e-10)
        assert np.linalg.norm(connection_form_omega(d, u, H)) <= 1e-12
        back = base_velocity(d, u, H)
        for a, b in zip(back.velocities, t.velocities):
            assert_close(a, b, 1e-10)

    def test_inconsistent_velocities(self):
        d = coordinate_flag([1, 1, 1])
        e13 = np.zeros((3, 3))
        e13[0, 2] = e13[2, 0] = 1.0
        # the (1,3) block must agree between p_1 and p_2
        t = flag_tangent(d, [e13, 2 * e13])
        with pytest.raises(InconsistentVelocities):
            horizontal_lift_flag(d, t, np.eye(3))

    def test_not_compatible(self, src):
        d = random_flag(src, 3, orthogonal=True)
        t = base_velocity(d, np.eye(3), np.zeros((3, 3)))
        with pytest.raises(NotCompatible):
            horizontal_lift_flag(d, t, random_unitary(src, 3))

    def test_tangent_validation(self):
        d = make_flag([P2])
        with pytest.raises(NotTangent):
            flag_tangent(d, [np.eye(2)])
        with pytest.raises(NotTangent):
            flag_tangent(d, [np.array([[0, 1], [0, 0]])])
        with pytest.raises(DimensionMismatch):
            flag_tangent(d, [])


class TestTransport:
    def test_constant_curve(self, src):
        d = random_flag(src, 5, orthogonal=True)
        u0 = random_unitary(src, 5)
        F = flag_action(u0, d)
        assert_close(parallel_transport(d, [F] * 6, u0), u0, 1e-12)

    @pytest.mark.parametrize("n", [10, 50, 200])
    def test_rotation_curve(self, n):
        d, curve = rotation_curve(1.0, n)
        r = transport_frames(d, curve, identity(2))
        assert np.linalg.norm(r.u - rotation(1.0)) <= 1.0 / n
        for k in (0, n // 3, n):
            assert_close(r.frames[k], rotation(k / n), 1e-8)

    def test_out_and_back(self):
        d, curve = rotation_curve(1.2, 100)
        u = parallel_transport(d, curve + curve[-2::-1], identity(2))
        assert np.linalg.norm(u - identity(2)) <= 1.0 / 100

    def test_unitarity_on_long_curves(self):
        n = 10_000
        d, curve = rotation_curve(1.0, n)
        u = parallel_transport(d, curve, identity(2))
        assert np.linalg.norm(dagger(u) @ u - identity(2)) <= 1e-8

    @given(data=stiefel_data(max_dim=8))
    def test_random_curves_are_horizontal(self, data):
        d, _, src = data
        m = d.dim
        u0 = random_unitary(src, m)
        curve = conjugation_curve(d, random_skew(src, m, 1.0), 20, u0)
        r = transport_frames(d, curve, u0)
        assert r.max_vertical_residual <= 1e-6
        assert r.final_flag_residual <= 1e-6
        assert np.linalg.norm(dagger(r.u) @ r.u - identity(m)) <= 1e-9
        for uk, F in zip(r.frames, curve):
            for p, q in zip(d.projections, F.projections):
                assert_close(uk @ p @ dagger(uk), q, 1e-6)

    @given(data=stiefel_data(max_dim=6))
    def test_equivariance_and_composition(self, data):
        d, _, src = data
        m = d.dim
        u0 = random_unitary(src, m)
        curve = conjugation_curve(d, random_skew(src, m, 1.0), 16, u0)
        g = random_block_unitary(src, d)
        assert_close(parallel_transport(d, curve, u0 @ g), parallel_transport(d, curve, u0) @ g, 1e-7)
        mid = parallel_transport(d, curve[:9], u0)
        assert_close(parallel_transport(d, curve[8:], mid), parallel_transport(d, curve, u0), 1e-7)

    def test_step_too_large(self):
        d, curve = rotation_curve(1.0, 2)
        with pytest.raises(StepTooLarge):
            parallel_transport(d, curve, identity(2))

    def test_incompatible_start(self, src):
        d, curve = rotation_curve(1.0, 20)
        with pytest.raises(NotCompatible):
            parallel_transport(d, curve, random_unitary(src, 2))

    def test_refinement(self, src):
        d = random_flag(src, 5, orthogonal=True)
        a, b = flag_action(random_unitary(src, 5), d), flag_action(random_unitary(src, 5), d)
        seg = interpolate_samples(a, b, 8)
        flags_equal(seg[0], a, 1e-12)
        flags_equal(seg[-1], b, 1e-9)
        assert len(refine_curve([a, b, a], 4)) == 9
        with pytest.raises(ValueError):
            interpolate_samples(a, b, 0)


def _polynomial_section(curve, cs):
    n = len(curve) - 1

    def section(k):
        t = k / n
        F = curve[k]
        return tautological_element(F, [p @ (c0 + t * c1 + t * t * c2) for p, (c0, c1, c2) in zip(F.projections, cs)])

    return section


class TestTautological:
    def test_element_validation(self):
        d = make_flag([P2])
        with pytest.raises(DimensionMismatch):
            tautological_element(d, [np.eye(2)])
        e = tautological_element(d, [np.array([[1, 2], [0, 0]])])
        assert tautological_inner(e, e) == 5

    def test_parallel_section(self, src):
        d = random_flag(src, 4, orthogonal=True)
        u0 = random_unitary(src, 4)
        curve = conjugation_curve(d, random_skew(src, 4, 1.0), 50, u0)
        frames = transport_frames(d, curve, u0).frames
        xi = [p @ src.matrix(4) for p in d.projections]
        section = lambda k: tautological_element(curve[k], [p @ frames[k] @ x for p, x in zip(curve[k].projections, xi)])
        for k in (1, 25, 49):
            nab = covariant_derivative_taut(d, curve, section, k, frames=frames)
            assert max(np.linalg.norm(x) for x in nab) <= 1e-6

    def test_rotation_closed_form(self):
        n, theta = 100, 1.0
        d, curve = rotation_curve(theta, n)
        c = np.array([[1.0, 2.0], [-1.0, 0.5]])
        section = lambda k: tautological_element(curve[k], [curve[k].projections[0] @ c])
        j = np.array([[0, -1], [1, 0]])
        for k in (1, 40, 99):
            r = rotation(theta * k / n)
            expected = -theta * r @ P2 @ j @ dagger(r) @ c
            nab = covariant_derivative_taut(d, curve, section, k, u0=identity(2))
            assert np.linalg.norm(nab[0] - expected) <= 1e-3
            assert np.linalg.norm(nab[0]) > 0.1

    def test_linearity(self, src):
        d, curve = rotation_curve(1.0, 30)
        cs = [[src.matrix(2) for _ in range(3)]]
        s1 = _polynomial_section(curve, cs)
        s2 = lambda k: tautological_element(curve[k], [(2 - 1j) * v for v in s1(k).vectors])
        a = covariant_derivative_taut(d, curve, s1, 7, u0=identity(2))
        b = covariant_derivative_taut(d, curve, s2, 7, u0=identity(2))
        assert_close(b[0], (2 - 1j) * a[0], 1e-12)

    def test_index_range(self):
        d, curve = rotation_curve(1.0, 10)
        s = lambda k: tautological_element(curve[k], [curve[k].projections[0]])
        for k in (0, 10, 11):
            with pytest.raises(IndexOutOfRange):
                covariant_derivative_taut(d, curve, s, k)

    def test_metric_compatibility(self, src):
        n = 1000
        d = random_flag(src, 4, orthogonal=True)
        u0 = random_unitary(src, 4)
        curve = conjugation_curve(d, random_skew(src, 4, 1.0), n, u0)
        frames = transport_frames(d, curve, u0).frames
        for _ in range(3):
            sig = _polynomial_section(curve, [[src.matrix(4, 1.0) for _ in range(3)] for _ in range(d.n)])
            tau = _polynomial_section(curve, [[src.matrix(4, 1.0) for _ in range(3)] for _ in range(d.n)])
            for k in (1, 500, 999):
                ns = covariant_derivative_taut(d, curve, sig, k, frames=frames)
                nt = covariant_derivative_taut(d, curve, tau, k, frames=frames)
                lhs = (tautological_inner(sig(k + 1), tau(k + 1)) - tautological_inner(sig(k - 1), tau(k - 1))) * n / 2
                rhs = sum(np.vdot(b, a) for a, b in zip(ns, tau(k).vectors)) + sum(
                    np.vdot(b, a) for a, b in zip(sig(k).vectors, nt)
                )
                assert abs(lhs - rhs) <= 1e-5 * (1 + abs(rhs))
