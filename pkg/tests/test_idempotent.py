import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import assert_close
from flagcalc.algebra import RandomSource, dagger, identity, random_idempotent
from flagcalc.errors import DimensionMismatch, NotIdempotent
from flagcalc.idempotent import equivalent, leq, orthogonalize, orthogonalize_algebraic, rank

seeds = st.integers(0, 2**32 - 1)


def idempotents(min_dim=2, max_dim=10):
    @st.composite
    def build(draw):
        m = draw(st.integers(min_dim, max_dim))
        r = draw(st.integers(0, m))
        return random_idempotent(RandomSource(draw(seeds)), m, r)

    return build()


class TestOrder:
    def test_nested(self):
        assert leq(np.diag([1, 0, 0]), np.diag([1, 1, 0]))
        assert not leq(np.diag([1, 1, 0]), np.diag([1, 0, 0]))

    def test_reflexive(self):
        p = np.array([[1, 1], [0, 0]])
        assert leq(p, p) and equivalent(p, p)

    def test_orthogonal_ranges(self):
        assert not leq(np.diag([1, 0]), np.diag([0, 1]))
        assert not equivalent(np.diag([1, 0]), np.diag([0, 1]))

    def test_oblique_equivalent_to_coordinate(self):
        p = np.array([[1, 1], [0, 0]])
        q = np.diag([1, 0])
        # q p = p and p q = q by direct multiplication
        np.testing.assert_array_equal(q @ p, p)
        np.testing.assert_array_equal(p @ q, q)
        assert equivalent(p, q)

    def test_one_sided(self):
        # q p = p while p q != p: ran(p) lies in ran(q) but ker(q) is not in ker(p)
        p = np.array([[1, 0, 1], [0, 0, 0], [0, 0, 0]])
        q = np.diag([1, 1, 0])
        assert leq(p, q)
        assert not np.allclose(p @ q, p)
        assert leq(p, identity(3)) and not leq(identity(3), p)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            leq(np.eye(2), np.eye(3))


class TestOrthogonalize:
    @pytest.mark.parametrize(
        "p, expected",
        [
            ([[1, 1], [0, 0]], np.diag([1, 0])),
            (np.diag([1, 0]), np.diag([1, 0])),
            ([[0, 0], [1, 1]], np.diag([0, 1])),
        ],
    )
    def test_examples(self, p, expected):
        np.testing.assert_allclose(orthogonalize(np.array(p)), expected, atol=1e-15)

    def test_not_idempotent(self):
        with pytest.raises(NotIdempotent):
            orthogonalize(np.array([[1, 1], [0, 1]]))

    @given(p=idempotents())
    def test_projection_and_equivalence(self, p):
        q = orthogonalize(p)
        assert_close(q @ q, q, 1e-12)
        assert_close(dagger(q), q, 1e-12)
        assert_close(q @ p, p, 1e-9)
        assert_close(p @ q, q, 1e-9)

    @given(p=idempotents())
    def test_idempotent_as_a_map(self, p):
        q = orthogonalize(p)
        assert_close(orthogonalize(q), q, 1e-12)

    @given(p=idempotents())
    def test_agrees_with_closed_form(self, p):
        assert_close(orthogonalize(p), orthogonalize_algebraic(p), 1e-9)

    @given(p=idempotents(), seed=seeds)
    def test_similarity_preserves_rank(self, p, seed):
        m = p.shape[0]
        s = identity(m) + RandomSource(seed).matrix(m, norm=0.5)
        q = orthogonalize(s @ p @ np.linalg.inv(s))
        assert abs(np.trace(q) - np.trace(p)) <= 1e-9
        assert rank(q) == round(np.trace(p).real)
