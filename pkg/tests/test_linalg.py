import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gbsim.linalg import (
    Interferometer,
    InvalidDimensionError,
    hafnian,
    haar_unitary,
    load_unitary,
    permanent,
    read_config,
    save_unitary,
    submatrix_ws,
    submatrix_wx,
)
from oracles import naive_permanent, random_symmetric


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


class TestHaarUnitary:
    def test_one_by_one_is_a_phase(self):
        inter = haar_unitary(1, 7)
        assert inter.U.shape == (1, 1)
        assert abs(abs(inter.U[0, 0]) - 1) < 1e-14

    def test_deterministic(self):
        a, b = haar_unitary(3, 42), haar_unitary(3, 42)
        np.testing.assert_array_equal(a.U, b.U)
        np.testing.assert_array_equal(a.W, b.W)

    def test_different_seeds_differ(self):
        assert not np.allclose(haar_unitary(3, 1).U, haar_unitary(3, 2).U)

    @pytest.mark.parametrize("m", range(1, 33))
    def test_invariants(self, m):
        inter = haar_unitary(m, m)
        eye = np.eye(m)
        assert np.max(np.abs(inter.U @ inter.U.conj().T - eye)) <= 1e-10
        assert np.max(np.abs(inter.W @ inter.W.conj().T - eye)) <= 1e-10
        np.testing.assert_array_equal(inter.W, inter.W.T)

    def test_w_is_u_ut(self):
        inter = haar_unitary(6, 1)
        np.testing.assert_allclose(inter.W, inter.U @ inter.U.T, atol=1e-14)

    def test_zero_dimension(self):
        with pytest.raises(InvalidDimensionError):
            haar_unitary(0, 1)

    def test_rejects_non_unitary(self):
        with pytest.raises(ValueError):
            Interferometer.from_unitary(np.ones((2, 2)))

    def test_phases_are_haar(self):
        # first-column phase of a Haar unitary is uniform on the circle
        angles = np.array([np.angle(haar_unitary(2, s).U[0, 0]) for s in range(2000)])
        hist, _ = np.histogram(angles, bins=8, range=(-np.pi, np.pi))
        assert hist.min() > 180 and hist.max() < 320

    def test_file_roundtrip(self, tmp_path):
        inter = haar_unitary(5, 3)
        path = tmp_path / "u.json"
        save_unitary(path, inter.U)
        back = load_unitary(path)
        np.testing.assert_array_equal(back.U, inter.U)
        np.testing.assert_array_equal(back.W, inter.W)


class TestHafnian:
    def test_empty(self):
        assert hafnian(np.zeros((0, 0))) == 1
        assert hafnian(np.zeros((0, 0)), mode="enumeration") == 1

    @pytest.mark.parametrize("mode", ["fast", "enumeration"])
    def test_four_by_four_expansion(self, rng, mode):
        V = random_symmetric(4, rng)
        expected = V[0, 1] * V[2, 3] + V[0, 2] * V[1, 3] + V[0, 3] * V[1, 2]
        assert rel(hafnian(V, mode), expected) < 1e-13

    @pytest.mark.parametrize("mode", ["fast", "enumeration"])
    def test_all_ones(self, mode):
        # number of perfect matchings (n-1)!!
        assert hafnian(np.ones((6, 6)), mode) == pytest.approx(15)
        assert hafnian(np.ones((8, 8)), mode) == pytest.approx(105)

    @pytest.mark.parametrize("mode", ["fast", "enumeration"])
    def test_identity(self, mode):
        assert hafnian(np.eye(4), mode) == 0

    def test_odd_dimension(self):
        with pytest.raises(InvalidDimensionError):
            hafnian(np.ones((3, 3)))

    def test_non_symmetric(self, rng):
        A = random_symmetric(4, rng)
        A[0, 1] += 1e-6
        with pytest.raises(ValueError):
            hafnian(A)

    def test_tiny_asymmetry_is_symmetrised(self, rng):
        A = random_symmetric(4, rng)
        B = A.copy()
        B[0, 1] += 1e-14
        assert rel(hafnian(B), hafnian(A)) < 1e-12

    @pytest.mark.parametrize("n", [2, 4, 6, 8, 10])
    def test_fast_matches_enumeration(self, rng, n):
        for _ in range(5):
            A = random_symmetric(n, rng)
            assert rel(hafnian(A, "fast"), hafnian(A, "enumeration")) < 1e-9

    def test_fast_matches_enumeration_n12(self, rng):
        A = random_symmetric(12, rng)
        assert rel(hafnian(A, "fast"), hafnian(A, "enumeration")) < 1e-9

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            hafnian(np.ones((2, 2)), mode="magic")


class TestPermanent:
    @pytest.mark.parametrize("n", [0, 1, 3, 6])
    def test_identity(self, n):
        assert permanent(np.eye(n)) == pytest.approx(1)

    def test_all_ones(self):
        assert permanent(np.ones((4, 4))) == pytest.approx(24)

    @pytest.mark.parametrize("n", range(1, 9))
    def test_matches_naive_expansion(self, rng, n):
        A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        assert rel(permanent(A), naive_permanent(A)) < 1e-10

    def test_zero_row(self, rng):
        A = rng.standard_normal((5, 5)) + 0j
        A[2] = 0
        assert permanent(A) == 0

    def test_non_square(self):
        with pytest.raises(InvalidDimensionError):
            permanent(np.ones((2, 3)))


class TestSubmatrices:
    def test_ws_matches_worked_example(self):
        W = np.arange(36).reshape(6, 6)
        W = W + W.T
        Ws = submatrix_ws(W, (1, 1, 0, 2, 0, 0))
        rows = [0, 1, 3, 3]
        np.testing.assert_array_equal(Ws, W[np.ix_(rows, rows)])
        assert Ws[2, 3] == W[3, 3] and Ws[3, 2] == W[3, 3]

    def test_wx_matches_ws(self):
        W = haar_unitary(6, 0).W
        np.testing.assert_array_equal(submatrix_wx(W, (1, 2, 4, 4)), submatrix_ws(W, (1, 1, 0, 2, 0, 0)))

    def test_double_occupation(self):
        W = haar_unitary(4, 0).W
        Ws = submatrix_ws(W, (0, 0, 2, 0))
        np.testing.assert_array_equal(Ws, np.full((2, 2), W[2, 2]))

    def test_empty(self):
        W = haar_unitary(4, 0).W
        assert submatrix_ws(W, (0, 0, 0, 0)).shape == (0, 0)
        assert submatrix_wx(W, ()).shape == (0, 0)

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidDimensionError):
            submatrix_ws(np.eye(4), (1, 1, 0))

    def test_out_of_range(self):
        with pytest.raises(IndexError):
            submatrix_wx(np.eye(4), (1, 5))
        with pytest.raises(IndexError):
            submatrix_wx(np.eye(4), (0, 1))

    def test_read_config(self):
        np.testing.assert_array_equal(read_config((1, 2, 4, 4), 6), [1, 1, 0, 2, 0, 0])
        np.testing.assert_array_equal(read_config((), 3), [0, 0, 0])
        np.testing.assert_array_equal(read_config((3, 3, 3, 3), 3), [0, 0, 4])


@settings(max_examples=40, deadline=None)
@given(
    st.integers(min_value=2, max_value=6),
    st.lists(st.integers(min_value=1, max_value=6), min_size=0, max_size=8).filter(lambda x: len(x) % 2 == 0),
    st.randoms(use_true_random=False),
)
def test_hafnian_permutation_invariance(m, x, rnd):
    x = [min(v, m) for v in x]
    W = haar_unitary(m, len(x)).W
    base = hafnian(submatrix_wx(W, x), "enumeration")
    perm = list(x)
    rnd.shuffle(perm)
    assert abs(hafnian(submatrix_wx(W, perm), "enumeration") - base) <= 1e-10 * max(abs(base), 1e-300)
    s = read_config(x, m)
    assert abs(hafnian(submatrix_ws(W, s), "enumeration") - base) <= 1e-10 * max(abs(base), 1e-300)


def test_all_orderings_same_hafnian():
    W = haar_unitary(5, 9).W
    x = (1, 3, 3, 5, 2, 2)
    ref = hafnian(submatrix_wx(W, x))
    for p in set(itertools.permutations(x)):
        assert abs(hafnian(submatrix_wx(W, p)) - ref) < 1e-12
