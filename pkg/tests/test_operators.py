"""Majorana registers, island parities and the spectral norm."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from majobraid.operators import (
    SIGMA_0,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    NumericError,
    ParityUndefinedError,
    RegisterSizeError,
    appendix_a_set,
    build_majorana_set,
    island_parity,
    kron,
    spectral_norm,
)


def random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


class TestMajoranaSet:
    @pytest.mark.parametrize("n", range(1, 7))
    def test_clifford_algebra(self, n):
        m = build_majorana_set(n)
        eye = np.eye(m.dim)
        assert len(m) == 2 * n
        for i, a in enumerate(m.matrices):
            assert np.abs(a - a.conj().T).max() <= 1e-12
            for j, b in enumerate(m.matrices):
                expected = 2 * eye if i == j else 0 * eye
                assert np.abs(a @ b + b @ a - expected).max() <= 1e-12

    def test_large_register(self):
        # 12 modes densely needs about 6 GB, so stop at 10
        m = build_majorana_set(10)
        assert m.dim == 1024
        a, b = m[0], m[19]
        v = np.random.default_rng(0).normal(size=1024)
        assert np.abs(a @ (b @ v) + b @ (a @ v)).max() <= 1e-12
        assert np.abs(b @ (b @ v) - v).max() <= 1e-12

    def test_single_mode_is_pauli_pair(self):
        m = build_majorana_set(1)
        assert np.array_equal(m[0], SIGMA_X)
        assert np.array_equal(m[1], SIGMA_Y)

    def test_total_parity_of_two_modes(self):
        m = build_majorana_set(2)
        p = -m.product(0, 1, 2, 3)  # (-i g0 g1)(-i g2 g3)
        w = np.linalg.eigvalsh(p)
        assert np.allclose(w, [-1, -1, 1, 1], atol=1e-12)

    def test_z_string_to_lower_qubits(self):
        m = build_majorana_set(3)
        # qubit 0 is the rightmost Kronecker factor
        assert np.array_equal(m[4], kron(SIGMA_X, SIGMA_Z, SIGMA_Z))
        assert np.array_equal(m[1], kron(SIGMA_0, SIGMA_0, SIGMA_Y))

    @pytest.mark.parametrize("n", [0, 13, -1, 2.0])
    def test_size_error(self, n):
        with pytest.raises(RegisterSizeError):
            build_majorana_set(n)

    def test_deterministic(self):
        a, b = build_majorana_set(4), build_majorana_set(4)
        assert all(np.array_equal(x, y) for x, y in zip(a.matrices, b.matrices))

    def test_lookup_by_label(self):
        m = build_majorana_set(2, ["a", "b", "c", "d"])
        assert np.array_equal(m["c"], m[2])
        assert m.index("d") == 3
        with pytest.raises(ValueError):
            build_majorana_set(2, ["a", "b"])


class TestAppendixSet:
    def test_printed_kronecker_products(self):
        m = appendix_a_set()
        expected = {
            "Gamma_B": kron(SIGMA_0, SIGMA_0, SIGMA_X),
            "Gamma_C": kron(SIGMA_0, SIGMA_0, SIGMA_Y),
            "Gamma_E": kron(SIGMA_0, SIGMA_X, SIGMA_Z),
            "Gamma_F": kron(SIGMA_0, SIGMA_Y, SIGMA_Z),
            "gamma_1": kron(SIGMA_X, SIGMA_Z, SIGMA_Z),
            "gamma_2": kron(SIGMA_Y, SIGMA_Z, SIGMA_Z),
        }
        for label, mat in expected.items():
            assert np.array_equal(m[label], mat)

    def test_equals_generic_chain(self):
        a, b = appendix_a_set(), build_majorana_set(3)
        assert all(np.array_equal(x, y) for x, y in zip(a.matrices, b.matrices))

    def test_algebra(self):
        assert appendix_a_set().algebra_defect() <= 1e-12


class TestIslandParity:
    def test_pair_is_minus_i_product(self):
        m = build_majorana_set(2)
        p = island_parity(m, [0, 1], "k")
        assert np.allclose(p.matrix, -1j * m[0] @ m[1], atol=0)
        assert np.abs(p.matrix - p.matrix.conj().T).max() <= 1e-12
        assert p.member_indices == (0, 1)

    def test_four_members(self):
        m = build_majorana_set(4)
        p = island_parity(m, [1, 2, 5, 6]).matrix
        assert np.abs(p - p.conj().T).max() <= 1e-12
        assert np.abs(p @ p - np.eye(m.dim)).max() <= 1e-12
        assert set(np.round(np.linalg.eigvalsh(p), 12)) == {-1.0, 1.0}

    def test_repeatable(self):
        m = build_majorana_set(3)
        assert np.array_equal(island_parity(m, [0, 3]).matrix, island_parity(m, [0, 3]).matrix)

    @pytest.mark.parametrize("members", [[0], [0, 1, 2], []])
    def test_odd_count(self, members):
        with pytest.raises(ParityUndefinedError):
            island_parity(build_majorana_set(2), members)

    def test_repeated_member(self):
        with pytest.raises(ValueError):
            island_parity(build_majorana_set(2), [1, 1])

    @settings(max_examples=25, deadline=None)
    @given(st.data())
    def test_commutes_with_even_products_of_others(self, data):
        m = build_majorana_set(4)
        members = data.draw(st.lists(st.integers(0, 7), min_size=2, max_size=4, unique=True).filter(lambda x: len(x) % 2 == 0))
        others = [i for i in range(8) if i not in members]
        k = data.draw(st.sampled_from([2, 4]).filter(lambda k: k <= len(others)))
        chosen = data.draw(st.lists(st.sampled_from(others), min_size=k, max_size=k, unique=True))
        p = island_parity(m, members).matrix
        q = m.product(*chosen)
        assert np.abs(p @ q - q @ p).max() <= 1e-12


class TestSpectralNorm:
    @pytest.mark.parametrize("n", [1, 4, 16])
    def test_identity(self, n):
        assert spectral_norm(np.eye(n)) == pytest.approx(1.0, rel=1e-12)

    def test_scaled_unitary(self):
        u = random_unitary(np.random.default_rng(1), 8)
        assert spectral_norm(2 * u) == pytest.approx(2.0, rel=1e-10)

    def test_hermitian_against_eigenvalues(self):
        rng = np.random.default_rng(2)
        a = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))
        h = a + a.conj().T
        assert spectral_norm(h) == pytest.approx(np.abs(np.linalg.eigvalsh(h)).max(), rel=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 10))
    def test_matches_svd(self, seed, n):
        rng = np.random.default_rng(seed)
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        assert spectral_norm(a) == pytest.approx(np.linalg.svd(a, compute_uv=False)[0], rel=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_submultiplicative_and_unitarily_invariant(self, seed):
        rng = np.random.default_rng(seed)
        a, b = (rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6)) for _ in range(2))
        assert spectral_norm(a @ b) <= spectral_norm(a) * spectral_norm(b) + 1e-9
        u = random_unitary(rng, 6)
        assert abs(spectral_norm(u @ a @ u.conj().T) - spectral_norm(a)) <= 1e-9

    def test_zero_and_tiny(self):
        assert spectral_norm(np.zeros((3, 3))) == 0.0
        assert spectral_norm(1e-200 * np.eye(2)) == pytest.approx(1e-200)

    @pytest.mark.parametrize("bad", [np.nan, np.inf])
    def test_non_finite(self, bad):
        m = np.eye(2)
        m[0, 1] = bad
        with pytest.raises(NumericError):
            spectral_norm(m)

    def test_rejects_rectangular(self):
        with pytest.raises(ValueError):
            spectral_norm(np.ones((2, 3)))
