import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlvn import linalg as la
from nlvn.errors import (
    ConvergenceError,
    DefectiveMatrixError,
    DimensionError,
    DomainError,
    FormatError,
)
from nlvn.nonlinearity import Nonlinearity

from conftest import random_complex, random_hermitian

SQRT3 = math.sqrt(3.0)

RHO0 = np.array([[1.5, 0.0, -0.5],
                 [0.0, 1.75, 0.0],
                 [-0.5, 0.0, 1.5]], dtype=complex)
H3 = np.diag([0.0, 1.0, 2.0]).astype(complex)
MU = 1j * SQRT3 / 4.0


class TestCommutator:
    def test_self_commutator_vanishes(self, rng):
        a = random_complex(rng, 4)
        assert la.frobenius(la.commutator(a, a)) == 0.0

    def test_pauli_algebra(self):
        # [sigma_x, sigma_y] = 2i sigma_z, worked out by direct 2x2 products
        sx = np.array([[0, 1], [1, 0]], dtype=complex)
        sy = np.array([[0, -1j], [1j, 0]], dtype=complex)
        sz = np.array([[1, 0], [0, -1]], dtype=complex)
        np.testing.assert_allclose(la.commutator(sx, sy), 2j * sz, atol=1e-15)

    def test_seed_does_not_commute_with_hamiltonian(self):
        assert la.frobenius(la.commutator(RHO0, H3)) > 1e-8

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            la.commutator(np.eye(2), np.eye(3))


class TestSpectralDecompose:
    def test_identity(self):
        dec = la.spectral_decompose(np.eye(3, dtype=complex))
        np.testing.assert_allclose(dec.eigenvalues, [1.0, 1.0, 1.0])
        np.testing.assert_allclose(dec.eigenvectors, np.eye(3), atol=1e-14)

    def test_seed_eigenvalues(self):
        dec = la.spectral_decompose(RHO0)
        np.testing.assert_allclose(dec.eigenvalues, [1.0, 1.75, 2.0], atol=1e-12)

    def test_two_level_block(self):
        # H_k = a [[alpha, beta], [beta, -alpha]] has eigenvalues
        # +- a sqrt(alpha^2 + beta^2) by the 2x2 formula
        a, alpha, beta = 0.7, 1.2, 0.9
        blk = a * np.array([[alpha, beta], [beta, -alpha]], dtype=complex)
        dec = la.spectral_decompose(blk)
        expect = a * math.hypot(alpha, beta)
        np.testing.assert_allclose(dec.eigenvalues, [-expect, expect], atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(1, 8), seed=st.integers(0, 10_000))
    def test_round_trip_and_orthonormality(self, n, seed):
        m = random_hermitian(np.random.default_rng(seed), n)
        dec = la.spectral_decompose(m)
        scale = max(1.0, la.frobenius(m))
        assert la.frobenius(dec.reconstruct() - m) <= 1e-10 * scale
        gram = dec.eigenvectors.conj().T @ dec.eigenvectors
        assert la.frobenius(gram - np.eye(n)) <= 1e-10
        assert np.all(np.diff(dec.eigenvalues) >= -1e-14)

    def test_matches_reference_solver(self, rng):
        m = random_hermitian(rng, 6)
        dec = la.spectral_decompose(m)
        np.testing.assert_allclose(dec.eigenvalues, np.linalg.eigvalsh(m), atol=1e-12)

    def test_iteration_cap_reports_residual(self, rng):
        m = random_hermitian(rng, 5)
        with pytest.raises(ConvergenceError) as err:
            la.spectral_decompose(m, max_sweeps=0)
        assert err.value.residual > 0

    def test_rejects_non_hermitian(self, rng):
        with pytest.raises(DomainError):
            la.spectral_decompose(random_complex(rng, 3))


class TestMatrixFunction:
    def test_identity_function(self, rng):
        m = random_hermitian(rng, 5)
        np.testing.assert_allclose(la.matrix_function(m, lambda x: x), m, atol=1e-12)

    def test_square_against_direct_product(self):
        m = np.diag([1.0, 2.0, 3.0]).astype(complex)
        np.testing.assert_allclose(la.matrix_function(m, lambda x: x ** 2),
                                   np.diag([1.0, 4.0, 9.0]), atol=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(n=st.integers(1, 8), seed=st.integers(0, 10_000))
    def test_square_matches_matmul(self, n, seed):
        m = random_hermitian(np.random.default_rng(seed), n)
        got = la.matrix_function(m, lambda x: x ** 2)
        assert la.frobenius(got - m @ m) <= 1e-10 * max(1.0, la.frobenius(m @ m))

    def test_commutes_with_argument(self, rng):
        m = random_hermitian(rng, 6) + 3.0 * np.eye(6)
        fm = la.matrix_function(m, lambda x: np.exp(x) / (1 + x ** 2))
        bound = 1e-9 * la.frobenius(m) * la.frobenius(fm)
        assert la.frobenius(la.commutator(fm, m)) <= bound

    def test_trace_invariance_under_unitary(self, rng):
        m = random_hermitian(rng, 5)
        u = la.spectral_decompose(random_hermitian(rng, 5)).eigenvectors
        rotated = u @ m @ u.conj().T
        assert abs(np.trace(rotated) - np.trace(m)) <= 1e-12 * max(1.0, abs(np.trace(m)))
        assert abs(la.frobenius(rotated) - la.frobenius(m)) <= 1e-12 * la.frobenius(m)

    def test_noninteger_power_rejects_negative_spectrum(self):
        m = np.diag([-1.0, 1.0]).astype(complex)
        with pytest.raises(DomainError):
            la.matrix_function(m, Nonlinearity.power(0.5))
        got = la.matrix_function(m, Nonlinearity.power(0.5, even=True))
        np.testing.assert_allclose(got, np.eye(2), atol=1e-12)

    def test_rejects_complex_values_on_spectrum(self, rng):
        m = random_hermitian(rng, 3)
        with pytest.raises(DomainError):
            la.matrix_function(m, lambda x: 1j * x)


class TestEigGeneral:
    def test_diagonal(self):
        pairs = la.eig_general(np.diag([1 + 1j, 2.0]).astype(complex))
        vals = [p[0] for p in pairs]
        assert vals == sorted(vals, key=lambda z: (z.real, z.imag))
        np.testing.assert_allclose(sorted(v.real for v in vals), [1.0, 2.0])

    def test_dressing_pencil_spectrum(self):
        # ket-side pencil: eigenvalues 5/4 - i sqrt3/4 and a double 7/4 - i sqrt3/4;
        # the bra-side pencil (conjugate parameter) carries the conjugate triple
        ket = la.eig_general(RHO0 - MU * H3)
        bra = la.eig_general(RHO0 - np.conj(MU) * H3)
        want = np.array([1.25 - 1j * SQRT3 / 4, 1.75 - 1j * SQRT3 / 4, 1.75 - 1j * SQRT3 / 4])
        got_ket = np.array([p[0] for p in ket])
        got_bra = np.array([p[0] for p in bra])
        np.testing.assert_allclose(got_ket, want, atol=1e-10)
        np.testing.assert_allclose(got_bra, np.conj(want), atol=1e-10)

    def test_degenerate_cluster_is_orthonormalized(self):
        pairs = la.eig_general(RHO0 - MU * H3)
        cluster = np.array([v for lam, v in pairs if abs(lam.real - 1.75) < 1e-6])
        gram = cluster.conj() @ cluster.T
        np.testing.assert_allclose(gram, np.eye(2), atol=1e-10)

    def test_residual_contract(self, rng):
        m = random_complex(rng, 7)
        scale = la.frobenius(m)
        for lam, v in la.eig_general(m, tol=1e-10):
            assert np.linalg.norm(m @ v - lam * v) <= 1e-10 * scale

    def test_companion_matrix_roots(self):
        # companion of x^2 - 3x + 2; roots {1, 2} by factoring
        c = np.array([[0.0, -2.0], [1.0, 3.0]], dtype=complex)
        vals = sorted(p[0].real for p in la.eig_general(c))
        np.testing.assert_allclose(vals, [1.0, 2.0], atol=1e-12)

    def test_defective_matrix_reported(self):
        with pytest.raises(DefectiveMatrixError):
            la.eig_general(np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex))

    def test_agrees_with_hermitian_solver(self, rng):
        m = random_hermitian(rng, 5)
        got = np.array(sorted(p[0].real for p in la.eig_general(m)))
        np.testing.assert_allclose(got, la.spectral_decompose(m).eigenvalues, atol=1e-9)

    def test_dimension_cap(self):
        with pytest.raises(DimensionError):
            la.eig_general(np.eye(17, dtype=complex))


class TestMatrixText:
    def test_format_examples(self):
        assert la.format_complex(1.5 + 0j) == "1.5+0i"
        assert la.format_complex(-0.5j) == "0-0.5i"

    def test_parse_rejects_garbage(self):
        for bad in ("", "1.5", "1.5+i", "nani+2i", "1.5+2j"):
            with pytest.raises(FormatError):
                la.parse_complex(bad)

    def test_exact_round_trip(self, rng, tmp_path):
        m = random_complex(rng, 4) * np.exp(rng.standard_normal((4, 4)) * 20)
        path = tmp_path / "m.mat"
        la.write_matrix(path, m)
        np.testing.assert_array_equal(la.read_matrix(path), m)

    def test_vector_round_trip(self, rng, tmp_path):
        v = (rng.standard_normal(5) + 1j * rng.standard_normal(5)) * 1e-7
        path = tmp_path / "v.vec"
        la.write_vector(path, v)
        np.testing.assert_array_equal(la.read_vector(path), v)

    def test_truncated_block_raises(self):
        with pytest.raises(FormatError):
            la.matrix_from_lines(["2", "1+0i 2+0i"])
