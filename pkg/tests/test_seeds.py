import math

import numpy as np
import pytest

from nlvn import linalg as la
from nlvn.darboux import compatibility_residuals
from nlvn.errors import FormatError, SeedError
from nlvn.nonlinearity import Nonlinearity
from nlvn.seeds import (
    SeedBundle,
    build_three_level_seed,
    bundle_from_text,
    bundle_to_text,
    load_bundle,
    make_seed_bundle,
    phi_evolution,
    save_bundle,
    seed_evolution,
    seed_offset,
    validate_seed,
)

SQRT3 = math.sqrt(3.0)
Q_SET = (-2.0, 0.5, math.sqrt(2.0), 2.0, math.pi)


def offset_middle_eigenvalue(q: float) -> float:
    return -2.0 + 0.25 * (1.0 - (4.0 / 7.0) ** (1.0 - q))


class TestSeedOffset:
    def test_linear_gives_zero(self, rng):
        from conftest import random_hermitian
        rho = random_hermitian(rng, 4)
        off = seed_offset(rho, Nonlinearity.custom(lambda x: x, "id"), 1.0)
        assert la.frobenius(off) <= 1e-12

    @pytest.mark.parametrize("q", Q_SET)
    def test_offset_eigenvalues_formula(self, q):
        b = build_three_level_seed(q, omega=1.0)
        eigs = la.spectral_decompose(seed_offset(b.rho0, b.f, 1.0)).eigenvalues
        want = np.sort([-2.0, -2.0, offset_middle_eigenvalue(q)])
        np.testing.assert_allclose(eigs, want, atol=1e-12)

    def test_q_one_is_identity_multiple(self):
        f1 = Nonlinearity.qfamily(1.0)
        off = seed_offset(np.array(
            [[1.5, 0, -0.5], [0, 1.75, 0], [-0.5, 0, 1.5]], dtype=complex), f1, 1.0)
        np.testing.assert_allclose(off, -2.0 * np.eye(3), atol=1e-12)


class TestValidateSeed:
    def test_built_in_seed_passes(self):
        b = build_three_level_seed(0.5, omega=1.0)
        rep = validate_seed(b.rho0, b.hamiltonian, b.f, b.a)
        assert rep.all_ok

    def test_diagonal_rho_fails_noncommuting(self):
        rho = np.diag([1.0, 1.75, 2.0]).astype(complex)
        h = np.diag([0.0, 1.0, 2.0]).astype(complex)
        rep = validate_seed(rho, h, Nonlinearity.qfamily(0.5), 1.0)
        assert not rep.noncommuting_rho

    def test_q_one_fails_nontrivial_offset(self):
        rho = np.array([[1.5, 0, -0.5], [0, 1.75, 0], [-0.5, 0, 1.5]], dtype=complex)
        h = np.diag([0.0, 1.0, 2.0]).astype(complex)
        rep = validate_seed(rho, h, Nonlinearity.qfamily(1.0), 1.0)
        assert rep.commutes and not rep.nontrivial_offset


class TestBuildThreeLevelSeed:
    def test_rejects_q_one(self):
        with pytest.raises(SeedError):
            build_three_level_seed(1.0)

    def test_rejects_bad_omega(self):
        with pytest.raises(SeedError):
            build_three_level_seed(2.0, omega=-1.0)

    def test_unnormalized_trace(self):
        b = build_three_level_seed(2.0)
        assert abs(np.trace(b.rho0).real - 4.75) <= 1e-14
        assert abs(np.trace(b.normalized_view()).real - 1.0) <= 1e-14

    def test_seed_spectrum(self):
        b = build_three_level_seed(0.5)
        np.testing.assert_allclose(la.spectral_decompose(b.rho0).eigenvalues,
                                   [1.0, 1.75, 2.0], atol=1e-13)

    @pytest.mark.parametrize("q", Q_SET)
    def test_pencil_spectrum_conjugate_pair(self, q):
        b = build_three_level_seed(q, omega=1.3)
        bra_pencil = b.rho0 - b.nu * b.hamiltonian
        vals = np.array([p[0] for p in la.eig_general(bra_pencil)])
        want = np.array([1.25 + 1j * SQRT3 / 4,
                         1.75 + 1j * SQRT3 / 4,
                         1.75 + 1j * SQRT3 / 4])
        np.testing.assert_allclose(vals, want, atol=1e-10)
        assert abs(b.z_mu - (1.75 - 1j * SQRT3 / 4)) <= 1e-12

    def test_phi0_is_unit_pencil_eigenvector(self):
        b = build_three_level_seed(2.0, omega=0.7)
        assert abs(np.linalg.norm(b.phi0) - 1.0) <= 1e-14
        pencil = b.rho0 - b.mu * b.hamiltonian
        assert np.linalg.norm(pencil @ b.phi0 - b.z_mu * b.phi0) <= 1e-12

    def test_phi0_matches_standard_components(self):
        b = build_three_level_seed(2.0)
        want = np.array([(1j + SQRT3) / 4, 1 / math.sqrt(2), (1j - SQRT3) / 4])
        np.testing.assert_allclose(b.phi0, want, atol=1e-14)

    @pytest.mark.parametrize("q", (0.5, 2.0))
    def test_phi0_not_offset_eigenstate(self, q):
        b = build_three_level_seed(q)
        proj = np.vdot(b.phi0, b.offset @ b.phi0) * b.phi0
        assert np.linalg.norm(b.offset @ b.phi0 - proj) > 1e-3

    def test_mix_option_gives_other_eigenvector(self):
        b = build_three_level_seed(2.0, mix=(0.3 + 0.1j, 0.9))
        pencil = b.rho0 - b.mu * b.hamiltonian
        assert np.linalg.norm(pencil @ b.phi0 - b.z_mu * b.phi0) <= 1e-12
        assert abs(np.linalg.norm(b.phi0) - 1.0) <= 1e-13

    def test_root_pair_of_fixed_point_equation(self):
        # f(x) - x + 2 factorizes with roots exactly {1, 2} for every q
        for q in Q_SET:
            f = Nonlinearity.qfamily(q)
            for x in (1.0, 2.0):
                assert abs(float(f(np.array([x]))[0]) - x + 2.0) <= 1e-12
            assert abs(float(f(np.array([1.5]))[0]) - 1.5 + 2.0) > 1e-3

    def test_make_seed_bundle_rejects_non_eigenvector(self):
        b = build_three_level_seed(2.0)
        with pytest.raises(SeedError):
            make_seed_bundle(b.rho0, b.hamiltonian, b.f, 1.0, b.mu,
                             np.array([1.0, 0.0, 0.0]))

    def test_make_seed_bundle_rejects_commuting_rho(self):
        h = np.diag([0.0, 1.0, 2.0]).astype(complex)
        rho = np.diag([1.0, 1.75, 2.0]).astype(complex)
        with pytest.raises(SeedError):
            make_seed_bundle(rho, h, Nonlinearity.qfamily(0.5), 1.0, 1j,
                             np.array([1.0, 0.0, 0.0]))


class TestSeedEvolution:
    def test_time_zero(self):
        b = build_three_level_seed(2.0)
        np.testing.assert_allclose(seed_evolution(b, 0.0), b.rho0, atol=1e-14)

    def test_phase_arithmetic(self):
        # diagonal H: entry (m, n) picks up exp(-i a omega (m - n) t);
        # at t = pi/(2 omega) the (0,2) entry flips sign: -1/2 -> +1/2
        omega = 0.8
        b = build_three_level_seed(2.0, omega=omega)
        rt = seed_evolution(b, math.pi / (2 * omega))
        assert abs(rt[0, 2] - 0.5) <= 1e-12

    def test_spectrum_and_trace_preserved(self):
        b = build_three_level_seed(0.5, omega=1.0)
        rt = seed_evolution(b, 3.7)
        np.testing.assert_allclose(la.spectral_decompose(rt).eigenvalues,
                                   [1.0, 1.75, 2.0], atol=1e-12)
        assert abs(np.trace(rt).real - 4.75) <= 1e-12

    @pytest.mark.parametrize("q", (0.5, 2.0))
    def test_seed_solves_the_flow(self, q):
        b = build_three_level_seed(q, omega=1.0)
        h_fd = 1e-4
        ts = np.array([-h_fd, 0.0, h_fd]) + 0.37
        rhos = [seed_evolution(b, float(t)) for t in ts]
        a_ops = [la.matrix_function(r, b.f) for r in rhos]
        r_evo, r_comm = compatibility_residuals(ts, rhos, a_ops, b.hamiltonian)
        assert r_evo <= 100 * h_fd ** 2
        assert r_comm <= 1e-10

    def test_phi_evolution_solves_lax_flow(self):
        b = build_three_level_seed(2.0, omega=1.0)
        h_fd = 1e-5
        t = 0.21
        phi_dot = (phi_evolution(b, t + h_fd) - phi_evolution(b, t - h_fd)) / (2 * h_fd)
        a_op = la.matrix_function(seed_evolution(b, t), b.f)
        resid = np.linalg.norm(1j * phi_dot - (a_op @ phi_evolution(b, t)) / b.mu)
        assert resid <= 1e-6

    def test_phi_evolution_keeps_pencil_eigenvector(self):
        b = build_three_level_seed(0.5, omega=1.0)
        t = 1.3
        phi_t = phi_evolution(b, t)
        pencil = seed_evolution(b, t) - b.mu * b.hamiltonian
        z = np.vdot(phi_t, pencil @ phi_t) / np.vdot(phi_t, phi_t)
        assert abs(z - b.z_mu) <= 1e-10
        assert np.linalg.norm(pencil @ phi_t - z * phi_t) <= 1e-10 * np.linalg.norm(phi_t)


class TestSerialization:
    def test_round_trip(self, tmp_path):
        b = build_three_level_seed(0.5, omega=0.5)
        path = tmp_path / "seed.cfg"
        save_bundle(path, b)
        b2 = load_bundle(path)
        assert isinstance(b2, SeedBundle)
        np.testing.assert_array_equal(b2.rho0, b.rho0)
        np.testing.assert_array_equal(b2.phi0, b.phi0)
        assert b2.mu == b.mu and b2.a == b.a and b2.omega == b.omega
        assert b2.f.q == b.f.q

    def test_malformed_text_raises(self):
        with pytest.raises(FormatError):
            bundle_from_text("q = 0.5\nnot a line\n")
        with pytest.raises(FormatError):
            bundle_from_text("f = qfamily\nq = 0.5\n")  # missing blocks

    def test_custom_f_not_serializable(self):
        b = build_three_level_seed(0.5)
        object.__setattr__(b, "f", Nonlinearity.custom(lambda x: x, "id"))
        with pytest.raises(FormatError):
            bundle_to_text(b)
