"""Lax pair residuals, rank-one projectors and the dressing maps.

The linear system behind i rho_dot = [H, A], [A, rho] = 0 consists of a bra
family   z_lam <psi| = <psi|(rho - lam*H),  -i <psi_dot| = (1/lam) <psi| A
a ket family at mu and a bra family at nu. A ket phi and a bra chi combine
into the projector P = |phi><chi| / <chi|phi>, and

    rho1 = rho + (mu - nu) [P, H]
         = (1 + (mu-nu)/nu P) rho (1 + (nu-mu)/mu P)

maps solutions to solutions. The two forms agree identically whenever phi
and chi are genuine eigenvectors of the respective pencils, so their
agreement is asserted at runtime as a consistency check on P's provenance.

Bras are stored as plain kets; a stored vector b acts as the bra
<b| = b^dagger, i.e. row-multiplication uses b.conj().
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import DimensionError, DressingError, ParameterError, ProjectorError
from .nonlinearity import Nonlinearity

Array = np.ndarray

#: relative agreement required between the additive and product dressing forms
FORM_AGREEMENT_RTOL = 1e-9
#: relative threshold below which <chi|phi> counts as degenerate
PROJECTOR_PAIR_RTOL = 1e-12
#: tolerance for the functional identity dress(f(rho)) = f(dress(rho))
FUNCTION_COVARIANCE_TOL = 1e-8


@dataclass(frozen=True)
class LaxParameters:
    """Spectral parameters (lam, mu, nu) and their pencil eigenvalues."""

    lam: complex
    mu: complex
    nu: complex
    z_lam: complex = 0.0
    z_mu: complex = 0.0
    z_nu: complex = 0.0

    def __post_init__(self):
        for name in ("lam", "mu", "nu"):
            if getattr(self, name) == 0:
                raise ParameterError(f"{name} must be nonzero (it divides)")
        if self.lam == self.mu:
            raise ParameterError("lam must differ from mu (denominator of the bra map)")


@dataclass(frozen=True)
class Projector:
    """Rank-one idempotent P = |phi><chi| / <chi|phi>."""

    matrix: Array
    phi: Array
    chi: Array

    def __post_init__(self):
        for arr in (self.matrix, self.phi, self.chi):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_hermitian(self) -> bool:
        m = self.matrix
        return la.frobenius(m - m.conj().T) <= 1e-12 * max(la.frobenius(m), 1e-300)


def make_projector(phi, chi, tol: float = PROJECTOR_PAIR_RTOL) -> Projector:
    """Build P = |phi><chi| / <chi|phi>; Hermitian when chi is phi.

    Raises ProjectorError when the pair is orthogonal to within
    ``tol * ||phi|| * ||chi||`` (the projector would blow up).
    """
    phi = la.as_vector(phi, "phi")
    chi = la.as_vector(chi, "chi")
    if phi.size != chi.size:
        raise DimensionError("phi and chi dimensions differ")
    pairing = np.vdot(chi, phi)
    floor = tol * np.linalg.norm(phi) * np.linalg.norm(chi)
    if abs(pairing) <= floor:
        raise ProjectorError(
            f"<chi|phi> = {pairing:.3e} is degenerate (|.| <= {floor:.3e})"
        )
    p = np.outer(phi, chi.conj()) / pairing
    return Projector(matrix=p, phi=phi.copy(), chi=chi.copy())


def lax_residuals(psi, rho, hamiltonian, params: LaxParameters, a_op, psi_dot) -> tuple[float, float]:
    """Residual norms of the bra pair at lam.

    r_spectral = || <psi|(rho - lam H) - z_lam <psi| ||
    r_temporal = || -i <psi_dot| - (1/lam) <psi| A ||
    """
    psi = la.as_vector(psi, "psi")
    psi_dot = la.as_vector(psi_dot, "psi_dot")
    rho = la.as_matrix(rho, "rho")
    h = la.as_matrix(hamiltonian, "hamiltonian")
    a_op = la.as_matrix(a_op, "a_op")
    if not (psi.size == psi_dot.size == rho.shape[0] == h.shape[0] == a_op.shape[0]):
        raise DimensionError("inconsistent dimensions in lax_residuals")
    bra = psi.conj()
    r_spec = float(np.linalg.norm(bra @ (rho - params.lam * h) - params.z_lam * bra))
    r_temp = float(np.linalg.norm(-1j * psi_dot.conj() - (1.0 / params.lam) * (bra @ a_op)))
    return r_spec, r_temp


def lax_residual_ket(phi, rho, hamiltonian, mu: complex, z_mu: complex) -> float:
    """|| (rho - mu H) |phi> - z_mu |phi> || for the ket family."""
    phi = la.as_vector(phi, "phi")
    pencil = la.as_matrix(rho, "rho") - mu * la.as_matrix(hamiltonian, "hamiltonian")
    return float(np.linalg.norm(pencil @ phi - z_mu * phi))


def dress_rho(rho, hamiltonian, p: Projector, mu: complex, nu: complex,
              rtol: float = FORM_AGREEMENT_RTOL) -> Array:
    """rho1 = rho + (mu - nu)[P, H], cross-checked against the product form.

    The product form (1 + (mu-nu)/nu P) rho (1 + (nu-mu)/mu P) agrees with
    the additive form identically when P comes from genuine pencil
    eigenvectors at mu and nu; disagreement raises DressingError.
    """
    if mu == 0 or nu == 0:
        raise ParameterError("mu and nu must be nonzero")
    rho = la.as_matrix(rho, "rho")
    h = la.as_matrix(hamiltonian, "hamiltonian")
    if rho.shape != h.shape or rho.shape[0] != p.dim:
        raise DimensionError("inconsistent dimensions in dress_rho")
    additive = rho + (mu - nu) * la.commutator(p.matrix, h)
    eye = np.eye(p.dim, dtype=complex)
    left = eye + ((mu - nu) / nu) * p.matrix
    right = eye + ((nu - mu) / mu) * p.matrix
    product = left @ rho @ right
    gap = la.frobenius(additive - product)
    if gap > rtol * max(la.frobenius(rho), 1e-300):
        raise DressingError(
            f"additive and product dressing forms disagree by {gap:.3e}; "
            "the projector was not built from matching pencil eigenvectors"
        )
    return additive


def dress_generator(a_op, p: Projector, mu: complex, nu: complex,
                    f: Nonlinearity | None = None, rho1: Array | None = None,
                    tol: float = FUNCTION_COVARIANCE_TOL) -> Array:
    """A1 = (1 + (mu-nu)/nu P) A (1 + (nu-mu)/mu P).

    When ``f`` and ``rho1`` are supplied, the caller declares A = f(rho) for
    the undressed rho; the identity A1 = f(rho1) is then verified and its
    failure raises DressingError.
    """
    if mu == 0 or nu == 0:
        raise ParameterError("mu and nu must be nonzero")
    a_op = la.as_matrix(a_op, "a_op")
    if a_op.shape[0] != p.dim:
        raise DimensionError("inconsistent dimensions in dress_generator")
    eye = np.eye(p.dim, dtype=complex)
    a1 = (eye + ((mu - nu) / nu) * p.matrix) @ a_op @ (eye + ((nu - mu) / mu) * p.matrix)
    if (f is None) != (rho1 is None):
        raise ParameterError("f and rho1 must be supplied together")
    if f is not None and rho1 is not None:
        expected = la.matrix_function(la.as_hermitian(rho1, name="rho1"), f)
        gap = la.frobenius(a1 - expected)
        if gap > tol * max(la.frobenius(expected), 1.0):
            raise DressingError(
                f"dressed generator differs from f(rho1) by {gap:.3e}; "
                "inputs are not a consistent dressing bundle"
            )
    return a1


def dress_bra(psi, p: Projector, lam: complex, mu: complex, nu: complex) -> Array:
    """<psi1| = <psi|(1 - (nu - mu)/(lam - mu) P), returned as a stored ket."""
    if lam == mu:
        raise ParameterError("lam must differ from mu")
    psi = la.as_vector(psi, "psi")
    if psi.size != p.dim:
        raise DimensionError("psi dimension does not match the projector")
    bra = psi.conj()
    dressed = bra - ((nu - mu) / (lam - mu)) * (bra @ p.matrix)
    return dressed.conj()


@dataclass(frozen=True)
class DressingResult:
    rho1: Array
    a1: Array
    psi1: Array | None = None

    def __post_init__(self):
        self.rho1.flags.writeable = False
        self.a1.flags.writeable = False
        if self.psi1 is not None:
            self.psi1.flags.writeable = False


def darboux_dress(rho, hamiltonian, a_op, p: Projector, mu: complex, nu: complex,
                  psi=None, lam: complex | None = None) -> DressingResult:
    """One full dressing step (rho, A and optionally a bra at lam)."""
    rho1 = dress_rho(rho, hamiltonian, p, mu, nu)
    a1 = dress_generator(a_op, p, mu, nu)
    psi1 = None
    if psi is not None:
        if lam is None:
            raise ParameterError("dressing a bra requires its parameter lam")
        psi1 = dress_bra(psi, p, lam, mu, nu)
    return DressingResult(rho1=rho1, a1=a1, psi1=psi1)


def iterate_dressing(chain, rho0, hamiltonian, f: Nonlinearity) -> list[Array]:
    """Repeated dressing: chain entries are (phi, chi, mu, nu) built against
    the previous stage's rho (the caller supplies genuine Lax vectors).

    Returns [rho0, rho1, ..., rhoN]; every stage runs the dual-form check.
    """
    rho = la.as_hermitian(rho0, name="rho0")
    h = la.as_matrix(hamiltonian, "hamiltonian")
    out = [rho]
    for phi, chi, mu, nu in chain:
        p = make_projector(phi, chi)
        rho = dress_rho(out[-1], h, p, mu, nu)
        out.append(rho)
    return out


# ---------------------------------------------------------------------------
# Finite-difference residual meters for trajectories on uniform grids
# ---------------------------------------------------------------------------

def _check_uniform(times) -> float:
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise DimensionError("need at least 3 samples for central differences")
    steps = np.diff(times)
    h = float(steps[0])
    if np.max(np.abs(steps - h)) > 1e-14 * max(abs(h), 1.0):
        raise DimensionError("time grid is not uniform")
    return h


def projector_evolution_residual(times, p_traj, a_traj, mu: complex, nu: complex) -> float:
    """Max interior-point residual of
    i P_dot = (1/mu)(1-P) A P - (1/nu) P A (1-P), with central differences."""
    h = _check_uniform(times)
    p_traj = [la.as_matrix(p, "P") for p in p_traj]
    a_traj = [la.as_matrix(a, "A") for a in a_traj]
    n = p_traj[0].shape[0]
    eye = np.eye(n, dtype=complex)
    worst = 0.0
    for k in range(1, len(p_traj) - 1):
        pdot = (p_traj[k + 1] - p_traj[k - 1]) / (2.0 * h)
        p, a = p_traj[k], a_traj[k]
        rhs = (1.0 / mu) * ((eye - p) @ a @ p) - (1.0 / nu) * (p @ a @ (eye - p))
        worst = max(worst, la.frobenius(1j * pdot - rhs))
    return worst


def compatibility_residuals(times, rho_traj, a_traj, hamiltonian) -> tuple[float, float]:
    """(max ||i rho_dot - [H, A]||, max ||[A, rho]||) over the grid."""
    h = _check_uniform(times)
    ham = la.as_matrix(hamiltonian, "hamiltonian")
    rho_traj = [la.as_matrix(r, "rho") for r in rho_traj]
    a_traj = [la.as_matrix(a, "A") for a in a_traj]
    r_evolution = 0.0
    for k in range(1, len(rho_traj) - 1):
        rdot = (rho_traj[k + 1] - rho_traj[k - 1]) / (2.0 * h)
        r_evolution = max(r_evolution, la.frobenius(1j * rdot - la.commutator(ham, a_traj[k])))
    r_commute = max(la.frobenius(la.commutator(a, r)) for a, r in zip(a_traj, rho_traj))
    return r_evolution, r_commute
