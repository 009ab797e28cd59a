"""Seed solutions of i rho_dot = [H, f(rho)].

A seed is a pair (rho, H) together with a nonlinearity f and a real number a
such that the offset f(rho) - a*rho commutes with H while rho itself does
not. Such a seed evolves by plain unitary conjugation,
rho(t) = exp(-i a H t) rho(0) exp(i a H t), and is the raw material for the
dressing construction.

The built-in three-level oscillator seed uses f(x) = x^q - 2 x^(q-1), whose
fixed-point equation f(x) = x - 2 has roots {1, 2} for every q; placing two
eigenvalues of rho on those roots makes the offset degenerate there, leaving
a single q-dependent eigenvalue on the middle level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import FormatError, SeedError
from .nonlinearity import Nonlinearity

Array = np.ndarray

#: tolerance on || [offset, H] ||_F for a valid seed
OFFSET_COMMUTE_TOL = 1e-10
#: minimal eigenvalue spread of the offset (rules out multiples of identity)
OFFSET_SPREAD_MIN = 1e-8
#: minimal || [rho, H] ||_F for a genuinely non-stationary seed
RHO_NONCOMMUTE_MIN = 1e-8


def seed_offset(rho: Array, f: Nonlinearity, a: float) -> Array:
    """f(rho) - a * rho, the operator that must commute with H."""
    rho = la.as_hermitian(rho, name="rho")
    return la.hermitian_part(la.matrix_function(rho, f) - a * rho)


@dataclass(frozen=True)
class SeedReport:
    """Diagnostics from validate_seed, with the measured norms attached."""

    commutes: bool
    nontrivial_offset: bool
    noncommuting_rho: bool
    offset_commutator_norm: float
    offset_spread: float
    rho_commutator_norm: float

    @property
    def all_ok(self) -> bool:
        return self.commutes and self.nontrivial_offset and self.noncommuting_rho


def validate_seed(rho: Array, hamiltonian: Array, f: Nonlinearity, a: float) -> SeedReport:
    """Check the three seed requirements; purely diagnostic, never raises."""
    rho = la.as_hermitian(rho, name="rho")
    h = la.as_hermitian(hamiltonian, name="hamiltonian")
    offset = seed_offset(rho, f, a)
    c_off = la.frobenius(la.commutator(offset, h))
    eigs = la.spectral_decompose(offset).eigenvalues
    spread = float(eigs[-1] - eigs[0])
    c_rho = la.frobenius(la.commutator(rho, h))
    return SeedReport(
        commutes=c_off <= OFFSET_COMMUTE_TOL,
        nontrivial_offset=spread > OFFSET_SPREAD_MIN,
        noncommuting_rho=c_rho > RHO_NONCOMMUTE_MIN,
        offset_commutator_norm=c_off,
        offset_spread=spread,
        rho_commutator_norm=c_rho,
    )


@dataclass(frozen=True)
class SeedBundle:
    """Everything the dressing needs: the seed, its nonlinearity, the Lax
    parameter mu with its eigenvalue z_mu, and the Lax ket phi0."""

    rho0: Array
    hamiltonian: Array
    f: Nonlinearity
    a: float
    offset: Array
    mu: complex
    z_mu: complex
    phi0: Array
    omega: float | None = None

    def __post_init__(self):
        for arr in (self.rho0, self.hamiltonian, self.offset, self.phi0):
            arr.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.rho0.shape[0]

    @property
    def nu(self) -> complex:
        """Bra-side parameter of the Hermitian reduction."""
        return complex(self.mu).conjugate()

    def normalized_view(self) -> Array:
        """rho0 scaled to unit trace; the stored seed stays unnormalized."""
        return self.rho0 / np.trace(self.rho0).real


def make_seed_bundle(rho0, hamiltonian, f: Nonlinearity, a: float, mu: complex,
                     phi0, omega: float | None = None,
                     eigvec_tol: float = 1e-8) -> SeedBundle:
    """Validate a user-proposed seed and package it.

    Requires the three seed conditions and that phi0 is a genuine eigenvector
    of rho0 - mu*H (its eigenvalue is stored as z_mu).
    """
    rho0 = la.as_hermitian(rho0, name="rho0")
    h = la.as_hermitian(hamiltonian, name="hamiltonian")
    phi0 = la.as_vector(phi0, name="phi0")
    if phi0.size != rho0.shape[0]:
        raise SeedError("phi0 dimension does not match rho0")
    report = validate_seed(rho0, h, f, a)
    if not report.all_ok:
        raise SeedError(
            "invalid seed: "
            f"offset commutator {report.offset_commutator_norm:.3e} "
            f"(need <= {OFFSET_COMMUTE_TOL}), offset spread {report.offset_spread:.3e} "
            f"(need > {OFFSET_SPREAD_MIN}), rho commutator {report.rho_commutator_norm:.3e} "
            f"(need > {RHO_NONCOMMUTE_MIN})"
        )
    pencil = rho0 - mu * h
    z_mu = complex(np.vdot(phi0, pencil @ phi0) / np.vdot(phi0, phi0))
    resid = float(np.linalg.norm(pencil @ phi0 - z_mu * phi0) / np.linalg.norm(phi0))
    if resid > eigvec_tol * max(la.frobenius(pencil), 1.0):
        raise SeedError(
            f"phi0 is not an eigenvector of rho0 - mu*H (residual {resid:.3e})"
        )
    offset = seed_offset(rho0, f, a)
    return SeedBundle(rho0=rho0, hamiltonian=h, f=f, a=float(a),
                      offset=offset, mu=complex(mu), z_mu=z_mu,
                      phi0=phi0, omega=omega)


def build_three_level_seed(q: float, omega: float = 1.0, mix=None) -> SeedBundle:
    """The oscillator seed on the three lowest levels.

    rho0 has 3/2 on levels 0 and 2, 7/4 on level 1 and -1/2 cross terms
    between levels 0 and 2 (eigenvalues {1, 7/4, 2}); H = omega*diag(0, 1, 2);
    f(x) = x^q - 2 x^(q-1) with a = 1; mu = i*sqrt(3)/(4*omega).

    ``mix=(c_block, c_mid)`` selects a different unit-norm combination of the
    two orthonormal eigenvectors spanning the degenerate z_mu eigenspace
    (shifting where the self-scattering transition happens); the default
    reproduces the standard ket.
    """
    if omega <= 0:
        raise SeedError(f"omega must be positive, got {omega}")
    if abs(q - 1.0) < 1e-12:
        raise SeedError(
            "q = 1 gives f(x) = x - 2, the offset becomes a multiple of the "
            "identity and the dynamics is linear; no self-scattering seed exists"
        )
    rho0 = np.array(
        [[1.5, 0.0, -0.5],
         [0.0, 1.75, 0.0],
         [-0.5, 0.0, 1.5]], dtype=complex)
    h = omega * np.diag([0.0, 1.0, 2.0]).astype(complex)
    mu = 1j * math.sqrt(3.0) / (4.0 * omega)

    # orthonormal basis of the doubly degenerate eigenspace of rho0 - mu*H
    v_block = np.array([1.0, 0.0, (-1.0 + 1j * math.sqrt(3.0)) / 2.0]) / math.sqrt(2.0)
    v_mid = np.array([0.0, 1.0, 0.0], dtype=complex)
    if mix is None:
        c1 = (1j + math.sqrt(3.0)) / (2.0 * math.sqrt(2.0))
        c2 = 1.0 / math.sqrt(2.0)
    else:
        c1, c2 = complex(mix[0]), complex(mix[1])
        norm = math.hypot(abs(c1), abs(c2))
        if norm < 1e-12:
            raise SeedError("mix coefficients are numerically zero")
        c1, c2 = c1 / norm, c2 / norm
    phi0 = c1 * v_block + c2 * v_mid
    return make_seed_bundle(rho0, h, Nonlinearity.qfamily(q), a=1.0,
                            mu=mu, phi0=phi0, omega=omega)


def seed_evolution(bundle: SeedBundle, t: float) -> Array:
    """rho(t) = exp(-i a H t) rho(0) exp(i a H t) via the spectral form of H."""
    dec = la.spectral_decompose(bundle.hamiltonian)
    u = la.expm_scaled(dec, -1j * bundle.a * t)
    return la.hermitian_part(u @ bundle.rho0 @ u.conj().T)


def phi_evolution(bundle: SeedBundle, t: float) -> Array:
    """Closed-form Lax ket phi(t) solving i phi_dot = (1/mu) f(rho(t)) phi.

    Valid because the offset commutes with both H and rho0; includes the
    scalar phase exp(-i a z_mu t / mu).
    """
    dec_h = la.spectral_decompose(bundle.hamiltonian)
    dec_d = la.spectral_decompose(bundle.offset)
    phase = np.exp(-1j * bundle.a * bundle.z_mu * t / bundle.mu)
    u = la.expm_scaled(dec_h, -1j * bundle.a * t)
    s = la.expm_scaled(dec_d, -1j * t / bundle.mu)
    return phase * (u @ (s @ bundle.phi0))


# ---------------------------------------------------------------------------
# Bundle serialization (only the built-in families are representable)
# ---------------------------------------------------------------------------

def bundle_to_text(bundle: SeedBundle) -> str:
    if bundle.f.q is None:
        raise FormatError("only power / qfamily nonlinearities can be serialized")
    kind = "qfamily" if bundle.f.label.startswith("x^") and "-2x^" in bundle.f.label else "power"
    lines = [
        f"f = {kind}",
        f"q = {la.format_float(bundle.f.q)}",
        f"even = {int(bundle.f.even)}",
        f"a = {la.format_float(bundle.a)}",
        f"omega = {la.format_float(bundle.omega) if bundle.omega is not None else 'none'}",
        f"mu = {la.format_complex(bundle.mu)}",
        "phi0 = " + " ".join(la.format_complex(z) for z in bundle.phi0),
        "[rho0]",
        *la.matrix_to_lines(bundle.rho0),
        "[H]",
        *la.matrix_to_lines(bundle.hamiltonian),
    ]
    return "\n".join(lines) + "\n"


def bundle_fields_from_text(text: str) -> dict:
    """Parse a seed file into raw fields without any seed validation."""
    lines = [ln.rstrip("\n") for ln in text.splitlines()]
    fields: dict[str, str] = {}
    blocks: dict[str, Array] = {}
    i = 0
    while i < len(lines):
        ln = lines[i].strip()
        if not ln or ln.startswith("#"):
            i += 1
            continue
        if ln.startswith("[") and ln.endswith("]"):
            name = ln[1:-1]
            mat, i = la.matrix_from_lines(lines, i + 1)
            blocks[name] = mat
            continue
        if "=" not in ln:
            raise FormatError(f"bad seed-file line: {ln!r}")
        key, _, val = ln.partition("=")
        fields[key.strip()] = val.strip()
        i += 1
    try:
        kind = fields["f"]
        q = float(fields["q"])
        even = bool(int(fields.get("even", "0")))
        a = float(fields["a"])
        omega = None if fields.get("omega", "none") == "none" else float(fields["omega"])
        mu = la.parse_complex(fields["mu"])
        phi0 = np.array([la.parse_complex(t) for t in fields["phi0"].split()])
        rho0 = blocks["rho0"]
        h = blocks["H"]
    except (KeyError, ValueError) as exc:
        raise FormatError(f"incomplete or malformed seed file: {exc}") from exc
    if kind == "qfamily":
        f = Nonlinearity.qfamily(q, even=even)
    elif kind == "power":
        f = Nonlinearity.power(q, even=even)
    else:
        raise FormatError(f"unknown nonlinearity kind {kind!r}")
    return {"rho0": rho0, "hamiltonian": h, "f": f, "a": a, "mu": mu,
            "phi0": phi0, "omega": omega}


def bundle_from_text(text: str) -> SeedBundle:
    return make_seed_bundle(**bundle_fields_from_text(text))


def save_bundle(path, bundle: SeedBundle) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(bundle_to_text(bundle))


def load_bundle(path) -> SeedBundle:
    with open(path, "r", encoding="utf-8") as fh:
        return bundle_from_text(fh.read())


def load_bundle_fields(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return bundle_fields_from_text(fh.read())
