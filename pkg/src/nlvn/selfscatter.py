"""Closed-form self-scattering solutions and their physical observables.

For a seed bundle (rho, H, f, a, mu, phi0) with offset D = f(rho) - a*rho,
the dressed solution in the Hermitian reduction (nu = conj(mu)) is

    rho1(t) = e^{-iaHt} ( rho(0) + (mu - conj(mu)) [P(t), H] ) e^{+iaHt},
    P(t)    = e^{-(i/mu) D t} P0 e^{+(i/conj(mu)) D t} / F(t),
    F(t)    = <phi0| exp( i (mu - conj(mu)) / |mu|^2 * D t ) |phi0>,

with P0 = |phi0><phi0|. All exponentials are assembled spectrally and
normalized entrywise in the offset eigenbasis, so arbitrarily large |t|
stays within machine range (every normalized entry is bounded by one).

The built-in three-level seed admits fully explicit profiles: the dressed
matrix in the interaction frame is

        [ 3/2    -xi(t)   zeta(t) ]
        [ -xi~    7/4      xi(t)  ]        (~ denotes conjugate)
        [ zeta~   xi~       3/2   ]

with xi, zeta rational in e^(rate*t); ``rate`` is the q-dependent switching
rate of the transition between the two asymptotically linear evolutions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import linalg as la
from .errors import DimensionError, DressingError
from .seeds import SeedBundle, build_three_level_seed, seed_evolution

Array = np.ndarray

_SQRT3 = math.sqrt(3.0)
_XI0 = (-3j + _SQRT3) / (8.0 * math.sqrt(2.0))


def switching_rate(q: float, omega: float) -> float:
    """Rate of the self-scattering transition: ((4/7)^(1-q) - 1) * omega / sqrt(3).

    Positive for q > 1, zero at q = 1 (linear dynamics), negative for q < 1
    with limit -omega/sqrt(3) as q -> -inf.
    """
    return ((4.0 / 7.0) ** (1.0 - q) - 1.0) * omega / _SQRT3


def _xi_of_u(u: float) -> complex:
    # xi(0) * 2 e^u / (1 + e^(2u)), evaluated with non-positive exponents only
    eu = math.exp(-abs(u))
    return _XI0 * 2.0 * eu / (1.0 + eu * eu)


def _zeta_of_u(u: float) -> complex:
    # (1 - i sqrt3 - 2 e^(2u)) / (4 (1 + e^(2u))), overflow-guarded
    head = 1.0 - 1j * _SQRT3
    if u <= 0.0:
        e2 = math.exp(2.0 * u)
        return (head - 2.0 * e2) / (4.0 * (1.0 + e2))
    e2m = math.exp(-2.0 * u)
    return (head * e2m - 2.0) / (4.0 * (e2m + 1.0))


@dataclass(frozen=True)
class ScatteringProfile:
    """The two coupling amplitudes of the explicit three-level solution."""

    q: float
    omega: float
    rate: float
    xi: Callable[[float], complex]
    zeta: Callable[[float], complex]


def scattering_profile(q: float, omega: float) -> ScatteringProfile:
    rate = switching_rate(q, omega)

    def xi(t: float) -> complex:
        return _xi_of_u(rate * t if t != 0.0 else 0.0)

    def zeta(t: float) -> complex:
        return _zeta_of_u(rate * t if t != 0.0 else 0.0)

    return ScatteringProfile(q=float(q), omega=float(omega), rate=rate, xi=xi, zeta=zeta)


def rho_interaction(q: float, omega: float, t: float) -> Array:
    """The dressed three-level matrix in the interaction frame."""
    prof = scattering_profile(q, omega)
    xi, zeta = prof.xi(t), prof.zeta(t)
    return np.array(
        [[1.5, -xi, zeta],
         [-np.conj(xi), 1.75, xi],
         [np.conj(zeta), np.conj(xi), 1.5]], dtype=complex)


def rho1_explicit(q: float, omega: float, t: float) -> Array:
    """Explicit dressed solution: e^{-iHt} * interaction matrix * e^{+iHt}."""
    r = rho_interaction(q, omega, t)
    phases = np.exp(-1j * omega * np.array([0.0, 1.0, 2.0]) * t)
    return la.hermitian_part((phases[:, None] * r) * np.conj(phases)[None, :])


class SelfScatteringSolution:
    """Evaluator for the general dressed solution of a seed bundle.

    Spectral data of H and of the offset are decomposed once; every
    evaluation is then a handful of small dense products. Immutable.
    """

    def __init__(self, bundle: SeedBundle, pole_tol: float = 1e-13):
        self.bundle = bundle
        self._dec_h = la.spectral_decompose(bundle.hamiltonian)
        self._dec_off = la.spectral_decompose(bundle.offset)
        v = self._dec_off.eigenvectors
        self._phi_off = v.conj().T @ bundle.phi0          # phi0 in offset eigenbasis
        self._weights = np.abs(self._phi_off) ** 2
        self._log_weights = np.log(np.maximum(self._weights, 1e-300))
        mu = bundle.mu
        self._growth = float((1j * (mu - np.conj(mu)) / abs(mu) ** 2).real)
        p0 = np.outer(bundle.phi0, bundle.phi0.conj())
        self._p0_off = v.conj().T @ p0 @ v
        self._pole_tol = pole_tol

    def projector(self, t: float) -> Array:
        """P(t) = |phi(t)><phi(t)| / <phi(t)|phi(t)>, entrywise normalized."""
        mu = self.bundle.mu
        delta = self._dec_off.eigenvalues
        exps = self._growth * delta * t + self._log_weights
        lse = float(np.logaddexp.reduce(exps))
        rel = np.exp(exps - lse)
        if float(np.sum(rel)) < self._pole_tol:
            raise DressingError(f"projector normalization degenerate at t = {t}")
        left = np.exp(-1j / mu * delta * t - lse / 2.0)
        right = np.exp(1j / np.conj(mu) * delta * t - lse / 2.0)
        p_off = (left[:, None] * self._p0_off) * right[None, :]
        v = self._dec_off.eigenvectors
        return v @ p_off @ v.conj().T

    def interaction_frame(self, t: float) -> Array:
        """rho(0) + (mu - conj(mu)) [P(t), H], before the unitary conjugation."""
        mu = self.bundle.mu
        corr = (mu - np.conj(mu)) * la.commutator(self.projector(t), self.bundle.hamiltonian)
        return self.bundle.rho0 + corr

    def rho1(self, t: float) -> Array:
        u = la.expm_scaled(self._dec_h, -1j * self.bundle.a * t)
        raw = u @ self.interaction_frame(t) @ u.conj().T
        return la.hermitian_part(raw)


def rho1_general(bundle: SeedBundle, t: float) -> Array:
    """One-shot evaluation; build a SelfScatteringSolution for sweeps."""
    return SelfScatteringSolution(bundle).rho1(t)


# ---------------------------------------------------------------------------
# Oscillator observables
# ---------------------------------------------------------------------------

def position_operator(n_levels: int) -> Array:
    """x = (lowering + raising)/sqrt(2): entries sqrt((n+1)/2) off the diagonal."""
    x = np.zeros((n_levels, n_levels), dtype=complex)
    for n in range(n_levels - 1):
        x[n, n + 1] = x[n + 1, n] = math.sqrt((n + 1) / 2.0)
    return x


def mean_position(rho1: Array, n_levels: int | None = None) -> float:
    """<x> = Tr(x rho1) / Tr(rho1) in the oscillator basis holding rho1."""
    rho1 = la.as_matrix(rho1, "rho1")
    dim = rho1.shape[0]
    if n_levels is None:
        n_levels = dim + 1
    if n_levels < dim + 1:
        raise DimensionError("n_levels must be at least dim + 1 (x couples n to n+1)")
    x = position_operator(n_levels)
    emb = np.zeros((n_levels, n_levels), dtype=complex)
    emb[:dim, :dim] = rho1
    val = np.trace(x @ emb) / np.trace(emb)
    return float(val.real)


def hermite_functions(n_max: int, x: Array) -> Array:
    """Orthonormal oscillator eigenfunctions psi_0..psi_{n_max-1} on the grid.

    psi_0 = pi^(-1/4) exp(-x^2/2); stable two-term recurrence
    psi_{n+1} = sqrt(2/(n+1)) x psi_n - sqrt(n/(n+1)) psi_{n-1}.
    """
    x = np.asarray(x, dtype=float)
    out = np.zeros((n_max, x.size))
    out[0] = math.pi ** -0.25 * np.exp(-x * x / 2.0)
    if n_max > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for n in range(1, n_max - 1):
        out[n + 1] = math.sqrt(2.0 / (n + 1)) * x * out[n] - math.sqrt(n / (n + 1)) * out[n - 1]
    return out


def position_density(rho1: Array, x_grid, level_offset: int = 0,
                     clip_tol: float = 1e-10) -> Array:
    """Diagonal of rho1 in the position representation.

    density(x) = sum_mn psi_(m+off)(x) rho1_mn psi_(n+off)(x). The result
    must be real to 1e-12 of its scale (Hermiticity); negatives larger than
    -clip_tol are zeroed, anything below that is left for the caller to see.
    """
    rho1 = la.as_matrix(rho1, "rho1")
    x = np.asarray(x_grid, dtype=float)
    if x.size == 0:
        raise DimensionError("empty position grid")
    dim = rho1.shape[0]
    psi = hermite_functions(level_offset + dim, x)[level_offset:]
    dens = np.einsum("mx,mn,nx->x", psi, rho1, psi)
    scale = max(float(np.max(np.abs(dens))), 1e-300)
    if float(np.max(np.abs(dens.imag))) > 1e-12 * scale:
        raise DressingError("position density has a non-negligible imaginary part")
    dens = dens.real.copy()
    dens[(dens < 0.0) & (dens > -clip_tol)] = 0.0
    return dens


# ---------------------------------------------------------------------------
# Asymptotics
# ---------------------------------------------------------------------------

_ZETA_SEED = -0.5 + 0.0j                       # the seed matrix entry value
_ZETA_OTHER = (1.0 - 1j * _SQRT3) / 4.0        # the other linear endpoint


@dataclass(frozen=True)
class AsymptoticReport:
    xi_decay: float
    zeta_error_plus: float
    zeta_error_minus: float
    seed_return: float


def asymptotic_check(q: float, omega: float, big_t: float) -> AsymptoticReport:
    """Measure the late/early-time limits of the explicit solution.

    For q > 1 the profile approaches the seed value as t -> +inf and the
    other linear endpoint as t -> -inf; for q < 1 the two sides swap.
    ``seed_return`` is ||rho1(sT) - rho(sT)||_F with s = sign(q - 1).
    """
    if big_t <= 0:
        raise DimensionError("big_t must be positive")
    if q == 1.0:
        raise DressingError("q = 1 has no asymptotic transition")
    prof = scattering_profile(q, omega)
    xi_decay = max(abs(prof.xi(big_t)), abs(prof.xi(-big_t)))
    limit_plus = _ZETA_SEED if q > 1 else _ZETA_OTHER
    limit_minus = _ZETA_OTHER if q > 1 else _ZETA_SEED
    zeta_error_plus = abs(prof.zeta(big_t) - limit_plus)
    zeta_error_minus = abs(prof.zeta(-big_t) - limit_minus)
    sigma = 1.0 if q > 1 else -1.0
    ts = sigma * big_t
    rho1_ts = rho1_explicit(q, omega, ts)
    seed_ts = seed_evolution(build_three_level_seed(q, omega), ts)
    seed_return = la.frobenius(rho1_ts - seed_ts)
    return AsymptoticReport(xi_decay=float(xi_decay),
                            zeta_error_plus=float(zeta_error_plus),
                            zeta_error_minus=float(zeta_error_minus),
                            seed_return=float(seed_return))
