"""Construction-blind numerical verification of i rho_dot = [H, f(rho)].

This module only ever sees (rho0, H, f): a fixed-step classical RK4
integrator, a central-difference residual meter, and conservation monitors
for the quantities any isospectral flow must preserve (Hermiticity, moments
Tr rho^k, the sorted spectrum, and the energy functional Tr(H f(rho))).
It deliberately shares no code path with the closed-form evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import DimensionError, DomainError, IntegrationAborted
from .nonlinearity import Nonlinearity

Array = np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """States on a uniform grid; every state is Hermitian-symmetrized."""

    times: Array
    states: Array       # shape (samples, n, n)

    def __post_init__(self):
        self.times.flags.writeable = False
        self.states.flags.writeable = False
        if self.times.ndim != 1 or self.states.ndim != 3:
            raise DimensionError("trajectory shapes: times (m,), states (m, n, n)")
        if self.times.size != self.states.shape[0]:
            raise DimensionError("times and states lengths differ")
        if self.times.size >= 2:
            steps = np.diff(self.times)
            if np.max(np.abs(steps - steps[0])) > 1e-14 * max(abs(float(steps[0])), 1.0):
                raise DimensionError("trajectory grid is not uniform")

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0]) if self.times.size > 1 else 0.0

    @property
    def dim(self) -> int:
        return self.states.shape[1]


def _rhs(rho: Array, hamiltonian: Array, f: Nonlinearity) -> Array:
    a_op = la.matrix_function(rho, f)
    return -1j * la.commutator(hamiltonian, a_op)


def integrate_rk4(rho0, hamiltonian, f: Nonlinearity, t_end: float,
                  dt: float = 1e-3, t0: float = 0.0) -> Trajectory:
    """Classical fixed-step fourth-order Runge-Kutta.

    Integrates rho_dot = -i [H, f(rho)] from t0 to t_end (either direction),
    symmetrizing after every stage. If the spectrum leaves the domain of f
    mid-flow, raises IntegrationAborted carrying the valid prefix.
    """
    if dt <= 0:
        raise DimensionError("dt must be positive")
    rho = la.as_hermitian(rho0, name="rho0")
    ham = la.as_hermitian(hamiltonian, name="hamiltonian")
    if rho.shape != ham.shape:
        raise DimensionError("rho0 and hamiltonian dimensions differ")
    span = t_end - t0
    n_steps = int(round(abs(span) / dt))
    if abs(n_steps * dt - abs(span)) > 1e-9 * max(abs(span), 1.0):
        raise DimensionError("t_end - t0 must be an integer multiple of dt")
    h = dt if span >= 0 else -dt
    times = t0 + h * np.arange(n_steps + 1)
    states = np.empty((n_steps + 1, *rho.shape), dtype=complex)
    states[0] = rho
    for k in range(n_steps):
        try:
            k1 = _rhs(rho, ham, f)
            k2 = _rhs(la.hermitian_part(rho + 0.5 * h * k1), ham, f)
            k3 = _rhs(la.hermitian_part(rho + 0.5 * h * k2), ham, f)
            k4 = _rhs(la.hermitian_part(rho + h * k3), ham, f)
        except DomainError as exc:
            raise IntegrationAborted(
                f"flow left the domain of f at t = {times[k]:.6g}: {exc}",
                trajectory=Trajectory(times[: k + 1].copy(), states[: k + 1].copy()),
                t_fail=float(times[k]),
            ) from exc
        rho = la.hermitian_part(rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
        states[k + 1] = rho
    return Trajectory(times=times, states=states)


def residual_meter(rho_of_t, hamiltonian, f: Nonlinearity, t: float,
                   fd_step: float = 1e-4) -> float:
    """|| i (rho(t+h) - rho(t-h)) / (2h) - [H, f(rho(t))] ||_F."""
    ham = la.as_matrix(hamiltonian, "hamiltonian")
    rdot = (np.asarray(rho_of_t(t + fd_step), dtype=complex)
            - np.asarray(rho_of_t(t - fd_step), dtype=complex)) / (2.0 * fd_step)
    a_op = la.matrix_function(la.as_hermitian(rho_of_t(t), name="rho(t)"), f)
    return la.frobenius(1j * rdot - la.commutator(ham, a_op))


@dataclass(frozen=True)
class ConservationReport:
    moment_drifts: tuple[float, float, float, float]   # Tr rho^k, k = 1..4
    max_spectrum_drift: float
    max_hermiticity_defect: float
    energy_drift: float | None = None                  # Tr(H f(rho)), if f given

    @property
    def max_trace_drift(self) -> float:
        return self.moment_drifts[0]


def conservation_report(traj: Trajectory, hamiltonian=None,
                        f: Nonlinearity | None = None) -> ConservationReport:
    """Drifts of the conserved quantities across a trajectory.

    Supplying ``hamiltonian`` and ``f`` additionally monitors the energy
    functional Tr(H f(rho)).
    """
    if traj.times.size == 0:
        raise DimensionError("empty trajectory")
    if (hamiltonian is None) != (f is None):
        raise DimensionError("hamiltonian and f must be supplied together")
    moments0 = None
    spectrum0 = None
    m_drift = np.zeros(4)
    s_drift = 0.0
    h_defect = 0.0
    e0 = None
    e_drift = 0.0
    for state in traj.states:
        h_defect = max(h_defect, la.frobenius(state - state.conj().T))
        sym = la.hermitian_part(state)
        powers = [sym]
        for _ in range(3):
            powers.append(powers[-1] @ sym)
        moments = np.array([float(np.trace(p).real) for p in powers])
        eigs = la.spectral_decompose(sym).eigenvalues
        if moments0 is None:
            moments0, spectrum0 = moments, eigs
        else:
            m_drift = np.maximum(m_drift, np.abs(moments - moments0))
            s_drift = max(s_drift, float(np.max(np.abs(eigs - spectrum0))))
        if hamiltonian is not None and f is not None:
            energy = float(np.trace(la.as_matrix(hamiltonian) @ la.matrix_function(sym, f)).real)
            if e0 is None:
                e0 = energy
            else:
                e_drift = max(e_drift, abs(energy - e0))
    return ConservationReport(
        moment_drifts=tuple(m_drift),
        max_spectrum_drift=s_drift,
        max_hermiticity_defect=h_defect,
        energy_drift=e_drift if f is not None else None,
    )


# ---------------------------------------------------------------------------
# Trajectory text format
# ---------------------------------------------------------------------------

def trajectory_to_lines(traj: Trajectory) -> list[str]:
    lines = [
        f"dt={la.format_float(traj.dt)} t0={la.format_float(float(traj.times[0]))} "
        f"n={traj.times.size} dim={traj.dim}"
    ]
    for t, state in zip(traj.times, traj.states):
        lines.append(la.format_float(float(t)))
        lines.extend(la.matrix_to_lines(state))
    return lines


def trajectory_from_lines(lines: list[str]) -> Trajectory:
    from .errors import FormatError

    header = lines[0].split()
    try:
        meta = dict(item.split("=", 1) for item in header)
        n = int(meta["n"])
    except (ValueError, KeyError) as exc:
        raise FormatError(f"bad trajectory header: {lines[0]!r}") from exc
    times = []
    states = []
    idx = 1
    for _ in range(n):
        times.append(float(lines[idx]))
        state, idx = la.matrix_from_lines(lines, idx + 1)
        states.append(state)
    return Trajectory(times=np.array(times), states=np.array(states))


def save_trajectory(path, traj: Trajectory) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(trajectory_to_lines(traj)) + "\n")


def load_trajectory(path) -> Trajectory:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    return trajectory_from_lines(lines)
