"""Block-structured dressing example on 2x2 blocks.

The seed is rho = diag_k( a_k, -a_k ) with Hamiltonian blocks
H_k = a_k [[alpha, beta], [beta, -alpha]]. For even f the generator f(rho)
is scalar per block, so the seed is stationary although [rho, H] != 0.

A null vector of the bra pencil chi (rho - nu H) = 0 exists at the root
nu_plus = (alpha + i beta)/(alpha^2 + beta^2) of
(alpha^2 + beta^2) nu^2 - 2 alpha nu + 1 = 0; its spinor per block is
(1, +i)/sqrt(2) as a ket (the bra rows carry (1, -i)/sqrt(2)). Dressing with
P = |chi><chi| / <chi|chi> produces a solution whose off-diagonal blocks are
all nonzero as long as every amplitude u_k is nonzero, and whose closed form
is assembled from

    G(t)      = sum_n |u_n|^2 e^(2 beta f(a_n) t),
    F_kl(t)   = u_k conj(u_l) e^(-i alpha (f_k - f_l) t + beta (f_k + f_l) t).

Exponentials are normalized against the largest exponent at each t, so long
time sweeps cannot overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg as la
from .errors import DimensionError, FormatError, ParameterError
from .nonlinearity import Nonlinearity

Array = np.ndarray

_KET_SPINOR = np.array([1.0, 1.0j]) / math.sqrt(2.0)

_B_MINUS = np.array([[1.0j, 1.0], [1.0, -1.0j]])   # a_k / (alpha - i beta) factor
_B_PLUS = np.array([[-1.0j, 1.0], [1.0, 1.0j]])    # a_l / (alpha + i beta) factor


@dataclass(frozen=True)
class BlockModel:
    """Truncated block seed: couplings (alpha, beta), block amplitudes a_k,
    dressing amplitudes u_k (unit total weight) and an even nonlinearity."""

    alpha: float
    beta: float
    a: Array
    u: Array
    f: Nonlinearity

    def __post_init__(self):
        self.a.flags.writeable = False
        self.u.flags.writeable = False

    @property
    def k_blocks(self) -> int:
        return self.a.size

    @property
    def dim(self) -> int:
        return 2 * self.a.size

    def f_values(self) -> Array:
        return np.asarray(self.f(self.a), dtype=float)

    def normalization_defect(self) -> float:
        """| sum_k f(a_k) - 1/2 |, the reported (not enforced) weight rule."""
        return float(abs(np.sum(self.f_values()) - 0.5))


def make_block_model(alpha: float, beta: float, a, u, f: Nonlinearity) -> BlockModel:
    if beta <= 0:
        raise ParameterError("beta must be positive (beta = 0 degenerates the root pair)")
    a = np.asarray(a, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=complex).reshape(-1)
    if a.size != u.size or a.size < 1:
        raise DimensionError("a and u must be equal-length non-empty vectors")
    if np.any(a == 0.0):
        raise ParameterError("all block amplitudes a_k must be nonzero")
    if np.any(np.abs(u) == 0.0):
        raise ParameterError("all dressing amplitudes u_k must be nonzero "
                             "(zeros disconnect blocks)")
    norm = np.linalg.norm(u)
    u = u / norm
    if not f.even:
        # verify f(-x) = f(x) on the sampled amplitudes
        left = np.asarray(f(-np.abs(a)), dtype=float)
        right = np.asarray(f(np.abs(a)), dtype=float)
        if np.max(np.abs(left - right)) > 1e-12 * max(float(np.max(np.abs(right))), 1.0):
            raise ParameterError("the block construction needs an even nonlinearity "
                                 "(enable the even extension)")
    return BlockModel(alpha=float(alpha), beta=float(beta), a=a, u=u, f=f)


def default_block_model(k_blocks: int = 8, alpha: float = 1.0, beta: float = 1.0,
                        q: float = 2.0 / 3.0) -> BlockModel:
    """Distinct amplitudes a_k = 1/k^2 and geometric weights u_k ~ 2^(-k/2)."""
    if not 1 <= k_blocks <= 64:
        raise ParameterError("k_blocks must be between 1 and 64")
    ks = np.arange(1, k_blocks + 1, dtype=float)
    a = 1.0 / ks ** 2
    u = 2.0 ** (-ks / 2.0)
    return make_block_model(alpha, beta, a, u, Nonlinearity.power(q, even=True))


def build_block_operators(model: BlockModel) -> tuple[Array, Array]:
    """(rho, H) as dense 2K x 2K matrices."""
    k = model.k_blocks
    rho = np.zeros((2 * k, 2 * k), dtype=complex)
    ham = np.zeros((2 * k, 2 * k), dtype=complex)
    for i, ak in enumerate(model.a):
        s = 2 * i
        rho[s:s + 2, s:s + 2] = ak * np.diag([1.0, -1.0])
        ham[s:s + 2, s:s + 2] = ak * np.array([[model.alpha, model.beta],
                                               [model.beta, -model.alpha]])
    return rho, ham


def nu_roots(alpha: float, beta: float) -> tuple[complex, complex]:
    """Roots (nu_plus, nu_minus) of (a^2+b^2) nu^2 - 2 a nu + 1 = 0."""
    denom = alpha * alpha + beta * beta
    if denom <= 0:
        raise ParameterError("alpha^2 + beta^2 must be positive")
    if beta == 0:
        raise ParameterError("beta = 0 gives a real double root; the dressing "
                             "coefficient conj(nu) - nu vanishes")
    return ((alpha + 1j * beta) / denom, (alpha - 1j * beta) / denom)


def chi_vector(model: BlockModel, nu: complex, t: float = 0.0,
               tol: float = 1e-10) -> Array:
    """The dressing ket at time t: block k carries
    u_k e^{(beta - i alpha) f(a_k) t} (1, +i)/sqrt(2).

    ``nu`` must be the nu_plus root: the bra of the returned ket annihilates
    rho - nu_plus H (checked; the other branch raises ParameterError).
    """
    nup, _ = nu_roots(model.alpha, model.beta)
    chi = np.zeros(model.dim, dtype=complex)
    fv = model.f_values()
    coef = model.u * np.exp((model.beta - 1j * model.alpha) * fv * t)
    for k in range(model.k_blocks):
        chi[2 * k:2 * k + 2] = coef[k] * _KET_SPINOR
    rho, ham = build_block_operators(model)
    resid = np.linalg.norm(chi.conj() @ (rho - nu * ham)) / np.linalg.norm(chi)
    if resid > tol * max(la.frobenius(rho - nu * ham), 1.0):
        raise ParameterError(
            f"nu = {nu:.6g} is not the annihilating branch "
            f"(bra residual {resid:.3e}); use nu_plus = {nup:.6g}"
        )
    return chi


def rho1_block_darboux(model: BlockModel, nu: complex, t: float) -> Array:
    """Dressing form: rho + (conj(nu) - nu) [P(t), H] with P from chi_vector."""
    chi = chi_vector(model, nu, t)
    rho, ham = build_block_operators(model)
    p = np.outer(chi, chi.conj()) / np.vdot(chi, chi)
    return la.hermitian_part(rho + (np.conj(nu) - nu) * la.commutator(p, ham))


@dataclass(frozen=True)
class BlockSolution:
    """A block model together with its chosen root (kept for bookkeeping)."""

    model: BlockModel
    nu: complex


def make_block_solution(model: BlockModel) -> BlockSolution:
    nup, _ = nu_roots(model.alpha, model.beta)
    return BlockSolution(model=model, nu=nup)


def rho1_block_closed_form(solution: BlockSolution, t: float) -> Array:
    """Closed-form dressed solution assembled blockwise from F_kl / G.

    Every exponential is taken relative to the largest exponent at this t,
    so entries stay bounded for arbitrarily large |t|.
    """
    model = solution.model
    alpha, beta = model.alpha, model.beta
    fv = model.f_values()
    k = model.k_blocks
    log_w = 2.0 * np.log(np.abs(model.u))
    exps = 2.0 * beta * fv * t + log_w
    lse = float(np.logaddexp.reduce(exps))          # log G(t) up to the |u| scale
    # F_kl / G = u_k conj(u_l)/|u_k u_l| * exp(beta(f_k+f_l)t + log|u_k u_l| - lse - i alpha (f_k-f_l) t)
    phase_u = model.u / np.abs(model.u)
    half = beta * fv * t + 0.5 * log_w
    out = np.zeros((2 * k, 2 * k), dtype=complex)
    for i in range(k):
        for j in range(k):
            mag = math.exp(half[i] + half[j] - lse)
            ph = phase_u[i] * np.conj(phase_u[j]) * np.exp(-1j * alpha * (fv[i] - fv[j]) * t)
            ratio = mag * ph                          # F_ij / G
            blk = beta * ratio * (model.a[i] / (alpha - 1j * beta) * _B_MINUS
                                  + model.a[j] / (alpha + 1j * beta) * _B_PLUS)
            if i == j:
                blk = blk + model.a[i] * np.diag([1.0, -1.0])
            out[2 * i:2 * i + 2, 2 * j:2 * j + 2] = blk
    return la.hermitian_part(out)


@dataclass(frozen=True)
class IrreducibilityReport:
    """Off-diagonal block norms of rho1 over the sampled times."""

    t_samples: Array
    min_off_block: Array        # per sample: min over k != l of ||rho1_kl||_F
    max_off_block: Array
    spectrum_drift: float       # max deviation from {+-a_k} over the samples
    normalization_defect: float

    def __post_init__(self):
        self.t_samples.flags.writeable = False
        self.min_off_block.flags.writeable = False
        self.max_off_block.flags.writeable = False


def irreducibility_report(solution: BlockSolution, t_samples) -> IrreducibilityReport:
    model = solution.model
    ts = np.asarray(t_samples, dtype=float).reshape(-1)
    if ts.size == 0:
        raise DimensionError("need at least one t sample")
    k = model.k_blocks
    target = np.sort(np.concatenate([model.a, -model.a]))
    mins, maxs = [], []
    drift = 0.0
    for t in ts:
        r1 = rho1_block_closed_form(solution, float(t))
        offs = [np.linalg.norm(r1[2 * i:2 * i + 2, 2 * j:2 * j + 2])
                for i in range(k) for j in range(k) if i != j]
        if offs:
            mins.append(min(offs))
            maxs.append(max(offs))
        else:
            mins.append(0.0)
            maxs.append(0.0)
        eigs = la.spectral_decompose(r1).eigenvalues
        drift = max(drift, float(np.max(np.abs(eigs - target))))
    return IrreducibilityReport(
        t_samples=ts.copy(),
        min_off_block=np.array(mins),
        max_off_block=np.array(maxs),
        spectrum_drift=drift,
        normalization_defect=model.normalization_defect(),
    )


# ---------------------------------------------------------------------------
# Model serialization
# ---------------------------------------------------------------------------

def model_to_text(model: BlockModel) -> str:
    if model.f.q is None:
        raise FormatError("only power-law nonlinearities can be serialized")
    lines = [
        f"alpha = {la.format_float(model.alpha)}",
        f"beta = {la.format_float(model.beta)}",
        f"K = {model.k_blocks}",
        f"q = {la.format_float(model.f.q)}",
        f"even = {int(model.f.even)}",
        "a = " + " ".join(la.format_float(x) for x in model.a),
        "u = " + " ".join(la.format_complex(z) for z in model.u),
    ]
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> BlockModel:
    fields: dict[str, str] = {}
    for ln in text.splitlines():
        ln = ln.strip()
        if not ln or ln.startswith("#"):
            continue
        if "=" not in ln:
            raise FormatError(f"bad block-model line: {ln!r}")
        key, _, val = ln.partition("=")
        fields[key.strip()] = val.strip()
    try:
        alpha = float(fields["alpha"])
        beta = float(fields["beta"])
        k = int(fields["K"])
        q = float(fields["q"])
        even = bool(int(fields.get("even", "1")))
        a = np.array([float(x) for x in fields["a"].split()]) if "a" in fields \
            else 1.0 / np.arange(1, k + 1, dtype=float) ** 2
        u = np.array([la.parse_complex(x) for x in fields["u"].split()]) if "u" in fields \
            else 2.0 ** (-np.arange(1, k + 1, dtype=float) / 2.0) + 0j
    except (KeyError, ValueError) as exc:
        raise FormatError(f"incomplete or malformed block model: {exc}") from exc
    if a.size != k or u.size != k:
        raise FormatError("a/u length does not match K")
    return make_block_model(alpha, beta, a, u, Nonlinearity.power(q, even=even))


def save_model(path, model: BlockModel) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model_to_text(model))


def load_model(path) -> BlockModel:
    with open(path, "r", encoding="utf-8") as fh:
        return model_from_text(fh.read())
