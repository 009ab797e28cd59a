"""Dense complex matrix core: Hermitian eigenproblems via cyclic Jacobi
rotations, small general eigenproblems via Hessenberg + shifted QR, spectral
matrix functions, and the shared text format for matrices and vectors.

All matrices are ``numpy.ndarray`` of ``complex128``; functions are pure and
never mutate their inputs.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceError,
    DefectiveMatrixError,
    DimensionError,
    DomainError,
    FormatError,
)

Array = np.ndarray

#: construction tolerance for accepting a matrix as Hermitian
HERMITIAN_RTOL = 1e-12

#: eigenvalues closer than this (relative to the spectral radius) are treated
#: as one eigenspace when computing eigenvectors of a general matrix
DEGENERACY_RTOL = 1e-8

#: dimension cap for the general (non-Hermitian) eigensolver
GENERAL_EIG_DIM_CAP = 16


def as_matrix(m, name: str = "matrix") -> Array:
    """Validate and return a square, finite complex matrix (copied)."""
    a = np.array(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise DimensionError(f"{name} must be square and non-empty, got shape {a.shape}")
    if not np.all(np.isfinite(a.view(float))):
        raise DomainError(f"{name} contains non-finite entries")
    return a


def as_vector(v, name: str = "vector") -> Array:
    """Validate and return a finite complex vector (copied)."""
    a = np.array(v, dtype=complex).reshape(-1)
    if a.size < 1:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(a.view(float))):
        raise DomainError(f"{name} contains non-finite entries")
    return a


def frobenius(m: Array) -> float:
    return float(np.linalg.norm(m))


def hermitian_part(m: Array) -> Array:
    return (m + m.conj().T) / 2


def as_hermitian(m, rtol: float = HERMITIAN_RTOL, name: str = "matrix") -> Array:
    """Check ``m`` is Hermitian to ``rtol`` (relative, Frobenius) and return
    the exactly symmetrized form (m + m^dagger)/2."""
    a = as_matrix(m, name)
    scale = frobenius(a)
    defect = frobenius(a - a.conj().T)
    if defect > rtol * max(scale, 1e-300):
        raise DomainError(
            f"{name} is not Hermitian: defect {defect:.3e} > {rtol:.1e} * {scale:.3e}"
        )
    return hermitian_part(a)


def commutator(a: Array, b: Array) -> Array:
    """[a, b] = ab - ba."""
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape != b.shape:
        raise DimensionError(f"commutator: shapes {a.shape} and {b.shape} differ")
    return a @ b - b @ a


# ---------------------------------------------------------------------------
# Hermitian eigenproblem: cyclic Jacobi with complex Givens rotations
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (real, ascending) and a unitary matrix of eigenvectors."""

    eigenvalues: Array
    eigenvectors: Array

    def __post_init__(self):
        self.eigenvalues.flags.writeable = False
        self.eigenvectors.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self) -> Array:
        u = self.eigenvectors
        return (u * self.eigenvalues) @ u.conj().T

    def apply(self, values) -> Array:
        """Assemble U diag(values) U^dagger for given per-eigenvalue scalars."""
        u = self.eigenvectors
        return (u * np.asarray(values)) @ u.conj().T


def _offdiag_norm(a: Array) -> float:
    n = a.shape[0]
    mask = ~np.eye(n, dtype=bool)
    return float(np.linalg.norm(a[mask]))


def spectral_decompose(m, tol: float = 1e-12, max_sweeps: int = 100) -> SpectralDecomposition:
    """Diagonalize a Hermitian matrix by cyclic Jacobi rotations.

    Sweeps rotate away every off-diagonal pair until the off-diagonal
    Frobenius norm drops below ``tol * ||m||_F``; raises ConvergenceError
    (with the residual attached) past ``max_sweeps``.
    """
    a = as_hermitian(m, name="spectral_decompose input")
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    base = frobenius(a)
    if base == 0.0 or n == 1:
        return SpectralDecomposition(np.diag(a).real.copy(), v)

    target = tol * base
    skip = target / (3.0 * n * n)
    off = _offdiag_norm(a)
    for _ in range(max_sweeps):
        if off <= target:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= skip:
                    continue
                tau = (a[p, p].real - a[q, q].real) / (2.0 * r)
                t = -math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = (t * c) * (apq / r)

                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = c * colp - np.conj(s) * colq
                a[:, q] = s * colp + c * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = c * rowp - s * rowq
                a[q, :] = np.conj(s) * rowp + c * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                a[p, p] = a[p, p].real
                a[q, q] = a[q, q].real

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - np.conj(s) * vq
                v[:, q] = s * vp + c * vq
        off = _offdiag_norm(a)
    else:
        raise ConvergenceError(
            f"Jacobi sweep cap ({max_sweeps}) exceeded; off-diagonal residual "
            f"{off:.3e} vs target {target:.3e}",
            residual=off,
        )

    eigs = np.diag(a).real.copy()
    order = np.argsort(eigs, kind="stable")
    return SpectralDecomposition(eigs[order], np.ascontiguousarray(v[:, order]))


def matrix_function(m, f, tol: float = 1e-12) -> Array:
    """f(m) = U diag(f(lambda_i)) U^dagger for Hermitian ``m``.

    ``f`` receives the real eigenvalue vector and must return finite,
    real values on it (DomainError otherwise); the result commutes with
    ``m`` by construction.
    """
    dec = spectral_decompose(m, tol=tol)
    vals = np.asarray(f(dec.eigenvalues))
    if vals.shape != dec.eigenvalues.shape:
        vals = np.array([f(x) for x in dec.eigenvalues])
    if not np.all(np.isfinite(np.asarray(vals, dtype=complex).view(float))):
        raise DomainError("scalar function returned non-finite values on the spectrum")
    if np.iscomplexobj(vals):
        scale = max(float(np.max(np.abs(vals))), 1.0)
        if float(np.max(np.abs(vals.imag))) > 1e-12 * scale:
            raise DomainError(
                "scalar function returned non-real values on the spectrum of a "
                "Hermitian operator"
            )
        vals = vals.real
    return hermitian_part(dec.apply(vals))


def expm_scaled(dec: SpectralDecomposition, factor: complex) -> Array:
    """exp(factor * M) assembled from a precomputed decomposition of M.

    The result is general (non-Hermitian) for complex ``factor``.
    """
    return dec.apply(np.exp(factor * dec.eigenvalues))


# ---------------------------------------------------------------------------
# Small general eigenproblem: Hessenberg + shifted QR, inverse iteration
# ---------------------------------------------------------------------------

def _hessenberg(a: Array) -> Array:
    h = a.copy()
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k]
        nx = np.linalg.norm(x)
        if nx < 1e-300:
            continue
        v = x.copy()
        pivot = x[0]
        phase = pivot / abs(pivot) if abs(pivot) > 0 else 1.0
        v[0] += phase * nx
        v /= np.linalg.norm(v)
        h[k + 1:, k:] -= 2.0 * np.outer(v, v.conj() @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v.conj())
    for i in range(2, n):
        h[i, : i - 1] = 0.0
    return h


def _eig2x2(a11: complex, a12: complex, a21: complex, a22: complex) -> tuple[complex, complex]:
    tr = a11 + a22
    det = a11 * a22 - a12 * a21
    disc = np.sqrt(complex(tr * tr / 4.0 - det))
    return tr / 2.0 + disc, tr / 2.0 - disc


def _qr_eigenvalues(hess: Array, tol: float, max_iters: int) -> list[complex]:
    h = hess.copy()
    n = h.shape[0]
    eigs: list[complex] = []
    hi = n - 1
    iters = 0
    while hi >= 0:
        # deflate negligible subdiagonals
        for m_ in range(hi, 0, -1):
            if abs(h[m_, m_ - 1]) <= tol * (abs(h[m_, m_]) + abs(h[m_ - 1, m_ - 1]) + 1e-300):
                h[m_, m_ - 1] = 0.0
        if hi == 0 or h[hi, hi - 1] == 0.0:
            eigs.append(complex(h[hi, hi]))
            hi -= 1
            continue
        lo = hi - 1
        while lo > 0 and h[lo, lo - 1] != 0.0:
            lo -= 1
        if hi - lo == 1:
            l1, l2 = _eig2x2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi])
            eigs.extend([l1, l2])
            hi = lo - 1
            continue
        if iters >= max_iters:
            raise ConvergenceError(
                f"shifted QR cap ({max_iters}) exceeded on block [{lo}, {hi}]",
                residual=abs(h[hi, hi - 1]),
            )
        # Wilkinson shift: trailing 2x2 eigenvalue closest to the corner
        l1, l2 = _eig2x2(h[hi - 1, hi - 1], h[hi - 1, hi], h[hi, hi - 1], h[hi, hi])
        shift = l1 if abs(l1 - h[hi, hi]) <= abs(l2 - h[hi, hi]) else l2
        blk = slice(lo, hi + 1)
        w = h[blk, blk].copy()
        m = w.shape[0]
        w[np.diag_indices(m)] -= shift
        rot = []
        for j in range(m - 1):
            aa, bb = w[j, j], w[j + 1, j]
            rr = math.hypot(abs(aa), abs(bb))
            if rr < 1e-300:
                rot.append((1.0 + 0j, 0.0 + 0j))
                continue
            cj, sj = aa / rr, bb / rr
            rowa = w[j, j:].copy()
            rowb = w[j + 1, j:].copy()
            w[j, j:] = np.conj(cj) * rowa + np.conj(sj) * rowb
            w[j + 1, j:] = -sj * rowa + cj * rowb
            rot.append((cj, sj))
        for j, (cj, sj) in enumerate(rot):
            cola = w[: j + 2, j].copy()
            colb = w[: j + 2, j + 1].copy()
            w[: j + 2, j] = cola * cj + colb * sj
            w[: j + 2, j + 1] = -cola * np.conj(sj) + colb * np.conj(cj)
        w[np.diag_indices(m)] += shift
        h[blk, blk] = w
        iters += 1
    return eigs


def _cluster(values: list[complex], gap: float) -> list[list[complex]]:
    ordered = sorted(values, key=lambda z: (z.real, z.imag))
    groups: list[list[complex]] = []
    for z in ordered:
        if groups and abs(z - groups[-1][-1]) <= gap:
            groups[-1].append(z)
        else:
            groups.append([z])
    return groups


def eig_general(m, tol: float = 1e-10, dim_cap: int = GENERAL_EIG_DIM_CAP) -> list[tuple[complex, Array]]:
    """Eigenpairs of a small general complex matrix.

    Eigenvalues come from Hessenberg reduction plus shifted QR; eigenvectors
    from inverse iteration on the original matrix, orthonormalized inside
    degeneracy clusters (eigenvalues within ``DEGENERACY_RTOL`` times the
    spectral radius). Raises DefectiveMatrixError if an eigenspace is
    smaller than the eigenvalue multiplicity, ConvergenceError on stall.
    Pairs are sorted by (Re, Im) of the eigenvalue.
    """
    a = as_matrix(m, "eig_general input")
    n = a.shape[0]
    if n > dim_cap:
        raise DimensionError(f"eig_general supports dim <= {dim_cap}, got {n}")
    scale = max(frobenius(a), 1e-300)
    if n == 1:
        return [(complex(a[0, 0]), np.array([1.0 + 0j]))]

    eigvals = _qr_eigenvalues(_hessenberg(a), tol=1e-14, max_iters=60 * n)
    # spectral radius with a norm floor so nilpotent spectra still cluster
    radius = max(max(abs(z) for z in eigvals), scale / n)
    pairs: list[tuple[complex, Array]] = []
    rng = np.random.default_rng(1734)
    eye = np.eye(n, dtype=complex)
    for group in _cluster(eigvals, DEGENERACY_RTOL * radius):
        lam = complex(np.mean(group))
        found: list[Array] = []
        for member in group:
            eps = 1e-12 * radius
            vec = None
            start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            v = start / np.linalg.norm(start)
            for _ in range(60):
                try:
                    w = np.linalg.solve(a - (lam + eps) * eye, v)
                except np.linalg.LinAlgError:
                    eps *= 10.0
                    continue
                if not np.all(np.isfinite(w.view(float))):
                    eps *= 10.0
                    continue
                for u in found:
                    w = w - np.vdot(u, w) * u
                nw = np.linalg.norm(w)
                if nw < 1e-280:
                    start = rng.standard_normal(n) + 1j * rng.standard_normal(n)
                    v = start / np.linalg.norm(start)
                    continue
                v = w / nw
                if np.linalg.norm(a @ v - member * v) <= tol * scale:
                    vec = v
                    break
            if vec is None:
                res = float(np.linalg.norm(a @ v - member * v))
                if len(found) > 0:
                    raise DefectiveMatrixError(
                        f"eigenvalue {lam:.6g} has geometric multiplicity "
                        f"{len(found)} < algebraic multiplicity {len(group)} "
                        f"(residual {res:.3e})"
                    )
                raise ConvergenceError(
                    f"inverse iteration stalled at eigenvalue {lam:.6g}",
                    residual=res,
                )
            found.append(vec)
            pairs.append((complex(member), vec))
    pairs.sort(key=lambda p: (p[0].real, p[0].imag))
    return pairs


def eig_left_general(m, tol: float = 1e-10) -> list[tuple[complex, Array]]:
    """Row (bra) eigenpairs: vectors ``b`` with b @ m = lambda * b."""
    a = as_matrix(m, "eig_left_general input")
    return eig_general(a.T, tol=tol)


# ---------------------------------------------------------------------------
# Matrix / vector text format
# ---------------------------------------------------------------------------

_FLOAT = r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?"
_COMPLEX_RE = re.compile(rf"^({_FLOAT})({_FLOAT.replace('[+-]?', '[+-]')})i$")


def format_complex(z: complex) -> str:
    """``re+imi`` with 17 significant digits, e.g. ``1.5+0i``, ``0-0.5i``."""
    z = complex(z)
    re = z.real + 0.0  # normalize negative zero
    im = z.imag + 0.0
    return f"{re:.17g}{im:+.17g}i"


def parse_complex(token: str) -> complex:
    m = _COMPLEX_RE.match(token.strip())
    if not m:
        raise FormatError(f"bad complex token {token!r} (expected re+imi form)")
    return complex(float(m.group(1)), float(m.group(2)))


def format_float(x: float) -> str:
    return f"{float(x):.17g}"


def matrix_to_lines(m: Array) -> list[str]:
    a = as_matrix(m)
    lines = [str(a.shape[0])]
    for row in a:
        lines.append(" ".join(format_complex(z) for z in row))
    return lines


def matrix_from_lines(lines: list[str], start: int = 0) -> tuple[Array, int]:
    """Parse one matrix block; returns (matrix, index past the block)."""
    try:
        n = int(lines[start].strip())
    except (IndexError, ValueError) as exc:
        raise FormatError(f"expected matrix dimension at line {start + 1}") from exc
    if n < 1:
        raise FormatError(f"matrix dimension must be >= 1, got {n}")
    if start + 1 + n > len(lines):
        raise FormatError("truncated matrix block")
    rows = []
    for i in range(n):
        toks = lines[start + 1 + i].split()
        if len(toks) != n:
            raise FormatError(f"matrix row {i} has {len(toks)} entries, expected {n}")
        rows.append([parse_complex(t) for t in toks])
    return np.array(rows, dtype=complex), start + 1 + n


def write_matrix(path, m: Array) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(matrix_to_lines(m)) + "\n")


def read_matrix(path) -> Array:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f]
    m, _ = matrix_from_lines(lines)
    return m


def vector_to_lines(v: Array) -> list[str]:
    a = as_vector(v)
    return [str(a.size), " ".join(format_complex(z) for z in a)]


def vector_from_lines(lines: list[str], start: int = 0) -> tuple[Array, int]:
    try:
        n = int(lines[start].strip())
    except (IndexError, ValueError) as exc:
        raise FormatError(f"expected vector dimension at line {start + 1}") from exc
    toks = lines[start + 1].split()
    if len(toks) != n:
        raise FormatError(f"vector has {len(toks)} entries, expected {n}")
    return np.array([parse_complex(t) for t in toks], dtype=complex), start + 2


def write_vector(path, v: Array) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(vector_to_lines(v)) + "\n")


def read_vector(path) -> Array:
    with open(path, "r", encoding="utf-8") as f:
        lines = [ln.rstrip("\n") for ln in f]
    v, _ = vector_from_lines(lines)
    return v
