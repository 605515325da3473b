"""Dense linear-algebra core: Hermitian operators, spectral calculus, superoperators.

Conventions used throughout the package:

- Vectorization is column-major ("stack the columns"), so that
  vec(A X B) = (B^T (x) A) vec(X).  All superoperator matrices are
  written in this convention.
- Hermitian inputs are symmetrized at construction, (A + A^dag)/2,
  rather than rejected for roundoff-level asymmetry.
- Spectral support is decided relative to the largest eigenvalue:
  eigenvalues below support_cutoff * max_eig count as zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import InputError, NumericalError

logger = logging.getLogger(__name__)

# Default relative threshold separating numerical kernel from support.
SUPPORT_CUTOFF = 1e-12

# Construction rejects inputs whose asymmetry exceeds this (relative Frobenius).
_ASYM_TOL = 1e-6


def vec(a: np.ndarray) -> np.ndarray:
    """Column-major vectorization of a square matrix."""
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of vec for a dim x dim matrix."""
    return np.asarray(v).reshape((dim, dim), order="F")


@dataclass(frozen=True)
class HermitianOperator:
    """A finite-dimensional Hermitian matrix, symmetrized at construction."""

    mat: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.mat, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InputError(f"expected a square matrix, got shape {a.shape}")
        if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
            raise InputError("matrix has non-finite entries")
        scale = max(np.linalg.norm(a), 1.0)
        asym = np.linalg.norm(a - a.conj().T)
        if asym > _ASYM_TOL * scale:
            raise InputError(
                f"matrix is not Hermitian: relative asymmetry {asym / scale:.3e}"
            )
        sym = (a + a.conj().T) / 2.0
        sym.setflags(write=False)
        object.__setattr__(self, "mat", sym)
        object.__setattr__(self, "dim", sym.shape[0])

    def norm_fro(self) -> float:
        return float(np.linalg.norm(self.mat))

    def trace(self) -> float:
        return float(np.trace(self.mat).real)


def as_herm(x) -> HermitianOperator:
    """Coerce an array-like or HermitianOperator to HermitianOperator."""
    if isinstance(x, HermitianOperator):
        return x
    return HermitianOperator(np.asarray(x, dtype=complex))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and an orthonormal eigenbasis of a Hermitian matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.eigenvalues, dtype=float)
        v = np.asarray(self.eigenvectors, dtype=complex)
        w.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "eigenvalues", w)
        object.__setattr__(self, "eigenvectors", v)

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T


def herm_eig(a) -> SpectralDecomposition:
    """Eigendecomposition of a Hermitian operator, eigenvalues ascending."""
    h = as_herm(a)
    w, v = np.linalg.eigh(h.mat)
    dec = SpectralDecomposition(w, v)
    resid = np.linalg.norm(dec.reconstruct() - h.mat)
    if resid > 1e-10 * max(1.0, np.abs(w).max(initial=0.0)) * h.dim:
        raise NumericalError(f"eigendecomposition residual too large: {resid:.3e}")
    return dec


def mat_fn(a, f, support_cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    """Apply a scalar function to a PSD matrix through its eigenvalues.

    Eigenvalues below support_cutoff * max_eig are treated as exact
    zeros and mapped to 0 in the output (the function is never called
    on them), so f = log and f = inverse powers are safe on singular
    PSD inputs.  A min eigenvalue below -1e-8 * max_eig is rejected.
    """
    h = as_herm(a)
    dec = herm_eig(h)
    w = dec.eigenvalues
    top = float(w.max(initial=0.0))
    if top <= 0.0:
        if w.min(initial=0.0) < -1e-12:
            raise InputError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")
        return np.zeros_like(h.mat)
    if w.min() < -1e-8 * top:
        raise InputError(
            f"matrix is not PSD: min eigenvalue {w.min():.3e} vs max {top:.3e}"
        )
    cut = support_cutoff * top
    fw = np.zeros_like(w)
    on = w > cut
    fw[on] = [float(f(x)) for x in w[on]]
    return (dec.eigenvectors * fw) @ dec.eigenvectors.conj().T


def support_projector(a, support_cutoff: float = SUPPORT_CUTOFF) -> np.ndarray:
    """Orthogonal projection onto the numerical range of a PSD matrix."""
    h = as_herm(a)
    dec = herm_eig(h)
    w = dec.eigenvalues
    top = float(w.max(initial=0.0))
    on = w > support_cutoff * top if top > 0 else np.zeros_like(w, dtype=bool)
    v = dec.eigenvectors[:, on]
    return v @ v.conj().T


def min_eig(a) -> float:
    """Smallest eigenvalue of a Hermitian matrix."""
    return float(np.linalg.eigvalsh(as_herm(a).mat)[0])


def trace_norm(a) -> float:
    """Trace norm (sum of absolute eigenvalues) of a Hermitian matrix."""
    return float(np.abs(np.linalg.eigvalsh(as_herm(a).mat)).sum())


def op_norm(a) -> float:
    """Operator norm of a Hermitian matrix."""
    w = np.linalg.eigvalsh(as_herm(a).mat)
    return float(np.abs(w).max())


@dataclass(frozen=True)
class SuperOperator:
    """Linear map on dim x dim matrices, stored as a dim^2 x dim^2 matrix.

    The matrix acts on column-major vectorizations: apply(X) =
    unvec(matrix @ vec(X)).
    """

    matrix: np.ndarray
    dim: int = field(init=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"superoperator matrix must be square, got {m.shape}")
        d = int(round(np.sqrt(m.shape[0])))
        if d * d != m.shape[0]:
            raise InputError(f"superoperator side {m.shape[0]} is not a square")
        if not np.all(np.isfinite(m.real)) or not np.all(np.isfinite(m.imag)):
            raise InputError("superoperator has non-finite entries")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dim", d)

    def apply(self, x) -> np.ndarray:
        a = x.mat if isinstance(x, HermitianOperator) else np.asarray(x, dtype=complex)
        if a.shape != (self.dim, self.dim):
            raise InputError(f"operand shape {a.shape} does not match dim {self.dim}")
        return unvec(self.matrix @ vec(a), self.dim)

    def __matmul__(self, other: "SuperOperator") -> "SuperOperator":
        if self.dim != other.dim:
            raise InputError("superoperator dimensions do not match")
        return SuperOperator(self.matrix @ other.matrix)

    def adjoint(self) -> "SuperOperator":
        """Adjoint with respect to the trace pairing tr(S(x)^dag y)."""
        return SuperOperator(self.matrix.conj().T)


def identity_super(dim: int) -> SuperOperator:
    return SuperOperator(np.eye(dim * dim, dtype=complex))


def left_mult_super(x: np.ndarray) -> SuperOperator:
    """Superoperator of A -> x A."""
    x = np.asarray(x, dtype=complex)
    d = x.shape[0]
    return SuperOperator(np.kron(np.eye(d), x))


def right_mult_super(x: np.ndarray) -> SuperOperator:
    """Superoperator of A -> A x."""
    x = np.asarray(x, dtype=complex)
    return SuperOperator(np.kron(x.T, np.eye(x.shape[0])))


def conjugation_super(k: np.ndarray) -> SuperOperator:
    """Superoperator of A -> k A k^dag."""
    k = np.asarray(k, dtype=complex)
    return SuperOperator(np.kron(k.conj(), k))


def choi_matrix(s: SuperOperator) -> np.ndarray:
    """Choi matrix sum_ij E_ij (x) S(E_ij); PSD iff S is completely positive."""
    d = s.dim
    c = np.zeros((d * d, d * d), dtype=complex)
    m = s.matrix
    for i in range(d):
        for j in range(d):
            # vec(E_ij) is the standard basis vector at column-major index j*d+i,
            # so S(E_ij) is a reshaped column of the superoperator matrix.
            block = unvec(m[:, j * d + i], d)
            c[i * d : (i + 1) * d, j * d : (j + 1) * d] = block
    return c


def is_herm_preserving(s: SuperOperator, tol: float = 1e-10) -> bool:
    """Whether S maps Hermitian matrices to Hermitian matrices."""
    c = choi_matrix(s)
    scale = max(1.0, np.linalg.norm(c))
    return bool(np.linalg.norm(c - c.conj().T) <= tol * scale)


def expm_superop(s: SuperOperator, t: float) -> SuperOperator:
    """Matrix exponential exp(t * S) of a superoperator.

    Uses a unitary Schur route when S is normal (cheap and stable for
    the self-adjoint generators that dominate this package), and
    scaling-and-squaring otherwise.
    """
    m = s.matrix
    scale = max(1.0, float(np.linalg.norm(m)) ** 2)
    comm = np.linalg.norm(m @ m.conj().T - m.conj().T @ m)
    if comm <= 1e-10 * scale:
        tmat, q = scipy.linalg.schur(m * t, output="complex")
        off = np.linalg.norm(tmat - np.diag(np.diag(tmat)))
        if off <= 1e-8 * max(1.0, np.linalg.norm(tmat)):
            out = (q * np.exp(np.diag(tmat))) @ q.conj().T
        else:
            out = scipy.linalg.expm(m * t)
    else:
        out = scipy.linalg.expm(m * t)
    if not np.all(np.isfinite(out.real)) or not np.all(np.isfinite(out.imag)):
        raise NumericalError(
            f"superoperator exponential overflowed at t={t}; ||S||={np.linalg.norm(m):.3e}"
        )
    return SuperOperator(out)


def clamp_psd(a: np.ndarray, tol: float = 1e-9, what: str = "matrix") -> np.ndarray:
    """Zero out slightly negative eigenvalues of a nearly-PSD Hermitian matrix.

    Eigenvalues in [-tol, 0) are clamped to 0 (logged); anything below
    -tol is an error for the caller to raise on, signalled here.
    """
    h = as_herm(a)
    dec = herm_eig(h)
    w = dec.eigenvalues
    if w[0] >= 0.0:
        return h.mat
    if w[0] < -tol:
        raise NumericalError(
            f"{what} lost positivity: min eigenvalue {w[0]:.3e} below -{tol:.1e}"
        )
    logger.warning("clamping %s eigenvalues in [%.3e, 0) to zero", what, w[0])
    wc = np.clip(w, 0.0, None)
    return (dec.eigenvectors * wc) @ dec.eigenvectors.conj().T
