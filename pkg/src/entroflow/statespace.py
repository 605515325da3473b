"""States and relative-entropy quantities on a matrix algebra.

A Density is a PSD matrix together with its trace; normalization is
always an explicit step, never implicit.  Relative entropy follows the
standard convention

    D(rho || sigma) = tr rho (log rho - log sigma),

returning math.inf when the support of rho leaks outside the support
of sigma.  Infinity is the genuine IEEE extended-real value; no finite
sentinel is ever used.

The two-sided comparison region used throughout is

    B_alpha(sigma) = { rho : sigma / alpha <= rho <= alpha * sigma },

and balpha_factor computes the smallest alpha placing rho in it.  On
that region log rho - log sigma is bounded by log alpha in operator
norm, which resolvent_log_approx witnesses through the integral
representation of the operator logarithm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DomainError, InputError
from .matcore import (
    SUPPORT_CUTOFF,
    HermitianOperator,
    as_herm,
    herm_eig,
    mat_fn,
    op_norm,
    trace_norm,
)


@dataclass(frozen=True)
class Density:
    """An unnormalized state: PSD operator plus its trace."""

    op: HermitianOperator
    trace: float = field(init=False)

    def __post_init__(self):
        h = as_herm(self.op)
        w = np.linalg.eigvalsh(h.mat)
        top = float(w.max(initial=0.0))
        if w[0] < -1e-10 * max(top, 1e-300):
            raise InputError(
                f"density is not PSD: min eigenvalue {w[0]:.3e} vs max {top:.3e}"
            )
        tr = float(np.trace(h.mat).real)
        if tr <= 0.0:
            raise InputError(f"density must have positive trace, got {tr:.3e}")
        object.__setattr__(self, "op", h)
        object.__setattr__(self, "trace", tr)

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def mat(self) -> np.ndarray:
        return self.op.mat

    def normalize(self) -> "Density":
        return Density(HermitianOperator(self.op.mat / self.trace))

    def is_faithful(self, cutoff: float = SUPPORT_CUTOFF) -> bool:
        w = np.linalg.eigvalsh(self.op.mat)
        return bool(w[0] > cutoff * w[-1])


def density(mat) -> Density:
    """Build a Density from an array-like PSD matrix."""
    return Density(as_herm(mat))


def rel_entropy(rho: Density, sigma: Density, support_cutoff: float = SUPPORT_CUTOFF) -> float:
    """Relative entropy D(rho || sigma), math.inf on support mismatch.

    Evaluated in the two eigenbases through the overlap matrix
    |<u_i|v_j>|^2, which is exact for commuting pairs and stable for
    nearly-singular inputs.
    """
    if rho.dim != sigma.dim:
        raise InputError("dimension mismatch between states")
    dr = herm_eig(rho.op)
    ds = herm_eig(sigma.op)
    p = np.clip(dr.eigenvalues, 0.0, None)
    q = np.clip(ds.eigenvalues, 0.0, None)
    p_on = p > support_cutoff * p.max(initial=0.0)
    q_on = q > support_cutoff * q.max(initial=0.0)
    overlap = np.abs(dr.eigenvectors.conj().T @ ds.eigenvectors) ** 2
    # mass of rho landing in the kernel of sigma
    leak = float(p[p_on] @ overlap[np.ix_(p_on, ~q_on)].sum(axis=1)) if (~q_on).any() else 0.0
    if leak > 1e-10 * rho.trace:
        return math.inf
    plogp = float(p[p_on] @ np.log(p[p_on]))
    cross = float(p[p_on] @ overlap[np.ix_(p_on, q_on)] @ np.log(q[q_on]))
    return plogp - cross


def balpha_factor(rho: Density, sigma: Density, support_cutoff: float = SUPPORT_CUTOFF):
    """Smallest alpha >= 1 with sigma/alpha <= rho <= alpha*sigma, or None.

    sigma must be faithful; a singular rho returns None (no finite
    alpha exists).  Computed through the generalized eigenvalues of the
    pair (rho, sigma), i.e. the spectrum of sigma^{-1/2} rho sigma^{-1/2}.
    """
    if rho.dim != sigma.dim:
        raise InputError("dimension mismatch between states")
    if not sigma.is_faithful(support_cutoff):
        raise DomainError("reference state must be faithful")
    if not rho.is_faithful(support_cutoff):
        return None
    w = scipy.linalg.eigh(rho.op.mat, sigma.op.mat, eigvals_only=True)
    lo, hi = float(w[0]), float(w[-1])
    if lo <= 0.0:
        return None
    return max(hi, 1.0 / lo, 1.0)


@dataclass(frozen=True)
class SandwichBound:
    """Witness for rho lying in B_alpha(sigma)."""

    alpha: float
    lower_ok: bool
    upper_ok: bool
    witness_eigs: tuple

    @property
    def ok(self) -> bool:
        return self.lower_ok and self.upper_ok


def sandwich_bound(rho: Density, sigma: Density, alpha: float, tol: float = 1e-9) -> SandwichBound:
    """Check alpha^{-1} sigma <= rho <= alpha sigma within tol."""
    if alpha < 1.0:
        raise DomainError(f"alpha must be >= 1, got {alpha}")
    w = scipy.linalg.eigh(rho.op.mat, sigma.op.mat, eigvals_only=True)
    lo, hi = float(w[0]), float(w[-1])
    return SandwichBound(
        alpha=alpha,
        lower_ok=bool(lo >= 1.0 / alpha - tol),
        upper_ok=bool(hi <= alpha + tol),
        witness_eigs=(lo, hi),
    )


def rel_hamiltonian(rho: Density, sigma: Density, support=None) -> np.ndarray:
    """log rho - log sigma on a common support.

    Both states must be faithful, or a common support isometry/projector
    must be supplied on which they are.  When rho is in some B_alpha(sigma)
    the result is bounded by log alpha in operator norm; that bound is
    asserted as a postcondition.
    """
    if rho.dim != sigma.dim:
        raise InputError("dimension mismatch between states")
    if support is None:
        if not (rho.is_faithful() and sigma.is_faithful()):
            raise DomainError(
                "states must be faithful (or pass an explicit common support)"
            )
        h = mat_fn(rho.op, np.log) - mat_fn(sigma.op, np.log)
    else:
        v = np.asarray(support, dtype=complex)
        if v.ndim != 2 or v.shape[0] != rho.dim:
            raise InputError("support must be a dim x r isometry")
        if not np.allclose(v.conj().T @ v, np.eye(v.shape[1]), atol=1e-10):
            raise InputError("support columns must be orthonormal")
        r_small = v.conj().T @ rho.op.mat @ v
        s_small = v.conj().T @ sigma.op.mat @ v
        if min(np.linalg.eigvalsh(r_small)) <= 0 or min(np.linalg.eigvalsh(s_small)) <= 0:
            raise DomainError("states are singular on the supplied support")
        h_small = mat_fn(r_small, np.log) - mat_fn(s_small, np.log)
        h = v @ h_small @ v.conj().T
    alpha = balpha_factor(rho, sigma) if support is None else None
    if alpha is not None and op_norm(h) > math.log(alpha) + 1e-9:
        raise DomainError(
            f"relative Hamiltonian norm {op_norm(h):.6e} exceeds log(alpha)={math.log(alpha):.6e}"
        )
    return (h + h.conj().T) / 2


def resolvent_log_approx(rho: Density, sigma: Density, n: int, nodes: int = 200) -> np.ndarray:
    """Truncated integral representation of log rho - log sigma.

        x_n = int_{1/n}^{n} ((sigma + s)^{-1} - (rho + s)^{-1}) ds

    evaluated by Gauss-Legendre quadrature after the substitution
    s = e^u, which makes the integrand smooth and exponentially
    decaying at both ends.  Satisfies ||x_n|| <= log alpha whenever rho
    lies in B_alpha(sigma), and converges to the relative Hamiltonian
    as n grows.
    """
    if rho.dim != sigma.dim:
        raise InputError("dimension mismatch between states")
    if n < 1:
        raise DomainError(f"truncation index must be >= 1, got {n}")
    if nodes < 2:
        raise DomainError(f"need at least 2 quadrature nodes, got {nodes}")
    d = rho.dim
    if n == 1:
        return np.zeros((d, d), dtype=complex)
    half = math.log(n)
    u, w = np.polynomial.legendre.leggauss(nodes)
    u = u * half
    w = w * half
    eye = np.eye(d)
    out = np.zeros((d, d), dtype=complex)
    for ui, wi in zip(u, w):
        s = math.exp(ui)
        term = np.linalg.solve(sigma.op.mat + s * eye, eye) - np.linalg.solve(
            rho.op.mat + s * eye, eye
        )
        out += wi * s * term
    return (out + out.conj().T) / 2


def pinsker_gap(rho: Density, sigma: Density, tol: float = 1e-9) -> float:
    """Slack 2 D(rho||sigma) - ||rho - sigma||_1^2 of the Pinsker bound.

    Both inputs must be normalized states.  Returns math.inf when the
    relative entropy is infinite.
    """
    if abs(rho.trace - 1.0) > tol or abs(sigma.trace - 1.0) > tol:
        raise DomainError("pinsker_gap requires normalized states")
    d = rel_entropy(rho, sigma)
    if math.isinf(d):
        return math.inf
    tn = trace_norm(rho.op.mat - sigma.op.mat)
    return 2.0 * d - tn * tn
