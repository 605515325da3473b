"""Quantum Markov semigroups on matrix algebras.

Sign convention: the generator L is positive, the Heisenberg semigroup
is P_t = exp(-t L) acting on observables, and the Schroedinger picture
evolves states by the trace-pairing adjoint, d/dt rho_t = -L_*(rho_t).
For GKLS data (H, {V_k}) this means

    L(x)   = -i[H, x] + sum_k ( {V_k^dag V_k, x}/2 - V_k^dag x V_k )
    L_*(r) =  i[H, r] + sum_k ( {V_k^dag V_k, r}/2 - V_k r V_k^dag )

so L(1) = 0 (unital) and tr L_*(r) = 0 (trace preserving).

Three generator variants are supported: explicit GKLS data, a Schur
multiplier symbol acting entrywise on matrix units, and a raw
superoperator matrix in the Heisenberg picture.  Raw input is vetted:
unitality, Hermiticity preservation, and complete positivity of
exp(-tL) at spot-check times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, InputError, NumericalError
from .matcore import (
    HermitianOperator,
    SuperOperator,
    as_herm,
    choi_matrix,
    clamp_psd,
    expm_superop,
    herm_eig,
    is_herm_preserving,
    mat_fn,
    unvec,
    vec,
)
from .statespace import Density

_CP_CHECK_TIMES = (0.1, 1.0)
_CP_TOL = 1e-9


@dataclass(frozen=True)
class Generator:
    """Generator of a quantum Markov semigroup.

    heisenberg / schroedinger are the superoperator matrices of L and
    L_*; they are trace-pairing adjoints of each other.
    """

    dim: int
    variant: str
    heisenberg: SuperOperator
    schroedinger: SuperOperator
    hamiltonian: np.ndarray | None = None
    jumps: tuple = ()
    symbol: np.ndarray | None = None

    def semigroup(self, t: float) -> SuperOperator:
        """Heisenberg semigroup P_t = exp(-t L)."""
        if t < 0:
            raise DomainError(f"semigroup time must be >= 0, got {t}")
        return self._propagator("h", self.heisenberg, t)

    def presemigroup(self, t: float) -> SuperOperator:
        """Schroedinger semigroup exp(-t L_*) acting on states."""
        if t < 0:
            raise DomainError(f"semigroup time must be >= 0, got {t}")
        return self._propagator("s", self.schroedinger, t)

    def _propagator(self, tag: str, gen: SuperOperator, t: float) -> SuperOperator:
        # memoized per exact time value; sweeps revisit the same grid points
        cache = self.__dict__.setdefault("_propagators", {})
        key = (tag, float(t))
        hit = cache.get(key)
        if hit is None:
            hit = cache[key] = expm_superop(SuperOperator(-gen.matrix), t)
        return hit


def _check_unital(l_heis: SuperOperator, dim: int):
    lu = l_heis.apply(np.eye(dim))
    if np.linalg.norm(lu) > 1e-10 * max(1.0, np.linalg.norm(l_heis.matrix)):
        raise InputError(f"generator is not unital: ||L(1)|| = {np.linalg.norm(lu):.3e}")


def _check_cp_semigroup(l_heis: SuperOperator, times=_CP_CHECK_TIMES):
    for t in times:
        p = expm_superop(SuperOperator(-l_heis.matrix), t)
        lo = float(np.linalg.eigvalsh((choi_matrix(p) + choi_matrix(p).conj().T) / 2)[0])
        if lo < -_CP_TOL:
            raise InputError(
                f"exp(-tL) is not completely positive at t={t}: min Choi eig {lo:.3e}"
            )


def gkls_generator(hamiltonian=None, jumps=(), dim: int | None = None) -> Generator:
    """Build a generator from GKLS data (Hamiltonian and jump operators)."""
    if hamiltonian is None and not jumps:
        raise InputError("need a Hamiltonian or at least one jump operator")
    if hamiltonian is not None:
        h = as_herm(hamiltonian).mat
        d = h.shape[0]
    else:
        d = np.asarray(jumps[0], dtype=complex).shape[0]
        h = np.zeros((d, d), dtype=complex)
    if dim is not None and dim != d:
        raise InputError(f"declared dim {dim} does not match operator size {d}")
    eye = np.eye(d)
    vs = [np.asarray(v, dtype=complex) for v in jumps]
    for v in vs:
        if v.shape != (d, d):
            raise InputError(f"jump operator shape {v.shape} does not match dim {d}")
    # Heisenberg: L(x) = -i[H,x] + sum {V^dag V, x}/2 - V^dag x V
    l_h = -1j * (np.kron(eye, h) - np.kron(h.T, eye))
    # Schroedinger: L_*(r) = +i[H,r] + sum {V^dag V, r}/2 - V r V^dag
    l_s = 1j * (np.kron(eye, h) - np.kron(h.T, eye))
    for v in vs:
        k = v.conj().T @ v
        anti = 0.5 * (np.kron(eye, k) + np.kron(k.T, eye))
        l_h += anti - np.kron(v.T, v.conj().T)
        l_s += anti - np.kron(v.conj(), v)
    heis = SuperOperator(l_h)
    _check_unital(heis, d)
    return Generator(
        dim=d,
        variant="gkls",
        heisenberg=heis,
        schroedinger=SuperOperator(l_s),
        hamiltonian=h,
        jumps=tuple(vs),
    )


def schur_generator(symbol) -> Generator:
    """Build the Schur-multiplier generator L(E_gh) = symbol[g,h] * E_gh.

    The symbol must be real symmetric, entrywise >= 0, with zero
    diagonal; exp(-t*symbol) must be entrywise a PSD kernel for the
    semigroup to be completely positive, which is spot-checked.
    """
    psi = np.asarray(symbol, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != psi.shape[1]:
        raise InputError(f"symbol must be square, got {psi.shape}")
    d = psi.shape[0]
    if not np.allclose(psi, psi.T, atol=1e-12):
        raise InputError("symbol must be symmetric")
    if np.any(psi < 0):
        raise InputError("symbol must be entrywise nonnegative")
    if np.any(np.abs(np.diag(psi)) > 1e-12):
        raise InputError("symbol must have zero diagonal")
    for t in _CP_CHECK_TIMES:
        k = np.exp(-t * psi)
        lo = float(np.linalg.eigvalsh((k + k.T) / 2)[0])
        if lo < -1e-10:
            raise InputError(
                f"exp(-t*symbol) is not a PSD kernel at t={t}: min eig {lo:.3e}"
            )
    # diagonal superoperator in the matrix-unit basis; vec index of E_gh is h*d+g
    diag = np.array([psi[g, h] for h in range(d) for g in range(d)])
    m = np.diag(diag).astype(complex)
    return Generator(
        dim=d,
        variant="schur",
        heisenberg=SuperOperator(m),
        schroedinger=SuperOperator(m),
        symbol=psi,
    )


def raw_generator(matrix) -> Generator:
    """Build a generator from a raw Heisenberg superoperator matrix.

    Validates unitality, Hermiticity preservation, and complete
    positivity of exp(-tL) at spot-check times; rejects e.g. the
    transpose map dressed up as a semigroup.
    """
    heis = matrix if isinstance(matrix, SuperOperator) else SuperOperator(matrix)
    d = heis.dim
    if not is_herm_preserving(heis):
        raise InputError("raw generator does not preserve Hermiticity")
    _check_unital(heis, d)
    _check_cp_semigroup(heis)
    return Generator(
        dim=d,
        variant="raw",
        heisenberg=heis,
        schroedinger=heis.adjoint(),
    )


def evolve(gen: Generator, rho: Density, t: float) -> Density:
    """Schroedinger evolution of a state: exp(-t L_*) rho.

    Postconditions: trace preserved within 1e-10 (relative), output PSD
    within -1e-9 (slightly negative eigenvalues are clamped and logged).
    """
    if rho.dim != gen.dim:
        raise InputError("state dimension does not match generator")
    out = gen.presemigroup(t).apply(rho.mat)
    out = (out + out.conj().T) / 2
    tr_out = float(np.trace(out).real)
    if abs(tr_out - rho.trace) > 1e-10 * max(1.0, rho.trace):
        raise NumericalError(
            f"evolution broke trace preservation: {rho.trace:.12e} -> {tr_out:.12e}"
        )
    out = clamp_psd(out, tol=1e-9, what="evolved state")
    return Density(HermitianOperator(out))


def _null_space(m: np.ndarray, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (columns) of the null space of m."""
    u, s, vh = np.linalg.svd(m)
    top = s.max(initial=0.0)
    keep = s <= rtol * max(top, 1.0)
    # svd lists singular values descending; null vectors are trailing rows of vh
    k = int(keep.sum())
    if k == 0:
        return np.zeros((m.shape[1], 0), dtype=complex)
    return vh[-k:].conj().T


def _spectral_projection_zero(m: np.ndarray) -> np.ndarray:
    """Projection onto ker(m) along ran(m), assuming 0 is semisimple."""
    v = _null_space(m)
    w = _null_space(m.conj().T)
    if v.shape[1] != w.shape[1] or v.shape[1] == 0:
        raise NumericalError("zero eigenvalue of the generator is defective")
    cross = w.conj().T @ v
    return v @ np.linalg.solve(cross, w.conj().T)


@dataclass(frozen=True)
class InvariantStates:
    """Stationary structure of a semigroup in the Schroedinger picture."""

    basis: tuple  # PSD Densities spanning the stationary cone
    hermitian_basis: tuple  # orthonormal Hermitian kernel basis (arrays)
    faithful_exists: bool
    faithful_state: Density | None


def invariant_states(gen: Generator) -> InvariantStates:
    """Kernel of L_* intersected with Hermitian matrices, plus faithfulness flag."""
    d = gen.dim
    kern = _null_space(gen.schroedinger.matrix)
    k = kern.shape[1]
    if k == 0:
        raise NumericalError("trace-preserving semigroup lost its stationary state")
    # the kernel is adjoint-closed; extract a real orthonormal Hermitian basis
    cands = []
    for i in range(k):
        x = unvec(kern[:, i], d)
        cands.append((x + x.conj().T) / 2)
        cands.append((x - x.conj().T) / 2j)
    rows = np.array([np.concatenate([c.real.ravel(), c.imag.ravel()]) for c in cands])
    _, svals, vh = np.linalg.svd(rows)
    rank = int((svals > 1e-10 * max(svals[0], 1.0)).sum())
    if rank != k:
        raise NumericalError("failed to build a Hermitian basis of the stationary space")
    herm_basis = []
    for flat in vh[:k]:
        m = flat[: d * d].reshape(d, d) + 1j * flat[d * d :].reshape(d, d)
        herm_basis.append((m + m.conj().T) / 2)

    proj = _spectral_projection_zero(gen.schroedinger.matrix)
    mean = unvec(proj @ vec(np.eye(d) / d), d)
    mean = (mean + mean.conj().T) / 2
    mean_min = float(np.linalg.eigvalsh(mean)[0])
    faithful = mean_min > 1e-10
    faithful_state = None
    if faithful:
        faithful_state = Density(HermitianOperator(mean / np.trace(mean).real))

    basis = []
    for h in herm_basis:
        # orient so the dominant spectral weight is positive
        w = np.linalg.eigvalsh(h)
        if abs(w[0]) > abs(w[-1]):
            h = -h
        lo = float(np.linalg.eigvalsh(h)[0])
        if lo >= -1e-12:
            cand = h
        elif faithful:
            # shift along the faithful mean until PSD
            cand = h + (1.1 * abs(lo) / mean_min) * mean
        else:
            continue
        tr = float(np.trace(cand).real)
        if tr <= 1e-12:
            continue
        basis.append(Density(HermitianOperator(cand / tr)))
    return InvariantStates(
        basis=tuple(basis),
        hermitian_basis=tuple(herm_basis),
        faithful_exists=faithful,
        faithful_state=faithful_state,
    )


def gns_symmetry_residual(gen: Generator, phi: Density, times=(0.3, 1.0)) -> float:
    """Deviation from phi-symmetry, max over matrix-unit pairs and spot times.

    Measures |tr(phi P_t(x)^dag y) - tr(phi x^dag P_t(y))| for all
    matrix units x, y; zero means the semigroup is symmetric in the
    phi-weighted (GNS) inner product.
    """
    if phi.dim != gen.dim:
        raise InputError("state dimension does not match generator")
    f = np.kron(phi.mat.T, np.eye(gen.dim))
    worst = 0.0
    for t in times:
        m = gen.semigroup(t).matrix
        gap = m.conj().T @ f - f @ m
        worst = max(worst, float(np.abs(gap).max()))
    return worst


def is_gns_symmetric(gen: Generator, phi: Density, tol: float = 1e-8) -> bool:
    return gns_symmetry_residual(gen, phi) <= tol


def modular_flow(phi: Density, t: float, x) -> np.ndarray:
    """Modular rotation phi^{it} x phi^{-it} for faithful phi."""
    if not phi.is_faithful():
        raise DomainError("modular flow requires a faithful state")
    dec = herm_eig(phi.op)
    w = dec.eigenvalues
    u = (dec.eigenvectors * np.exp(1j * t * np.log(w))) @ dec.eigenvectors.conj().T
    a = x.mat if isinstance(x, HermitianOperator) else np.asarray(x, dtype=complex)
    return u @ a @ u.conj().T


@dataclass(frozen=True)
class FixedPointData:
    """Conditional expectation onto the fixed-point algebra and its predual."""

    expectation: SuperOperator  # E, Heisenberg picture
    predual: SuperOperator  # E_*, acts on states
    fixed_basis: tuple  # orthonormal basis (arrays) of the fixed-point space
    phi: Density

    def project_state(self, rho: Density) -> Density:
        out = self.predual.apply(rho.mat)
        out = clamp_psd((out + out.conj().T) / 2, tol=1e-9, what="projected state")
        return Density(HermitianOperator(out))


def _validate_expectation(e_mat: np.ndarray, gen: Generator, phi: Density, tol: float = 1e-9):
    d = gen.dim
    e = SuperOperator(e_mat)
    scale = max(1.0, np.linalg.norm(e_mat))
    if np.linalg.norm(e_mat @ e_mat - e_mat) > tol * scale:
        raise NumericalError("fixed-point expectation is not idempotent")
    if np.linalg.norm(e.apply(np.eye(d)) - np.eye(d)) > tol:
        raise NumericalError("fixed-point expectation is not unital")
    lo = float(np.linalg.eigvalsh((choi_matrix(e) + choi_matrix(e).conj().T) / 2)[0])
    if lo < -1e-8:
        raise NumericalError(f"fixed-point expectation is not CP: min Choi eig {lo:.3e}")
    for t in (0.5, 2.0):
        p = gen.semigroup(t).matrix
        if np.linalg.norm(e_mat @ p - e_mat) > 1e-8 * scale or np.linalg.norm(
            p @ e_mat - e_mat
        ) > 1e-8 * scale:
            raise NumericalError("expectation does not absorb the semigroup")
    # phi-preservation: tr(phi E(x)) = tr(phi x) for all x, i.e. E_* phi = phi
    f = vec(phi.mat)
    if np.linalg.norm(e_mat.conj().T @ f - f) > 1e-8 * max(1.0, np.linalg.norm(f)):
        raise NumericalError("expectation does not preserve the reference state")


def fixed_point_expectation(gen: Generator, phi: Density) -> FixedPointData:
    """Conditional expectation E onto ker(L), with predual E_*.

    phi must be a faithful invariant state.  For a phi-symmetric
    semigroup E is the kernel projection of the (Hermitian) weighted
    implementation of L, orthogonal in <x,y> = tr(phi x^dag y); the
    general case falls back to Cesaro averaging of the semigroup with
    Richardson extrapolation, doubling the horizon until the
    projection identities hold.
    """
    d = gen.dim
    if phi.dim != d:
        raise InputError("state dimension does not match generator")
    if not phi.is_faithful():
        raise DomainError("reference state must be faithful")
    resid = np.linalg.norm(gen.schroedinger.apply(phi.mat))
    if resid > 1e-8 * max(1.0, np.linalg.norm(phi.mat)):
        raise DomainError(f"reference state is not invariant: ||L_* phi|| = {resid:.3e}")

    if is_gns_symmetric(gen, phi):
        root = mat_fn(phi.op, np.sqrt)
        g = np.kron(root.T, np.eye(d))  # vec(x phi^(1/2)) = g vec(x)
        ginv = np.linalg.inv(g)
        l2 = g @ gen.heisenberg.matrix @ ginv
        l2 = (l2 + l2.conj().T) / 2
        w, v = np.linalg.eigh(l2)
        top = max(abs(w[0]), abs(w[-1]), 1.0)
        kern = v[:, np.abs(w) <= 1e-10 * top]
        p0 = kern @ kern.conj().T
        e_mat = ginv @ p0 @ g
    else:
        nz = _nonzero_decay_rate(gen)
        horizon = 200.0 / nz
        e_mat = None
        for _ in range(7):
            c1 = _cesaro_mean(gen, horizon)
            c2 = _cesaro_mean(gen, 2 * horizon)
            cand = 2 * c2 - c1
            try:
                _validate_expectation(cand, gen, phi)
            except NumericalError:
                horizon *= 2
                continue
            e_mat = cand
            break
        if e_mat is None:
            raise NumericalError("Cesaro averaging did not converge to a projection")

    _validate_expectation(e_mat, gen, phi)
    # tidy exact algebraic identities
    basis_vecs = _null_space(gen.heisenberg.matrix)
    fixed = tuple(unvec(basis_vecs[:, i], d) for i in range(basis_vecs.shape[1]))
    return FixedPointData(
        expectation=SuperOperator(e_mat),
        predual=SuperOperator(e_mat.conj().T),
        fixed_basis=fixed,
        phi=phi,
    )


def _nonzero_decay_rate(gen: Generator) -> float:
    w = np.linalg.eigvals(gen.heisenberg.matrix)
    pos = [abs(x.real) for x in w if abs(x) > 1e-9 * max(1.0, np.abs(w).max())]
    pos = [r for r in pos if r > 1e-12]
    return min(pos) if pos else 1.0


def _cesaro_mean(gen: Generator, horizon: float) -> np.ndarray:
    """(1/T) * integral_0^T exp(-sL) ds via a block-matrix exponential."""
    n = gen.heisenberg.matrix.shape[0]
    blk = np.zeros((2 * n, 2 * n), dtype=complex)
    blk[:n, :n] = -gen.heisenberg.matrix
    blk[:n, n:] = np.eye(n)
    e = scipy.linalg.expm(blk * horizon)
    return e[:n, n:] / horizon


def spectral_gap(gen: Generator, phi: Density) -> float:
    """Smallest nonzero eigenvalue of L in the phi-weighted implementation.

    Requires the semigroup to be phi-symmetric (within 1e-8); the
    weighted implementation is then Hermitian with real spectrum.
    """
    d = gen.dim
    if not phi.is_faithful():
        raise DomainError("reference state must be faithful")
    if not is_gns_symmetric(gen, phi):
        raise DomainError("spectral gap requires a state-symmetric semigroup")
    root = mat_fn(phi.op, np.sqrt)
    g = np.kron(root.T, np.eye(d))
    l2 = g @ gen.heisenberg.matrix @ np.linalg.inv(g)
    herm_resid = np.linalg.norm(l2 - l2.conj().T)
    if herm_resid > 1e-7 * max(1.0, np.linalg.norm(l2)):
        raise NumericalError(
            f"weighted implementation failed to be Hermitian: residual {herm_resid:.3e}"
        )
    w = np.linalg.eigvalsh((l2 + l2.conj().T) / 2)
    top = max(abs(w[0]), abs(w[-1]), 1.0)
    nz = w[np.abs(w) > 1e-10 * top]
    if nz.size == 0:
        raise DomainError("generator is zero; no spectral gap")
    gap = float(nz.min())
    if gap <= 0:
        raise NumericalError(f"weighted implementation has negative spectrum: {gap:.3e}")
    return gap
