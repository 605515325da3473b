"""Differential calculus of diagonal-projection cocycles.

A family of 0/1 diagonal projections P_i defines derivations
delta_i(x) = [P_i, x] and the Schur generator with symbol

    psi(g, h) = sum_i (v_i(g) - v_i(h))^2,

where v_i is the diagonal of P_i.  Each component symbol
psi_i = (v_i(g) - v_i(h))^2 generates a single-flip semigroup
T^i_t = e^{-t} id + (1 - e^{-t}) Pinch_i, with Pinch_i the
conditional expectation onto the commutant of P_i.

The derivations intertwine the full semigroup exactly:

    delta_i P_t = M^i_t delta_i,

where M^i_t is the Schur multiplier with kernel
exp(-t (psi + 2 - 2 psi_i)).  On entries the derivation kills, the
kernel is free; this completion is chosen because it is damped by
e^{-2t} and, crucially, dominated in the complete-Schwarz order:

    M(x)^dag M(x) <= e^{-2Kt} P_t(x^dag x)    (K = number of flips)

holds for all x iff every block G_c = e^{-2Kt} e^{-t psi} - w_c w_c^dag
is positive semidefinite, with w_c the c-th row (left action) or
conjugated column (right action) of the composite kernel.  The block
form is the Choi condition of the module defect map, written in the
convention that makes the right action an honest opposite-algebra
Choi matrix; checking the naive Choi matrix instead produces spurious
indefinite 2x2 blocks.  Repeating a flip breaks the bound: at the
wall edge of the repeated projection the block diagonal dips to
exactly e^{-4t} - e^{-2t} < 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, SizeError
from .matcore import SuperOperator, left_mult_super, right_mult_super
from .qms import Generator, schur_generator

# side length cap for the module-copy Choi certificate
CHOI_SIDE_CAP = 4096


@dataclass(frozen=True)
class DiffCalculus:
    """Family of 0/1 projection diagonals, one row per derivation."""

    rows: np.ndarray

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    @property
    def count(self) -> int:
        return self.rows.shape[0]

    def projection(self, i: int) -> np.ndarray:
        return np.diag(self.rows[i].astype(float)).astype(complex)

    def component_symbol(self, i: int) -> np.ndarray:
        v = self.rows[i]
        return (v[:, None] - v[None, :]) ** 2

    def symbol(self) -> np.ndarray:
        d = self.rows[:, :, None] - self.rows[:, None, :]
        return np.einsum("igh,igh->gh", d, d)


def diff_calculus(rows) -> DiffCalculus:
    """Validate a projection family: 0/1 entries, no constant rows."""
    r = np.asarray(rows)
    if r.ndim != 2 or r.shape[0] < 1 or r.shape[1] < 2:
        raise InputError(f"projection family must be a nonempty 2d array, got shape {r.shape}")
    if not np.all((r == 0) | (r == 1)):
        raise InputError("projection rows must be 0/1 valued")
    r = r.astype(int)
    for i, row in enumerate(r):
        if row.min() == row.max():
            raise InputError(f"row {i} is constant and generates no derivation")
    r = r.copy()
    r.setflags(write=False)
    return DiffCalculus(rows=r)


def derivation_apply(calc: DiffCalculus, i: int, x: np.ndarray) -> np.ndarray:
    """delta_i(x) = [P_i, x]."""
    _check_flip(calc, i)
    p = calc.projection(i)
    x = np.asarray(x, dtype=complex)
    if x.shape != (calc.dim, calc.dim):
        raise InputError(f"operator shape {x.shape} does not match dimension {calc.dim}")
    return p @ x - x @ p


def dirichlet_energy(calc: DiffCalculus, x: np.ndarray, weights=None) -> float:
    """sum_i tr(x^dag delta_i^dag delta_i x) / d, the trace Dirichlet form.

    Equals tr(x^dag L(x)) / d for the Schur generator of the symbol.
    """
    d = calc.dim
    total = 0.0
    for i in range(calc.count):
        dx = derivation_apply(calc, i, x)
        w = 1.0 if weights is None else float(weights[i])
        total += w * float(np.real(np.trace(dx.conj().T @ dx)))
    return total / d


def _schur_super(kernel: np.ndarray) -> SuperOperator:
    return SuperOperator(np.diag(kernel.flatten(order="F")).astype(complex))


def schur_symbol(calc: DiffCalculus) -> np.ndarray:
    return calc.symbol().astype(float)


def generator_from_calculus(calc: DiffCalculus) -> Generator:
    return schur_generator(schur_symbol(calc))


def flip_pinch(calc: DiffCalculus, i: int) -> SuperOperator:
    """Conditional expectation onto the commutant of P_i: keeps entries
    with v_i(g) = v_i(h), kills the rest."""
    _check_flip(calc, i)
    keep = 1.0 - calc.component_symbol(i).astype(float)
    return _schur_super(keep)


def single_flip_semigroup(calc: DiffCalculus, i: int, t: float) -> SuperOperator:
    """T^i_t = e^{-t} id + (1 - e^{-t}) Pinch_i, symbol psi_i."""
    _check_flip(calc, i)
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    kernel = np.exp(-t * calc.component_symbol(i).astype(float))
    return _schur_super(kernel)


def component_kernel(calc: DiffCalculus, flips, t: float) -> np.ndarray:
    """Composite intertwining kernel exp(-t (psi + 2K - 2 sum psi_i)).

    flips lists the derivations pulled through the semigroup, with
    multiplicity; each pull-through contributes e^{-2t} damping and
    reopens its own crossing entries by e^{+2t}.
    """
    flips = _check_flips(calc, flips)
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    k = len(flips)
    crossing = sum(calc.component_symbol(i) for i in flips)
    exponent = calc.symbol() + 2 * k - 2 * crossing
    return np.exp(-t * exponent.astype(float))


def intertwine_operator(calc: DiffCalculus, flips, t: float) -> SuperOperator:
    """Schur multiplier of the composite intertwining kernel."""
    return _schur_super(component_kernel(calc, flips, t))


def intertwining_residual(gen: Generator, calc: DiffCalculus, times=(0.25, 1.0)) -> float:
    """Max entry of delta_i P_t - M^i_t delta_i over flips and times.

    Zero (to rounding) whenever gen is the Schur generator of the
    calculus symbol; a generator with a different symbol is rejected.
    """
    expected = generator_from_calculus(calc)
    if gen.dim != calc.dim or not np.allclose(
        gen.heisenberg.matrix, expected.heisenberg.matrix, atol=1e-10
    ):
        raise DomainError("generator is not generated by this calculus")
    propagators = {float(t): gen.semigroup(float(t)).matrix for t in times}
    worst = 0.0
    for i in range(calc.count):
        p = calc.projection(i)
        d_i = left_mult_super(p).matrix - right_mult_super(p).matrix
        for t, s_t in propagators.items():
            m_t = intertwine_operator(calc, (i,), t).matrix
            worst = max(worst, float(np.max(np.abs(d_i @ s_t - m_t @ d_i))))
    return worst


@dataclass(frozen=True)
class CpDominanceReport:
    """Outcome of the complete-Schwarz domination check."""

    flips: tuple
    times: tuple
    min_eig: float
    worst_time: float
    worst_row: int
    worst_side: str
    passed: bool


def cp_dominance_check(calc: DiffCalculus, flips, t: float, side: str = "left"):
    """Min eigenvalue over the blocks G_c = e^{-2Kt} e^{-t psi} - w_c w_c^dag.

    Returns (min_eig, worst_row).  side selects rows of the composite
    kernel (left module action) or conjugated columns (right action,
    the opposite-algebra Choi convention).
    """
    flips = _check_flips(calc, flips)
    if side not in ("left", "right"):
        raise InputError(f"side must be 'left' or 'right', got {side!r}")
    d = calc.dim
    if d * d > CHOI_SIDE_CAP:
        raise SizeError(
            f"module-copy Choi certificate has side {d * d}, cap {CHOI_SIDE_CAP}"
        )
    kappa = component_kernel(calc, flips, t)
    base = np.exp(-2 * len(flips) * t) * np.exp(-t * calc.symbol().astype(float))
    worst = (np.inf, -1)
    for c in range(d):
        w = kappa[c] if side == "left" else kappa[:, c].conj()
        g = base - np.outer(w, np.conj(w))
        lo = float(np.linalg.eigvalsh((g + g.conj().T) / 2)[0])
        if lo < worst[0]:
            worst = (lo, c)
    return worst


def cp_dominance_report(
    calc: DiffCalculus, flips, times=(0.25, 1.0), tol: float = 1e-9
) -> CpDominanceReport:
    """Sweep times and both module actions; passed iff no block dips
    below -tol."""
    flips = _check_flips(calc, flips)
    best = (np.inf, 0.0, -1, "left")
    for t in times:
        for side in ("left", "right"):
            lo, row = cp_dominance_check(calc, flips, float(t), side)
            if lo < best[0]:
                best = (lo, float(t), row, side)
    return CpDominanceReport(
        flips=flips,
        times=tuple(float(t) for t in times),
        min_eig=best[0],
        worst_time=best[1],
        worst_row=best[2],
        worst_side=best[3],
        passed=best[0] >= -tol,
    )


def _check_flip(calc: DiffCalculus, i: int):
    if not 0 <= i < calc.count:
        raise InputError(f"flip index {i} out of range for {calc.count} derivations")


def _check_flips(calc: DiffCalculus, flips) -> tuple:
    out = tuple(int(i) for i in flips)
    if not out:
        raise InputError("need at least one flip index")
    for i in out:
        _check_flip(calc, i)
    return out
