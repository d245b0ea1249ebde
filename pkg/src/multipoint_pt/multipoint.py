"""Multipoint perturbation theory.

Given the level-``k`` spectral data of ``H0 + G_j`` for several ``G_j`` and
real weights ``alpha_j`` with a nonzero sum ``s``, the resolvent of
``H0 + G`` is written exactly as

    (z - H(G))^{-1} = L_z (1 + H_z - (s - 1) A_z - g L_z)^{-1},

    L_z = s^{-1} sum_j alpha_j R_j,      A_z = s^{-1} sum_j alpha_j G_j R_j,
    H_z = s^{-1} sum_{i<j} alpha_i alpha_j G_ij R_j G_ij R_i,

with ``R_j = (z - H(G_j))^{-1}``, ``G_ij = G_i - G_j`` and
``g = G - sum_j alpha_j G_j``. Expanding the inverse in a Neumann series and
integrating term by term around the level-``k`` eigenvalue gives the
approximants ``D_0, D_1, D_2`` of the projector ``F(G)``. Every contour
integral is evaluated in closed form from the projectors ``P_j`` and the
cross pseudo-inverses ``K_ij``.

Indices are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import (
    DoesNotCommute,
    GapViolation,
    IndexOutOfRange,
    NearSingularCorrection,
    NotUnitary,
    SumAlphaZero,
)
from .operators import (
    GapWindow,
    NormContext,
    SpectralData,
    as_hermitian,
    cross_pseudo_inverse,
    decompose,
    norm_a,
    shared_window,
)

SUM_ALPHA_TOL = 1e-12
COND_LIMIT = 1e12
UNITARY_TOL = 1e-10

# (a, b, c): a counts H_z factors (twice, as in delta_{alpha,G}^a), b counts
# g L_z factors and c counts (s - 1) A_z factors
TERM_INDICES = ((0, 0, 0), (0, 1, 0), (0, 0, 1), (2, 0, 0), (0, 2, 0), (0, 0, 2), (0, 1, 1))
LEVEL_TERMS = {
    0: ((0, 0, 0),),
    1: ((0, 1, 0), (0, 0, 1)),
    2: ((2, 0, 0), (0, 2, 0), (0, 0, 2), (0, 1, 1)),
}


@dataclass(frozen=True)
class SmallnessParameters:
    delta_alpha_g: float
    delta_alpha: float
    delta_g: float


@dataclass(frozen=True)
class MultipointSetup:
    """Offline data for one set of reference points and one target ``G``."""

    h0: np.ndarray = field(repr=False)
    gs: Tuple[np.ndarray, ...] = field(repr=False)
    specs: Tuple[SpectralData, ...] = field(repr=False)
    alpha: np.ndarray
    target: np.ndarray = field(repr=False)
    g: np.ndarray = field(repr=False)
    s_alpha: float
    kij: Tuple[Tuple[np.ndarray, ...], ...] = field(repr=False)
    ctx: NormContext = field(repr=False)
    window: GapWindow

    @property
    def n(self) -> int:
        return len(self.gs)

    @property
    def level(self) -> int:
        return self.specs[0].level

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([s.eigenvalue for s in self.specs])

    def projector(self, j: int) -> np.ndarray:
        return self.specs[j].projector

    def resolvents(self, z: complex) -> List[np.ndarray]:
        return [s.resolvent(z) for s in self.specs]


def _kij_table(specs: Sequence[SpectralData]) -> Tuple[Tuple[np.ndarray, ...], ...]:
    # row i: shift by lambda_k(G_i); column j: eigenbasis of H(G_j)
    table = []
    for i, si in enumerate(specs):
        row = []
        for j, sj in enumerate(specs):
            row.append(sj.pseudo_inverse if i == j else cross_pseudo_inverse(sj, si.eigenvalue))
        table.append(tuple(row))
    return tuple(table)


def build_setup(
    h0,
    gs: Sequence,
    alpha: Sequence[float],
    target,
    k: int = 1,
    ctx: Optional[NormContext] = None,
    window: Optional[GapWindow] = None,
    specs: Optional[Sequence[SpectralData]] = None,
) -> MultipointSetup:
    """Diagonalize every ``H0 + G_j`` and tabulate all cross pseudo-inverses.

    ``specs`` may carry precomputed decompositions of ``H0 + G_j``. When
    ``window`` is omitted the midpoint window shared by all ``H(G_j)`` is used.
    """
    h0 = as_hermitian(h0, "H0")
    gs = tuple(as_hermitian(g, f"G_{j}") for j, g in enumerate(gs))
    target = as_hermitian(target, "G")
    alpha = np.asarray(alpha, dtype=float).copy()
    if alpha.shape != (len(gs),):
        raise ValueError(f"need {len(gs)} coefficients, got shape {alpha.shape}")
    s_alpha = float(alpha.sum())
    if abs(s_alpha) <= SUM_ALPHA_TOL:
        raise SumAlphaZero("the coefficients must not sum to zero")
    if specs is None:
        specs = tuple(decompose(h0 + g, k, source_index=j) for j, g in enumerate(gs))
    else:
        specs = tuple(specs)
    if window is None:
        window = shared_window(specs)
    for j, s in enumerate(specs):
        if not window.isolates(s.eigenvalues):
            raise GapViolation(f"window does not isolate level {k} of H(G_{j})")
    ctx = ctx or NormContext.from_h0(h0)
    g = target - sum(a * gj for a, gj in zip(alpha, gs))
    alpha.setflags(write=False)
    return MultipointSetup(h0, gs, specs, alpha, target, g, s_alpha, _kij_table(specs), ctx, window)


def smallness(setup: MultipointSetup) -> SmallnessParameters:
    a, gs, ctx = setup.alpha, setup.gs, setup.ctx
    dag = 0.0
    for i in range(setup.n):
        for j in range(i + 1, setup.n):
            dag = max(dag, np.sqrt(abs(a[i] * a[j])) * norm_a(gs[i] - gs[j], ctx))
    return SmallnessParameters(dag, abs(1.0 - setup.s_alpha), norm_a(setup.g, ctx))


def operators_at_z(setup: MultipointSetup, z: complex) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The operators ``(H_z, A_z, L_z)`` of the resolvent identity."""
    rs = setup.resolvents(z)
    a, gs, s = setup.alpha, setup.gs, setup.s_alpha
    dim = setup.h0.shape[0]
    hz = np.zeros((dim, dim), dtype=complex)
    for i in range(setup.n):
        for j in range(i + 1, setup.n):
            gij = gs[i] - gs[j]
            hz += a[i] * a[j] * (gij @ rs[j] @ gij @ rs[i])
    az = sum(aj * gj @ rj for aj, gj, rj in zip(a, gs, rs)) / s
    lz = sum(aj * rj for aj, rj in zip(a, rs)) / s
    return hz / s, az, lz


def multipoint_resolvent(setup: MultipointSetup, z: complex) -> np.ndarray:
    """``(z - H(G))^{-1}`` through the multipoint identity (exact, not asymptotic)."""
    hz, az, lz = operators_at_z(setup, z)
    m = np.eye(hz.shape[0]) + hz - (setup.s_alpha - 1.0) * az - setup.g @ lz
    if np.linalg.cond(m) >= COND_LIMIT:
        raise NearSingularCorrection(f"correction operator is near singular at z={z}")
    # L M^{-1} as a right solve
    return np.linalg.solve(m.T, lz.T).T


def _check_index(setup: MultipointSetup, *idx: int) -> None:
    for i in idx:
        if not 0 <= i < setup.n:
            raise IndexOutOfRange(f"index {i} outside 0..{setup.n - 1}")


def integral_i2(setup: MultipointSetup, a: int, b: int, A: np.ndarray) -> np.ndarray:
    """``(1/2 pi i) \\oint R_a A R_b dz = P_a A K_ab + K_ba A P_b``."""
    _check_index(setup, a, b)
    K, P = setup.kij, setup.projector
    return P(a) @ A @ K[a][b] + K[b][a] @ A @ P(b)


def integral_i3(setup: MultipointSetup, a: int, b: int, c: int, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``(1/2 pi i) \\oint R_a A R_b B R_c dz`` in closed form (six terms)."""
    _check_index(setup, a, b, c)
    K = setup.kij
    Pa, Pb, Pc = setup.projector(a), setup.projector(b), setup.projector(c)
    return (
        Pa @ A @ K[a][b] @ B @ K[a][c]
        + K[b][a] @ A @ Pb @ B @ K[b][c]
        + K[c][a] @ A @ K[c][b] @ B @ Pc
        - Pa @ A @ Pb @ B @ K[a][c] @ K[b][c]
        - Pa @ A @ K[a][b] @ K[c][b] @ B @ Pc
        - K[b][a] @ K[c][a] @ A @ Pb @ B @ Pc
    )


def d010_naive(setup: MultipointSetup) -> np.ndarray:
    a, s, n = setup.alpha, setup.s_alpha, setup.n
    total = sum(a[i] * a[j] * integral_i2(setup, i, j, setup.g) for i in range(n) for j in range(n))
    return total / s**2


def d010_symmetric(setup: MultipointSetup) -> np.ndarray:
    """Same as :func:`d010_naive`, pairing ``I_ji(g) = I_ij(g)^*``."""
    a, s, n, g = setup.alpha, setup.s_alpha, setup.n, setup.g
    total = sum(a[i] ** 2 * integral_i2(setup, i, i, g) for i in range(n))
    for i in range(n):
        for j in range(i + 1, n):
            t = integral_i2(setup, i, j, g)
            total = total + a[i] * a[j] * (t + t.conj().T)
    return total / s**2


def d020_naive(setup: MultipointSetup) -> np.ndarray:
    a, s, n, g = setup.alpha, setup.s_alpha, setup.n, setup.g
    total = 0
    for i in range(n):
        for j in range(n):
            for k in range(n):
                total = total + a[i] * a[j] * a[k] * integral_i3(setup, i, j, k, g, g)
    return total / s**3


def d020_symmetric(setup: MultipointSetup) -> np.ndarray:
    """Same as :func:`d020_naive`, pairing ``I_kji(g, g) = I_ijk(g, g)^*``."""
    a, s, n, g = setup.alpha, setup.s_alpha, setup.n, setup.g
    total = 0
    for j in range(n):
        for i in range(n):
            total = total + a[i] ** 2 * a[j] * integral_i3(setup, i, j, i, g, g)
            for k in range(i + 1, n):
                t = integral_i3(setup, i, j, k, g, g)
                total = total + a[i] * a[j] * a[k] * (t + t.conj().T)
    return total / s**3


@dataclass(frozen=True)
class MultipointExpansion:
    term_table: Dict[Tuple[int, int, int], np.ndarray]
    d_levels: List[np.ndarray]

    def approximant(self, order: int) -> np.ndarray:
        return self.d_levels[order]


def expansion_terms(setup: MultipointSetup, check_symmetry: bool = False) -> MultipointExpansion:
    """All terms up to total order two and the approximants ``D_0, D_1, D_2``.

    With ``check_symmetry`` the symmetric-pair sums used for the ``g`` terms
    are compared against the plain double and triple sums.
    """
    a, s, n, g, gs = setup.alpha, setup.s_alpha, setup.n, setup.g, setup.gs
    dim = setup.h0.shape[0]
    zero = np.zeros((dim, dim), dtype=complex)
    shift = s - 1.0
    has_g = bool(np.any(g != 0))
    r = range(n)
    t: Dict[Tuple[int, int, int], np.ndarray] = {}

    t[(0, 0, 0)] = sum(a[j] * setup.projector(j) for j in r) / s

    t[(0, 1, 0)] = d010_symmetric(setup) if has_g else zero
    if shift != 0.0:
        t[(0, 0, 1)] = shift / s**2 * sum(a[i] * a[j] * integral_i2(setup, i, j, gs[j]) for i in r for j in r)
    else:
        t[(0, 0, 1)] = zero

    d200 = zero
    for p in r:
        for q in range(p + 1, n):
            gpq = gs[p] - gs[q]
            for j in r:
                d200 = d200 + a[j] * a[p] * a[q] * integral_i3(setup, j, q, p, gpq, gpq)
    t[(2, 0, 0)] = -d200 / s**2

    t[(0, 2, 0)] = d020_symmetric(setup) if has_g else zero
    if shift != 0.0:
        acc = zero
        cross = zero
        for i in r:
            for j in r:
                for k in r:
                    w = a[i] * a[j] * a[k]
                    acc = acc + w * integral_i3(setup, i, j, k, gs[j], gs[k])
                    if has_g:
                        cross = cross + w * (integral_i3(setup, i, j, k, gs[j], g) + integral_i3(setup, i, j, k, g, gs[k]))
        t[(0, 0, 2)] = shift**2 / s**3 * acc
        t[(0, 1, 1)] = shift / s**3 * cross
    else:
        t[(0, 0, 2)] = zero
        t[(0, 1, 1)] = zero

    if check_symmetry and has_g:
        for fast, slow in ((t[(0, 1, 0)], d010_naive(setup)), (t[(0, 2, 0)], d020_naive(setup))):
            scale = max(1.0, float(np.max(np.abs(slow))))
            if np.max(np.abs(fast - slow)) > 1e-12 * scale:
                raise ArithmeticError("symmetric-pair sum disagrees with the plain sum")

    levels = []
    acc = zero
    for order in (0, 1, 2):
        for idx in LEVEL_TERMS[order]:
            acc = acc + t[idx]
        levels.append(acc)
    return MultipointExpansion(t, levels)


def conjugate_setup(setup: MultipointSetup, us: Sequence[np.ndarray]) -> MultipointSetup:
    """Move each reference point by a symmetry ``U_j`` of ``H0``: ``G_j -> U_j G_j U_j^*``.

    Spectral data and cross pseudo-inverses are conjugated, not recomputed.
    """
    if len(us) != setup.n:
        raise ValueError(f"need {setup.n} unitaries, got {len(us)}")
    us = [np.asarray(u, dtype=complex) for u in us]
    eye = np.eye(setup.h0.shape[0])
    for j, u in enumerate(us):
        if np.linalg.norm(u.conj().T @ u - eye, 2) >= UNITARY_TOL:
            raise NotUnitary(f"U_{j} is not unitary")
        if np.linalg.norm(setup.h0 @ u - u @ setup.h0, 2) >= UNITARY_TOL * max(1.0, np.linalg.norm(setup.h0, 2)):
            raise DoesNotCommute(f"U_{j} does not commute with H0")
    gs = tuple(u @ g @ u.conj().T for u, g in zip(us, setup.gs))
    specs = tuple(s.conjugated(u) for u, s in zip(us, setup.specs))
    kij = tuple(tuple(us[j] @ setup.kij[i][j] @ us[j].conj().T for j in range(setup.n)) for i in range(setup.n))
    g_u = setup.target - sum(a * gj for a, gj in zip(setup.alpha, gs))
    return replace(setup, gs=gs, specs=specs, kij=kij, g=g_u)
