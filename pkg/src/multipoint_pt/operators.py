"""Dense Hermitian operator algebra.

Eigendecompositions with the projector and pseudo-inverse of one level,
cross pseudo-inverses between two Hamiltonians, the weighted operator norms
used to measure density matrices and perturbations, resolvents, and the
spectral gap test over the convex hull of several perturbations.

Operators are plain ``numpy`` complex arrays. Functions that require a
Hermitian input validate it with :func:`as_hermitian`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    BothZero,
    DegenerateLevel,
    DimensionMismatch,
    GapViolation,
    NotHermitian,
    SeriesDiverges,
    SingularShift,
    SpectrumHit,
)

HERMITIAN_RTOL = 1e-12
DEGENERACY_RTOL = 1e-8


def as_hermitian(a, name: str = "operator") -> np.ndarray:
    """Return ``a`` as a read-only complex square array, checking it is Hermitian.

    The check is relative: ``|a - a^*| <= 1e-12 * max|a|`` entrywise.
    """
    arr = np.array(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty square matrix, got shape {arr.shape}")
    scale = np.max(np.abs(arr)) if arr.size else 0.0
    if np.max(np.abs(arr - arr.conj().T)) > HERMITIAN_RTOL * max(scale, np.finfo(float).tiny):
        raise NotHermitian(f"{name} is not Hermitian")
    arr.setflags(write=False)
    return arr


def _check_same_shape(*mats: np.ndarray) -> None:
    shapes = {np.shape(m) for m in mats}
    if len(shapes) != 1:
        raise DimensionMismatch(f"shape mismatch: {sorted(shapes)}")
    (shape,) = shapes
    if len(shape) != 2 or shape[0] != shape[1]:
        raise DimensionMismatch(f"expected square matrices, got {shape}")


def hermitian_power(h: np.ndarray, power: float) -> np.ndarray:
    """``h ** power`` for a Hermitian positive definite ``h``."""
    w, v = np.linalg.eigh(h)
    if np.min(w) <= 0:
        raise ValueError("hermitian_power needs a positive definite matrix")
    return (v * w**power) @ v.conj().T


def degeneracy_tol(eigenvalues: np.ndarray) -> float:
    diameter = float(eigenvalues[-1] - eigenvalues[0])
    if diameter == 0.0:
        diameter = max(1.0, abs(float(eigenvalues[0])))
    return DEGENERACY_RTOL * diameter


@dataclass(frozen=True)
class SpectralData:
    """Full eigendecomposition of one Hamiltonian plus the data of level ``k``.

    ``level`` is 1-based. ``projector`` is the rank-one projector onto the
    ``k``-th eigenvector and ``pseudo_inverse`` is the inverse of
    ``lambda_k - H`` on the orthogonal complement of that eigenvector.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    level: int
    projector: np.ndarray
    pseudo_inverse: np.ndarray
    source_index: Optional[int] = None

    @property
    def eigenvalue(self) -> float:
        return float(self.eigenvalues[self.level - 1])

    @property
    def eigenvector(self) -> np.ndarray:
        return self.eigenvectors[:, self.level - 1]

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def hamiltonian(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ self.eigenvectors.conj().T

    def resolvent(self, z: complex) -> np.ndarray:
        """``(z - H)^{-1}`` assembled from the stored eigenpairs."""
        d = z - self.eigenvalues
        if np.min(np.abs(d)) < 1e-12:
            raise SpectrumHit(f"z={z} is on the spectrum")
        return (self.eigenvectors / d) @ self.eigenvectors.conj().T

    def conjugated(self, u: np.ndarray) -> "SpectralData":
        """Spectral data of ``U H U^*``, without re-diagonalizing."""
        uh = u.conj().T
        return SpectralData(
            eigenvalues=self.eigenvalues,
            eigenvectors=u @ self.eigenvectors,
            level=self.level,
            projector=u @ self.projector @ uh,
            pseudo_inverse=u @ self.pseudo_inverse @ uh,
            source_index=self.source_index,
        )


def _shifted_inverse(spec: SpectralData, shift: float, tol: float) -> np.ndarray:
    mask = np.ones(spec.dim, dtype=bool)
    mask[spec.level - 1] = False
    denom = shift - spec.eigenvalues[mask]
    if denom.size and np.min(np.abs(denom)) <= tol:
        raise SingularShift(f"shift {shift} collides with an eigenvalue outside level {spec.level}")
    vecs = spec.eigenvectors[:, mask]
    return (vecs / denom) @ vecs.conj().T


def decompose(h, k: int, source_index: Optional[int] = None) -> SpectralData:
    """Diagonalize ``h`` and build the projector and pseudo-inverse of level ``k``.

    Raises :class:`DegenerateLevel` when the ``k``-th eigenvalue is closer than
    ``1e-8`` times the spectral diameter to one of its neighbours.
    """
    h = as_hermitian(h, "H")
    dim = h.shape[0]
    if not 1 <= k <= dim:
        raise ValueError(f"level k={k} out of range 1..{dim}")
    w, v = np.linalg.eigh(h)
    tol = degeneracy_tol(w)
    i = k - 1
    if (i > 0 and w[i] - w[i - 1] <= tol) or (i < dim - 1 and w[i + 1] - w[i] <= tol):
        raise DegenerateLevel(f"eigenvalue {k} is not simple (tol {tol:.3g})")
    u = v[:, i]
    projector = np.outer(u, u.conj())
    spec = SpectralData(w, v, k, projector, np.zeros_like(projector), source_index)
    k_inv = _shifted_inverse(spec, w[i], tol)
    return SpectralData(w, v, k, projector, k_inv, source_index)


def cross_pseudo_inverse(spec_j: SpectralData, lambda_i: float) -> np.ndarray:
    """Pseudo-inverse of ``lambda_i - H_j`` on the complement of level ``k`` of ``H_j``."""
    return _shifted_inverse(spec_j, float(lambda_i), degeneracy_tol(spec_j.eigenvalues))


def kij_from_kj(
    k_j: np.ndarray,
    f_j: np.ndarray,
    lambda_i: float,
    lambda_j: float,
    ctx: Optional["NormContext"] = None,
) -> np.ndarray:
    """Cross pseudo-inverse from ``K_j`` alone: ``K_j (1 + (lambda_i - lambda_j) K_j)^{-1}``.

    Requires ``|lambda_i - lambda_j| * ||W^{-1} K_j W|| < 1`` with ``W`` the
    energy weight of ``ctx`` (plain spectral norm when ``ctx`` is None).
    ``f_j`` only serves as a consistency check that ``K_j`` vanishes on it.
    """
    _check_same_shape(k_j, f_j)
    shift = float(lambda_i) - float(lambda_j)
    weighted = k_j if ctx is None else ctx.weight_minus @ k_j @ ctx.weight_plus
    if abs(shift) * np.linalg.norm(weighted, 2) >= 1.0:
        raise SeriesDiverges(f"|lambda_i - lambda_j| = {abs(shift):.3g} too large for the series")
    scale = max(np.linalg.norm(k_j, 2), 1.0)
    if np.linalg.norm(k_j @ f_j, 2) > 1e-8 * scale:
        raise ValueError("K_j does not vanish on the range of F_j")
    eye = np.eye(k_j.shape[0])
    # right-solve: X (1 + shift K) = K  <=>  (1 + shift K)^T X^T = K^T
    return np.linalg.solve((eye + shift * k_j).T, k_j.T).T


@dataclass(frozen=True)
class NormContext:
    """Weights ``(H0 + mu)^{+-kappa/2}`` defining the energy and dual norms."""

    mu: float
    kappa: float
    weight_plus: np.ndarray = field(repr=False)
    weight_minus: np.ndarray = field(repr=False)

    @classmethod
    def from_h0(cls, h0, mu: float = 1.0, kappa: float = 1.0) -> "NormContext":
        h0 = as_hermitian(h0, "H0")
        if not 0.0 <= kappa <= 1.0:
            raise ValueError("kappa must lie in [0, 1]")
        w, v = np.linalg.eigh(h0)
        if mu <= -w[0]:
            raise ValueError(f"mu={mu} must exceed -min spec(H0) = {-w[0]:.6g}")
        shifted = w + mu
        plus = (v * shifted ** (kappa / 2)) @ v.conj().T
        minus = (v * shifted ** (-kappa / 2)) @ v.conj().T
        plus.setflags(write=False)
        minus.setflags(write=False)
        return cls(float(mu), float(kappa), plus, minus)

    @property
    def dim(self) -> int:
        return self.weight_plus.shape[0]


def norm_e(a, ctx: NormContext) -> float:
    """Energy norm ``||W A W||`` with ``W = (H0 + mu)^{kappa/2}``."""
    a = np.asarray(a)
    _check_same_shape(a, ctx.weight_plus)
    return float(np.linalg.norm(ctx.weight_plus @ a @ ctx.weight_plus, 2))


def norm_a(g, ctx: NormContext) -> float:
    """Dual norm ``||W^{-1} G W^{-1}||``."""
    g = np.asarray(g)
    _check_same_shape(g, ctx.weight_minus)
    return float(np.linalg.norm(ctx.weight_minus @ g @ ctx.weight_minus, 2))


def relative_distance(a, b, kappa: float, h0) -> float:
    """Symmetric relative Frobenius distance with weight ``(H0 + 1)^{kappa/2}``.

    ``kappa = 1`` gives the energy distance, ``kappa = -1`` the dual one.
    """
    a, b = np.asarray(a), np.asarray(b)
    h0 = np.asarray(h0)
    _check_same_shape(a, b, h0)
    w = np.eye(h0.shape[0]) if kappa == 0 else hermitian_power(h0 + np.eye(h0.shape[0]), kappa / 2)
    return weighted_relative_distance(a, b, w)


def weighted_relative_distance(a: np.ndarray, b: np.ndarray, w: np.ndarray) -> float:
    num = np.linalg.norm(w @ (a - b) @ w)
    den = np.linalg.norm(w @ a @ w) + np.linalg.norm(w @ b @ w)
    if den == 0.0:
        raise BothZero("relative distance of two zero matrices")
    return float(2.0 * num / den)


def resolvent(h, z: complex) -> np.ndarray:
    """``(z - H)^{-1}`` by a dense linear solve."""
    h = np.asarray(h, dtype=complex)
    w = np.linalg.eigvalsh(h)
    if np.min(np.abs(z - w)) <= 1e-12:
        raise SpectrumHit(f"z={z} is within 1e-12 of the spectrum")
    eye = np.eye(h.shape[0])
    return scipy.linalg.solve(z * eye - h, eye)


def resolvent_bound_rhs(mu: float, eta: float, min_spec: float, max_abs_z: float, xi: float) -> float:
    """Upper bound on the energy norm of the resolvent along a contour.

    ``eta`` must satisfy ``||(H0+eta)^{-1/2} G (H0+eta)^{-1/2}|| <= 1/2`` and
    ``xi`` is the distance from the contour to the spectrum.
    """
    if mu < 1 or eta < 1:
        raise ValueError("mu and eta must be at least 1")
    if xi <= 0:
        raise ValueError("xi must be positive")
    a = abs(eta + max_abs_z)
    return 2.0 * (1.0 + abs(mu - eta) / (eta + min_spec)) * (1.0 + 2.0 * a * (1.0 + a / xi))


def bound_eta(h0, g) -> float:
    """A shift ``eta >= 1`` with ``||(H0+eta)^{-1/2} G (H0+eta)^{-1/2}|| <= 1/2``.

    Uses ``eta = max(4 c, 1)`` where ``c`` is the smallest constant with
    ``|G| <= H0 / 8 + c`` as forms, read off the matrices directly.
    """
    h0 = as_hermitian(h0, "H0")
    g = as_hermitian(g, "G")
    w, v = np.linalg.eigh(g)
    abs_g = (v * np.abs(w)) @ v.conj().T
    c = float(np.linalg.eigvalsh(abs_g - h0 / 8)[-1])
    return max(4.0 * c, 1.0)


@dataclass(frozen=True)
class GapWindow:
    lambda_min: float
    lambda_max: float
    level: int

    def __post_init__(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_min must be < lambda_max")

    def isolates(self, eigenvalues: np.ndarray) -> bool:
        """True iff the window contains exactly the ``level``-th eigenvalue."""
        inside = np.flatnonzero((eigenvalues >= self.lambda_min) & (eigenvalues <= self.lambda_max))
        return inside.size == 1 and inside[0] == self.level - 1


def shared_window(specs: Sequence[SpectralData]) -> GapWindow:
    """Midpoint window isolating level ``k`` of every given Hamiltonian.

    Crossings sit halfway between the extreme ``k``-th eigenvalues and the
    nearest neighbouring eigenvalues over all Hamiltonians. With no neighbour
    on one side the opposite half-gap is mirrored.
    """
    k = specs[0].level
    if any(s.level != k for s in specs):
        raise ValueError("all spectral data must share the same level")
    dim = specs[0].dim
    lam = np.array([s.eigenvalue for s in specs])
    lo_k, hi_k = lam.min(), lam.max()
    below = max(s.eigenvalues[k - 2] for s in specs) if k > 1 else None
    above = min(s.eigenvalues[k] for s in specs) if k < dim else None
    if below is not None and below >= lo_k:
        raise GapViolation("level k-1 of one Hamiltonian overlaps level k of another")
    if above is not None and above <= hi_k:
        raise GapViolation("level k+1 of one Hamiltonian overlaps level k of another")
    half_lo = None if below is None else (lo_k - below) / 2
    half_hi = None if above is None else (above - hi_k) / 2
    if half_lo is None and half_hi is None:
        half_lo = half_hi = 1.0
    half_lo = half_hi if half_lo is None else half_lo
    half_hi = half_lo if half_hi is None else half_hi
    return GapWindow(float(lo_k - half_lo), float(hi_k + half_hi), k)


def simplex_lattice(n: int, samples: int) -> np.ndarray:
    """Barycentric coordinates of a regular lattice on the ``n``-simplex.

    ``samples`` points per edge; vertices are always included.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if samples == 1 or n == 1:
        return np.eye(n)
    steps = samples - 1
    pts = [
        np.array(c + (steps - sum(c),), dtype=float) / steps
        for c in itertools.product(range(steps + 1), repeat=n - 1)
        if sum(c) <= steps
    ]
    return np.array(pts)


def gap_check(h0, gs: Sequence, k: int, window: GapWindow, samples: int) -> bool:
    """Sample the convex hull of ``gs`` and check the window isolates level ``k``."""
    if samples < 1:
        raise ValueError("samples must be >= 1")
    h0 = np.asarray(h0)
    gs = [np.asarray(g) for g in gs]
    if window.level != k:
        window = GapWindow(window.lambda_min, window.lambda_max, k)
    for theta in simplex_lattice(len(gs), samples):
        h = h0 + sum(t * g for t, g in zip(theta, gs))
        if not window.isolates(np.linalg.eigvalsh(h)):
            return False
    return True
