"""Choice of the coefficients ``alpha`` for a target ``G`` by weighted least squares.

The misfit of ``sum_j alpha_j G_j`` is measured in the Frobenius norm after
weighting with ``W = (H0 + 1)^{-1/2}`` on both sides. An optional penalty
``xi * (1 - sum_j alpha_j)^2`` pulls the combination toward the affine hull;
``xi = inf`` enforces ``sum_j alpha_j = 1`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import IllConditionedGram
from .operators import hermitian_power, weighted_relative_distance

GRAM_COND_LIMIT = 1e12


@dataclass(frozen=True)
class AlphaFitResult:
    alpha: np.ndarray
    residual_da: float
    xi: float

    @property
    def xi_mode(self) -> str:
        if self.xi == 0:
            return "zero"
        return "infinity" if math.isinf(self.xi) else "finite"


def _parse_xi(xi: Union[float, str]) -> float:
    if isinstance(xi, str):
        key = xi.strip().lower()
        if key in ("inf", "infinity", "+inf"):
            return math.inf
        if key == "zero":
            return 0.0
        return float(key)
    xi = float(xi)
    if xi < 0 or math.isnan(xi):
        raise ValueError("xi must be a non-negative number or infinity")
    return xi


def weighted_gram(gs: Sequence[np.ndarray], target: np.ndarray, weight: np.ndarray):
    """Gram matrix and right-hand side of the weighted Frobenius inner product."""
    wg = [weight @ g @ weight for g in gs]
    wt = weight @ target @ weight
    gram = np.array([[np.vdot(a, b).real for b in wg] for a in wg])
    rhs = np.array([np.vdot(a, wt).real for a in wg])
    return gram, rhs


def fit_alpha(gs: Sequence, target, xi: Union[float, str], h0) -> AlphaFitResult:
    """Minimize ``||W (G - sum alpha_j G_j) W||_F^2 + xi |1 - sum alpha_j|^2``.

    ``residual_da`` is the relative dual distance between ``G`` and the fitted
    combination at the optimum.
    """
    if len(gs) == 0:
        raise ValueError("need at least one G_j")
    xi = _parse_xi(xi)
    gs = [np.asarray(g, dtype=complex) for g in gs]
    target = np.asarray(target, dtype=complex)
    h0 = np.asarray(h0)
    weight = hermitian_power(h0 + np.eye(h0.shape[0]), -0.5)
    gram, rhs = weighted_gram(gs, target, weight)
    if np.linalg.cond(gram) >= GRAM_COND_LIMIT:
        raise IllConditionedGram("the weighted Gram matrix of the G_j is singular")
    n = len(gs)
    ones = np.ones(n)
    if math.isinf(xi):
        kkt = np.zeros((n + 1, n + 1))
        kkt[:n, :n] = gram
        kkt[:n, n] = ones
        kkt[n, :n] = ones
        sol = np.linalg.solve(kkt, np.append(rhs, 1.0))
        alpha = sol[:n]
    else:
        alpha = np.linalg.solve(gram + xi * np.outer(ones, ones), rhs + xi * ones)
    combo = sum(a * g for a, g in zip(alpha, gs))
    residual = weighted_relative_distance(target, combo, weight)
    return AlphaFitResult(alpha, residual, xi)


def objective(gs: Sequence, target, alpha: Sequence[float], h0) -> float:
    """Unnormalized weighted misfit ``||W (G - sum alpha_j G_j) W||_F^2``."""
    h0 = np.asarray(h0)
    weight = hermitian_power(h0 + np.eye(h0.shape[0]), -0.5)
    r = np.asarray(target) - sum(a * np.asarray(g) for a, g in zip(alpha, gs))
    return float(np.linalg.norm(weight @ r @ weight) ** 2)
