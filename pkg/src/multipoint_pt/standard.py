"""Single-point density-matrix perturbation theory up to third order."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from .errors import DimensionMismatch, UnsupportedOrder
from .operators import NormContext, SpectralData, norm_e

MAX_ORDER = 3
TIE_RTOL = 1e-12


@dataclass(frozen=True)
class StandardExpansion:
    reference_index: Optional[int]
    terms: List[np.ndarray]
    partial_sums: List[np.ndarray]

    def approximant(self, order: int) -> np.ndarray:
        return self.partial_sums[order]


def _terms(p: np.ndarray, k: np.ndarray, g: np.ndarray, max_order: int) -> List[np.ndarray]:
    terms = [p.copy()]
    if max_order == 0:
        return terms
    pg, kg = p @ g, k @ g
    terms.append(pg @ k + kg @ p)
    if max_order == 1:
        return terms
    k2 = k @ k
    k2g = k2 @ g
    terms.append(
        (pg @ kg @ k + kg @ pg @ k + kg @ kg @ p)
        - (pg @ pg @ k2 + pg @ k2g @ p + k2g @ pg @ p)
    )
    if max_order == 2:
        return terms
    k3g = k2 @ kg
    terms.append(
        (pg @ pg @ pg @ k2 @ k + pg @ pg @ k3g @ p + pg @ k3g @ pg @ p + k3g @ pg @ pg @ p)
        + (pg @ kg @ kg @ k + kg @ pg @ kg @ k + kg @ kg @ pg @ k + kg @ kg @ kg @ p)
        - (pg @ pg @ k2g @ k + pg @ pg @ kg @ k2 + kg @ k2g @ pg @ p + k2g @ kg @ pg @ p)
        - (pg @ kg @ k2g @ p + pg @ k2g @ kg @ p + pg @ kg @ pg @ k2 + pg @ k2g @ pg @ k)
        - (kg @ pg @ k2g @ p + k2g @ pg @ kg @ p + kg @ pg @ pg @ k2 + k2g @ pg @ pg @ k)
    )
    return terms


def standard_terms_from(
    projector: np.ndarray,
    pseudo_inverse: np.ndarray,
    g: np.ndarray,
    max_order: int = MAX_ORDER,
    reference_index: Optional[int] = None,
) -> StandardExpansion:
    """Perturbation terms around a reference given only by its projector and pseudo-inverse."""
    if not 0 <= max_order <= MAX_ORDER:
        raise UnsupportedOrder(f"orders 0..{MAX_ORDER} are implemented, got {max_order}")
    g = np.asarray(g, dtype=complex)
    if g.shape != projector.shape or pseudo_inverse.shape != projector.shape:
        raise DimensionMismatch(f"g has shape {g.shape}, reference has {projector.shape}")
    terms = _terms(np.asarray(projector), np.asarray(pseudo_inverse), g, max_order)
    sums = list(np.cumsum(np.array(terms), axis=0))
    return StandardExpansion(reference_index, terms, sums)


def standard_terms(ref: SpectralData, g, max_order: int = MAX_ORDER) -> StandardExpansion:
    """Terms ``P_0..P_max_order`` of the expansion of ``F(G_ref + g)`` in powers of ``g``."""
    return standard_terms_from(ref.projector, ref.pseudo_inverse, g, max_order, ref.source_index)


class ClosestRule(str, Enum):
    BY_NORM = "by_norm"
    FAIR = "fair"


def choose_closest(
    gs: Sequence[np.ndarray],
    g_target: np.ndarray,
    ctx: NormContext,
    rule: ClosestRule = ClosestRule.BY_NORM,
    order: int = 0,
    specs: Optional[Sequence[SpectralData]] = None,
    exact: Optional[np.ndarray] = None,
) -> int:
    """Index (0-based) of the reference point used by standard perturbation theory.

    ``BY_NORM`` minimizes ``||G - G_i||_e``. ``FAIR`` picks the reference whose
    order-``order`` approximant is closest to the exact projector ``exact`` in
    energy norm; it needs ``specs`` and ``exact``. Ties (relative 1e-12) go to
    the smallest index.
    """
    if len(gs) == 0:
        raise ValueError("need at least one reference point")
    rule = ClosestRule(rule)
    if rule is ClosestRule.BY_NORM:
        scores = [norm_e(g_target - gi, ctx) for gi in gs]
    else:
        if specs is None or exact is None:
            raise ValueError("the fair rule needs spectral data and the exact projector")
        scores = [
            norm_e(exact - standard_terms(s, g_target - gi, order).approximant(order), ctx)
            for gi, s in zip(gs, specs)
        ]
    scores = np.asarray(scores)
    # scores equal up to rounding count as ties
    best = scores.min()
    return int(np.flatnonzero(scores <= best + TIE_RTOL * max(best, 1e-300))[0])
