"""Brute-force contour quadrature, used to cross-check the closed forms.

The contour is a rectangle crossing the real axis at ``lambda_min`` and
``lambda_max``. Each edge is integrated with the composite trapezoid rule;
the step is halved repeatedly and the trapezoid sums are Richardson
extrapolated (Romberg), since corners make the plain rule only second order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from .errors import DegenerateLevel, NoConvergence
from .operators import GapWindow, SpectralData, shared_window

MAX_POINTS_PER_EDGE = 2**14


@dataclass(frozen=True)
class Contour:
    lambda_min: float
    lambda_max: float
    imag_half_height: float
    points_per_edge: int = 8

    def __post_init__(self):
        if not self.lambda_min < self.lambda_max:
            raise ValueError("lambda_min must be < lambda_max")
        if self.imag_half_height <= 0:
            raise ValueError("imag_half_height must be positive")
        if self.points_per_edge < 1:
            raise ValueError("points_per_edge must be positive")

    @classmethod
    def from_window(cls, window: GapWindow, points_per_edge: int = 8) -> "Contour":
        height = max(1.0, window.lambda_max - window.lambda_min)
        return cls(window.lambda_min, window.lambda_max, height, points_per_edge)

    def corners(self) -> Tuple[complex, complex, complex, complex]:
        """Counterclockwise corners starting bottom-left."""
        h = self.imag_half_height
        a, b = self.lambda_min, self.lambda_max
        return (complex(a, -h), complex(b, -h), complex(b, h), complex(a, h))

    def nodes(self, points_per_edge: int | None = None) -> Tuple[np.ndarray, np.ndarray]:
        """Trapezoid nodes and weights (``dz`` included) for the whole contour."""
        n = points_per_edge or self.points_per_edge
        c = self.corners()
        zs, ws = [], []
        for start, end in zip(c, c[1:] + c[:1]):
            t = np.arange(n) / n
            zs.append(start + (end - start) * t)
            ws.append(np.full(n, (end - start) / n))
        # corners carry half the step of each adjacent edge
        z = np.concatenate(zs)
        w = np.concatenate(ws)
        for e in range(4):
            incoming = (c[e] - c[e - 1]) / n
            w[e * n] = 0.5 * (w[e * n] + incoming)
        return z, w


def default_contour(spec: SpectralData, neighbors: Tuple[float, float] | None = None) -> Contour:
    """Rectangle around ``lambda_k`` crossing the axis at the midpoints to its neighbours.

    ``neighbors`` overrides the neighbouring eigenvalues (use ``None`` entries
    for a missing side); for ``k = 1`` the upper half-gap is mirrored below.
    """
    if neighbors is None:
        window = shared_window([spec])
    else:
        lam = spec.eigenvalue
        lower, upper = neighbors
        if (lower is not None and lower >= lam) or (upper is not None and upper <= lam):
            raise DegenerateLevel("neighbours must bracket the eigenvalue")
        hl = None if lower is None else (lam - lower) / 2
        hu = None if upper is None else (upper - lam) / 2
        if hl is None and hu is None:
            hl = hu = 1.0
        hl = hu if hl is None else hl
        hu = hl if hu is None else hu
        window = GapWindow(lam - hl, lam + hu, spec.level)
    return Contour.from_window(window)


def distance_to_points(contour: Contour, points) -> float:
    """Euclidean distance from the rectangle's boundary to real ``points``."""
    a, b, h = contour.lambda_min, contour.lambda_max, contour.imag_half_height
    best = np.inf
    for x in np.asarray(points, dtype=float).ravel():
        if a < x < b:
            d = min(x - a, b - x, h)
        else:
            d = min(abs(x - a), abs(x - b))
        best = min(best, d)
    return float(best)


def max_modulus(contour: Contour) -> float:
    return max(abs(c) for c in contour.corners())


def _trapezoid(f: Callable[[complex], np.ndarray], contour: Contour, n: int) -> np.ndarray:
    z, w = contour.nodes(n)
    total = None
    for zi, wi in zip(z, w):
        term = wi * np.asarray(f(zi))
        total = term if total is None else total + term
    return total / (2j * np.pi)


def _midpoint_sum(f: Callable[[complex], np.ndarray], contour: Contour, n: int) -> np.ndarray:
    """Contribution of the nodes added when refining ``n`` points per edge to ``2 n``."""
    c = contour.corners()
    total = None
    for start, end in zip(c, c[1:] + c[:1]):
        step = (end - start) / (2 * n)
        for i in range(n):
            term = step * np.asarray(f(start + (2 * i + 1) * step))
            total = term if total is None else total + term
    return total / (2j * np.pi)


def contour_integrate(
    f: Callable[[complex], np.ndarray],
    contour: Contour,
    tol_goal: float = 1e-11,
) -> np.ndarray:
    """``(1 / 2 pi i) \\oint f(z) dz`` along ``contour``, counterclockwise.

    Doubles the points per edge and Romberg-extrapolates until two successive
    extrapolated values differ by less than ``tol_goal`` (relative to the
    result's magnitude when that exceeds one). Each doubling reuses the
    previous trapezoid sum, so only the new midpoints are evaluated.
    """
    n = max(contour.points_per_edge, 8)
    table = [[_trapezoid(f, contour, n)]]
    while True:
        if 2 * n > MAX_POINTS_PER_EDGE:
            raise NoConvergence(f"contour quadrature did not reach {tol_goal:g}")
        row = [0.5 * table[-1][0] + _midpoint_sum(f, contour, n)]
        n *= 2
        for j, prev in enumerate(table[-1], start=1):
            factor = 4.0**j
            row.append(row[-1] + (row[-1] - prev) / (factor - 1.0))
        table.append(row)
        best, last = row[-1], table[-2][-1]
        scale = max(1.0, float(np.max(np.abs(best))))
        if np.max(np.abs(best - last)) < tol_goal * scale:
            return best
