"""Planewave discretization of ``-d^2/dx^2 + V`` on the periodic interval [-pi, pi)."""

from __future__ import annotations

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Union

import numpy as np
import scipy.linalg
import yaml

GRID_OVERSAMPLING = 4
GAUSSIAN_IMAGES = 6


@dataclass(frozen=True)
class PlanewaveBasis:
    """Planewaves ``exp(i m x)`` with ``|m| <= floor(M / 2)``, sorted by ``m``."""

    M: int
    frequencies: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.M < 0:
            raise ValueError("M must be non-negative")
        half = self.M // 2
        object.__setattr__(self, "frequencies", np.arange(-half, half + 1))

    @property
    def dim(self) -> int:
        return 2 * (self.M // 2) + 1


@dataclass(frozen=True)
class PotentialSpec:
    """A smooth real periodic potential.

    ``kind`` is ``"gaussian"`` (periodized Gaussian with ``center``, ``width``,
    ``amplitude``) or ``"trig"`` (``sum_m cos_coeffs[m] cos(m x) +
    sin_coeffs[m] sin(m x)``, index 0 being the constant term).
    """

    kind: str
    label: str = ""
    center: float = 0.0
    width: float = 1.0
    amplitude: float = 1.0
    cos_coeffs: tuple = ()
    sin_coeffs: tuple = ()

    def __post_init__(self):
        if self.kind not in ("gaussian", "trig"):
            raise ValueError(f"unknown potential kind {self.kind!r}")
        if self.kind == "gaussian" and self.width <= 0:
            raise ValueError("Gaussian width must be positive")

    @classmethod
    def gaussian(cls, center: float, width: float, amplitude: float, label: str = "") -> "PotentialSpec":
        return cls("gaussian", label, center=center, width=width, amplitude=amplitude)

    @classmethod
    def trig(cls, cos_coeffs: Sequence[float] = (), sin_coeffs: Sequence[float] = (), label: str = "") -> "PotentialSpec":
        return cls("trig", label, cos_coeffs=tuple(map(float, cos_coeffs)), sin_coeffs=tuple(map(float, sin_coeffs)))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "gaussian":
            shifts = 2 * np.pi * np.arange(-GAUSSIAN_IMAGES, GAUSSIAN_IMAGES + 1)
            d = x[..., None] - self.center - shifts
            return self.amplitude * np.exp(-(d**2) / (2 * self.width**2)).sum(axis=-1)
        v = np.zeros_like(x)
        for m, c in enumerate(self.cos_coeffs):
            v = v + c * np.cos(m * x)
        for m, s in enumerate(self.sin_coeffs):
            v = v + s * np.sin(m * x)
        return v

    def to_dict(self) -> dict:
        if self.kind == "gaussian":
            return dict(label=self.label, kind=self.kind, center=self.center, width=self.width, amplitude=self.amplitude)
        return dict(label=self.label, kind=self.kind, cos_coeffs=list(self.cos_coeffs), sin_coeffs=list(self.sin_coeffs))

    @classmethod
    def from_dict(cls, d: dict) -> "PotentialSpec":
        d = dict(d)
        kind = d.pop("kind")
        if kind == "trig":
            return cls.trig(d.get("cos_coeffs", ()), d.get("sin_coeffs", ()), d.get("label", ""))
        return cls.gaussian(float(d["center"]), float(d["width"]), float(d["amplitude"]), d.get("label", ""))


def laplacian_matrix(basis: PlanewaveBasis) -> np.ndarray:
    """``-Delta`` in the planewave basis: ``diag(m^2)``."""
    return np.diag(basis.frequencies.astype(float) ** 2).astype(complex)


def fourier_coefficients(spec: PotentialSpec, max_freq: int, oversampling: int = GRID_OVERSAMPLING) -> np.ndarray:
    """``(1 / 2 pi) \\int V(x) exp(-i p x) dx`` for ``p = -max_freq..max_freq``.

    Computed by a DFT of ``oversampling * (2 max_freq + 1)`` samples on [-pi, pi).
    """
    n = oversampling * (2 * max_freq + 1)
    x = -np.pi + 2 * np.pi * np.arange(n) / n
    coeffs = np.fft.fft(spec(x)) / n
    p = np.arange(-max_freq, max_freq + 1)
    # grid starts at -pi, the FFT assumes 0
    return coeffs[p % n] * np.exp(1j * np.pi * p)


def potential_matrix(spec: PotentialSpec, basis: PlanewaveBasis, oversampling: int = GRID_OVERSAMPLING) -> np.ndarray:
    """Multiplication by ``V``: the Toeplitz matrix ``V_mn = vhat(m - n)``."""
    dim = basis.dim
    vhat = fourier_coefficients(spec, dim - 1, oversampling)
    zero = dim - 1
    col = vhat[zero:]
    row = vhat[zero::-1]
    mat = scipy.linalg.toeplitz(col, row)
    # V is real, so the matrix is Hermitian up to rounding; symmetrize exactly
    return (mat + mat.conj().T) / 2


def _resolve_config(path: Optional[Union[str, Path]]):
    if path is None:
        return resources.files("multipoint_pt").joinpath("data/default.yaml").read_text()
    return Path(path).read_text()


def load_config(path: Optional[Union[str, Path]] = None) -> dict:
    """Parse the YAML configuration (the packaged default when ``path`` is None)."""
    return yaml.safe_load(_resolve_config(path)) or {}


def load_potentials(path: Optional[Union[str, Path]] = None) -> List[PotentialSpec]:
    return [PotentialSpec.from_dict(d) for d in load_config(path)["potentials"]]


def default_potentials(path: Optional[Union[str, Path]] = None) -> List[PotentialSpec]:
    """The four reference potentials: two periodized Gaussians, two trigonometric series."""
    pots = load_potentials(path)
    if len(pots) != 4:
        raise ValueError(f"expected four potentials, found {len(pots)}")
    return pots
