"""Identity and oracle checks behind ``mpt verify``.

Random instances are small dense Hermitian problems built from a seeded
generator; the Schrodinger instances come from the experiment configuration.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .contour import Contour, contour_integrate, distance_to_points, max_modulus
from .errors import GapViolation
from .multipoint import (
    MultipointSetup,
    build_setup,
    expansion_terms,
    integral_i2,
    integral_i3,
    multipoint_resolvent,
)
from .operators import (
    NormContext,
    bound_eta,
    cross_pseudo_inverse,
    decompose,
    kij_from_kj,
    resolvent,
    resolvent_bound_rhs,
)
from .standard import standard_terms


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float
    seconds: float
    detail: str = ""

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: worst {self.worst:.3g} (limit {self.tolerance:g}) in {self.seconds:.2f}s {self.detail}".rstrip()


def random_hermitian(rng: np.random.Generator, dim: int, scale: float = 1.0) -> np.ndarray:
    a = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return scale * (a + a.conj().T) / 2


def random_h0(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Nonnegative ``H0`` with well separated eigenvalues in a random basis."""
    w = np.cumsum(rng.uniform(0.5, 1.5, dim)) - 0.5
    q, _ = np.linalg.qr(rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim)))
    return (q * w) @ q.conj().T


def random_setup(
    rng: np.random.Generator,
    dim: int,
    n: int,
    k: int = 1,
    spread: float = 0.05,
    offset: float = 0.02,
    coincident: bool = False,
    alpha: Optional[np.ndarray] = None,
) -> MultipointSetup:
    """A setup with ``G_j = G_0 + spread E_j`` and target ``sum alpha_j G_j + offset E``.

    With ``coincident`` every ``G_j`` equals ``G_0``. The spread is halved until
    the shared window isolates level ``k`` of all Hamiltonians.
    """
    h0 = random_h0(rng, dim)
    g0 = random_hermitian(rng, dim, 0.3 / np.sqrt(dim))
    es = [random_hermitian(rng, dim, 1 / np.sqrt(dim)) for _ in range(n)]
    extra = random_hermitian(rng, dim, 1 / np.sqrt(dim))
    if alpha is None:
        alpha = rng.uniform(0.2, 1.0, n)
        alpha = alpha / alpha.sum() * rng.uniform(0.9, 1.1)
    for _ in range(30):
        gs = [g0.copy() for _ in range(n)] if coincident else [g0 + spread * e for e in es]
        target = sum(a * g for a, g in zip(alpha, gs)) + offset * extra
        try:
            setup = build_setup(h0, gs, alpha, target, k)
        except GapViolation:
            spread, offset = spread / 2, offset / 2
            continue
        if setup.window.isolates(np.linalg.eigvalsh(h0 + target)):
            return setup
        spread, offset = spread / 2, offset / 2
    raise GapViolation("could not build an isolated random instance")


def _timed(name: str, tol: float, fn: Callable[[], List[float]], time_limit: Optional[float] = None) -> CheckResult:
    start = time.perf_counter()
    errs = fn()
    secs = time.perf_counter() - start
    worst = max(errs) if errs else 0.0
    ok = worst < tol and (time_limit is None or secs < time_limit)
    detail = f"over {len(errs)} cases" + ("" if time_limit is None else f", time limit {time_limit:g}s")
    return CheckResult(name, bool(ok), float(worst), tol, secs, detail)


def _rel(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


def contour_of(setup: MultipointSetup) -> Contour:
    return Contour.from_window(setup.window)


def identity_errors(setups: List[MultipointSetup], points: int = 6) -> List[float]:
    """Relative error of the multipoint resolvent at nodes of each setup's contour."""
    errs = []
    for st in setups:
        z, _ = contour_of(st).nodes(points)
        h = st.h0 + st.target
        for zi in z:
            errs.append(_rel(multipoint_resolvent(st, zi), resolvent(h, zi)))
    return errs


def random_setups(seed: int, count: int, dims=(4, 16), ns=(1, 2, 3, 4), **kw) -> List[MultipointSetup]:
    rng = np.random.default_rng(seed)
    out = []
    for i in range(count):
        dim = int(rng.integers(dims[0], dims[1] + 1))
        n = ns[i % len(ns)]
        k = int(rng.integers(1, min(3, dim) + 1))
        out.append(random_setup(rng, dim, n, k, **kw))
    return out


def schrodinger_setups(M: int = 30, config=None) -> List[MultipointSetup]:
    """Affine-family setups at a few ``eps`` and the two-point heatmap setup."""
    from .bench import ExperimentConfig, SchrodingerModel

    config = config or ExperimentConfig.load()
    model = SchrodingerModel(config, M)
    V = model.V
    out = []
    alpha = np.array([-0.3, 0.4, 0.3, 0.6])
    for eps in (0.25, 0.03125):
        gs = [V[0]] + [V[0] + eps * v for v in V[1:]]
        out.append(build_setup(model.h0, gs, alpha, sum(a * g for a, g in zip(alpha, gs)), config.k))
    gs = [V[0], V[0] + V[1] / 5]
    out.append(build_setup(model.h0, gs, [0.5, 0.52], 0.5 * gs[0] + 0.5 * gs[1], config.k))
    out.append(build_setup(model.h0, gs, [0.4, 0.6], 0.3 * gs[0] + 0.7 * gs[1] + 0.05 * V[2], config.k))
    return out


def check_identity(seed: int = 0, count: int = 50) -> CheckResult:
    def run():
        setups = random_setups(seed, count, offset=0.05) + schrodinger_setups()
        return identity_errors(setups)

    return _timed("multipoint resolvent identity", 1e-10, run, 10.0)


def integral_oracle_errors(setups: List[MultipointSetup], rng: np.random.Generator) -> List[float]:
    errs = []
    for st in setups:
        c = contour_of(st)
        dim = st.h0.shape[0]
        A = random_hermitian(rng, dim) + 1j * random_hermitian(rng, dim)
        B = random_hermitian(rng, dim)
        n = st.n
        a, b, cc = rng.integers(0, n, 3)
        quad2 = contour_integrate(lambda z: st.specs[a].resolvent(z) @ A @ st.specs[b].resolvent(z), c)
        errs.append(float(np.max(np.abs(integral_i2(st, a, b, A) - quad2))))
        quad3 = contour_integrate(
            lambda z: st.specs[a].resolvent(z) @ A @ st.specs[b].resolvent(z) @ B @ st.specs[cc].resolvent(z), c
        )
        errs.append(float(np.max(np.abs(integral_i3(st, a, b, cc, A, B) - quad3))))
    return errs


def projector_oracle_errors(setups: List[MultipointSetup]) -> List[float]:
    errs = []
    for st in setups:
        c = contour_of(st)
        for spec in st.specs:
            quad = contour_integrate(spec.resolvent, c)
            errs.append(float(np.max(np.abs(quad - spec.projector))))
    return errs


def check_integrals(seed: int = 1, count: int = 30) -> CheckResult:
    def run():
        rng = np.random.default_rng(seed + 1000)
        plain = random_setups(seed, count - count // 3, dims=(4, 10), ns=(2, 3))
        same = random_setups(seed + 1, count // 3, dims=(4, 10), ns=(2, 3), coincident=True)
        setups = plain + same
        return integral_oracle_errors(setups, rng) + projector_oracle_errors(setups)

    return _timed("closed-form contour integrals vs quadrature", 1e-8, run, 30.0)


def reduction_errors(seed: int = 2, count: int = 10) -> List[float]:
    """``D_l`` against ``P_l`` for a single reference point with ``alpha = 1``."""
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        dim = int(rng.integers(4, 17))
        st = random_setup(rng, dim, 1, int(rng.integers(1, 3)), alpha=np.array([1.0]), offset=0.05)
        ex = expansion_terms(st)
        std = standard_terms(st.specs[0], st.target - st.gs[0], 2)
        errs += [float(np.max(np.abs(ex.approximant(l) - std.approximant(l)))) for l in range(3)]
    return errs


def check_reduction(seed: int = 2, count: int = 10) -> CheckResult:
    return _timed("single-point reduction to standard terms", 1e-12, lambda: reduction_errors(seed, count))


def kij_recurrence_errors(seed: int = 3, count: int = 30, ratio: float = 0.5) -> List[float]:
    """``K_j (1 + (lambda_i - lambda_j) K_j)^{-1}`` against the direct cross pseudo-inverse.

    The shift ``lambda_i`` is placed so that ``|lambda_i - lambda_j| ||K_j||`` is
    a random fraction of ``ratio``.
    """
    rng = np.random.default_rng(seed)
    errs = []
    for _ in range(count):
        dim = int(rng.integers(4, 17))
        h = random_h0(rng, dim) + random_hermitian(rng, dim, 0.3 / np.sqrt(dim))
        spec = decompose(h, int(rng.integers(1, min(3, dim) + 1)))
        kn = np.linalg.norm(spec.pseudo_inverse, 2)
        shift = rng.choice([-1, 1]) * rng.uniform(0.05, 1.0) * ratio / kn
        lam_i = spec.eigenvalue + shift
        direct = cross_pseudo_inverse(spec, lam_i)
        rec = kij_from_kj(spec.pseudo_inverse, spec.projector, lam_i, spec.eigenvalue)
        errs.append(_rel(rec, direct))
    return errs


def check_kij(seed: int = 3, count: int = 30) -> CheckResult:
    return _timed("K_ij from K_j", 1e-10, lambda: kij_recurrence_errors(seed, count))


def resolvent_bound_margins(setups: List[MultipointSetup], points: int = 64) -> List[float]:
    """``measured / bound`` on every contour, with ``H(G)`` the target of each setup."""
    out = []
    for st in setups:
        ctx = NormContext.from_h0(st.h0, 1.0, 1.0)
        h = st.h0 + st.target
        c = contour_of(st)
        z, _ = c.nodes(points)
        measured = max(np.linalg.norm(ctx.weight_plus @ resolvent(h, zi) @ ctx.weight_plus, 2) for zi in z)
        eta = bound_eta(st.h0, st.target)
        xi = distance_to_points(c, np.linalg.eigvalsh(h))
        min_spec = float(np.linalg.eigvalsh(st.h0)[0])
        out.append(measured / resolvent_bound_rhs(ctx.mu, eta, min_spec, max_modulus(c), xi))
    return out


def check_resolvent_bound() -> CheckResult:
    return _timed("resolvent bound", 1.0 + 1e-12, lambda: resolvent_bound_margins(schrodinger_setups()))


def check_complexity() -> CheckResult:
    import sympy

    from .bench import complexity_tables

    start = time.perf_counter()
    std, mp = complexity_tables()
    expected_std = ["m", "2*m + 2*p + 2*q", "12*m + 14*p + 14*q", "52*m + 74*p + 74*q"]
    expected_mp = [("0", "n*m"), ("0", "n*m"), ("n**3*(3*m + 12*p + 12*q)", "n*m*(1 + 6*n**2)")]
    bad = 0
    syms = {s: sympy.Symbol(s, integer=True, nonnegative=True) for s in "mnpq"}
    for cost, want in zip(std, expected_std):
        bad += sympy.simplify(cost.online - sympy.sympify(want, locals=syms)) != 0 or cost.offline != 0
    for cost, (off, on) in zip(mp, expected_mp):
        bad += sympy.simplify(cost.offline - sympy.sympify(off, locals=syms)) != 0
        bad += sympy.simplify(cost.online - sympy.sympify(on, locals=syms)) != 0
    return CheckResult("complexity tables", bad == 0, float(bad), 1.0, time.perf_counter() - start, "mismatched cells")


def run_all(seed: int = 0) -> List[CheckResult]:
    return [
        check_identity(seed),
        check_integrals(seed + 1),
        check_reduction(seed + 2),
        check_kij(seed + 3),
        check_resolvent_bound(),
        check_complexity(),
    ]
