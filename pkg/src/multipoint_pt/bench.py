"""Numerical experiments on the 1D periodic Schrodinger model.

Every recorded error is the relative energy distance (weight ``(H0 + 1)^{1/2}``)
between the exact projector, obtained by diagonalization, and an approximant.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy

from .alpha_fit import fit_alpha
from .errors import GapViolation, NoisyData, SumAlphaZero, TooFewPoints
from .multipoint import SUM_ALPHA_TOL, build_setup, expansion_terms, smallness
from .operators import (
    NormContext,
    decompose,
    gap_check,
    hermitian_power,
    weighted_relative_distance,
)
from .schrodinger import (
    PlanewaveBasis,
    PotentialSpec,
    laplacian_matrix,
    load_config,
    default_potentials,
    potential_matrix,
)
from .standard import ClosestRule, choose_closest, standard_terms, standard_terms_from

CSV_HEADER = ("sweep", "method", "order", "error", "delta_ag", "delta_a", "delta_g", "chosen_j")
KINDS = ("affine", "alpha", "g", "mconv")
HULL_SAMPLES = 4


@dataclass(frozen=True)
class ExperimentRecord:
    """One error measurement.

    ``sweep`` is a float (``eps`` or ``M``) or a tuple ``(alpha_1, alpha_2)``.
    ``extra`` holds ``delta_ag``, ``delta_a``, ``delta_g`` and ``chosen_j``
    (0-based) when they apply.
    """

    sweep: Union[float, Tuple[float, ...]]
    method: str
    order: int
    error: float
    extra: Dict[str, float] = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        return "!" in self.method


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 30
    k: int = 1
    mu: float = 1.0
    kappa: float = 1.0
    closest_rule: str = "fair"
    noise_floor: float = 1e-13
    preasymptotic_cutoff: float = 0.07
    eps_scale: float = 0.5
    eps_exponents: int = 20
    potentials: Tuple[PotentialSpec, ...] = ()
    sections: Dict[str, dict] = field(default_factory=dict)

    @classmethod
    def load(cls, path=None, **overrides) -> "ExperimentConfig":
        raw = load_config(path)
        exp = dict(raw.get("experiments", {}))
        sections = {key: exp.pop(key) for key in list(exp) if isinstance(exp[key], dict)}
        pots = tuple(PotentialSpec.from_dict(d) for d in raw["potentials"])
        cfg = cls(potentials=pots, sections=sections, **exp)
        return replace(cfg, **{k: v for k, v in overrides.items() if v is not None})

    def section(self, name: str) -> dict:
        return dict(self.sections.get(name, {}))

    def with_section(self, name: str, **values) -> "ExperimentConfig":
        sections = dict(self.sections)
        sections[name] = {**self.section(name), **values}
        return replace(self, sections=sections)

    @property
    def eps_grid(self) -> np.ndarray:
        return self.eps_scale * 2.0 ** -np.arange(self.eps_exponents + 1)

    def eps_grid_for(self, name: str) -> np.ndarray:
        """The eps grid, with the section's own ``eps_scale`` if it sets one."""
        scale = float(self.section(name).get("eps_scale", self.eps_scale))
        return scale * 2.0 ** -np.arange(self.eps_exponents + 1)


class SchrodingerModel:
    """Discretized ``H0 = -Delta`` and the reference potentials at one ``M``."""

    def __init__(self, config: ExperimentConfig, M: Optional[int] = None):
        self.config = config
        self.basis = PlanewaveBasis(config.M if M is None else M)
        self.h0 = laplacian_matrix(self.basis)
        pots = config.potentials or tuple(default_potentials())
        self.V = [potential_matrix(p, self.basis) for p in pots]
        self.ctx = NormContext.from_h0(self.h0, config.mu, config.kappa)
        self.energy_weight = hermitian_power(self.h0 + np.eye(self.basis.dim), 0.5)

    def error(self, exact: np.ndarray, approx: np.ndarray) -> float:
        return weighted_relative_distance(exact, approx, self.energy_weight)

    def exact_projector(self, g: np.ndarray) -> np.ndarray:
        return decompose(self.h0 + g, self.config.k).projector


def _deltas(setup) -> Dict[str, float]:
    sm = smallness(setup)
    return {"delta_ag": sm.delta_alpha_g, "delta_a": sm.delta_alpha, "delta_g": sm.delta_g}


def _multipoint_records(model, setup, exact, sweep, suffix="", levels=(0, 1, 2)) -> List[ExperimentRecord]:
    ex = expansion_terms(setup)
    deltas = _deltas(setup)
    return [
        ExperimentRecord(sweep, f"D{l}{suffix}", l, model.error(exact, ex.approximant(l)), dict(deltas))
        for l in levels
    ]


def _standard_records(model, gs, specs, target, exact, sweep, suffix="", orders=(0, 1, 2, 3)):
    rule = ClosestRule(model.config.closest_rule)
    out = []
    for order in orders:
        j = choose_closest(gs, target, model.ctx, rule, order, specs, exact)
        approx = standard_terms(specs[j], target - gs[j], order).approximant(order)
        out.append(ExperimentRecord(sweep, f"P{order}{suffix}", order, model.error(exact, approx), {"chosen_j": j}))
    return out


def _checked_setup(model, gs, alpha, target, specs, sweep, samples: int = HULL_SAMPLES):
    """Build the setup, aborting when the shared window fails anywhere on the hull of the ``G_j``."""
    sweep = format_sweep(tuple(map(float, sweep)) if isinstance(sweep, tuple) else float(sweep))
    try:
        setup = build_setup(model.h0, gs, alpha, target, model.config.k, model.ctx, specs=specs)
    except GapViolation as exc:
        raise GapViolation(f"sample {sweep}: {exc}") from exc
    if not gap_check(model.h0, gs, model.config.k, setup.window, samples):
        raise GapViolation(f"sample {sweep}: window fails on the convex hull of the G_j")
    return setup


def _decompose_all(model, gs):
    return [decompose(model.h0 + g, model.config.k, source_index=j) for j, g in enumerate(gs)]


def affine_epsilon(config: ExperimentConfig) -> List[ExperimentRecord]:
    """``G_1 = V_1``, ``G_j = V_1 + eps V_j`` and ``G = sum_j alpha_j G_j``."""
    model = SchrodingerModel(config)
    alpha = np.asarray(config.section("affine").get("alpha", (-0.3, 0.4, 0.3, 0.6)), dtype=float)
    records = []
    for eps in config.eps_grid_for("affine"):
        gs = [model.V[0]] + [model.V[0] + eps * v for v in model.V[1 : len(alpha)]]
        target = sum(a * g for a, g in zip(alpha, gs))
        specs = _decompose_all(model, gs)
        setup = _checked_setup(model, gs, alpha, target, specs, eps)
        exact = model.exact_projector(target)
        records += _multipoint_records(model, setup, exact, float(eps))
        records += _standard_records(model, gs, specs, target, exact, float(eps))
    return records


def alpha_limit(config: ExperimentConfig) -> List[ExperimentRecord]:
    """``G_1 = V_1``, ``G_2 = V_1 + V_2 / 5``, ``alpha = (1/2 + eps, 1/2 + eps)``."""
    model = SchrodingerModel(config)
    scale = config.section("alpha_limit").get("g2_scale", 0.2)
    gs = [model.V[0], model.V[0] + scale * model.V[1]]
    specs = _decompose_all(model, gs)
    records = []
    for eps in config.eps_grid_for("alpha_limit"):
        alpha = np.array([0.5 + eps, 0.5 + eps])
        target = alpha[0] * gs[0] + alpha[1] * gs[1]
        setup = _checked_setup(model, gs, alpha, target, specs, eps)
        exact = model.exact_projector(target)
        records += _multipoint_records(model, setup, exact, float(eps))
        records += _standard_records(model, gs, specs, target, exact, float(eps))
    return records


def _xi_label(xi) -> str:
    xi = float(xi)
    return "inf" if math.isinf(xi) else f"{xi:g}"


def g_limit(config: ExperimentConfig) -> List[ExperimentRecord]:
    """``G = beta_1 G_1 + beta_2 G_2 + eps G3`` with ``alpha`` fitted for each ``xi``.

    Methods are labelled ``D<l>|xi=<xi>|beta=<b1>/<b2>``.
    """
    model = SchrodingerModel(config)
    sec = config.section("glimit")
    gs = [model.V[0], model.V[0] + sec.get("g2_scale", 0.2) * model.V[1]]
    g3 = model.V[0] + sec.get("g3_scale", 0.2) * model.V[2]
    specs = _decompose_all(model, gs)
    records = []
    for b1, b2 in sec.get("betas", [(0.3, 1.2), (0.3, 0.7)]):
        tag = f"beta={b1:g}/{b2:g}"
        for eps in config.eps_grid_for("glimit"):
            target = b1 * gs[0] + b2 * gs[1] + eps * g3
            exact = model.exact_projector(target)
            for xi in sec.get("xi", (0, 1, "inf")):
                fit = fit_alpha(gs, target, xi, model.h0)
                setup = _checked_setup(model, gs, fit.alpha, target, specs, (b1, b2, float(eps)))
                records += _multipoint_records(model, setup, exact, float(eps), f"|xi={_xi_label(fit.xi)}|{tag}")
            records += _standard_records(model, gs, specs, target, exact, float(eps), f"|{tag}", (0, 1, 2))
    return records


def lowest_eigenvalue_problem(config: ExperimentConfig, M: int) -> float:
    """Level-``k`` eigenvalue of ``H(G)`` at cutoff ``M`` for the M-convergence test case."""
    sec = config.section("mconv")
    a1, a2 = sec.get("alpha", (0.5, 0.5))
    model = SchrodingerModel(config, M)
    g = a1 * model.V[0] + a2 * (model.V[0] + sec.get("g2_scale", 0.2) * model.V[1])
    return float(np.linalg.eigvalsh(model.h0 + g)[config.k - 1])


def m_convergence(config: ExperimentConfig) -> List[ExperimentRecord]:
    """Relative error ``E(M) = |lambda(M) - lambda(M_ref)| / |lambda(M_ref)|``."""
    sec = config.section("mconv")
    ref = lowest_eigenvalue_problem(config, int(sec.get("reference", 100)))
    records = []
    for M in sec.get("Ms", range(4, 62, 2)):
        lam = lowest_eigenvalue_problem(config, int(M))
        records.append(ExperimentRecord(float(M), "lambda", config.k, abs(lam - ref) / abs(ref)))
    return records


_RUNNERS = {"affine": affine_epsilon, "alpha": alpha_limit, "g": g_limit, "mconv": m_convergence}


def run_convergence(kind: str, config: Optional[ExperimentConfig] = None) -> List[ExperimentRecord]:
    if kind not in _RUNNERS:
        raise ValueError(f"kind must be one of {KINDS}, got {kind!r}")
    return sort_records(_RUNNERS[kind](config or ExperimentConfig.load()))


def heatmap_points(config: ExperimentConfig) -> List[Tuple[float, float]]:
    sec = config.section("heatmap")
    pts = set()
    for grid in sec.get("grids", ()):
        for a1 in np.linspace(*grid["a1"][:2], int(grid["a1"][2])):
            for a2 in np.linspace(*grid["a2"][:2], int(grid["a2"][2])):
                pts.add((round(float(a1), 12), round(float(a2), 12)))
    for line in sec.get("lines", ()):
        for a1 in np.linspace(*line["a1"][:2], int(line["a1"][2])):
            for off in line["offsets"]:
                pts.add((round(float(a1), 12), round(float(1.0 - a1 + off), 12)))
    return sorted(pts)


def _reference_from_density(h: np.ndarray, d: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Purify ``d`` to a rank-one projector and build its pseudo-inverse in ``h``.

    The eigenvalue is the Rayleigh quotient of the dominant eigenvector of ``d``;
    the pseudo-inverse is taken on the orthogonal complement of that vector.
    """
    w, v = np.linalg.eigh((d + d.conj().T) / 2)
    u = v[:, -1]
    p = np.outer(u, u.conj())
    lam = float(np.real(u.conj() @ h @ u))
    q = v[:, :-1]
    k = q @ np.linalg.solve(lam * np.eye(q.shape[1]) - q.conj().T @ h @ q, q.conj().T)
    return p, k


def chained_approximant(model, gs, specs, target) -> np.ndarray:
    """``D_2`` at the fitted combination (``xi = 0``), then second-order standard PT to ``G``."""
    fit = fit_alpha(gs, target, 0, model.h0)
    if abs(fit.alpha.sum()) <= SUM_ALPHA_TOL:
        raise SumAlphaZero("fitted coefficients sum to zero")
    g_fit = sum(a * g for a, g in zip(fit.alpha, gs))
    setup = build_setup(model.h0, gs, fit.alpha, g_fit, model.config.k, model.ctx, specs=specs)
    d2 = expansion_terms(setup).approximant(2)
    p, k = _reference_from_density(model.h0 + g_fit, d2)
    return standard_terms_from(p, k, target - g_fit, 2).approximant(2)


def run_heatmap(config: Optional[ExperimentConfig] = None, chained: Optional[bool] = None) -> List[ExperimentRecord]:
    """Errors of ``P_0..P_2`` and ``D_0..D_2`` over a grid of ``(alpha_1, alpha_2)``.

    Points where the shared window fails to isolate the level of ``H(G)`` keep
    their errors but the method carries a ``!gap`` suffix. At ``alpha_1 +
    alpha_2 = 0`` the multipoint rows are ``nan`` with a ``!sum0`` suffix.
    """
    config = config or ExperimentConfig.load()
    sec = config.section("heatmap")
    chained = sec.get("chained", False) if chained is None else chained
    model = SchrodingerModel(config)
    gs = [model.V[0], model.V[0] + sec.get("g2_scale", 0.2) * model.V[1]]
    specs = _decompose_all(model, gs)
    setup0 = build_setup(model.h0, gs, [0.5, 0.5], gs[0], config.k, model.ctx, specs=specs)
    window = setup0.window
    records = []
    for a1, a2 in heatmap_points(config):
        sweep = (a1, a2)
        target = a1 * gs[0] + a2 * gs[1]
        exact = model.exact_projector(target)
        flag = "" if window.isolates(np.linalg.eigvalsh(model.h0 + target)) else "!gap"
        records += _standard_records(model, gs, specs, target, exact, sweep, flag, (0, 1, 2))
        if abs(a1 + a2) <= SUM_ALPHA_TOL:
            records += [ExperimentRecord(sweep, f"D{l}!sum0", l, math.nan) for l in range(3)]
            if chained:
                records.append(ExperimentRecord(sweep, "C2!sum0", 2, math.nan))
            continue
        setup = build_setup(model.h0, gs, [a1, a2], target, config.k, model.ctx, window, specs)
        records += _multipoint_records(model, setup, exact, sweep, flag)
        if chained:
            approx = chained_approximant(model, gs, specs, target)
            records.append(ExperimentRecord(sweep, f"C2{flag}", 2, model.error(exact, approx)))
    return sort_records(records)


# ---------------------------------------------------------------- records I/O


def _sweep_key(sweep) -> Tuple[float, ...]:
    return tuple(sweep) if isinstance(sweep, tuple) else (float(sweep),)


def sort_records(records: Iterable[ExperimentRecord]) -> List[ExperimentRecord]:
    return sorted(records, key=lambda r: (_sweep_key(r.sweep), r.method, r.order))


def _fmt(x) -> str:
    return "" if x is None else f"{x:.17g}"


def format_sweep(sweep) -> str:
    if isinstance(sweep, tuple):
        return ";".join(_fmt(s) for s in sweep)
    return _fmt(sweep)


def write_csv(records: Sequence[ExperimentRecord], stream) -> None:
    """CSV with 17 significant digits; ``chosen_j`` is 1-based, blank if not applicable."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in records:
        e = r.extra
        chosen = e.get("chosen_j")
        writer.writerow(
            [
                format_sweep(r.sweep),
                r.method,
                r.order,
                _fmt(r.error),
                _fmt(e.get("delta_ag")),
                _fmt(e.get("delta_a")),
                _fmt(e.get("delta_g")),
                "" if chosen is None else int(chosen) + 1,
            ]
        )


def records_to_csv(records: Sequence[ExperimentRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()


def series(records: Iterable[ExperimentRecord], method: str) -> List[Tuple[float, float]]:
    return [(float(r.sweep), r.error) for r in records if r.method == method]


def fit_slope(
    points: Sequence[Tuple[float, float]],
    noise_floor: float = 0.0,
    cutoff: float = math.inf,
    min_points: int = 3,
    max_residual: float = 0.5,
) -> float:
    """Least-squares slope of ``log y`` against ``log x`` over the asymptotic window.

    Points with ``y <= noise_floor`` or ``x > cutoff`` are discarded first.
    ``NoisyData`` is raised when the root-mean-square residual in ``log y``
    exceeds ``max_residual``.
    """
    pts = np.array([(x, y) for x, y in points if y > noise_floor and x <= cutoff], dtype=float).reshape(-1, 2)
    if len(pts) < max(min_points, 2):
        raise TooFewPoints(f"{len(pts)} points in the window, need {max(min_points, 2)}")
    if np.any(pts <= 0):
        raise ValueError("slope fits need positive coordinates")
    lx, ly = np.log(pts[:, 0]), np.log(pts[:, 1])
    if np.ptp(lx) == 0:
        raise TooFewPoints("all abscissae coincide")
    slope, intercept = np.polyfit(lx, ly, 1)
    rms = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
    if rms > max_residual:
        raise NoisyData(f"log-log residual {rms:.3g} exceeds {max_residual}")
    return float(slope)


def fitted_slopes(records: Sequence[ExperimentRecord], config: ExperimentConfig, methods: Sequence[str]) -> Dict[str, float]:
    return {
        m: fit_slope(series(records, m), config.noise_floor, config.preasymptotic_cutoff) for m in methods
    }


# ---------------------------------------------------------------- cost model

m_sym, p_sym, q_sym, n_sym = sympy.symbols("m p q n", integer=True, nonnegative=True)


@dataclass(frozen=True)
class CostExpression:
    """Offline and online cost of one approximant, linear in ``(m, p, q)``."""

    order: int
    offline: sympy.Expr
    online: sympy.Expr

    def coefficients(self, which: str = "online") -> Tuple[sympy.Expr, sympy.Expr, sympy.Expr]:
        expr = sympy.expand(getattr(self, which))
        return tuple(expr.coeff(s) for s in (m_sym, p_sym, q_sym))

    def substitute(self, **values) -> "CostExpression":
        subs = {sympy.Symbol(k, integer=True, nonnegative=True): v for k, v in values.items()}
        return CostExpression(self.order, sympy.sympify(self.offline).subs(subs), sympy.sympify(self.online).subs(subs))


def complexity_tables(n=None) -> Tuple[List[CostExpression], List[CostExpression]]:
    """Cost of ``P_0..P_3`` and ``D_0..D_2`` with ``m, p, q`` the costs of applying ``K``, ``P``, ``G``.

    ``n`` (number of reference points) stays symbolic unless given.
    """
    m, p, q = m_sym, p_sym, q_sym
    nn = n_sym if n is None else sympy.Integer(n)
    if n is not None and n < 1:
        raise ValueError("n must be a positive integer")
    zero = sympy.Integer(0)
    standard = [
        CostExpression(0, zero, m),
        CostExpression(1, zero, 2 * m + 2 * p + 2 * q),
        CostExpression(2, zero, 12 * m + 14 * p + 14 * q),
        CostExpression(3, zero, 52 * m + 74 * p + 74 * q),
    ]
    multipoint = [
        CostExpression(0, zero, nn * m),
        CostExpression(1, zero, nn * m),
        CostExpression(2, nn**3 * (3 * m + 12 * p + 12 * q), nn * m * (1 + 6 * nn**2)),
    ]
    return standard, multipoint


def crossover_predicates(n=None) -> Dict[str, sympy.Expr]:
    """Conditions under which the online multipoint cost does not exceed the standard one."""
    nn = n_sym if n is None else sympy.Integer(n)
    m, p, q = m_sym, p_sym, q_sym
    return {
        "D1<=P1": sympy.Le(nn * m, 3 * m + 2 * p + 2 * q),
        "D2<=P3": sympy.Le(nn * m * (1 + 6 * nn**2), 52 * m + 74 * p + 74 * q),
    }


def evaluate_predicates(n: int, m: float, p: float, q: float) -> Dict[str, bool]:
    subs = {m_sym: m, p_sym: p, q_sym: q}
    return {name: bool(pred.subs(subs)) for name, pred in crossover_predicates(n).items()}
