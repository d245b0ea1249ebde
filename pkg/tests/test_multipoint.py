import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multipoint_pt.checks import random_hermitian, random_setup
from multipoint_pt.contour import Contour, contour_integrate
from multipoint_pt.errors import DoesNotCommute, GapViolation, IndexOutOfRange, NotUnitary, SumAlphaZero
from multipoint_pt.multipoint import (
    LEVEL_TERMS,
    build_setup,
    conjugate_setup,
    d010_naive,
    d010_symmetric,
    d020_naive,
    d020_symmetric,
    expansion_terms,
    integral_i2,
    integral_i3,
    multipoint_resolvent,
    operators_at_z,
    smallness,
)
from multipoint_pt.operators import GapWindow, decompose, resolvent
from multipoint_pt.standard import ClosestRule, choose_closest, standard_terms


def _affine_family(model, eps, alpha=(-0.3, 0.4, 0.3, 0.6)):
    gs = [model.V[0]] + [model.V[0] + eps * v for v in model.V[1:]]
    return gs, sum(a * g for a, g in zip(alpha, gs))


# ---- setup and smallness


def test_single_point_setup(rng):
    h0 = np.diag([0.0, 1.0, 2.0])
    g1 = random_hermitian(rng, 3, 0.05)
    st_ = build_setup(h0, [g1], [1.0], g1)
    assert st_.s_alpha == 1.0
    assert np.max(np.abs(st_.g)) == 0
    np.testing.assert_array_equal(st_.kij[0][0], st_.specs[0].pseudo_inverse)


@pytest.mark.parametrize("alpha, s", [((-0.3, 0.4, 0.3, 0.6), 1.0), ((-0.4, 0.5, 0.4, 0.7), 1.2)])
def test_affine_family_sums(model, alpha, s):
    gs, target = _affine_family(model, 0.01, alpha)
    st_ = build_setup(model.h0, gs, alpha, target)
    assert st_.s_alpha == pytest.approx(s, abs=1e-14)
    sm = smallness(st_)
    assert sm.delta_alpha == pytest.approx(abs(1 - s), abs=1e-14)
    assert sm.delta_g < 1e-13


def test_smallness_equal_points(model):
    gs = [model.V[0]] * 3
    sm = smallness(build_setup(model.h0, gs, [0.2, 0.3, 0.5], model.V[0]))
    assert sm.delta_alpha_g == 0.0


def test_setup_errors(model):
    with pytest.raises(SumAlphaZero):
        build_setup(model.h0, [model.V[0], model.V[1]], [0.5, -0.5], model.V[0])
    with pytest.raises(ValueError):
        build_setup(model.h0, [model.V[0]], [0.5, 0.5], model.V[0])
    with pytest.raises(GapViolation):
        build_setup(model.h0, [model.V[0]], [1.0], model.V[0], window=GapWindow(-10.0, 10.0, 1))


def test_kij_table_relations(rng):
    st_ = random_setup(rng, 7, 3, 2)
    eye = np.eye(7)
    for i in range(3):
        for j in range(3):
            k = st_.kij[i][j]
            hj = st_.specs[j].hamiltonian()
            lam = st_.specs[i].eigenvalue
            assert np.max(np.abs((lam * eye - hj) @ k - (eye - st_.projector(j)))) < 1e-10


# ---- operators at z and the exact identity


def test_operators_single_point(rng):
    st_ = random_setup(rng, 5, 1, alpha=np.array([1.0]))
    z = 0.3 + 0.7j
    hz, az, lz = operators_at_z(st_, z)
    r = st_.specs[0].resolvent(z)
    assert np.max(np.abs(hz)) == 0
    np.testing.assert_allclose(az, st_.gs[0] @ r, atol=1e-14)
    np.testing.assert_allclose(lz, r, atol=1e-14)


def test_operators_equal_points(rng):
    h0 = np.diag(np.arange(4.0))
    g = random_hermitian(rng, 4, 0.05)
    st_ = build_setup(h0, [g, g, g], [0.2, 0.3, 0.5], g)
    assert np.max(np.abs(operators_at_z(st_, 0.1 + 1j)[0])) == 0


def test_operators_commuting_diagonal(rng):
    h0 = np.arange(5.0)
    gd = [rng.uniform(-0.1, 0.1, 5) for _ in range(3)]
    alpha = np.array([0.3, 0.5, 0.4])
    target = rng.uniform(-0.1, 0.1, 5)
    st_ = build_setup(np.diag(h0), [np.diag(g) for g in gd], alpha, np.diag(target))
    z = 0.2 + 0.5j
    hz, az, lz = operators_at_z(st_, z)
    r = [1 / (z - h0 - g) for g in gd]
    s = alpha.sum()
    want_h = sum(alpha[i] * alpha[j] * (gd[i] - gd[j]) ** 2 * r[i] * r[j] for i in range(3) for j in range(i + 1, 3)) / s
    want_a = sum(a * g * ri for a, g, ri in zip(alpha, gd, r)) / s
    want_l = sum(a * ri for a, ri in zip(alpha, r)) / s
    np.testing.assert_allclose(np.diag(hz), want_h, atol=1e-15)
    np.testing.assert_allclose(np.diag(az), want_a, atol=1e-15)
    np.testing.assert_allclose(np.diag(lz), want_l, atol=1e-15)
    assert np.max(np.abs(hz - np.diag(np.diag(hz)))) == 0


def test_resolvent_identity_two_by_two():
    h0 = np.diag([1.0, 2.0])
    st_ = build_setup(h0, [np.diag([0.1, 0.0]), np.diag([0.0, 0.1])], [0.5, 0.5], np.diag([0.05, 0.05]))
    want = np.diag([1 / (1j - 1.05), 1 / (1j - 2.05)])
    assert np.max(np.abs(multipoint_resolvent(st_, 1j) - want)) < 1e-12


def test_resolvent_identity_single_point(rng):
    st_ = random_setup(rng, 6, 1, alpha=np.array([1.0]), offset=0.0)
    z = st_.window.lambda_max + 0.3j
    np.testing.assert_allclose(multipoint_resolvent(st_, z), resolvent(st_.h0 + st_.gs[0], z), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_resolvent_identity_random(seed, n):
    rng = np.random.default_rng(seed)
    st_ = random_setup(rng, int(rng.integers(4, 10)), n, offset=0.05)
    z, _ = Contour.from_window(st_.window).nodes(3)
    h = st_.h0 + st_.target
    for zi in z:
        want = resolvent(h, zi)
        assert np.linalg.norm(multipoint_resolvent(st_, zi) - want) < 1e-10 * np.linalg.norm(want)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_derivation_identity(seed, n):
    rng = np.random.default_rng(seed)
    st_ = random_setup(rng, int(rng.integers(4, 10)), n, offset=0.05)
    z = complex(st_.window.lambda_min, 0.4)
    hz, az, lz = operators_at_z(st_, z)
    dim = st_.h0.shape[0]
    lhs = np.eye(dim) - (z * np.eye(dim) - st_.h0 - st_.target) @ lz
    rhs = st_.g @ lz - hz + (st_.s_alpha - 1) * az
    assert np.max(np.abs(lhs - rhs)) < 1e-10


def test_resolvent_identity_schrodinger(model):
    gs, target = _affine_family(model, 0.1)
    st_ = build_setup(model.h0, gs, [-0.3, 0.4, 0.3, 0.6], target + 0.01 * model.V[2])
    z, _ = Contour.from_window(st_.window).nodes(4)
    for zi in z:
        want = resolvent(model.h0 + st_.target, zi)
        assert np.linalg.norm(multipoint_resolvent(st_, zi) - want) < 1e-10 * np.linalg.norm(want)


# ---- closed-form integrals


def test_i2_two_by_two():
    st_ = build_setup(np.diag([0.0, 1.0]), [np.zeros((2, 2))], [1.0], np.zeros((2, 2)))
    a = np.array([[0.0, 1.0], [1.0, 0.0]])
    np.testing.assert_allclose(integral_i2(st_, 0, 0, a), [[0, -1], [-1, 0]], atol=1e-15)
    assert np.max(np.abs(integral_i2(st_, 0, 0, np.zeros((2, 2))))) == 0


def test_i3_zero(rng):
    st_ = random_setup(rng, 5, 2)
    z = np.zeros((5, 5))
    assert np.max(np.abs(integral_i3(st_, 0, 1, 0, z, z))) == 0


def test_i3_single_point_is_second_order_term(rng):
    st_ = random_setup(rng, 6, 1, alpha=np.array([1.0]))
    g = random_hermitian(rng, 6, 0.1)
    want = standard_terms(st_.specs[0], g, 2).terms[2]
    np.testing.assert_allclose(integral_i3(st_, 0, 0, 0, g, g), want, atol=1e-14)


def test_integral_index_errors(rng):
    st_ = random_setup(rng, 4, 2)
    with pytest.raises(IndexOutOfRange):
        integral_i2(st_, 0, 2, np.eye(4))
    with pytest.raises(IndexOutOfRange):
        integral_i3(st_, -1, 0, 0, np.eye(4), np.eye(4))


@pytest.mark.parametrize("coincident", [False, True])
def test_integrals_against_quadrature(rng, coincident):
    st_ = random_setup(rng, 6, 3, 2, coincident=coincident)
    c = Contour.from_window(st_.window)
    a, b = random_hermitian(rng, 6), random_hermitian(rng, 6)
    R = [s.resolvent for s in st_.specs]
    quad2 = contour_integrate(lambda z: R[0](z) @ a @ R[2](z), c)
    assert np.max(np.abs(integral_i2(st_, 0, 2, a) - quad2)) < 1e-8
    quad3 = contour_integrate(lambda z: R[2](z) @ a @ R[0](z) @ b @ R[1](z), c)
    assert np.max(np.abs(integral_i3(st_, 2, 0, 1, a, b) - quad3)) < 1e-8


# ---- expansion terms


def _term_integrand(st_, key):
    s, g = st_.s_alpha, st_.g

    def f(z):
        hz, az, lz = operators_at_z(st_, z)
        return {
            (0, 0, 0): lz,
            (0, 1, 0): lz @ g @ lz,
            (0, 0, 1): (s - 1) * lz @ az,
            (2, 0, 0): -lz @ hz,
            (0, 2, 0): lz @ g @ lz @ g @ lz,
            (0, 0, 2): (s - 1) ** 2 * lz @ az @ az,
            (0, 1, 1): (s - 1) * lz @ (az @ g @ lz + g @ lz @ az),
        }[key]

    return f


def test_terms_against_neumann_quadrature(rng):
    st_ = random_setup(rng, 6, 3, 2, alpha=np.array([0.5, 0.4, 0.3]), offset=0.03)
    ex = expansion_terms(st_, check_symmetry=True)
    c = Contour.from_window(st_.window)
    for key, term in ex.term_table.items():
        quad = contour_integrate(_term_integrand(st_, key), c, 1e-13)
        assert np.max(np.abs(quad - term)) < 1e-9, key


def test_levels_are_cumulative(rng):
    ex = expansion_terms(random_setup(rng, 5, 2, offset=0.02, alpha=np.array([0.6, 0.5])))
    t = ex.term_table
    d0 = t[(0, 0, 0)]
    d1 = d0 + sum(t[k] for k in LEVEL_TERMS[1])
    d2 = d1 + sum(t[k] for k in LEVEL_TERMS[2])
    for got, want in zip(ex.d_levels, (d0, d1, d2)):
        np.testing.assert_allclose(got, want, atol=1e-15)


def test_equal_points_give_exact_projector(model):
    gs = [model.V[0]] * 3
    st_ = build_setup(model.h0, gs, [0.2, 0.3, 0.5], model.V[0])
    exact = decompose(model.h0 + model.V[0], 1).projector
    for level in range(3):
        assert np.max(np.abs(expansion_terms(st_).approximant(level) - exact)) < 1e-12


def test_reduction_to_standard(rng):
    st_ = random_setup(rng, 7, 1, alpha=np.array([1.0]), offset=0.05)
    ex = expansion_terms(st_)
    std = standard_terms(st_.specs[0], st_.target - st_.gs[0], 2)
    for level in range(3):
        assert np.max(np.abs(ex.approximant(level) - std.approximant(level))) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_d000_hermitian_with_trace(seed, n):
    rng = np.random.default_rng(seed)
    st_ = random_setup(rng, int(rng.integers(3, 8)), n)
    d0 = expansion_terms(st_).term_table[(0, 0, 0)]
    assert np.max(np.abs(d0 - d0.conj().T)) < 1e-10
    assert abs(np.trace(d0) - st_.alpha.sum() / st_.s_alpha) < 1e-10


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 4))
def test_symmetric_sums_match_naive(seed, n):
    rng = np.random.default_rng(seed)
    st_ = random_setup(rng, int(rng.integers(3, 8)), n, offset=0.05)
    assert np.max(np.abs(d010_symmetric(st_) - d010_naive(st_))) < 1e-12
    assert np.max(np.abs(d020_symmetric(st_) - d020_naive(st_))) < 1e-12


def test_multipoint_beats_standard_zeroth_order(model):
    alpha = [-0.3, 0.4, 0.3, 0.6]
    gs, target = _affine_family(model, 1e-2, alpha)
    st_ = build_setup(model.h0, gs, alpha, target)
    exact = decompose(model.h0 + target, 1).projector
    specs = st_.specs
    j = choose_closest(gs, target, model.ctx, ClosestRule.FAIR, 0, specs, exact)
    from multipoint_pt.operators import norm_e

    d0 = norm_e(exact - expansion_terms(st_).approximant(0), model.ctx)
    p0 = norm_e(exact - specs[j].projector, model.ctx)
    assert d0 < p0


# ---- symmetries


def _translation(model, t):
    return np.diag(np.exp(1j * model.basis.frequencies * t))


def test_conjugate_identity_unchanged(rng):
    st_ = random_setup(rng, 5, 2)
    out = conjugate_setup(st_, [np.eye(5)] * 2)
    for a, b in zip(out.gs, st_.gs):
        np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(out.g, st_.g, atol=1e-15)


def test_conjugate_translation_projector(model):
    gs = [model.V[0], model.V[0] + 0.2 * model.V[1]]
    st_ = build_setup(model.h0, gs, [0.5, 0.5], 0.5 * gs[0] + 0.5 * gs[1])
    u = _translation(model, 0.1)
    out = conjugate_setup(st_, [u, np.eye(model.basis.dim)])
    direct = decompose(model.h0 + u @ gs[0] @ u.conj().T, 1).projector
    assert np.max(np.abs(out.projector(0) - direct)) < 1e-10


def test_conjugated_resolvent_exact(model):
    gs = [model.V[0], model.V[0] + 0.2 * model.V[1]]
    target = 0.5 * gs[0] + 0.5 * gs[1]
    st_ = build_setup(model.h0, gs, [0.5, 0.5], target)
    u = _translation(model, 0.05)
    out = conjugate_setup(st_, [np.eye(model.basis.dim), u])
    z = complex(out.window.lambda_max, 0.5)
    want = resolvent(model.h0 + target, z)
    assert np.linalg.norm(multipoint_resolvent(out, z) - want) < 1e-10 * np.linalg.norm(want)


def test_conjugate_errors(model):
    gs = [model.V[0]]
    st_ = build_setup(model.h0, gs, [1.0], gs[0])
    dim = model.basis.dim
    with pytest.raises(NotUnitary):
        conjugate_setup(st_, [2 * np.eye(dim)])
    perm = np.roll(np.eye(dim), 1, axis=0)
    with pytest.raises(DoesNotCommute):
        conjugate_setup(st_, [perm])
    with pytest.raises(ValueError):
        conjugate_setup(st_, [])
