import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from aclbf.kernel_ops import build_kernel
from aclbf.model import FitContext, ModelParams, delta, delta_prime, discrete_energy, \
    energy_from_forces, fit_functions, force_fields, gradient_energy, heaviside, \
    nonlinear_term, well, well_prime, well_second

import oracles

P = ModelParams(mu=80.0, sigma=2.0, eps=0.5, eps1=0.5, h=0.01)


@pytest.mark.parametrize("bad", [dict(sigma=0), dict(eps=-1), dict(h=0), dict(dt=float("nan")),
                                 dict(mu=-1), dict(lambda2=-0.5)])
def test_params_validated(bad):
    with pytest.raises(ValueError):
        ModelParams(**bad)


def test_heaviside_values():
    assert heaviside(0.0, 0.3) == 0.5
    assert heaviside(1.0, 0.5) == pytest.approx(0.8524163823495667, abs=1e-15)
    assert heaviside(1e8, 0.5) == pytest.approx(1.0, abs=1e-8)
    assert heaviside(-1e8, 0.5) == pytest.approx(0.0, abs=1e-8)


def test_delta_values():
    assert delta(0.0, 0.5) == pytest.approx(1 / (math.pi * 0.5), rel=1e-15)
    assert delta(1.0, 0.5) == pytest.approx(2 / (5 * math.pi), rel=1e-15)
    assert delta(1.0, 0.5) == pytest.approx(0.127324, abs=1e-6)
    x = np.linspace(-3, 3, 13)
    assert np.array_equal(delta(x, 0.7), delta(-x, 0.7))


def test_complementary_heaviside_sums_to_one():
    x = np.random.default_rng(0).normal(0, 3, 1000)
    h = heaviside(x, 0.5)
    assert np.all(h + (1 - h) == 1.0)
    assert np.all((h > 0) & (h < 1))


def fd(fn, x, step=1e-5):
    return (fn(x + step) - fn(x - step)) / (2 * step)


def test_derivative_chain_by_finite_differences():
    x = np.linspace(-3, 3, 61)
    assert np.max(np.abs(fd(lambda v: heaviside(v, 0.5), x) - delta(x, 0.5))) < 1e-8
    assert np.max(np.abs(fd(lambda v: delta(v, 0.5), x) - delta_prime(x, 0.5))) < 1e-7
    assert np.max(np.abs(fd(well, x) - well_prime(x))) < 1e-8
    assert np.max(np.abs(fd(well_prime, x) - well_second(x))) < 1e-7


def test_well_values():
    assert well(np.array([1.0, -1.0, 3.0])) == pytest.approx(0.0, abs=1e-30)
    assert well(0.0) == 1.0
    assert well_second(1.0) == pytest.approx(math.pi ** 2 / 2)
    assert abs(well_second(np.linspace(-5, 5, 101))).max() <= math.pi ** 2 / 2


def test_constant_image_fits_constant():
    img = np.full((12, 10), 0.42)
    u = np.random.default_rng(1).normal(size=img.shape)
    f1, f2 = fit_functions(img, u, P)
    assert np.allclose(f1, 0.42, atol=1e-14) and np.allclose(f2, 0.42, atol=1e-14)
    e1, e2 = force_fields(img, f1, f2, P)
    assert np.max(e1) < 1e-12 and np.max(e2) < 1e-12


def test_zero_field_gives_equal_fits():
    img = np.random.default_rng(2).random((9, 9))
    f1, f2 = fit_functions(img, np.zeros_like(img), P)
    assert np.allclose(f1, f2, rtol=1e-13)
    k = build_kernel(P.sigma)
    expected = oracles.direct_convolve(img, P.sigma, k.radius) / \
        oracles.direct_convolve(np.ones_like(img), P.sigma, k.radius)
    assert np.allclose(f1, expected, rtol=1e-12)


def test_two_phase_fits_match_double_loop():
    params = ModelParams(sigma=3.0, eps1=0.5)
    img = np.full((16, 16), 0.8)
    img[4:12, 5:11] = 0.3
    u = np.where(img < 0.5, 1.0, -1.0)
    f1, f2 = fit_functions(img, u, params)
    hu = heaviside(u, 0.5)
    conv = lambda g: oracles.direct_convolve(g, 3.0, 12)          # noqa: E731
    assert np.max(np.abs(f1 - conv(hu * img) / conv(hu))) < 1e-12
    assert np.max(np.abs(f2 - conv((1 - hu) * img) / conv(1 - hu))) < 1e-12


def test_fits_lie_within_intensity_range():
    rng = np.random.default_rng(3)
    img = rng.random((14, 11))
    f1, f2, guarded = FitContext(img, P).fit(rng.normal(0, 2, img.shape))
    assert guarded == 0
    for f in (f1, f2):
        assert f.min() >= img.min() - 1e-12 and f.max() <= img.max() + 1e-12


def test_guard_counts_underflowed_denominators():
    img = np.random.default_rng(4).random((8, 8))
    _, _, guarded = FitContext(img, ModelParams(eps1=1e-3)).fit(np.full(img.shape, 1e12))
    assert guarded == img.size


def test_forces_special_cases():
    rng = np.random.default_rng(5)
    img = rng.random((8, 8))
    zero = np.zeros_like(img)
    e1, e2 = force_fields(img, zero, img, P)
    k = build_kernel(P.sigma)
    mass = oracles.direct_convolve(np.ones_like(img), P.sigma, k.radius)
    assert np.allclose(e1, img ** 2 * mass, rtol=1e-12)
    assert np.all(e2 >= 0)


def test_forces_match_definition_sum():
    rng = np.random.default_rng(6)
    img, f1, f2 = rng.random((3, 8, 8))
    e1, e2 = force_fields(img, f1, f2, P)
    r = build_kernel(P.sigma).radius
    assert np.max(np.abs(e1 - oracles.definition_ek(img, f1, P.sigma, r))) < 1e-10
    assert np.max(np.abs(e2 - oracles.definition_ek(img, f2, P.sigma, r))) < 1e-10


def test_radius_zero_definition_limit():
    rng = np.random.default_rng(7)
    img, f = rng.random((2, 5, 5))
    expected = (img - f) ** 2 / (2 * math.pi * 1.0)
    assert np.allclose(oracles.definition_ek(img, f, 1.0, 0), expected, rtol=1e-14)


def test_nonlinear_term_special_fields():
    e = np.random.default_rng(8).random((2, 5, 5))
    p0 = ModelParams(mu=0.0)
    assert np.allclose(nonlinear_term(np.ones((5, 5)), e[0], e[1], 7.0, p0), 7.0, atol=1e-13)
    assert np.allclose(nonlinear_term(np.zeros((5, 5)), e[0], e[1], 7.0, p0), 0.0, atol=1e-13)


def test_nonlinear_term_pointwise_formula():
    rng = np.random.default_rng(9)
    u = rng.normal(size=(6, 6))
    e1, e2 = rng.random((2, 6, 6))
    s = 11.0
    got = nonlinear_term(u, e1, e2, s, P)
    for (i, j), uk in np.ndenumerate(u):
        dk = (P.eps1 / math.pi) / (P.eps1 ** 2 + uk ** 2)
        wp = math.pi / 2 * math.sin(math.pi * (uk + 1))
        ref = s * uk - wp / P.eps - P.mu * dk * (P.lambda1 * e1[i, j] - P.lambda2 * e2[i, j])
        assert got[i, j] == pytest.approx(ref, rel=1e-12, abs=1e-12)


def test_energy_special_fields():
    img = np.random.default_rng(10).random((7, 5))
    f = np.zeros_like(img)
    p0 = ModelParams(mu=0.0, eps=0.5)
    assert discrete_energy(np.ones_like(img), img, f, f, p0) == pytest.approx(0.0, abs=1e-25)
    assert discrete_energy(np.zeros_like(img), img, f, f, p0) == pytest.approx(35 / 0.5, rel=1e-15)


def test_energy_matches_dense_oracle():
    rng = np.random.default_rng(11)
    img, f1, f2 = rng.random((3, 6, 6))
    u = rng.normal(0, 1.2, size=(6, 6))
    params = ModelParams(mu=3.0, lambda1=1.3, lambda2=0.7, sigma=1.5, eps=0.5, eps1=0.4, h=0.2)
    ref = oracles.dense_energy(u, img, f1, f2, 3.0, 1.3, 0.7, 0.5, 0.4, 1.5,
                               build_kernel(1.5).radius, 0.2)
    assert abs(discrete_energy(u, img, f1, f2, params) - ref) < 1e-10 * max(1.0, abs(ref))


@settings(max_examples=40, deadline=None)
@given(arrays(np.float64, st.tuples(st.integers(1, 6), st.integers(1, 6)),
              elements=st.floats(-5, 5)))
def test_gradient_term_nonnegative_and_matches_quadratic_form(u):
    g = gradient_energy(u, 0.5)
    assert g >= 0
    d = oracles.assemble_dense_laplacian(u.shape[0], u.shape[1], 0.5)
    x = oracles.vec(u)
    assert g == pytest.approx(-0.5 * x @ d @ x, rel=1e-10, abs=1e-9)


def test_fit_update_minimizes_fitting_energy():
    # the closed-form fits are the exact minimizers for fixed u
    rng = np.random.default_rng(12)
    img = rng.random((10, 10))
    u = rng.normal(size=img.shape)
    ctx = FitContext(img, P)
    best = ctx.update(u)
    e_best = energy_from_forces(u, best.e1, best.e2, P)
    for _ in range(5):
        g1 = best.f1 + 1e-3 * rng.normal(size=img.shape)
        g2 = best.f2 + 1e-3 * rng.normal(size=img.shape)
        e1, e2 = ctx.forces(g1, g2)
        assert energy_from_forces(u, e1, e2, P) >= e_best
