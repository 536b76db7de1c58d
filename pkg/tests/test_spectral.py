import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiriesz.group import GroupPoint, GroupSpec, SpectralFunction, evaluate
from semiriesz.spectral import (
    CoefficientMatrix, apply_multiplier, brute_force_matrix, gradient_at, heat_extension, identity_symbol,
    laplacian_symbol, multiplier_matrix, riesz2, riesz2_multiplier, riesz2_symbols, x_plus, zero_symbol,
)
from semiriesz.verify import commutation_check, trace_identity_deviation

# frozen reference values, each computed independently by hand
E_MINUS_4 = 1.831563888873418e-02     # exp(-4)


def test_laplacian_symbol_values():
    assert laplacian_symbol(GroupSpec((2,), 1, 1), ((0,), (0,))) == 0
    assert laplacian_symbol(GroupSpec((2,)), ((1,), ())) == pytest.approx(4.0)
    assert laplacian_symbol(GroupSpec((4,), 1, 1), ((1,), (1,))) == pytest.approx(3.0)


def test_laplacian_matches_stencil(rng):
    # apply f(x+1) + f(x-1) - 2f(x) to a character and read off the eigenvalue
    N = 7
    spec = GroupSpec((N,))
    for k in range(1, N):
        vals = np.exp(2j * np.pi * k * np.arange(N) / N)
        lap = np.roll(vals, -1) + np.roll(vals, 1) - 2 * vals
        assert laplacian_symbol(spec, ((k,), ())) == pytest.approx((-lap / vals)[0].real)


def test_riesz2_multiplier_values():
    a1 = CoefficientMatrix(np.ones(1), np.zeros((0, 0)))
    assert riesz2_multiplier(GroupSpec((2,)), a1, ((0,), ())) == 0
    assert riesz2_multiplier(GroupSpec((2,)), a1, ((1,), ())) == pytest.approx(-1.0)
    t2 = GroupSpec((), 2, 2)
    assert riesz2_multiplier(t2, CoefficientMatrix([], np.diag([1.0, -1.0])), ((), (1, 1))) == pytest.approx(0)
    spec = GroupSpec((4,), 1, 1)
    a = CoefficientMatrix(np.ones(1), np.zeros((1, 1)))
    assert riesz2_multiplier(spec, a, ((1,), (1,))) == pytest.approx(-2 / 3)


def test_multiplier_even_and_zero_at_origin(rng):
    spec = GroupSpec((3, 4), 1, 2)
    a = CoefficientMatrix.random(spec, rng)
    sym = riesz2_symbols(spec, a)
    assert sym[spec.index_of(spec.zero_frequency())] == 0
    for xi in spec.frequencies():
        assert sym[spec.index_of(xi)] == pytest.approx(sym[spec.index_of(spec.negate(xi))], abs=1e-15)


def test_apply_multiplier_identity_and_zero(rng):
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.random(spec, rng)
    assert np.array_equal(apply_multiplier(identity_symbol(spec), f).coeffs, f.coeffs)
    assert np.all(apply_multiplier(zero_symbol(spec), f).coeffs == 0)


def test_x_plus_on_z2():
    spec = GroupSpec((2,))
    assert x_plus(spec, 0)(((1,), ())) == pytest.approx(-2.0)
    # stencil f(x+1) - f(x), read back through the transform
    vals = np.array([1.0, -1.0])
    diff = np.roll(vals, -1) - vals
    assert (np.fft.fft(diff) / 2)[1] == pytest.approx(-2.0)


def test_heat_extension():
    spec = GroupSpec((2,))
    f = SpectralFunction.character(spec, kx=(1,))
    assert np.array_equal(heat_extension(f, 0.0).coeffs, f.coeffs)
    c = SpectralFunction.constant(spec, 2.5)
    assert np.allclose(heat_extension(c, 3.0).coeffs, c.coeffs)
    assert heat_extension(f, 1.0).coeff(((1,), ())) == pytest.approx(E_MINUS_4, rel=1e-12)


def test_gradient_values():
    spec = GroupSpec((2,))
    g = gradient_at(SpectralFunction.character(spec, kx=(1,)), 0.0, GroupPoint.make(spec, [0]))
    assert g.plus[0] == pytest.approx(-2) and g.minus[0] == pytest.approx(2)
    t1 = GroupSpec((), 1, 1)
    g = gradient_at(SpectralFunction.character(t1, ky=(1,)), 0.0, GroupPoint.make(t1, [], [0.0]))
    assert g.y[0] == pytest.approx(1j)
    assert np.all(gradient_at(SpectralFunction.constant(spec), 0.3, GroupPoint.make(spec, [1])).vector() == 0)


def test_brute_force_z2():
    spec = GroupSpec((2,))
    B = brute_force_matrix(spec, CoefficientMatrix(np.ones(1), np.zeros((0, 0))))
    assert np.allclose(B, -(np.eye(2) - np.ones((2, 2)) / 2), atol=1e-14)
    assert np.all(brute_force_matrix(spec, CoefficientMatrix.zero(spec)) == 0)


@pytest.mark.parametrize("spec", [GroupSpec((3, 3)), GroupSpec((4,), 1, 2), GroupSpec((2,), 2, 1)])
def test_brute_force_matches_multiplier(spec, rng):
    a = CoefficientMatrix.random(spec, rng)
    assert np.abs(brute_force_matrix(spec, a) - multiplier_matrix(spec, a)).max() <= 1e-12


def test_brute_force_odd_resolution_only():
    spec = GroupSpec((), 1, 1)
    with pytest.raises(ValueError):
        brute_force_matrix(spec, CoefficientMatrix.identity(spec), 4)


@pytest.mark.parametrize("spec", [GroupSpec((2,)), GroupSpec((3, 3)), GroupSpec((4,), 1, 2),
                                  GroupSpec((), 2, 8), GroupSpec((8,), 1, 8), GroupSpec((2, 3), 2, 2)])
def test_trace_identity_and_commutation(spec):
    assert trace_identity_deviation(spec) <= 1e-14
    assert commutation_check(spec) <= 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32), st.floats(-3, 3), st.floats(-3, 3))
def test_transform_linear(seed, s, t):
    rng = np.random.default_rng(seed)
    spec = GroupSpec((3,), 1, 2)
    a = CoefficientMatrix.random(spec, rng)
    f, g = SpectralFunction.random(spec, rng), SpectralFunction.random(spec, rng)
    lhs = riesz2(SpectralFunction(spec, s * f.coeffs + t * g.coeffs), a).coeffs
    rhs = s * riesz2(f, a).coeffs + t * riesz2(g, a).coeffs
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_transform_pointwise_against_oracle(rng):
    spec = GroupSpec((4,), 1, 2)
    a = CoefficientMatrix.random(spec, rng)
    f = SpectralFunction.random(spec, rng)
    h = riesz2(f, a)
    R = 5
    xs, ys = np.meshgrid(np.arange(4), 2 * math.pi * np.arange(R) / R, indexing="ij")
    vals = np.array([evaluate(f, GroupPoint.make(spec, [x], [y])) for x, y in zip(xs.ravel(), ys.ravel())])
    out = brute_force_matrix(spec, a, R) @ vals
    for k, (x, y) in enumerate(zip(xs.ravel(), ys.ravel())):
        assert out[k] == pytest.approx(evaluate(h, GroupPoint.make(spec, [x], [y])), abs=1e-12)
