import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from semiriesz.group import (
    Frequency, GroupPoint, GroupSpec, SpectralFunction, coeffs_to_grid, evaluate, format_coefficients,
    grid_samples, grid_to_coeffs, inner, parse_coefficients, project_mean_zero,
)


def test_spec_validation():
    with pytest.raises(ValueError):
        GroupSpec((), 0, 0)
    with pytest.raises(ValueError):
        GroupSpec((1,), 0, 0)
    with pytest.raises(ValueError):
        GroupSpec((), 1, 0)
    assert GroupSpec((3, 4), 1, 2).coeff_shape == (3, 4, 5)


def test_point_wraps():
    spec = GroupSpec((3,), 1, 1)
    z = GroupPoint.make(spec, [4], [7.0])
    assert z.x == (1,)
    assert z.y[0] == pytest.approx(7.0 - 2 * math.pi)
    with pytest.raises(ValueError):
        GroupPoint.make(spec, [0, 0], [0.0])


def test_evaluate_constant():
    spec = GroupSpec((5,), 2, 1)
    f = SpectralFunction.constant(spec)
    assert evaluate(f, GroupPoint.make(spec, [3], [0.3, 1.1])) == pytest.approx(1.0)


def test_evaluate_character_z2():
    spec = GroupSpec((2,))
    f = SpectralFunction.character(spec, kx=(1,))
    assert evaluate(f, GroupPoint.make(spec, [1])) == pytest.approx(-1.0)


def test_evaluate_sum_at_origin():
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.from_terms(spec, {((1,), (0,)): 1.0, ((2,), (-2,)): 2j})
    assert evaluate(f, GroupPoint.make(spec, [0], [0.0])) == pytest.approx(1 + 2j)


def test_evaluate_mixed_character():
    spec = GroupSpec((4,), 1, 3)
    f = SpectralFunction.character(spec, kx=(3,), ky=(-2,))
    z = GroupPoint.make(spec, [1], [0.7])
    assert evaluate(f, z) == pytest.approx(cmath.exp(1j * (2 * math.pi * 3 / 4 - 2 * 0.7)))


def test_project_mean_zero():
    spec = GroupSpec((3,))
    assert np.all(project_mean_zero(SpectralFunction.constant(spec, 2.0)).coeffs == 0)
    f = SpectralFunction.from_terms(spec, {((0,), ()): 3.0, ((1,), ()): 1.0})
    h = project_mean_zero(f)
    assert h.coeff(((0,), ())) == 0 and h.coeff(((1,), ())) == 1
    assert project_mean_zero(h) == h or np.array_equal(project_mean_zero(h).coeffs, h.coeffs)


def test_grid_samples_examples():
    assert np.allclose(grid_samples(SpectralFunction.constant(GroupSpec((2,), 1, 1)), 3), 1.0)
    assert np.allclose(grid_samples(SpectralFunction.character(GroupSpec((2,)), kx=(1,))), [1, -1])
    f = SpectralFunction.character(GroupSpec((), 1, 1), ky=(1,))
    assert np.allclose(grid_samples(f, 4), [1, 1j, -1, -1j])


def test_grid_rejects_aliasing():
    with pytest.raises(ValueError):
        grid_samples(SpectralFunction.zeros(GroupSpec((), 1, 2)), 4)


def test_negate_and_conjugate(rng):
    spec = GroupSpec((5,), 1, 2)
    f = SpectralFunction.random(spec, rng)
    z = GroupPoint.make(spec, [2], [1.3])
    assert evaluate(f.reflected(), z) == pytest.approx(evaluate(f, z).conjugate())
    assert f.real_part().is_real()
    assert spec.negate(Frequency((2,), (1,))) == Frequency((3,), (-1,))


def test_text_table_roundtrip(rng):
    spec = GroupSpec((3, 2), 1, 2)
    f = SpectralFunction.random(spec, rng)
    g = parse_coefficients(spec, format_coefficients(f))
    assert np.array_equal(f.coeffs, g.coeffs)


def test_text_table_errors():
    spec = GroupSpec((3,), 1, 1)
    with pytest.raises(ValueError, match="line 1"):
        parse_coefficients(spec, "1;0;1.0\n")
    with pytest.raises(ValueError, match="band limit"):
        parse_coefficients(spec, "1;2;1.0;0.0\n")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2, 5), max_size=2), st.integers(0, 2), st.integers(1, 3), st.integers(0, 2 ** 32))
def test_grid_roundtrip_and_parseval(orders, n, K, seed):
    if not orders and n == 0:
        n = 1
    spec = GroupSpec(tuple(orders), n, K if n else 0)
    f = SpectralFunction.random(spec, np.random.default_rng(seed), mean_zero=False)
    R = 2 * spec.band_limit + 1
    vals = coeffs_to_grid(spec, f.coeffs, R)
    assert np.allclose(grid_to_coeffs(spec, vals), f.coeffs, atol=1e-12)
    # counting measure on G_x, normalized Haar on the torus
    lhs = np.sum(np.abs(vals) ** 2) / R ** spec.n
    assert lhs == pytest.approx(inner(f, f).real, rel=1e-10)
