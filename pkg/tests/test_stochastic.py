import math

import numpy as np
import pytest

from semiriesz.group import GroupPoint, GroupSpec, SpectralFunction, evaluate
from semiriesz.spectral import CoefficientMatrix, heat_extension
from semiriesz.stochastic import (
    SimConfig, build_martingale, choi_gap, covariation, format_path_dump, parse_path_dump, run_ensemble,
    sample_trajectory, subordination_gap, transform_martingale,
)

SPECS = [GroupSpec((3,), 1, 2), GroupSpec((2,)), GroupSpec((), 1, 2), GroupSpec((3, 4), 2, 1), GroupSpec((5, 2))]


def test_config_validation():
    with pytest.raises(ValueError):
        SimConfig(lam=0)
    with pytest.raises(ValueError):
        SimConfig(dt=2.0, horizon_T=1.0)
    with pytest.raises(ValueError):
        SimConfig(master_seed=2 ** 64)
    assert SimConfig(dt=0.01, refine=2).step == pytest.approx(0.0025)


def test_trajectory_deterministic():
    spec = GroupSpec((3,), 1, 2)
    cfg = SimConfig(horizon_T=1.0, dt=0.01, master_seed=9)
    a, b = sample_trajectory(spec, cfg, "stationary", 4), sample_trajectory(spec, cfg, "stationary", 4)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.x, b.x) and np.array_equal(a.y, b.y)
    c = sample_trajectory(spec, cfg, "stationary", 5)
    assert not np.array_equal(a.y, c.y)


def test_pure_torus_has_no_jumps():
    spec = GroupSpec((), 1, 1)
    traj = sample_trajectory(spec, SimConfig(horizon_T=0.5, dt=0.01), "stationary", 0)
    assert traj.n_jumps == 0 and traj.events() == []
    assert traj.times.size == 51


def test_mean_jump_count():
    spec = GroupSpec((2,))
    cfg = SimConfig(lam=2.0, horizon_T=1.0, dt=0.01, n_paths=10_000, master_seed=1)
    n = run_ensemble(SpectralFunction.zeros(spec), CoefficientMatrix.identity(spec), cfg).n_jumps
    assert abs(n.mean() - 2.0) <= 4 * n.std(ddof=1) / math.sqrt(n.size)


def test_fixed_start_point():
    spec = GroupSpec((4,), 1, 1)
    z0 = GroupPoint.make(spec, [3], [1.0])
    traj = sample_trajectory(spec, SimConfig(horizon_T=0.3, dt=0.01), z0, 2)
    assert traj.initial_point == z0


def test_path_dump_roundtrip():
    for spec in [GroupSpec((3,), 1, 2), GroupSpec((2, 5))]:
        cfg = SimConfig(horizon_T=2.0, dt=0.05, master_seed=3)
        traj = sample_trajectory(spec, cfg, "stationary", 7)
        back = parse_path_dump(spec, format_path_dump(traj, 3))
        assert np.array_equal(back.times, traj.times)
        assert np.array_equal(back.x, traj.x)
        assert np.allclose(back.y, traj.y, atol=1e-12)
        assert np.array_equal(back.jump_axis, traj.jump_axis)


def _path(spec, f, seed=0, T=1.0, dt=0.01, k=0):
    cfg = SimConfig(horizon_T=T, dt=dt, master_seed=seed)
    return build_martingale(f, sample_trajectory(spec, cfg, "stationary", k), cfg)


def test_martingale_of_zero_and_constant():
    spec = GroupSpec((3,), 1, 1)
    assert np.all(_path(spec, SpectralFunction.zeros(spec)).values == 0)
    m = _path(spec, SpectralFunction.constant(spec, 2.0))
    assert np.allclose(m.values, 2.0) and np.allclose(m.quadratic_variation(), 0)


def test_martingale_ends_at_f():
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.random(spec, np.random.default_rng(0))
    m = _path(spec, f, dt=1e-3)
    assert m.exact[-1] == pytest.approx(evaluate(f, m.traj.final_point), abs=1e-12)
    z3 = GroupSpec((3, 2))
    m = _path(z3, SpectralFunction.random(z3, np.random.default_rng(0)), T=2.0)
    assert np.allclose(m.values, m.exact, atol=1e-12)  # no Euler error without a torus


def test_euler_residual_shrinks_under_refinement():
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.random(spec, np.random.default_rng(0))
    a = CoefficientMatrix.identity(spec)
    err = [np.abs(run_ensemble(f, a, SimConfig(horizon_T=1.0, dt=0.02, n_paths=200, refine=r)).euler_residual).mean()
           for r in (0, 4)]
    assert err[1] < 0.4 * err[0]  # strong order 1/2: refine=4 gives a factor 1/4


def test_martingale_property_z2():
    spec = GroupSpec((2,))
    f = SpectralFunction.character(spec, kx=(1,))
    cfg = SimConfig(horizon_T=1.0, dt=0.01, n_paths=100_000, master_seed=5)
    res = run_ensemble(f, CoefficientMatrix.identity(spec), cfg, z0=GroupPoint.make(spec, [0]))
    d = res.mT - res.m0
    assert abs(d.mean()) <= 3 * d.std(ddof=1) / math.sqrt(d.size)


def test_transform_identity_and_zero():
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.random(spec, np.random.default_rng(1))
    m = _path(spec, f)
    assert np.allclose(transform_martingale(m, CoefficientMatrix.identity(spec)).values, m.values, atol=1e-13)
    assert np.allclose(transform_martingale(m, CoefficientMatrix.zero(spec)).values, m.initial)


def test_unit_alpha_preserves_quadratic_variation():
    spec = GroupSpec((2,))
    m = _path(spec, SpectralFunction.character(spec, kx=(1,)), T=3.0)
    ma = transform_martingale(m, CoefficientMatrix(np.ones(1), np.zeros((0, 0))))
    assert np.allclose(ma.quadratic_variation(), m.quadratic_variation(), atol=1e-13)


def test_covariation_properties():
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.random(spec, np.random.default_rng(2))
    m = _path(spec, f)
    qv = covariation(m, m)
    assert np.all(np.diff(qv.real) >= -1e-14) and np.allclose(qv.imag, 0)
    fx = SpectralFunction.character(spec, kx=(1,), ky=(0,))
    gy = SpectralFunction.character(spec, kx=(0,), ky=(1,))
    cfg = SimConfig(horizon_T=1.0, dt=0.01)
    traj = sample_trajectory(spec, cfg, "stationary", 0)
    c = covariation(build_martingale(fx, traj, cfg), build_martingale(gy, traj, cfg))
    assert np.allclose(c, 0, atol=1e-14)


def test_jump_quadratic_variation_is_sum_of_squares():
    spec = GroupSpec((2,))
    f = SpectralFunction.character(spec, kx=(1,))
    cfg = SimConfig(horizon_T=3.0, dt=0.01)
    traj = sample_trajectory(spec, cfg, "stationary", 0)
    m = build_martingale(f, traj, cfg)
    jumps = []
    for k in np.flatnonzero(traj.jump_axis >= 0):
        h = heat_extension(f, cfg.horizon_T - traj.times[k])
        jumps.append(evaluate(h, GroupPoint(tuple(traj.x[k]))) - evaluate(h, GroupPoint(tuple(traj.x[k - 1]))))
    assert traj.n_jumps > 0
    assert m.quadratic_variation()[-1] == pytest.approx(np.sum(np.abs(jumps) ** 2), rel=1e-12)


def test_quadratic_variation_matches_realized_increments():
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.random(spec, np.random.default_rng(6))
    cfg = SimConfig(horizon_T=1.0, dt=1e-3, n_paths=2000)
    res = run_ensemble(f, CoefficientMatrix.identity(spec), cfg)
    # sup of the augmented gradient, bounded frequency by frequency
    grad = sum(abs(c) * math.sqrt(abs(np.exp(2j * np.pi * xi.kx[0] / 3) - 1) ** 2 + xi.ky[0] ** 2)
               for xi, c in f.terms())
    d = res.realized_qv - res.qv_f
    bound = 5 * cfg.dt * grad ** 2 * cfg.horizon_T
    assert abs(d.mean()) <= bound + 4 * d.std(ddof=1) / math.sqrt(d.size)


def test_subordination_gap_examples():
    spec = GroupSpec((3,), 1, 2)
    f = SpectralFunction.random(spec, np.random.default_rng(3))
    m = _path(spec, f)
    assert np.allclose(subordination_gap(m, CoefficientMatrix.identity(spec)), 0, atol=1e-13)
    # alpha_x = (1, 1/2) has norm2 = 1: jumps on axis 1 add (1 - 1/4) (X f)^2, axis 0 adds nothing
    g2 = GroupSpec((2, 3))
    m = _path(g2, SpectralFunction.random(g2, np.random.default_rng(3)), T=3.0)
    gap = np.diff(subordination_gap(m, CoefficientMatrix(np.array([1.0, 0.5]), np.zeros((0, 0)))))
    dqv = np.diff(m.quadratic_variation())
    assert np.allclose(gap[m.jump_axis == 0], 0, atol=1e-13)
    assert np.allclose(gap[m.jump_axis == 1], 0.75 * dqv[m.jump_axis == 1], rtol=1e-12)
    assert np.all(gap >= 0)


def test_subordination_random_alpha():
    spec = GroupSpec((3,), 1, 2)
    rng = np.random.default_rng(4)
    f = SpectralFunction.random(spec, rng)
    for k in range(20):
        a = CoefficientMatrix.random(spec, rng)
        m = _path(spec, f, k=k)
        assert np.diff(subordination_gap(m, a)).min() >= -1e-10


def test_choi_gap_nonincreasing():
    spec = GroupSpec((3,), 1, 2)
    rng = np.random.default_rng(5)
    f = SpectralFunction.random(spec, rng, real=True)
    a = CoefficientMatrix(np.array([0.3]), np.array([[0.8]]))
    m = _path(spec, f)
    assert np.diff(choi_gap(m, a, 0.0, 1.0)).max() <= 1e-12


@pytest.mark.parametrize("spec", SPECS, ids=str)
@pytest.mark.parametrize("start", ["stationary", "fixed"])
def test_kernel_matches_path_reconstruction(spec, start):
    """Per-path ensemble summaries from the compiled kernel against the array route."""
    cfg = SimConfig(horizon_T=0.7, dt=0.013, n_paths=6, master_seed=11)
    z0 = "stationary" if start == "stationary" else GroupPoint.make(spec, [1] * spec.m, [0.5] * spec.n)
    rng = np.random.default_rng(0)
    f, g = SpectralFunction.random(spec, rng), SpectralFunction.random(spec, rng)
    a = CoefficientMatrix.random(spec, rng)
    res = run_ensemble(f, a, cfg, g=g, z0=z0, choi=(-0.5, 0.7))
    for p in range(cfg.n_paths):
        tr = sample_trajectory(spec, cfg, z0, p)
        mf = build_martingale(f, tr, cfg)
        ma = transform_martingale(mf, a)
        scale = 1 + np.abs(mf.exact).max() ** 2 + mf.quadratic_variation()[-1]
        diffs = [res.m0[p] - mf.exact[0], res.mT[p] - mf.exact[-1], res.maT[p] - ma.values[-1],
                 res.gT[p] - evaluate(g, tr.final_point),
                 res.euler_residual[p] - (mf.exact[-1] - mf.values[-1]),
                 res.qv_f[p] - mf.quadratic_variation()[-1], res.qv_a[p] - ma.quadratic_variation()[-1],
                 res.gap_min[p] - np.diff(subordination_gap(mf, a)).min(),
                 res.choi_max[p] - np.diff(choi_gap(mf, a, -0.5, 0.7)).max(),
                 res.realized_qv[p] - np.sum(np.abs(np.diff(mf.exact)) ** 2),
                 res.n_jumps[p] - tr.n_jumps]
        assert max(abs(d) for d in diffs) / scale <= 1e-12
        assert np.allclose(res.yT[p], tr.final_point.y)


def test_kernel_matches_reconstruction_refined():
    spec = GroupSpec((3,), 1, 2)
    cfg = SimConfig(horizon_T=0.5, dt=0.02, n_paths=5, master_seed=3, refine=2)
    rng = np.random.default_rng(1)
    f = SpectralFunction.random(spec, rng)
    a = CoefficientMatrix.random(spec, rng)
    res = run_ensemble(f, a, cfg)
    for p in range(cfg.n_paths):
        mf = build_martingale(f, sample_trajectory(spec, cfg, "stationary", p), cfg)
        assert res.maT[p] == pytest.approx(transform_martingale(mf, a).values[-1], abs=1e-12)


def test_results_independent_of_workers():
    spec = GroupSpec((3,), 1, 2)
    cfg = SimConfig(horizon_T=0.5, dt=0.01, n_paths=40, master_seed=8)
    rng = np.random.default_rng(2)
    f = SpectralFunction.random(spec, rng)
    a = CoefficientMatrix.random(spec, rng)
    r1, r2 = run_ensemble(f, a, cfg, workers=1), run_ensemble(f, a, cfg, workers=3)
    assert np.array_equal(r1.maT, r2.maT) and np.array_equal(r1.gap_min, r2.gap_min)


def test_path_ranges_concatenate():
    spec = GroupSpec((2, 3))
    cfg = SimConfig(horizon_T=1.0, dt=0.05, n_paths=30, master_seed=4)
    f = SpectralFunction.random(spec, np.random.default_rng(3))
    a = CoefficientMatrix.identity(spec)
    full = run_ensemble(f, a, cfg)
    parts = [run_ensemble(f, a, cfg, paths=(0, 13)), run_ensemble(f, a, cfg, paths=(13, 30))]
    assert np.array_equal(full.mT, np.concatenate([p.mT for p in parts]))
