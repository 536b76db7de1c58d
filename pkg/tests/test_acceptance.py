"""Acceptance criteria 1-9 at their stated tolerances."""
import math
import time
import warnings

import numpy as np
import pytest
import yaml

from conftest import ACCEPTANCE, DATA, SHIPPED, torus_case
from semiriesz.analysis import (
    choi_upper_bound, multiplier_sup, operator_norm_lower_bound, p_star, sharpness_sweep, upper_bound,
)
from semiriesz.cli import load_config
from semiriesz.group import GroupSpec, SpectralFunction
from semiriesz.spectral import CoefficientMatrix, brute_force_matrix, multiplier_matrix
from semiriesz.stochastic import SimConfig
from semiriesz.verify import (
    HorizonBiasWarning, representation_pairing, sensitivity_check, subordination_ensemble,
    trace_identity_deviation, weak_identity_check,
)
from test_analysis import choi_oracle

Z2 = GroupSpec((2,))
Z3T1 = GroupSpec((3,), 1, 2)
BASE = SimConfig(lam=2.0, horizon_T=6.0, dt=1e-3, n_paths=100_000, master_seed=2024)
RUNTIME_LIMIT_4 = 120.0


def record(n: int, ok: bool, detail: str) -> None:
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[n] = line
    print(line)
    assert ok, line


def shipped_specs() -> list[GroupSpec]:
    specs = [load_config(str(p)).spec for p in SHIPPED + sorted(DATA.glob("*.yaml"))]
    return list(dict.fromkeys(specs))


def test_criterion_1_oracle_equivalence():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    worst = 0.0
    for spec in (GroupSpec((3, 3)), GroupSpec((4,), 1, 2)):
        alphas = [CoefficientMatrix.identity(spec), CoefficientMatrix.random(spec, rng),
                  CoefficientMatrix.random(spec, rng, real=True)]
        for a in alphas:
            worst = max(worst, float(np.abs(brute_force_matrix(spec, a) - multiplier_matrix(spec, a)).max()))
    dt = time.perf_counter() - t0
    record(1, worst <= 1e-10 and dt < 5.0, f"max entry gap {worst:.2e} (tol 1e-10), {dt:.2f} s (< 5 s)")


def test_criterion_2_trace_identity():
    specs = shipped_specs()
    worst = max(trace_identity_deviation(s) for s in specs)
    record(2, worst <= 1e-14, f"max deviation {worst:.2e} over {len(specs)} shipped specs (tol 1e-14)")


def test_criterion_3_weak_identity():
    rng = np.random.default_rng(3)
    specs = shipped_specs()
    worst = 0.0
    for k in range(100):
        spec = specs[k % len(specs)]
        f, g = SpectralFunction.random(spec, rng), SpectralFunction.random(spec, rng)
        worst = max(worst, weak_identity_check(f, g))
    record(3, worst <= 1e-12, f"max |<f,g> - energy pairing| {worst:.2e} over 100 pairs (tol 1e-12)")


@pytest.fixture(scope="module")
def representation_runs():
    """Criterion 4 ensembles, shared with criterion 9."""
    runs = []
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        # the bias guard fires on Z/3 x T^1 at T=6 (e^{-6} > 1e-3); the exact bias is reported below
        warnings.simplefilter("ignore", HorizonBiasWarning)
        f = SpectralFunction.character(Z2, (1,))
        a = CoefficientMatrix(np.ones(1), np.zeros((0, 0)))
        runs.append(("Z/2", f, f, a, BASE, representation_pairing(f, f, a, BASE)))
        for s in range(5):
            f, g, a = torus_case(s)
            cfg = SimConfig(**{**BASE.__dict__, "master_seed": BASE.master_seed + s})
            runs.append((f"Z/3xT1 case {s}", f, g, a, cfg, representation_pairing(f, g, a, cfg)))
    return runs, time.perf_counter() - t0


def test_criterion_4_representation(representation_runs):
    runs, dt = representation_runs
    zs = []
    for name, *_, est in runs:
        zs.append(est.z_score)
        print(f"  {name}: value {est.value:.5f} reference {est.reference:.5f} se {est.std_error:.2e} "
              f"z {est.z_score:.2f} exact bias {abs(est.bias):.1e}")
    assert runs[0][-1].reference == pytest.approx(-2.0)
    ok = max(zs) <= 3.0 and dt < RUNTIME_LIMIT_4
    record(4, ok, f"max |z| {max(zs):.2f} over 6 cases (tol 3), {dt:.1f} s (< {RUNTIME_LIMIT_4:.0f} s)")


def test_criterion_5_subordination():
    rng = np.random.default_rng(5)
    f = SpectralFunction.random(Z3T1, rng)
    cfg = SimConfig(**{**BASE.__dict__, "n_paths": 1000, "master_seed": 55})
    violations, worst = 0, math.inf
    for _ in range(10):
        rep = subordination_ensemble(f, CoefficientMatrix.random(Z3T1, rng), cfg, slack=1e-10)
        violations += len(rep.violations)
        worst = min(worst, rep.min_gap)
    record(5, violations == 0, f"{violations} violations over 1000 paths x 10 alphas, min increment {worst:.2e}")


def test_criterion_6_sharp_bound_consistency():
    rng = np.random.default_rng(6)
    excess, p2_gap = -math.inf, 0.0
    for spec in (GroupSpec((), 2, 8), GroupSpec((8,), 1, 8)):
        for _ in range(10):
            a = CoefficientMatrix.random(spec, rng)
            for p in (1.5, 2.0, 3.0, 4.0):
                rep = operator_norm_lower_bound(spec, a, p)
                assert rep.upper_bound == pytest.approx(upper_bound(a, p))
                excess = max(excess, rep.lower_bound - a.norm2 * (p_star(p) - 1))
                if p == 2.0:
                    p2_gap = max(p2_gap, abs(rep.lower_bound - multiplier_sup(spec, a)))
    ok = excess <= 1e-9 and p2_gap <= 1e-6
    record(6, ok, f"max lower - upper {excess:.2e} (tol 1e-9), p=2 gap to max|m| {p2_gap:.2e} (tol 1e-6)")


def test_criterion_7_sharpness_sweep():
    a = CoefficientMatrix(np.zeros(0), np.diag([1.0, -1.0]))
    vals = [r.lower_bound for r in sharpness_sweep(a, 4.0, [2, 4, 8, 16])]
    ok = all(x <= y for x, y in zip(vals, vals[1:])) and max(vals) <= 3.0
    record(7, ok, "lower bounds at K=2,4,8,16: " + ", ".join(f"{v:.6f}" for v in vals))


def test_criterion_8_choi():
    oracle = float(choi_oracle(4))
    got = choi_upper_bound(0.0, 1.0, 4.0)
    exact = all(choi_upper_bound(-1.0, 1.0, p) == p_star(p) - 1 for p in (1.1, 1.5, 2.0, 3.0, 4.0, 10.0))
    ok = abs(got - oracle) <= 1e-9 and exact
    record(8, ok, f"C(0,1,4) = {got:.10f} vs decimal oracle {oracle:.10f}; C(-1,1,p) = p*-1 exact: {exact}")


def test_criterion_9_statistical_hygiene(representation_runs):
    runs, _ = representation_runs
    worst = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", HorizonBiasWarning)
        for name, f, g, a, cfg, est in runs:
            rep = sensitivity_check(f, g, a, cfg, base=est)
            print(f"  {name}: 2T shift {rep.horizon_shift:.3f} se, dt/2 shift {rep.step_shift:.3f} se")
            worst = max(worst, rep.horizon_shift, rep.step_shift)
    record(9, worst < 1.0, f"largest shift {worst:.3f} standard errors (limit 1)")


def test_shipped_configs_parse():
    for path in SHIPPED:
        cfg = load_config(str(path))
        assert yaml.safe_load(path.read_text()) is not None
        assert cfg.alpha.m == cfg.spec.m and cfg.alpha.n == cfg.spec.n
