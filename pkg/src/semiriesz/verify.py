"""Monte Carlo checks of the probabilistic representation against the spectral side.

Sign convention. The transformed martingale is started at ``M_0`` and driven by
``A_alpha`` applied to the increments of ``M^f``. For a stationary start,

    E[ M^alpha_T conj(g(Z_T)) ] |G_x| = -sum_xi |G_x| (m_alpha - (1 + m_alpha) e^{-2 mu T}) c_f conj(c_g),

so ``-|G_x| E[M^alpha_T conj g(Z_T)]`` converges to ``<R^2_alpha f, g>`` as ``T`` grows.
All estimates below carry that minus sign; the exact finite-horizon value is
reported next to the reference as the bias.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .analysis import p_star
from .group import GroupSpec, SpectralFunction, inner
from .spectral import (CoefficientMatrix, gradient_energy_pairing, laplacian_z, riesz2_symbols,
                       x_minus, x_plus, y_derivative)
from .stochastic import EnsembleResult, SimConfig, generator_symbols, run_ensemble

BIAS_LEVEL = 1e-3
PATHWISE_SLACK = 1e-10
LP_EXPONENTS = (1.5, 2.0, 3.0, 4.0)


class HorizonBiasWarning(UserWarning):
    """The horizon is too short for the stationary start to have forgotten the initial layer."""


def _cjson(z) -> list[float] | float:
    if isinstance(z, complex):
        return [z.real, z.imag]
    return z


@dataclass
class VerifyRecord:
    check: str
    params: dict
    value: complex | float
    reference: complex | float
    std_error: float
    z_score: float
    passed: bool

    def to_json(self, **extra) -> str:
        d = {"check": self.check, "params": self.params, "value": _cjson(self.value),
             "reference": _cjson(self.reference), "std_error": self.std_error,
             "z_score": self.z_score, "pass": self.passed}
        d.update(extra)
        return json.dumps(d, sort_keys=True)


@dataclass
class PairingEstimate:
    value: complex
    std_error: float
    n_paths: int
    reference: complex
    z_score: float
    expected: complex = 0j          # exact expectation at the finite horizon
    warnings: list[str] = field(default_factory=list)

    @property
    def bias(self) -> complex:
        return self.expected - self.reference

    def record(self, check: str, params: dict, threshold: float = 3.0) -> VerifyRecord:
        return VerifyRecord(check, params, self.value, self.reference, self.std_error, self.z_score,
                            bool(self.z_score <= threshold))


# spectral side

def smallest_decay_rate(spec: GroupSpec, lam: float = 2.0) -> float:
    mu = generator_symbols(spec, lam)
    pos = mu[mu > 1e-14]
    return float(pos.min()) if pos.size else math.inf


def horizon_bias_factor(spec: GroupSpec, horizon: float, lam: float = 2.0) -> float:
    """``e^{-lambda_min T}``."""
    return math.exp(-smallest_decay_rate(spec, lam) * horizon)


def finite_horizon_pairing(f: SpectralFunction, g: SpectralFunction, alpha: CoefficientMatrix,
                           lam: float, horizon: float) -> complex:
    """Exact ``-|G_x| E[M^alpha_T conj g(Z_T)]`` under the stationary start."""
    spec = f.spec
    m = riesz2_symbols(spec, alpha)
    mu = generator_symbols(spec, lam)
    w = m - (1 + m) * np.exp(-2 * mu * horizon)
    w[spec.index_of(spec.zero_frequency())] = 0.0
    return complex(spec.size_x * np.sum(w * f.coeffs * np.conj(g.coeffs)))


def _require_mean_zero(*fs: SpectralFunction) -> None:
    for f in fs:
        if not f.is_mean_zero(atol=1e-14):
            raise ValueError("function must have mean zero")


def _std_error_floor(ref: complex) -> float:
    # deterministic products (e.g. R^2 = -I on Z/2) have zero sample variance
    return 1e-12 * max(1.0, abs(ref))


def _complex_mean_se(s: np.ndarray) -> tuple[complex, float]:
    n = s.size
    mean = complex(s.mean())
    if n < 2:
        return mean, math.inf
    var = float(np.sum(np.abs(s - mean) ** 2)) / (n - 1)
    return mean, math.sqrt(var / n)


def _warn_horizon(spec: GroupSpec, cfg: SimConfig) -> list[str]:
    fac = horizon_bias_factor(spec, cfg.horizon_T, cfg.lam)
    if fac > BIAS_LEVEL:
        msg = (f"horizon_T={cfg.horizon_T} leaves e^(-lambda_min T)={fac:.3g} > {BIAS_LEVEL:g}; "
               "the estimate is biased toward the initial layer")
        warnings.warn(msg, HorizonBiasWarning, stacklevel=3)
        return [msg]
    return []


def _check_paths(cfg: SimConfig) -> None:
    if cfg.n_paths < 1:
        raise ValueError("n_paths must be >= 1")


# probabilistic side

def pairing_samples(res: EnsembleResult) -> np.ndarray:
    """Per-path samples of ``-|G_x| M^alpha_T conj g(Z_T)``."""
    return -res.spec.size_x * res.maT * np.conj(res.gT)


def representation_pairing(f: SpectralFunction, g: SpectralFunction, alpha: CoefficientMatrix,
                           cfg: SimConfig, workers: int = 1) -> PairingEstimate:
    """Monte Carlo estimate of ``<R^2_alpha f, g>`` from a stationary ensemble."""
    _require_mean_zero(f, g)
    _check_paths(cfg)
    spec = f.spec
    notes = _warn_horizon(spec, cfg)
    res = run_ensemble(f, alpha, cfg, g=g, workers=workers)
    return _pairing_from(res, f, g, alpha, notes)


def _pairing_from(res: EnsembleResult, f, g, alpha, notes=()) -> PairingEstimate:
    ref = inner(SpectralFunction(f.spec, riesz2_symbols(f.spec, alpha) * f.coeffs), g)
    value, se = _complex_mean_se(pairing_samples(res))
    se = max(se, _std_error_floor(ref))
    expected = finite_horizon_pairing(f, g, alpha, res.cfg.lam, res.cfg.horizon_T)
    return PairingEstimate(value, se, res.n_paths, ref, abs(value - ref) / se, expected, list(notes))


@dataclass
class BinStat:
    x: tuple[int, ...]
    y_bin: tuple[int, ...]
    count: int
    value: complex
    std_error: float
    reference: complex
    z_score: float


@dataclass
class ConditionalMap:
    bins: list[BinStat]
    max_z: float
    chi2: float
    dof: int
    empty_bins: list[tuple]

    def passed(self, threshold: float = 3.0) -> bool:
        return not self.empty_bins and self.max_z <= threshold


def _bin_averaged_characters(spec: GroupSpec, torus_bins: int) -> list[np.ndarray]:
    """Per torus axis: the average of ``e^{i k y}`` over each of the uniform bins, shape (bins, 2K+1)."""
    K = spec.band_limit
    k = np.arange(-K, K + 1)
    a = 2 * np.pi * np.arange(torus_bins)[:, None] / torus_bins
    b = a + 2 * np.pi / torus_bins
    out = np.ones((torus_bins, k.size), complex)
    nz = k != 0
    out[:, nz] = (np.exp(1j * k[nz] * b) - np.exp(1j * k[nz] * a)) / (1j * k[nz] * (b - a))
    return [out] * spec.n


def binned_reference(h: SpectralFunction, torus_bins: int) -> np.ndarray:
    """Bin averages of ``h`` over (point of G_x) x (torus bin cell); shape (N..., B...)."""
    spec = h.spec
    c = np.fft.ifftn(h.coeffs, axes=tuple(range(spec.m)), norm="forward") if spec.m else h.coeffs
    for j, avg in enumerate(_bin_averaged_characters(spec, torus_bins)):
        c = np.moveaxis(np.tensordot(c, avg, axes=([spec.m + j], [1])), -1, spec.m + j)
    return c


def conditional_expectation_map(f: SpectralFunction, alpha: CoefficientMatrix, cfg: SimConfig,
                                torus_bins: int = 4, workers: int = 1) -> ConditionalMap:
    """Bin ``-M^alpha_T`` by ``Z_T`` and compare with the bin averages of ``R^2_alpha f``."""
    if torus_bins < 1:
        raise ValueError("torus_bins must be >= 1")
    _check_paths(cfg)
    spec = f.spec
    _warn_horizon(spec, cfg)
    res = run_ensemble(f, alpha, cfg, workers=workers)
    ref = binned_reference(SpectralFunction(spec, riesz2_symbols(spec, alpha) * f.coeffs), torus_bins)
    nb = torus_bins if spec.n else 1
    yb = np.minimum((res.yT * nb / (2 * np.pi)).astype(np.int64), nb - 1) if spec.n \
        else np.zeros((res.n_paths, 0), np.int64)
    key = res.xT_flat.copy()
    for j in range(spec.n):
        key = key * nb + yb[:, j]
    samples = -res.maT
    stats, empty = [], []
    chi2, dof, max_z = 0.0, 0, 0.0
    shape = spec.cyclic_orders + (nb,) * spec.n
    for flat in range(math.prod(shape)):
        idx = np.unravel_index(flat, shape)
        x, yv = tuple(int(i) for i in idx[:spec.m]), tuple(int(i) for i in idx[spec.m:])
        r = complex(ref[idx])
        sel = samples[key == flat]
        if sel.size == 0:
            empty.append((x, yv))
            stats.append(BinStat(x, yv, 0, complex("nan"), math.nan, r, math.nan))
            continue
        v, se = _complex_mean_se(sel)
        se = max(se, _std_error_floor(r))
        z = abs(v - r) / se
        stats.append(BinStat(x, yv, int(sel.size), v, se, r, z))
        chi2 += 2 * z * z
        dof += 2
        max_z = max(max_z, z)
    return ConditionalMap(stats, max_z, chi2, dof, empty)


@dataclass
class LpContract:
    p: float
    lhs: float              # E|M^alpha_T|^p
    rhs: float              # ((p*-1) ||A||_2)^p E|M^f_T|^p
    std_error: float        # combined
    passed: bool


@dataclass
class SubordinationReport:
    n_paths: int
    min_gap: float
    violations: list[dict]
    lp: list[LpContract]

    @property
    def passed(self) -> bool:
        return not self.violations and all(c.passed for c in self.lp)


def lp_contracts(res: EnsembleResult, alpha: CoefficientMatrix, ps=LP_EXPONENTS) -> list[LpContract]:
    out = []
    n = res.n_paths
    for p in ps:
        C = (p_star(p) - 1.0) * alpha.norm2
        a = np.abs(res.maT) ** p
        b = C ** p * np.abs(res.mT) ** p
        se = math.sqrt((a.var(ddof=1) + b.var(ddof=1)) / n) if n > 1 else math.inf
        lhs, rhs = float(a.mean()), float(b.mean())
        out.append(LpContract(p, lhs, rhs, se, bool(lhs <= rhs + 3 * se)))
    return out


def subordination_ensemble(f: SpectralFunction, alpha: CoefficientMatrix, cfg: SimConfig,
                           ps=LP_EXPONENTS, slack: float = PATHWISE_SLACK, workers: int = 1,
                           z0="stationary") -> SubordinationReport:
    """Pathwise nondecrease of ``||A||^2 [M^f] - [M^alpha]`` plus the ``L^p`` contract.

    Each violation carries its replay key ``(master_seed, path)``; the path is
    reproduced by ``sample_trajectory(spec, cfg, z0, path)``.
    """
    _check_paths(cfg)
    res = run_ensemble(f, alpha, cfg, z0=z0, workers=workers)
    bad = np.flatnonzero(res.gap_min < -slack)
    violations = [{"master_seed": cfg.master_seed, "path": int(k), "gap_increment": float(res.gap_min[k]),
                   "time": float(res.gap_time[k])} for k in bad]
    return SubordinationReport(res.n_paths, float(res.gap_min.min()), violations, lp_contracts(res, alpha, ps))


def weak_identity_check(f: SpectralFunction, g: SpectralFunction) -> float:
    """``|<f, g> - 2 int_0^inf (grad P_t f, grad P_t g) dt|``, per frequency in closed form."""
    _require_mean_zero(f, g)
    return abs(inner(f, g) - gradient_energy_pairing(f, g))


def trace_identity_deviation(spec: GroupSpec) -> float:
    """``max |sum_i m_{e_i} + sum_j m_{e_jj} + 1|`` over nonzero frequencies."""
    m = riesz2_symbols(spec, CoefficientMatrix.identity(spec))
    d = np.abs(m + 1)
    d[spec.index_of(spec.zero_frequency())] = 0.0
    return float(d.max())


def commutation_check(spec: GroupSpec) -> float:
    """Largest ``|sym(D Delta_z) - sym(Delta_z D)|`` over the first-order operators ``D``."""
    lap = laplacian_z(spec)
    ops = [y_derivative(spec, j) for j in range(spec.n)]
    ops += [x_plus(spec, i) for i in range(spec.m)] + [x_minus(spec, i) for i in range(spec.m)]
    dev = 0.0
    for d in ops:
        dev = max(dev, float(np.abs((d @ lap).values - (lap @ d).values).max()))
    return dev


@dataclass
class SensitivityReport:
    base: PairingEstimate
    doubled_horizon: PairingEstimate
    halved_step: PairingEstimate

    @property
    def horizon_shift(self) -> float:
        """``|value(2T) - value(T)|`` in units of the base standard error."""
        return abs(self.doubled_horizon.value - self.base.value) / self.base.std_error

    @property
    def step_shift(self) -> float:
        return abs(self.halved_step.value - self.base.value) / self.base.std_error

    def passed(self, limit: float = 1.0) -> bool:
        return self.horizon_shift < limit and self.step_shift < limit


def sensitivity_check(f: SpectralFunction, g: SpectralFunction, alpha: CoefficientMatrix,
                      cfg: SimConfig, workers: int = 1, base: PairingEstimate | None = None) -> SensitivityReport:
    """Re-run with ``2T`` and with ``dt/2`` on the same streams.

    Paths are sampled backward from ``Z_T`` and Brownian steps are refined
    dyadically, so the three ensembles are coupled path by path.
    """
    if base is None:
        base = representation_pairing(f, g, alpha, cfg, workers)
    longer = representation_pairing(f, g, alpha, replace(cfg, horizon_T=2 * cfg.horizon_T), workers)
    finer = representation_pairing(f, g, alpha, replace(cfg, refine=cfg.refine + 1), workers)
    return SensitivityReport(base, longer, finer)


def pairing_record_params(f: SpectralFunction, alpha: CoefficientMatrix, cfg: SimConfig) -> dict:
    return {"group": f.spec.as_dict(), "alpha": alpha.as_dict(), "sim": asdict(cfg)}
