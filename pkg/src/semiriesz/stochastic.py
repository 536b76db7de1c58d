"""The jump-diffusion ``Z_t = (X_t, Y_t)`` and the martingales it carries.

``X_t`` is a compound Poisson walk on the cyclic factors: every axis has its
own exponential clock of rate ``lam`` and jumps by a fair random sign. ``Y_t``
is Brownian motion on the torus with variance ``2t`` per axis. The generator
is ``(lam/2) Delta_x + Delta_y``, which is ``Delta_z`` at the default
``lam = 2``. With ``P`` the semigroup of that generator,
``M_t = P_{T-t} f(Z_t)`` is a martingale on ``[0, T]``.

Increments of ``M`` are split as the Ito formula gives them:

* a jump on axis ``i`` with sign ``tau`` contributes
  ``(1/2) (X_i^2 Pf + tau X_i^0 Pf)(Z_{t-})``, which equals ``X_i^tau Pf(Z_{t-})``;
* the compensator contributes ``-(lam/2) X_i^2 Pf dt`` between jumps;
* the torus part contributes ``grad_y Pf . dY``, taken at the left end point.

A martingale transform multiplies the first two by ``alpha_x[i]`` and
replaces ``grad_y Pf`` with ``alpha_y @ grad_y Pf``. Because ``dY`` has
variance ``2 dt``, the continuous part of a bracket is ``2 <u, v> dt``.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import multiprocessing as mp
import numpy as np
import psutil

from . import _kernels
from .group import TWO_PI, GroupPoint, GroupSpec, SpectralFunction
from .spectral import CoefficientMatrix

TABLE_MAX_ENTRIES = 40_000_000


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters. ``refine`` cuts each Brownian step dyadically ``refine`` times,
    reusing the coarse increments (a coupled finer discretization)."""

    lam: float = 2.0
    horizon_T: float = 6.0
    dt: float = 1e-3
    n_paths: int = 10_000
    master_seed: int = 0
    refine: int = 0

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError(f"jump intensity must be > 0, got {self.lam}")
        if not self.horizon_T > 0:
            raise ValueError(f"horizon_T must be > 0, got {self.horizon_T}")
        if not 0 < self.dt <= self.horizon_T:
            raise ValueError(f"need 0 < dt <= horizon_T, got dt={self.dt}")
        if self.n_paths < 0:
            raise ValueError("n_paths must be >= 0")
        if not 0 <= int(self.master_seed) < 2 ** 64:
            raise ValueError("master_seed must fit in 64 bits")
        if not 0 <= self.refine <= 12:
            raise ValueError("refine must be in [0, 12]")

    @property
    def step(self) -> float:
        return self.dt / 2 ** self.refine


def generator_symbols(spec: GroupSpec, lam: float) -> np.ndarray:
    """Decay rates of the process semigroup: ``(lam/2) sum 4 sin^2(theta/2) + sum k^2``."""
    mu = np.zeros(spec.coeff_shape)
    for th in spec.angle_grids():
        mu = mu + 0.5 * lam * 4.0 * np.sin(th / 2) ** 2
    for k in spec.torus_frequency_grids():
        mu = mu + k ** 2
    return mu


@dataclass(frozen=True, eq=False)
class _FunctionData:
    """Nonzero coefficients of ``f`` with per-frequency factors, as flat arrays."""

    coef: np.ndarray
    wx: np.ndarray    # 2 pi k_i / N_i
    ky: np.ndarray
    mu: np.ndarray    # decay rate
    s2: np.ndarray    # X_i^2 symbol
    s0: np.ndarray    # X_i^0 symbol

    @classmethod
    def build(cls, f: SpectralFunction, lam: float) -> "_FunctionData":
        spec = f.spec
        flat = f.coeffs.reshape(-1)
        nz = np.flatnonzero(flat)
        idx = np.unravel_index(nz, spec.coeff_shape)
        wx = np.stack([TWO_PI * idx[i] / N for i, N in enumerate(spec.cyclic_orders)], axis=1) \
            if spec.m else np.zeros((nz.size, 0))
        ky = np.stack([idx[spec.m + j] - spec.band_limit for j in range(spec.n)], axis=1).astype(float) \
            if spec.n else np.zeros((nz.size, 0))
        mu = generator_symbols(spec, lam).reshape(-1)[nz]
        return cls(np.ascontiguousarray(flat[nz]), np.ascontiguousarray(wx), np.ascontiguousarray(ky),
                   np.ascontiguousarray(mu), (2 * np.cos(wx) - 2).astype(complex), 2j * np.sin(wx))

    def evaluate(self, x: np.ndarray, y: np.ndarray, s: np.ndarray) -> np.ndarray:
        """``e^{-mu s} e^{i phase}`` weighted coefficients, shape (P, F)."""
        phase = np.asarray(x, float) @ self.wx.T + np.asarray(y, float) @ self.ky.T
        return self.coef * np.exp(-np.outer(s, self.mu) + 1j * phase)

    def args(self):
        return self.coef, self.wx, self.ky, self.mu, self.s2, self.s0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One sampled path, stored at its nodes (time grid plus jump times).

    ``x[k]``/``y[k]`` is the state from node ``k`` on; the left limit at a jump
    node ``k`` is ``(x[k-1], y[k])``. ``y`` is unwrapped (continuous).
    """

    spec: GroupSpec
    horizon_T: float
    path_index: int
    times: np.ndarray
    x: np.ndarray
    y: np.ndarray
    jump_axis: np.ndarray
    jump_sign: np.ndarray
    grid_index: np.ndarray = field(repr=False, default=None)
    grid_s: np.ndarray = field(repr=False, default=None)

    @property
    def initial_point(self) -> GroupPoint:
        return GroupPoint.make(self.spec, self.x[0], self.y[0])

    @property
    def final_point(self) -> GroupPoint:
        return GroupPoint.make(self.spec, self.x[-1], self.y[-1])

    @property
    def n_jumps(self) -> int:
        return int(np.count_nonzero(self.jump_axis >= 0))

    def events(self) -> list[tuple[float, int, int]]:
        """Jump events as (time, axis, sign), axis counted from 0."""
        k = np.flatnonzero(self.jump_axis >= 0)
        return [(float(self.times[i]), int(self.jump_axis[i]), int(self.jump_sign[i])) for i in k]

    def brownian_increments(self) -> np.ndarray:
        return np.diff(self.y, axis=0)

    def step_lengths(self) -> np.ndarray:
        return np.diff(self.times)


def _z0_arrays(spec: GroupSpec, z0) -> tuple[bool, np.ndarray, np.ndarray]:
    if isinstance(z0, str):
        if z0 != "stationary":
            raise ValueError(f"unknown start {z0!r}")
        return True, np.zeros(spec.m, np.int64), np.zeros(spec.n)
    if len(z0.x) != spec.m or len(z0.y) != spec.n:
        raise ValueError("start point does not match the group")
    return False, np.array(z0.x, np.int64), np.array(z0.y, float)


def sample_trajectory(spec: GroupSpec, cfg: SimConfig, z0: GroupPoint | str = "stationary",
                      path_index: int = 0) -> Trajectory:
    """Draw path ``path_index``; the result depends only on (master_seed, path_index, cfg, z0)."""
    stationary, x0, y0 = _z0_arrays(spec, z0)
    t, x, y, ax, sg, gi, gs = _kernels.sample_nodes(
        np.array(spec.cyclic_orders, np.int64), spec.n, float(cfg.lam), float(cfg.horizon_T),
        float(cfg.dt), int(cfg.refine), np.uint64(cfg.master_seed), np.uint64(path_index),
        stationary, x0, y0)
    return Trajectory(spec, float(cfg.horizon_T), int(path_index), t, x, y, ax, sg, gi, gs)


# path dumps: "t;axis;sign" for jumps (axis counted from 1) and "B;t0;t1;dy1,..." for steps

def format_path_dump(traj: Trajectory, seed: int | None = None) -> str:
    spec = traj.spec
    lines = [f"# path={traj.path_index} seed={seed if seed is not None else ''} horizon={traj.horizon_T!r}",
             f"# z0 x={','.join(map(str, traj.x[0]))} y={','.join(repr(float(v)) for v in traj.y[0])}"]
    dy = traj.brownian_increments()
    for k in range(1, traj.times.size):
        t0, t1 = float(traj.times[k - 1]), float(traj.times[k])
        if spec.n:
            lines.append(f"B;{t0!r};{t1!r};{','.join(repr(float(v)) for v in dy[k - 1])}")
        if traj.jump_axis[k] >= 0:
            lines.append(f"{t1!r};{traj.jump_axis[k] + 1};{traj.jump_sign[k]}")
    lines.append(f"# end t={float(traj.times[-1])!r}")
    return "\n".join(lines) + "\n"


def parse_path_dump(spec: GroupSpec, text: str) -> Trajectory:
    """Rebuild a trajectory from :func:`format_path_dump` output (for replay)."""
    head = {}
    x0, y0, t_end = None, None, None
    times, xs, ys, axes, signs = [0.0], [], [], [-1], [0]
    for line in text.splitlines():
        line = line.strip()
        if line.startswith("# path="):
            head = dict(kv.split("=", 1) for kv in line[2:].split())
        elif line.startswith("# z0"):
            parts = dict(kv.split("=", 1) for kv in line[5:].split())
            x0 = [int(v) for v in parts["x"].split(",") if v]
            y0 = [float(v) for v in parts["y"].split(",") if v]
            xs.append(np.array(x0, np.int64))
            ys.append(np.array(y0))
        elif line.startswith("# end"):
            t_end = float(line.split("t=", 1)[1])
        elif line.startswith("B;"):
            _, _, t1, dy = line.split(";")
            times.append(float(t1))
            xs.append(xs[-1].copy())
            ys.append(ys[-1] + np.array([float(v) for v in dy.split(",")]))
            axes.append(-1)
            signs.append(0)
        elif line and not line.startswith("#"):
            t, axis, sign = line.split(";")
            i, s = int(axis) - 1, int(sign)
            newx = xs[-1].copy()
            newx[i] = (newx[i] + s) % spec.cyclic_orders[i]
            if spec.n:
                xs[-1], axes[-1], signs[-1] = newx, i, s  # the step record ending here is the jump node
            else:
                times.append(float(t))
                xs.append(newx)
                ys.append(ys[-1].copy())
                axes.append(i)
                signs.append(s)
    if x0 is None:
        raise ValueError("path dump has no start record")
    if spec.n == 0 and t_end is not None and times[-1] != t_end:
        times.append(t_end)
        xs.append(xs[-1].copy())
        ys.append(ys[-1].copy())
        axes.append(-1)
        signs.append(0)
    L = len(times)
    return Trajectory(spec, float(head.get("horizon", times[-1])), int(head.get("path", 0)),
                      np.array(times), np.array(xs).reshape(L, spec.m),
                      np.array(ys).reshape(L, spec.n), np.array(axes), np.array(signs),
                      np.full(L, -1), None)


# martingales along a path

@dataclass(frozen=True, eq=False)
class MartingalePath:
    """``M`` at the nodes of a trajectory, with its increments split by source.

    ``exact`` holds ``P_{T-t} f(Z_t)``; ``values`` is ``M_0`` plus the summed
    increments. For the untransformed martingale they differ only by the Euler
    error of the torus integral (zero without a torus).
    """

    traj: Trajectory
    times: np.ndarray
    exact: np.ndarray
    initial: complex
    grad_y: np.ndarray       # (L, n) left-point grad_y P f
    dy: np.ndarray           # (L, n)
    drift_axes: np.ndarray   # (L, m) compensator per axis, before any transform
    jump_x2: np.ndarray      # (L,) X_i^2 P f at the left limit, i the jumping axis
    jump_x0: np.ndarray      # (L,) X_i^0 P f at the left limit
    alpha: CoefficientMatrix | None = None

    @property
    def jump_axis(self) -> np.ndarray:
        return self.traj.jump_axis[1:]

    @property
    def jump_sign(self) -> np.ndarray:
        return self.traj.jump_sign[1:]

    def _ax(self) -> np.ndarray:
        m = self.drift_axes.shape[1]
        return np.ones(m, complex) if self.alpha is None else self.alpha.alpha_x

    @property
    def jump_increments(self) -> np.ndarray:
        ax = self._ax()
        axis = self.jump_axis
        has = axis >= 0
        coef = np.zeros(axis.size, complex)
        coef[has] = ax[axis[has]]
        return coef * 0.5 * (self.jump_x2 + self.jump_sign * self.jump_x0)

    @property
    def drift_increments(self) -> np.ndarray:
        return self.drift_axes @ self._ax()

    @property
    def continuous_integrand(self) -> np.ndarray:
        if self.alpha is None:
            return self.grad_y
        return self.grad_y @ self.alpha.alpha_y.T

    @property
    def continuous_increments(self) -> np.ndarray:
        return np.sum(self.continuous_integrand * self.dy, axis=1)

    @property
    def increments(self) -> np.ndarray:
        return self.jump_increments + self.drift_increments + self.continuous_increments

    @property
    def values(self) -> np.ndarray:
        return self.initial + np.concatenate([[0], np.cumsum(self.increments)])

    def quadratic_variation(self) -> np.ndarray:
        return covariation(self, self).real


def _left_state(traj: Trajectory):
    """Per-interval arrays: left node state and the state just before the right node."""
    xl = traj.x[:-1]
    return xl, traj.y[:-1], traj.y[1:]


def build_martingale(f: SpectralFunction, traj: Trajectory, cfg: SimConfig) -> MartingalePath:
    if f.spec != traj.spec:
        raise ValueError("function and trajectory live on different groups")
    if abs(traj.horizon_T - cfg.horizon_T) > 0:
        raise ValueError("trajectory horizon does not match the configuration")
    spec = f.spec
    fd = _FunctionData.build(f, cfg.lam)
    T = cfg.horizon_T
    s = T - traj.times
    exact = fd.evaluate(traj.x, traj.y, s).sum(axis=1) if fd.coef.size else np.zeros(s.size, complex)
    L = s.size - 1
    xl, yl, yr = _left_state(traj)
    left = fd.evaluate(xl, yl, s[:-1])       # at node k-1, after it
    right = fd.evaluate(xl, yr, s[1:])       # just before node k
    grad = 1j * left @ fd.ky
    if spec.n == 0:
        # no torus: integrate the compensator in closed form
        mu = fd.mu
        pos = mu > 0
        w = np.zeros((L, mu.size), complex)
        phase = np.exp(1j * (xl @ fd.wx.T))
        w[:, pos] = fd.coef[pos] * phase[:, pos] * (np.exp(-np.outer(s[1:], mu[pos]))
                                                     - np.exp(-np.outer(s[:-1], mu[pos]))) / mu[pos]
        drift = -0.5 * cfg.lam * (w @ fd.s2)
    else:
        h = np.diff(traj.times)[:, None]
        drift = -0.25 * cfg.lam * h * (left @ fd.s2 + right @ fd.s2)
    axis = traj.jump_axis[1:]
    has = axis >= 0
    x2r, x0r = right @ fd.s2, right @ fd.s0
    jx2 = np.zeros(L, complex)
    jx0 = np.zeros(L, complex)
    jx2[has] = x2r[has, axis[has]]
    jx0[has] = x0r[has, axis[has]]
    return MartingalePath(traj, traj.times, exact, complex(exact[0]) if exact.size else 0j,
                          grad.reshape(L, spec.n), np.diff(traj.y, axis=0), drift.reshape(L, spec.m),
                          jx2, jx0)


def transform_martingale(path: MartingalePath, alpha: CoefficientMatrix) -> MartingalePath:
    """The martingale transform by the block matrix of ``alpha``; starts at ``M_0``."""
    if path.alpha is not None:
        raise ValueError("path is already transformed; build from the untransformed martingale")
    alpha.check(path.traj.spec)
    return replace(path, alpha=alpha)


def covariation(path_f: MartingalePath, path_g: MartingalePath) -> np.ndarray:
    """Running bracket ``[M^f, conj M^g]`` from the jump and Brownian tables."""
    if path_f.traj is not path_g.traj and not (
            np.array_equal(path_f.times, path_g.times)
            and np.array_equal(path_f.traj.jump_axis, path_g.traj.jump_axis)
            and np.array_equal(path_f.dy, path_g.dy)):
        raise ValueError("martingales are driven by different trajectories")
    jump = path_f.jump_increments * np.conj(path_g.jump_increments)
    h = np.diff(path_f.times)
    cont = 2.0 * h * np.sum(path_f.continuous_integrand * np.conj(path_g.continuous_integrand), axis=1)
    return np.concatenate([[0], np.cumsum(jump + cont)])


def subordination_gap(path_f: MartingalePath, alpha: CoefficientMatrix) -> np.ndarray:
    """``norm2(alpha)^2 [M^f] - [M^alpha]`` along the path."""
    transformed = transform_martingale(path_f, alpha)
    return alpha.norm2 ** 2 * path_f.quadratic_variation() - transformed.quadratic_variation()


def choi_gap(path_f: MartingalePath, alpha: CoefficientMatrix, a: float, b: float) -> np.ndarray:
    """``[Y - c X] - [r X]`` with ``X = M^f``, ``Y = M^alpha``, ``c = (a+b)/2``, ``r = (b-a)/2``.

    For real data with ``a I <= A <= b I`` every increment is ``<= 0``.
    """
    Y = transform_martingale(path_f, alpha)
    c, r = 0.5 * (a + b), 0.5 * (b - a)
    dj = Y.jump_increments - c * path_f.jump_increments
    dv = Y.continuous_integrand - c * path_f.continuous_integrand
    h = np.diff(path_f.times)
    bracket_diff = np.abs(dj) ** 2 + 2.0 * h * np.sum(np.abs(dv) ** 2, axis=1)
    bracket_x = np.abs(path_f.jump_increments) ** 2 + 2.0 * h * np.sum(np.abs(path_f.grad_y) ** 2, axis=1)
    return np.concatenate([[0], np.cumsum(bracket_diff - r * r * bracket_x)])


# ensembles

@dataclass(frozen=True, eq=False)
class EnsembleResult:
    """Per-path summaries, in path-index order."""

    spec: GroupSpec
    cfg: SimConfig
    m0: np.ndarray           # M_0
    mT: np.ndarray           # f(Z_T) = M_T
    maT: np.ndarray          # transformed martingale at T
    gT: np.ndarray           # g(Z_T)
    euler_residual: np.ndarray
    qv_f: np.ndarray
    qv_a: np.ndarray
    gap_min: np.ndarray      # smallest subordination-gap increment
    choi_max: np.ndarray     # largest Choi-gap increment (nan if not requested)
    realized_qv: np.ndarray  # sum of squared increments of P_{T-t} f(Z_t) over nodes
    gap_time: np.ndarray     # forward time at which the smallest gap increment ends
    n_jumps: np.ndarray
    xT_flat: np.ndarray
    yT: np.ndarray

    @property
    def n_paths(self) -> int:
        return self.m0.size


class _Plan:
    """Everything the kernel needs, prepared once per ensemble."""

    def __init__(self, spec, cfg, f, g, alpha, z0, choi):
        self.spec, self.cfg = spec, cfg
        self.stationary, self.x0, self.y0 = _z0_arrays(spec, z0)
        self.fd = _FunctionData.build(f, cfg.lam)
        self.gd = _FunctionData.build(g, cfg.lam)
        self.alpha = alpha
        if choi is None:
            self.choi_c, self.choi_r = 0.0, -1.0
        else:
            a, b = choi
            self.choi_c, self.choi_r = 0.5 * (a + b), 0.5 * (b - a)
        self.K = spec.band_limit if spec.n else 0
        W = 2 * self.K + 1
        Wn = W ** spec.n
        # only torus frequencies present in f enter the tables
        per_q = f.coeffs.reshape(spec.cyclic_orders + (Wn,))
        self.active = np.flatnonzero(np.any(per_q != 0, axis=tuple(range(spec.m)))) if spec.m \
            else np.flatnonzero(per_q != 0)
        digits = np.zeros((Wn, spec.n), np.int64)
        if spec.n:
            digits[:] = np.array(np.unravel_index(np.arange(Wn), (W,) * spec.n)).T
        self.digits = np.ascontiguousarray(digits[self.active]).astype(np.int64)
        self.kyv = (self.digits - self.K).astype(float)
        self.strides = np.array([int(np.prod(spec.cyclic_orders[i + 1:])) for i in range(spec.m)], np.int64)
        self.ug, self.F = _kernels.u_grid(float(cfg.horizon_T), float(cfg.dt), int(cfg.refine), spec.n)
        self.tab = self._tables(per_q)

    def _tables(self, per_q: np.ndarray) -> np.ndarray:
        """Time-decayed partial sums over cyclic frequencies, for every grid time and x."""
        spec, cfg = self.spec, self.cfg
        grid_s = self.ug.copy() if self.stationary else cfg.horizon_T - self.ug
        if not self.stationary:
            grid_s[-1] = 0.0
        G1, A = grid_s.size, self.active.size
        entries = G1 * spec.size_x * A * (1 + spec.m)
        if entries > TABLE_MAX_ENTRIES:
            raise ValueError(f"evaluation table would hold {entries} entries; reduce horizon/dt or band limit")
        shape = spec.cyclic_orders + (A,)
        c = per_q[..., self.active]
        mu = generator_symbols(spec, cfg.lam).reshape(spec.cyclic_orders + (-1,))[..., self.active]
        symbols = [np.ones(spec.cyclic_orders + (1,))] + [
            (2 * np.cos(th) - 2).reshape(th.shape[:spec.m] + (1,)) for th in spec.angle_grids()]
        tab = np.empty((G1, spec.size_x, A, 1 + spec.m), complex)
        axes = tuple(range(1, spec.m + 1))
        chunk = max(1, 2_000_000 // max(1, spec.size_x * A))
        for start in range(0, G1, chunk):
            sl = slice(start, min(G1, start + chunk))
            base = c[None] * np.exp(-grid_s[sl].reshape((-1,) + (1,) * len(shape)) * mu[None])
            for ci, sym in enumerate(symbols):
                arr = base * sym[None]
                vals = np.fft.ifftn(arr, axes=axes, norm="forward") if spec.m else arr
                tab[sl, :, :, ci] = vals.reshape(vals.shape[0], spec.size_x, A)
        return tab

    def run(self, p0: int, p1: int) -> dict:
        spec, cfg = self.spec, self.cfg
        P = p1 - p0
        out_c = np.zeros((P, 5), complex)
        out_r = np.zeros((P, 6))
        out_i = np.zeros((P, 2), np.int64)
        out_y = np.zeros((P, spec.n))
        _kernels.ensemble_kernel(
            np.array(spec.cyclic_orders, np.int64), spec.n, float(cfg.lam), float(cfg.horizon_T),
            self.ug, int(self.F), np.uint64(cfg.master_seed), p0, p1, self.stationary,
            self.x0, self.y0, *self.fd.args(), *self.gd.args(),
            self.alpha.alpha_x.copy(), self.alpha.alpha_y.copy(), float(self.alpha.norm2 ** 2),
            float(self.choi_c), float(self.choi_r), self.tab, self.K, self.digits, self.kyv,
            self.strides, out_c, out_r, out_i, out_y)
        return {"c": out_c, "r": out_r, "i": out_i, "y": out_y}


_WORKER_PLAN: _Plan | None = None


def _worker_run(bounds):
    return _WORKER_PLAN.run(*bounds)


def default_workers() -> int:
    """Physical core count, falling back to logical cores."""
    return max(1, psutil.cpu_count(logical=False) or os.cpu_count() or 1)


def run_ensemble(f: SpectralFunction, alpha: CoefficientMatrix, cfg: SimConfig,
                 g: SpectralFunction | None = None, z0: GroupPoint | str = "stationary",
                 choi: tuple[float, float] | None = None, workers: int = 1,
                 paths: tuple[int, int] | None = None) -> EnsembleResult:
    """Simulate ``cfg.n_paths`` paths (or ``paths=(p0, p1)``) and return per-path summaries.

    Results do not depend on ``workers``: each path uses its own keyed streams
    and chunks are reassembled in path order.
    """
    global _WORKER_PLAN
    spec = f.spec
    alpha.check(spec)
    g = SpectralFunction.zeros(spec) if g is None else g
    f._check(g)
    p0, p1 = (0, cfg.n_paths) if paths is None else paths
    if p1 <= p0:
        raise ValueError("ensemble needs at least one path")
    plan = _Plan(spec, cfg, f, g, alpha, z0, choi)
    workers = max(1, int(workers))
    if workers == 1 or p1 - p0 < 2 * workers:
        parts = [plan.run(p0, p1)]
    else:
        n_chunks = 4 * workers
        edges = np.linspace(p0, p1, n_chunks + 1).astype(int)
        bounds = [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]
        _WORKER_PLAN = plan
        try:
            with ProcessPoolExecutor(workers, mp_context=mp.get_context("fork")) as ex:
                parts = list(ex.map(_worker_run, bounds))
        finally:
            _WORKER_PLAN = None
    c = np.concatenate([p["c"] for p in parts])
    r = np.concatenate([p["r"] for p in parts])
    i = np.concatenate([p["i"] for p in parts])
    y = np.concatenate([p["y"] for p in parts])
    return EnsembleResult(spec, cfg, c[:, 0], c[:, 1], c[:, 2], c[:, 3], c[:, 4], r[:, 0], r[:, 1],
                          r[:, 2], r[:, 3], r[:, 4], r[:, 5], i[:, 0], i[:, 1], y)
