"""Differential, Riesz and heat operators as Fourier multipliers.

Every operator here is diagonal on characters. With ``theta_i = 2 pi k_i / N_i``:

    X_i^+  -> e^{i theta_i} - 1          X_i^-  -> 1 - e^{-i theta_i}
    X_i^0  -> 2i sin(theta_i)             X_i^2  -> 2 cos(theta_i) - 2
    Y_j    -> i k_j                       -Delta -> sum 4 sin^2(theta_i/2) + sum k_j^2

Riesz-type multipliers are set to zero at the zero frequency, i.e. they act on
mean-zero functions. :func:`brute_force_matrix` rebuilds the second-order
transform from finite-difference and differentiation matrices without any FFT
and serves as the oracle for the multiplier route.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .group import (GroupPoint, GroupSpec, SpectralFunction, coeffs_to_grid,
                    evaluate, grid_shape, grid_to_coeffs)

BRUTE_FORCE_MAX_GRID = 4096


@dataclass(frozen=True, eq=False)
class CoefficientMatrix:
    """Coefficients ``alpha_x`` (one per cyclic axis) and ``alpha_y`` (n x n)."""

    alpha_x: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))
    alpha_y: np.ndarray = field(default_factory=lambda: np.zeros((0, 0), complex))

    def __post_init__(self):
        ax = np.array(self.alpha_x, dtype=complex).reshape(-1)
        ay = np.array(self.alpha_y, dtype=complex)
        if ay.size == 0:
            ay = ay.reshape(0, 0)
        if ay.ndim != 2 or ay.shape[0] != ay.shape[1]:
            raise ValueError(f"alpha_y must be square, got shape {ay.shape}")
        ax.setflags(write=False)
        ay.setflags(write=False)
        object.__setattr__(self, "alpha_x", ax)
        object.__setattr__(self, "alpha_y", ay)

    @property
    def m(self) -> int:
        return self.alpha_x.size

    @property
    def n(self) -> int:
        return self.alpha_y.shape[0]

    def check(self, spec: GroupSpec) -> "CoefficientMatrix":
        if self.m != spec.m or self.n != spec.n:
            raise ValueError(f"alpha has shape (m={self.m}, n={self.n}); group has (m={spec.m}, n={spec.n})")
        return self

    @property
    def norm2(self) -> float:
        """Operator 2-norm of the block matrix: ``max(|alpha_i^x|, ||alpha^y||_2)``."""
        parts = [np.abs(self.alpha_x).max()] if self.m else []
        if self.n:
            parts.append(np.linalg.norm(self.alpha_y, 2))
        return float(max(parts)) if parts else 0.0

    def block(self) -> np.ndarray:
        """The ``(2m+n)``-square block matrix ``diag(alpha_x, alpha_x, alpha_y)``."""
        m, n = self.m, self.n
        A = np.zeros((2 * m + n, 2 * m + n), complex)
        A[np.arange(m), np.arange(m)] = self.alpha_x
        A[np.arange(m, 2 * m), np.arange(m, 2 * m)] = self.alpha_x
        A[2 * m:, 2 * m:] = self.alpha_y
        return A

    def apply(self, vec: np.ndarray) -> np.ndarray:
        """Multiply augmented vectors stacked on axis 0 (shape (2m+n, ...)) by the block matrix."""
        m = self.m
        out = np.empty(np.shape(vec), complex)
        xs = self.alpha_x.reshape((m,) + (1,) * (np.ndim(vec) - 1))
        out[:m] = xs * vec[:m]
        out[m:2 * m] = xs * vec[m:2 * m]
        out[2 * m:] = np.tensordot(self.alpha_y, vec[2 * m:], axes=(1, 0))
        return out

    def is_real(self) -> bool:
        return bool(np.all(self.alpha_x.imag == 0) and np.all(self.alpha_y.imag == 0))

    def hermitian_bounds(self) -> tuple[float, float] | None:
        """``(a, b)`` with ``a I <= A <= b I`` when the block matrix is Hermitian, else None."""
        A = self.block()
        if not np.allclose(A, A.conj().T, rtol=0, atol=1e-14):
            return None
        ev = np.linalg.eigvalsh(A)
        return float(ev[0]), float(ev[-1])

    def as_dict(self) -> dict:
        pair = lambda z: [float(z.real), float(z.imag)]
        return {"x": [pair(z) for z in self.alpha_x],
                "y": [[pair(z) for z in row] for row in self.alpha_y]}

    @classmethod
    def identity(cls, spec: GroupSpec) -> "CoefficientMatrix":
        return cls(np.ones(spec.m), np.eye(spec.n))

    @classmethod
    def zero(cls, spec: GroupSpec) -> "CoefficientMatrix":
        return cls(np.zeros(spec.m), np.zeros((spec.n, spec.n)))

    @classmethod
    def single_x(cls, spec: GroupSpec, i: int) -> "CoefficientMatrix":
        ax = np.zeros(spec.m)
        ax[i] = 1.0
        return cls(ax, np.zeros((spec.n, spec.n)))

    @classmethod
    def single_y(cls, spec: GroupSpec, j: int, k: int) -> "CoefficientMatrix":
        ay = np.zeros((spec.n, spec.n))
        ay[j, k] = 1.0
        return cls(np.zeros(spec.m), ay)

    @classmethod
    def random(cls, spec: GroupSpec, rng: np.random.Generator, *, real: bool = False,
               hermitian: bool = False) -> "CoefficientMatrix":
        def draw(shape):
            z = rng.standard_normal(shape)
            return z if real else z + 1j * rng.standard_normal(shape)
        ax, ay = draw(spec.m), draw((spec.n, spec.n))
        if hermitian:
            ax = ax.real
            ay = 0.5 * (ay + ay.conj().T)
        return cls(ax, ay)

    def __repr__(self) -> str:
        return f"CoefficientMatrix(alpha_x={self.alpha_x.tolist()}, alpha_y={self.alpha_y.tolist()})"


@dataclass(frozen=True, eq=False)
class Symbol:
    """Per-frequency values of a named multiplier operator."""

    name: str
    spec: GroupSpec
    values: np.ndarray

    def __post_init__(self):
        v = np.broadcast_to(np.asarray(self.values, complex), self.spec.coeff_shape).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def __call__(self, xi) -> complex:
        return complex(self.values[self.spec.index_of(xi)])

    def __matmul__(self, other: "Symbol") -> "Symbol":
        """Composition of operators (pointwise product of symbols)."""
        if other.spec != self.spec:
            raise ValueError("symbols live on different groups")
        return Symbol(f"{self.name}*{other.name}", self.spec, self.values * other.values)

    def adjoint(self) -> "Symbol":
        return Symbol(f"({self.name})^*", self.spec, np.conj(self.values))

    def to_csv(self, path) -> None:
        spec = self.spec
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([f"kx{i + 1}" for i in range(spec.m)] + [f"ky{j + 1}" for j in range(spec.n)]
                       + ["re", "im"])
            for idx, v in np.ndenumerate(self.values):
                xi = spec.frequency_at(idx)
                w.writerow(list(xi.kx) + list(xi.ky) + [repr(v.real), repr(v.imag)])


# raw symbol arrays

def _angles(spec: GroupSpec, i: int) -> np.ndarray:
    return spec.angle_grids()[i]


def laplacian_symbols(spec: GroupSpec) -> np.ndarray:
    """Array of ``lambda(xi)``, the symbol of ``-Delta_z``."""
    lam = np.zeros(spec.coeff_shape)
    for th in spec.angle_grids():
        lam = lam + 4.0 * np.sin(th / 2) ** 2
    for k in spec.torus_frequency_grids():
        lam = lam + k ** 2
    return lam


def laplacian_symbol(spec: GroupSpec, xi) -> float:
    kx, ky = spec.check_frequency(xi)
    return float(sum(4.0 * np.sin(np.pi * k / N) ** 2 for k, N in zip(kx, spec.cyclic_orders))
                 + sum(k * k for k in ky))


def _inv_sqrt_laplacian(spec: GroupSpec) -> np.ndarray:
    lam = laplacian_symbols(spec)
    out = np.zeros_like(lam)
    np.divide(1.0, np.sqrt(lam), out=out, where=lam > 0)
    return out


def gradient_symbols(spec: GroupSpec) -> np.ndarray:
    """Symbols of the augmented gradient, stacked: (X^+_1..X^+_m, X^-_1..X^-_m, Y_1..Y_n)."""
    shape = spec.coeff_shape
    out = np.zeros((2 * spec.m + spec.n,) + shape, complex)
    for i, th in enumerate(spec.angle_grids()):
        out[i] = np.exp(1j * th) - 1
        out[spec.m + i] = 1 - np.exp(-1j * th)
    for j, k in enumerate(spec.torus_frequency_grids()):
        out[2 * spec.m + j] = 1j * k
    return out


def riesz2_symbols(spec: GroupSpec, alpha: CoefficientMatrix) -> np.ndarray:
    """Array of ``m_alpha(xi)``; zero at the zero frequency."""
    alpha.check(spec)
    num = np.zeros(spec.coeff_shape, complex)
    for i, th in enumerate(spec.angle_grids()):
        num = num + alpha.alpha_x[i] * (2 * np.cos(th) - 2)
    ks = spec.torus_frequency_grids()
    for j in range(spec.n):
        for k in range(spec.n):
            if alpha.alpha_y[j, k] != 0:
                num = num + alpha.alpha_y[j, k] * (1j * ks[j]) * (1j * ks[k])
    lam = laplacian_symbols(spec)
    out = np.zeros_like(num)
    np.divide(num, lam, out=out, where=lam > 0)
    return out


def riesz2_multiplier(spec: GroupSpec, alpha: CoefficientMatrix, xi) -> complex:
    return complex(riesz2_symbols(spec, alpha)[spec.index_of(xi)])


# named symbols

def identity_symbol(spec: GroupSpec) -> Symbol:
    return Symbol("I", spec, np.ones(spec.coeff_shape))


def zero_symbol(spec: GroupSpec) -> Symbol:
    return Symbol("0", spec, np.zeros(spec.coeff_shape))


def x_plus(spec: GroupSpec, i: int) -> Symbol:
    return Symbol(f"X{i + 1}+", spec, np.exp(1j * _angles(spec, i)) - 1)


def x_minus(spec: GroupSpec, i: int) -> Symbol:
    return Symbol(f"X{i + 1}-", spec, 1 - np.exp(-1j * _angles(spec, i)))


def x_zero(spec: GroupSpec, i: int) -> Symbol:
    return Symbol(f"X{i + 1}0", spec, 2j * np.sin(_angles(spec, i)))


def x_square(spec: GroupSpec, i: int) -> Symbol:
    return Symbol(f"X{i + 1}2", spec, 2 * np.cos(_angles(spec, i)) - 2)


def y_derivative(spec: GroupSpec, j: int) -> Symbol:
    return Symbol(f"Y{j + 1}", spec, 1j * spec.torus_frequency_grids()[j])


def laplacian_x(spec: GroupSpec) -> Symbol:
    v = sum((2 * np.cos(th) - 2 for th in spec.angle_grids()), np.zeros(spec.coeff_shape))
    return Symbol("Dx", spec, v)


def laplacian_y(spec: GroupSpec) -> Symbol:
    v = sum((-(k ** 2) for k in spec.torus_frequency_grids()), np.zeros(spec.coeff_shape))
    return Symbol("Dy", spec, v)


def laplacian_z(spec: GroupSpec) -> Symbol:
    return Symbol("Dz", spec, -laplacian_symbols(spec))


def riesz_plus(spec: GroupSpec, i: int) -> Symbol:
    return Symbol(f"R{i + 1}+", spec, x_plus(spec, i).values * _inv_sqrt_laplacian(spec))


def riesz_minus(spec: GroupSpec, i: int) -> Symbol:
    return Symbol(f"R{i + 1}-", spec, x_minus(spec, i).values * _inv_sqrt_laplacian(spec))


def riesz_y(spec: GroupSpec, j: int) -> Symbol:
    return Symbol(f"R{j + 1}", spec, y_derivative(spec, j).values * _inv_sqrt_laplacian(spec))


def riesz_square(spec: GroupSpec, i: int) -> Symbol:
    """``R_i^2 = R_i^+ R_i^-``, real and nonpositive."""
    return riesz_plus(spec, i) @ riesz_minus(spec, i)


def riesz_yy(spec: GroupSpec, j: int, k: int) -> Symbol:
    return riesz_y(spec, j) @ riesz_y(spec, k)


def riesz2_symbol(spec: GroupSpec, alpha: CoefficientMatrix) -> Symbol:
    return Symbol("R2_alpha", spec, riesz2_symbols(spec, alpha))


def heat_symbol(spec: GroupSpec, t: float) -> Symbol:
    if t < 0:
        raise ValueError(f"heat time must be >= 0, got {t}")
    return Symbol(f"P{t}", spec, np.exp(-t * laplacian_symbols(spec)))


def apply_multiplier(sym: Symbol, f: SpectralFunction) -> SpectralFunction:
    if sym.spec != f.spec:
        raise ValueError("symbol and function live on different groups")
    return SpectralFunction(f.spec, sym.values * f.coeffs)


def riesz2(f: SpectralFunction, alpha: CoefficientMatrix) -> SpectralFunction:
    return SpectralFunction(f.spec, riesz2_symbols(f.spec, alpha) * f.coeffs)


def heat_extension(f: SpectralFunction, t: float) -> SpectralFunction:
    """``P_t f = e^{t Delta_z} f``."""
    return apply_multiplier(heat_symbol(f.spec, t), f)


# augmented gradient and the tangent-plane scalar product

@dataclass(frozen=True, eq=False)
class AugmentedGradient:
    plus: np.ndarray
    minus: np.ndarray
    y: np.ndarray

    @property
    def x2(self) -> np.ndarray:
        """``X_i^2 = X_i^+ - X_i^-`` values."""
        return self.plus - self.minus

    @property
    def x0(self) -> np.ndarray:
        """``X_i^0 = X_i^+ + X_i^-`` values."""
        return self.plus + self.minus

    def vector(self) -> np.ndarray:
        return np.concatenate([self.plus, self.minus, self.y])


def gradient_at(f: SpectralFunction, t: float, z: GroupPoint) -> AugmentedGradient:
    spec = f.spec
    pt = heat_extension(f, t)
    vals = np.array([evaluate(SpectralFunction(spec, s * pt.coeffs), z)
                     for s in gradient_symbols(spec)], complex)
    m = spec.m
    return AugmentedGradient(vals[:m], vals[m:2 * m], vals[2 * m:])


def tangent_inner(u: np.ndarray, v: np.ndarray, m: int) -> np.ndarray:
    """Scalar product of augmented vectors stacked on axis 0.

    The 2m discrete components carry weight 1/2, the continuous ones weight 1.
    Linear in ``u``, conjugate-linear in ``v``.
    """
    u = np.asarray(u)
    w = np.ones(u.shape[0])
    w[:2 * m] = 0.5
    w = w.reshape((-1,) + (1,) * (u.ndim - 1))
    return np.sum(w * u * np.conj(v), axis=0)


def _heat_time_weight(lam: np.ndarray, horizon: float | None) -> np.ndarray:
    """``2 * int_0^T e^{-2 lam t} dt`` in closed form (T = infinity when horizon is None)."""
    out = np.zeros_like(lam)
    pos = lam > 0
    if horizon is None:
        out[pos] = 1.0 / lam[pos]
    else:
        out[pos] = -np.expm1(-2 * lam[pos] * horizon) / lam[pos]
    return out


def gradient_energy_pairing(f: SpectralFunction, g: SpectralFunction,
                            alpha: CoefficientMatrix | None = None,
                            horizon: float | None = None) -> complex:
    """``2 int_0^T (A grad P_t f, grad P_t g) dt`` summed over the group, per frequency.

    Without ``alpha`` the block matrix is the identity.
    """
    spec = f.spec
    f._check(g)
    sig = gradient_symbols(spec)
    asig = sig if alpha is None else alpha.check(spec).apply(sig)
    density = tangent_inner(asig, sig, spec.m)
    weight = _heat_time_weight(laplacian_symbols(spec), horizon)
    return complex(spec.size_x * np.sum(density * weight * f.coeffs * np.conj(g.coeffs)))


# brute-force oracle

def _cyclic_difference_matrices(N: int) -> tuple[np.ndarray, np.ndarray]:
    shift = np.roll(np.eye(N), 1, axis=1)  # (S f)(x) = f(x+1)
    return shift - np.eye(N), np.eye(N) - shift.T


def _fourier_differentiation_matrix(R: int) -> np.ndarray:
    if R % 2 == 0:
        raise ValueError("the differentiation oracle needs an odd torus resolution")
    d = np.subtract.outer(np.arange(R), np.arange(R))
    D = np.zeros((R, R))
    off = d != 0
    D[off] = 0.5 * (-1.0) ** d[off] / np.sin(d[off] * np.pi / R)
    return D


def _lift(ops: Sequence[np.ndarray], axis: int, mat: np.ndarray) -> np.ndarray:
    out = np.ones((1, 1))
    for a, size in enumerate(ops):
        out = np.kron(out, mat if a == axis else np.eye(size))
    return out


def brute_force_matrix(spec: GroupSpec, alpha: CoefficientMatrix, torus_res: int | None = None) -> np.ndarray:
    """Dense matrix of the second-order transform acting on grid samples.

    Built from shift matrices (discrete parts), the trigonometric differentiation
    matrix (torus parts) and the pseudo-inverse of ``-Delta`` on mean-zero
    samples. No FFTs are used. ``torus_res`` must be odd; by default ``2K+1``.
    """
    alpha.check(spec)
    R = 2 * spec.band_limit + 1 if torus_res is None else int(torus_res)
    sizes = list(grid_shape(spec, R))
    total = int(np.prod(sizes))
    if total > BRUTE_FORCE_MAX_GRID:
        raise ValueError(f"grid of {total} points exceeds the oracle limit {BRUTE_FORCE_MAX_GRID}")
    lap = np.zeros((total, total))
    num = np.zeros((total, total), complex)
    for i, N in enumerate(spec.cyclic_orders):
        xp, xm = _cyclic_difference_matrices(N)
        second = _lift(sizes, i, xp @ xm)
        lap += second
        num += alpha.alpha_x[i] * second
    if spec.n:
        D = _fourier_differentiation_matrix(R)
        Ds = [_lift(sizes, spec.m + j, D) for j in range(spec.n)]
        for j in range(spec.n):
            lap += Ds[j] @ Ds[j]
            for k in range(spec.n):
                if alpha.alpha_y[j, k] != 0:
                    num += alpha.alpha_y[j, k] * (Ds[j] @ Ds[k])
    proj = np.full((total, total), 1.0 / total)
    pinv = np.linalg.inv(-lap + proj) - proj
    return num @ pinv


def multiplier_matrix(spec: GroupSpec, alpha: CoefficientMatrix, torus_res: int | None = None) -> np.ndarray:
    """Same operator as :func:`brute_force_matrix`, via FFT and the symbol table."""
    R = 2 * spec.band_limit + 1 if torus_res is None else int(torus_res)
    if spec.n and R % 2 == 0:
        raise ValueError("torus resolution must be odd")
    grid_spec = GroupSpec(spec.cyclic_orders, spec.n, (R - 1) // 2 if spec.n else 0)
    sizes = grid_shape(grid_spec, R)
    total = int(np.prod(sizes))
    sym = riesz2_symbols(grid_spec, CoefficientMatrix(alpha.alpha_x, alpha.alpha_y))
    cols = np.empty((total, total), complex)
    for c in range(total):
        delta = np.zeros(total)
        delta[c] = 1.0
        coeffs = grid_to_coeffs(grid_spec, delta.reshape(sizes))
        cols[:, c] = coeffs_to_grid(grid_spec, sym * coeffs, R).reshape(-1)
    return cols
