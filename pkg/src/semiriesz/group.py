"""Semi-discrete groups ``prod Z/N_i x T^n`` and band-limited functions on them.

Functions are stored as a dense array of Fourier coefficients with shape
``(N_1, ..., N_m, 2K+1, ..., 2K+1)``. The torus index ``j`` on each continuous
axis stands for the integer frequency ``j - K``.

The measure is counting measure on the discrete factor times normalized Haar
measure on the torus, so ``<f, g> = |G_x| * sum_xi c_f(xi) conj(c_g(xi))``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Mapping, NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi


class Frequency(NamedTuple):
    kx: tuple[int, ...]
    ky: tuple[int, ...]


@dataclass(frozen=True)
class GroupSpec:
    """The group ``Z/N_1 x ... x Z/N_m x T^n`` with torus band limit ``K``."""

    cyclic_orders: tuple[int, ...] = ()
    torus_dim: int = 0
    band_limit: int = 0

    def __post_init__(self):
        orders = tuple(int(N) for N in self.cyclic_orders)
        object.__setattr__(self, "cyclic_orders", orders)
        object.__setattr__(self, "torus_dim", int(self.torus_dim))
        object.__setattr__(self, "band_limit", int(self.band_limit))
        if len(orders) + self.torus_dim < 1:
            raise ValueError("group needs at least one cyclic factor or torus axis")
        if any(N < 2 for N in orders):
            raise ValueError(f"cyclic orders must be >= 2, got {orders}")
        if self.torus_dim < 0 or self.band_limit < 0:
            raise ValueError("torus_dim and band_limit must be nonnegative")
        if self.torus_dim >= 1 and self.band_limit < 1:
            raise ValueError("band_limit must be >= 1 when the group has a torus factor")

    @property
    def m(self) -> int:
        return len(self.cyclic_orders)

    @property
    def n(self) -> int:
        return self.torus_dim

    @property
    def size_x(self) -> int:
        return math.prod(self.cyclic_orders)

    @property
    def torus_width(self) -> int:
        """Number of torus frequencies per axis, ``2K+1`` (1 without a torus)."""
        return 2 * self.band_limit + 1 if self.n else 1

    @property
    def coeff_shape(self) -> tuple[int, ...]:
        return self.cyclic_orders + (2 * self.band_limit + 1,) * self.n

    @property
    def n_freqs(self) -> int:
        return math.prod(self.coeff_shape)

    def zero_frequency(self) -> Frequency:
        return Frequency((0,) * self.m, (0,) * self.n)

    def frequencies(self) -> Iterator[Frequency]:
        """All frequencies in lexicographic (row-major) order."""
        for idx in product(*(range(s) for s in self.coeff_shape)):
            yield self.frequency_at(idx)

    def frequency_at(self, idx: Sequence[int]) -> Frequency:
        K = self.band_limit
        return Frequency(tuple(int(i) for i in idx[: self.m]),
                         tuple(int(i) - K for i in idx[self.m:]))

    def index_of(self, xi: Frequency) -> tuple[int, ...]:
        kx, ky = self.check_frequency(xi)
        return tuple(k % N for k, N in zip(kx, self.cyclic_orders)) + tuple(
            k + self.band_limit for k in ky)

    def check_frequency(self, xi) -> tuple[tuple[int, ...], tuple[int, ...]]:
        kx, ky = tuple(xi[0]), tuple(xi[1])
        if len(kx) != self.m or len(ky) != self.n:
            raise ValueError(f"frequency {xi} does not match group with m={self.m}, n={self.n}")
        if any(abs(k) > self.band_limit for k in ky):
            raise ValueError(f"torus frequency {ky} exceeds band limit {self.band_limit}")
        return kx, ky

    def negate(self, xi: Frequency) -> Frequency:
        kx, ky = self.check_frequency(xi)
        return Frequency(tuple((-k) % N for k, N in zip(kx, self.cyclic_orders)),
                         tuple(-k for k in ky))

    def angle_grids(self) -> list[np.ndarray]:
        """``theta_i = 2 pi k_i / N_i`` for each cyclic axis, broadcastable to coeff_shape."""
        out = []
        dims = len(self.coeff_shape)
        for i, N in enumerate(self.cyclic_orders):
            shape = [1] * dims
            shape[i] = N
            out.append((TWO_PI * np.arange(N) / N).reshape(shape))
        return out

    def torus_frequency_grids(self) -> list[np.ndarray]:
        """Integer torus frequencies ``k_j`` for each torus axis, broadcastable to coeff_shape."""
        out = []
        dims = len(self.coeff_shape)
        K = self.band_limit
        for j in range(self.n):
            shape = [1] * dims
            shape[self.m + j] = 2 * K + 1
            out.append(np.arange(-K, K + 1, dtype=float).reshape(shape))
        return out

    def as_dict(self) -> dict:
        return {"cyclic_orders": list(self.cyclic_orders), "torus_dim": self.n,
                "band_limit": self.band_limit}


@dataclass(frozen=True)
class GroupPoint:
    x: tuple[int, ...] = ()
    y: tuple[float, ...] = ()

    @classmethod
    def make(cls, spec: GroupSpec, x: Sequence[int] = (), y: Sequence[float] = ()) -> "GroupPoint":
        """Build a point, wrapping coordinates into ``Z/N_i`` and ``[0, 2 pi)``."""
        x, y = tuple(x), tuple(y)
        if len(x) != spec.m or len(y) != spec.n:
            raise ValueError(f"point dims ({len(x)}, {len(y)}) do not match group ({spec.m}, {spec.n})")
        return cls(tuple(int(v) % N for v, N in zip(x, spec.cyclic_orders)),
                   tuple(float(v) % TWO_PI for v in y))

    def shifted(self, spec: GroupSpec, axis: int, sign: int) -> "GroupPoint":
        x = list(self.x)
        x[axis] = (x[axis] + sign) % spec.cyclic_orders[axis]
        return GroupPoint(tuple(x), self.y)


class SpectralFunction:
    """Band-limited function on a semi-discrete group, held by its Fourier coefficients."""

    __slots__ = ("spec", "coeffs")

    def __init__(self, spec: GroupSpec, coeffs: np.ndarray):
        arr = np.array(coeffs, dtype=complex)
        if arr.shape != spec.coeff_shape:
            raise ValueError(f"coefficient shape {arr.shape} != {spec.coeff_shape}")
        arr.setflags(write=False)
        self.spec = spec
        self.coeffs = arr

    # constructors
    @classmethod
    def zeros(cls, spec: GroupSpec) -> "SpectralFunction":
        return cls(spec, np.zeros(spec.coeff_shape, complex))

    @classmethod
    def constant(cls, spec: GroupSpec, value: complex = 1.0) -> "SpectralFunction":
        c = np.zeros(spec.coeff_shape, complex)
        c[spec.index_of(spec.zero_frequency())] = value
        return cls(spec, c)

    @classmethod
    def from_terms(cls, spec: GroupSpec, terms: Mapping | Sequence) -> "SpectralFunction":
        """From ``{(kx, ky): amplitude}`` or a sequence of ``((kx, ky), amplitude)``."""
        items = terms.items() if isinstance(terms, Mapping) else terms
        c = np.zeros(spec.coeff_shape, complex)
        for xi, amp in items:
            c[spec.index_of(xi)] += amp
        return cls(spec, c)

    @classmethod
    def character(cls, spec: GroupSpec, kx=(), ky=(), amplitude: complex = 1.0) -> "SpectralFunction":
        return cls.from_terms(spec, {Frequency(tuple(kx), tuple(ky)): amplitude})

    @classmethod
    def random(cls, spec: GroupSpec, rng: np.random.Generator, *, real: bool = False,
               mean_zero: bool = True, n_terms: int | None = None) -> "SpectralFunction":
        """Random coefficients, standard complex Gaussian, optionally on a random subset."""
        c = rng.standard_normal(spec.coeff_shape) + 1j * rng.standard_normal(spec.coeff_shape)
        if n_terms is not None:
            mask = np.zeros(spec.n_freqs, bool)
            mask[rng.choice(spec.n_freqs, size=min(n_terms, spec.n_freqs), replace=False)] = True
            c = c * mask.reshape(spec.coeff_shape)
        f = cls(spec, c)
        if real:
            f = f.real_part()
        if mean_zero:
            f = project_mean_zero(f)
        return f

    # algebra
    def _check(self, other: "SpectralFunction"):
        if other.spec != self.spec:
            raise ValueError("functions live on different groups")

    def __add__(self, other: "SpectralFunction") -> "SpectralFunction":
        self._check(other)
        return SpectralFunction(self.spec, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        self._check(other)
        return SpectralFunction(self.spec, self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralFunction":
        return SpectralFunction(self.spec, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralFunction":
        return SpectralFunction(self.spec, -self.coeffs)

    def coeff(self, xi) -> complex:
        return complex(self.coeffs[self.spec.index_of(xi)])

    def terms(self, atol: float = 0.0) -> list[tuple[Frequency, complex]]:
        """Nonzero coefficients in lexicographic order."""
        idx = np.argwhere(np.abs(self.coeffs) > atol)
        return [(self.spec.frequency_at(i), complex(self.coeffs[tuple(i)])) for i in idx]

    def reflected(self) -> "SpectralFunction":
        """Coefficients of ``conj(f)``: ``c'(xi) = conj(c(-xi))``."""
        c = self.coeffs
        for ax in range(self.spec.m):
            c = np.roll(np.flip(c, axis=ax), 1, axis=ax)
        for ax in range(self.spec.m, c.ndim):
            c = np.flip(c, axis=ax)
        return SpectralFunction(self.spec, np.conj(c))

    def real_part(self) -> "SpectralFunction":
        return SpectralFunction(self.spec, 0.5 * (self.coeffs + self.reflected().coeffs))

    def is_real(self, atol: float = 1e-12) -> bool:
        return bool(np.allclose(self.coeffs, self.reflected().coeffs, rtol=0, atol=atol))

    def is_mean_zero(self, atol: float = 0.0) -> bool:
        return abs(self.coeff(self.spec.zero_frequency())) <= atol

    def __repr__(self) -> str:
        return f"SpectralFunction({self.spec}, {len(self.terms())} nonzero terms)"


def inner(f: SpectralFunction, g: SpectralFunction) -> complex:
    """``<f, g>`` under counting x normalized Haar measure, linear in ``f``."""
    f._check(g)
    return complex(f.spec.size_x * np.vdot(g.coeffs, f.coeffs))


def evaluate(f: SpectralFunction, z: GroupPoint) -> complex:
    spec = f.spec
    if len(z.x) != spec.m or len(z.y) != spec.n:
        raise ValueError(f"point dims ({len(z.x)}, {len(z.y)}) do not match group ({spec.m}, {spec.n})")
    return complex(evaluate_many(f, np.array([z.x], float).reshape(1, spec.m),
                                 np.array([z.y], float).reshape(1, spec.n))[0])


def evaluate_many(f: SpectralFunction, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Evaluate at P points given as arrays of shape (P, m) and (P, n)."""
    return character_sum(f.spec, f.coeffs, x, y)


def character_sum(spec: GroupSpec, coeffs: np.ndarray, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``sum_xi c(xi) chi_xi(z)`` over the nonzero coefficients, for P points."""
    flat = np.asarray(coeffs).reshape(-1)
    nz = np.flatnonzero(flat)
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    P = x.shape[0] if spec.m else y.shape[0]
    if nz.size == 0:
        return np.zeros(P, complex)
    idx = np.unravel_index(nz, spec.coeff_shape)
    phase = np.zeros((P, nz.size))
    for i, N in enumerate(spec.cyclic_orders):
        phase += np.outer(x[:, i], TWO_PI * idx[i] / N)
    for j in range(spec.n):
        phase += np.outer(y[:, j], idx[spec.m + j] - spec.band_limit)
    return np.exp(1j * phase) @ flat[nz]


def project_mean_zero(f: SpectralFunction) -> SpectralFunction:
    c = f.coeffs.copy()
    c[f.spec.index_of(f.spec.zero_frequency())] = 0.0
    return SpectralFunction(f.spec, c)


def _check_resolution(spec: GroupSpec, torus_res: int) -> int:
    if spec.n == 0:
        return 1
    torus_res = int(torus_res)
    if torus_res < 2 * spec.band_limit + 1:
        raise ValueError(f"torus_res={torus_res} < 2K+1={2 * spec.band_limit + 1}; samples would alias")
    return torus_res


def grid_shape(spec: GroupSpec, torus_res: int) -> tuple[int, ...]:
    return spec.cyclic_orders + (_check_resolution(spec, torus_res),) * spec.n


def grid_samples(f: SpectralFunction, torus_res: int = 0) -> np.ndarray:
    """Values on ``G_x x (uniform torus grid)``; shape (N_1..N_m, R..R), row-major order.

    Torus grid points are ``y = 2 pi l / R``. ``torus_res`` is ignored without a torus.
    """
    return coeffs_to_grid(f.spec, f.coeffs, torus_res)


def coeffs_to_grid(spec: GroupSpec, coeffs: np.ndarray, torus_res: int) -> np.ndarray:
    shape = grid_shape(spec, torus_res)
    if spec.n == 0:
        return np.fft.ifftn(coeffs, norm="forward") if spec.m else coeffs.copy()
    R, K = shape[-1], spec.band_limit
    padded = np.zeros(shape, complex)
    pos = np.arange(-K, K + 1) % R
    padded[(Ellipsis,) + np.ix_(*([pos] * spec.n))] = coeffs
    return np.fft.ifftn(padded, norm="forward")


def grid_to_coeffs(spec: GroupSpec, samples: np.ndarray) -> np.ndarray:
    """Band-limit projection of grid samples back to a coefficient array.

    Exact inverse of :func:`coeffs_to_grid` for band-limited data; otherwise the
    orthogonal projection of the trigonometric interpolant onto the band.
    """
    samples = np.asarray(samples, complex)
    if samples.shape[:spec.m] != spec.cyclic_orders or samples.ndim != spec.m + spec.n:
        raise ValueError(f"sample array shape {samples.shape} does not match {spec}")
    full = np.fft.fftn(samples, norm="forward")
    if spec.n == 0:
        return full
    R, K = samples.shape[-1], spec.band_limit
    _check_resolution(spec, R)
    pos = np.arange(-K, K + 1) % R
    return full[(Ellipsis,) + np.ix_(*([pos] * spec.n))]


# text table IO: one line per frequency, "kx1,kx2;ky1,ky2;re;im"

def format_coefficients(f: SpectralFunction, atol: float = 0.0) -> str:
    spec = f.spec
    lines = [f"# cyclic_orders={','.join(map(str, spec.cyclic_orders))} "
             f"torus_dim={spec.n} band_limit={spec.band_limit}"]
    for xi, c in f.terms(atol):
        lines.append(f"{','.join(map(str, xi.kx))};{','.join(map(str, xi.ky))};{c.real!r};{c.imag!r}")
    return "\n".join(lines) + "\n"


def parse_coefficients(spec: GroupSpec, text: str) -> SpectralFunction:
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(";")
        if len(parts) != 4:
            raise ValueError(f"line {lineno}: expected 'kx;ky;re;im', got {raw!r}")
        try:
            kx = tuple(int(v) for v in parts[0].split(",") if v.strip())
            ky = tuple(int(v) for v in parts[1].split(",") if v.strip())
            amp = complex(float(parts[2]), float(parts[3]))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        try:
            spec.check_frequency((kx, ky))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
        terms.append(((kx, ky), amp))
    return SpectralFunction.from_terms(spec, terms)


def read_coefficients(spec: GroupSpec, path) -> SpectralFunction:
    with open(path) as fh:
        return parse_coefficients(spec, fh.read())


def write_coefficients(f: SpectralFunction, path, atol: float = 0.0) -> None:
    with open(path, "w") as fh:
        fh.write(format_coefficients(f, atol))
