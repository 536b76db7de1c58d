"""Counter-based random streams (Philox4x64-10) usable inside numba kernels.

Each stream is keyed by ``(master_seed, path_index, channel, sub)``; its raw
64-bit output is identical to ``numpy.random.Philox(key=stream_key(...))``,
so every path can be generated independently, in any order, on any worker.

A stream is a pair of arrays: ``state`` (uint64[8]: key, counter, buffer
position, four buffered words) and ``spare`` (float64[2], reserved).
"""
from __future__ import annotations

import math

import numba
import numpy as np
from llvmlite import ir
from numba import types
from numba.extending import intrinsic

M0 = np.uint64(0xD2E7470EE14C6C93)
M1 = np.uint64(0xCA5A826395121157)
W0 = np.uint64(0x9E3779B97F4A7C15)
W1 = np.uint64(0xBB67AE8584CAA73B)
_S11 = np.uint64(11)
_S63 = np.uint64(63)
_ONE = np.uint64(1)
_TWO_M53 = 1.0 / 9007199254740992.0

# channels
JUMP_TIMES = 0
SIGNS = 1
GAUSSIANS = 2
START = 3
SPLIT = 4
REFINE = 5


@intrinsic
def _mulhi(typingctx, a, b):
    """High 64 bits of the 128-bit product (a single native multiply)."""
    sig = types.uint64(types.uint64, types.uint64)

    def codegen(context, builder, signature, args):
        i128 = ir.IntType(128)
        prod = builder.mul(builder.zext(args[0], i128), builder.zext(args[1], i128))
        return builder.trunc(builder.lshr(prod, ir.Constant(i128, 64)), ir.IntType(64))

    return sig, codegen


@numba.njit(inline="always")
def _mulhilo(a, b):
    return _mulhi(a, b), a * b


@numba.njit(cache=True, inline="always")
def philox_block(c0, c1, c2, c3, k0, k1):
    """One Philox4x64-10 block for counter (c0..c3) and key (k0, k1)."""
    for r in range(10):
        if r > 0:
            k0 = k0 + W0
            k1 = k1 + W1
        hi0, lo0 = _mulhilo(M0, c0)
        hi1, lo1 = _mulhilo(M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@numba.njit(cache=True)
def stream_key(seed, path, channel, sub):
    k1 = (np.uint64(path) << np.uint64(16)) | (np.uint64(channel) << np.uint64(8)) | np.uint64(sub)
    return np.uint64(seed), k1


@numba.njit(cache=True)
def new_stream(seed, path, channel, sub):
    k0, k1 = stream_key(seed, path, channel, sub)
    st = np.zeros(8, np.uint64)
    st[0] = k0
    st[1] = k1
    st[3] = 4  # buffer empty
    spare = np.zeros(2)
    return st, spare


@numba.njit(cache=True, inline="always")
def next_u64(st):
    pos = st[3]
    if pos >= 4:
        st[2] += _ONE
        a, b, c, d = philox_block(st[2], np.uint64(0), np.uint64(0), np.uint64(0), st[0], st[1])
        st[4] = a
        st[5] = b
        st[6] = c
        st[7] = d
        pos = np.uint64(0)
    st[3] = pos + _ONE
    return st[4 + pos]


@numba.njit(cache=True, inline="always")
def next_uniform(st):
    """Uniform on [0, 1) with 53 random bits."""
    return (next_u64(st) >> _S11) * _TWO_M53


@numba.njit(cache=True, inline="always")
def next_exponential(st):
    """Unit-rate exponential."""
    return -math.log(1.0 - next_uniform(st))


@numba.njit(cache=True, inline="always")
def next_sign(st):
    return 1 if (next_u64(st) >> _S63) == _ONE else -1


def _ziggurat_tables(layers: int = 256, r: float = 3.6541528853610088,
                     v: float = 0.00492867323399, bits: int = 52):
    """Marsaglia-Tsang ziggurat tables for the half-normal density exp(-x^2/2)."""
    m1 = float(2 ** bits)
    ki = np.zeros(layers, np.uint64)
    wi = np.zeros(layers)
    fi = np.zeros(layers)
    dn = tn = r
    q = v / math.exp(-0.5 * dn * dn)
    ki[0] = np.uint64((dn / q) * m1)
    ki[1] = 0
    wi[0] = q / m1
    wi[-1] = dn / m1
    fi[0] = 1.0
    fi[-1] = math.exp(-0.5 * dn * dn)
    for i in range(layers - 2, 0, -1):
        dn = math.sqrt(-2.0 * math.log(v / dn + math.exp(-0.5 * dn * dn)))
        ki[i + 1] = np.uint64((dn / tn) * m1)
        tn = dn
        fi[i] = math.exp(-0.5 * dn * dn)
        wi[i] = dn / m1
    return ki, wi, fi, r


_ZKI, _ZWI, _ZFI, _ZR = _ziggurat_tables()
_ZINV_R = 1.0 / _ZR
_MASK8 = np.uint64(0xFF)
_MASK52 = np.uint64(0x000FFFFFFFFFFFFF)
_S8 = np.uint64(8)


@numba.njit(cache=True, inline="always")
def next_normal(st, spare):
    """Standard normal by the 256-layer ziggurat; one 64-bit word per draw in the common case.

    ``spare`` is unused and kept so every stream carries the same state pair.
    """
    while True:
        r = next_u64(st)
        idx = r & _MASK8
        r >>= _S8
        neg = (r & _ONE) == _ONE
        rabs = (r >> _ONE) & _MASK52
        x = rabs * _ZWI[idx]
        if neg:
            x = -x
        if rabs < _ZKI[idx]:
            return x
        if idx == 0:
            while True:
                xx = -_ZINV_R * math.log1p(-next_uniform(st))
                yy = -math.log1p(-next_uniform(st))
                if yy + yy > xx * xx:
                    return -(_ZR + xx) if neg else _ZR + xx
        if (_ZFI[idx - 1] - _ZFI[idx]) * next_uniform(st) + _ZFI[idx] < math.exp(-0.5 * x * x):
            return x


class Stream:
    """Python-side handle on one keyed stream (mainly for tests and small draws)."""

    def __init__(self, seed: int, path: int, channel: int, sub: int = 0):
        args = (np.uint64(seed), np.uint64(path), np.uint64(channel), np.uint64(sub))
        self.key = tuple(int(k) for k in stream_key(*args))
        self.state, self.spare = new_stream(*args)

    def u64(self, size: int) -> np.ndarray:
        return np.array([next_u64(self.state) for _ in range(size)], np.uint64)

    def uniform(self, size: int) -> np.ndarray:
        return np.array([next_uniform(self.state) for _ in range(size)])

    def exponential(self, size: int) -> np.ndarray:
        return np.array([next_exponential(self.state) for _ in range(size)])

    def normal(self, size: int) -> np.ndarray:
        return np.array([next_normal(self.state, self.spare) for _ in range(size)])

    def signs(self, size: int) -> np.ndarray:
        return np.array([next_sign(self.state) for _ in range(size)])
