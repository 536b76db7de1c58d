"""Numba kernels: path sampling and per-path martingale accumulation.

Paths are drawn in a "sampling clock" ``u``. With a fixed start, ``u`` is
forward time. With a stationary start, ``u`` is time-to-go ``T - t``. The
process is reversible for the uniform measure, so a uniformly drawn terminal
point evolved in ``u`` has the law of the forward stationary path. Anchoring
the grid at the terminal time means horizons ``T`` and ``2T`` share the
near-terminal part of every path exactly.
"""
from __future__ import annotations

import math

import numba
import numpy as np

from .rng import GAUSSIANS, JUMP_TIMES, REFINE, SIGNS, SPLIT, START
from .rng import new_stream, next_exponential, next_normal, next_sign, next_uniform

TWO_PI = 2.0 * math.pi
# grid nodes between exact recomputations of the torus phases
RESYNC = 64  # power of two


@numba.njit(cache=True)
def u_grid(horizon, dt, refine, n):
    """Grid of the sampling clock: 0, dt, 2dt, ... , T, each step cut into 2**refine pieces.

    Without torus axes there is no Brownian part and the grid is just (0, T).
    """
    if n == 0:
        g = np.empty(2)
        g[0] = 0.0
        g[1] = horizon
        return g, 1
    n_full = int(math.floor(horizon / dt + 1e-9))
    rem = horizon - n_full * dt
    if rem <= 1e-9 * dt:
        rem = 0.0
    n_coarse = n_full + (1 if rem > 0.0 else 0)
    if n_coarse == 0:
        n_coarse = 1
    F = 1 << refine
    G = n_coarse * F
    g = np.empty(G + 1)
    for c in range(n_coarse):
        a = c * dt
        h = dt if c < n_full else rem
        if n_full == 0:
            h = horizon
        for q in range(F):
            g[c * F + q] = a + q * h / F
    g[G] = horizon
    return g, F


@numba.njit(cache=True)
def _draw_jumps(orders, lam, horizon, seed, path):
    m = orders.size
    cap = int(lam * horizon * m + 10.0 * math.sqrt(lam * horizon * m + 1.0) + 16)
    us = np.empty(cap)
    ax = np.empty(cap, np.int64)
    sg = np.empty(cap, np.int64)
    cnt = 0
    for i in range(m):
        ts, _ = new_stream(seed, path, JUMP_TIMES, i)
        ss, _ = new_stream(seed, path, SIGNS, i)
        u = 0.0
        while True:
            u += next_exponential(ts) / lam
            if u >= horizon:
                break
            if cnt == cap:
                cap *= 2
                us2 = np.empty(cap)
                ax2 = np.empty(cap, np.int64)
                sg2 = np.empty(cap, np.int64)
                us2[:cnt] = us[:cnt]
                ax2[:cnt] = ax[:cnt]
                sg2[:cnt] = sg[:cnt]
                us, ax, sg = us2, ax2, sg2
            us[cnt] = u
            ax[cnt] = i
            sg[cnt] = next_sign(ss)
            cnt += 1
    order = np.argsort(us[:cnt], kind="mergesort")
    return us[:cnt][order], ax[:cnt][order], sg[:cnt][order]


@numba.njit(cache=True)
def _brownian_on_grid(ug, F, n, seed, path):
    """Brownian motion with variance 2u per axis on the sampling grid."""
    G = ug.size - 1
    W = np.zeros((G + 1, n))
    n_coarse = G // F
    for j in range(n):
        gs, gsp = new_stream(seed, path, GAUSSIANS, j)
        rs, rsp = new_stream(seed, path, REFINE, j)
        for c in range(n_coarse):
            a = c * F
            b = a + F
            h = ug[b] - ug[a]
            W[b, j] = W[a, j] + math.sqrt(2.0 * h) * next_normal(gs, gsp)
            step = F // 2
            while step >= 1:
                q = step
                while q < F:
                    left = a + q - step
                    right = a + q + step
                    H = ug[right] - ug[left]
                    W[a + q, j] = 0.5 * (W[left, j] + W[right, j]) + math.sqrt(0.5 * H) * next_normal(rs, rsp)
                    q += 2 * step
                step //= 2
    return W


@numba.njit(cache=True)
def sample_nodes(orders, n, lam, horizon, dt, refine, seed, path, stationary, x0, y0):
    """Sample one path; returns forward-time node arrays.

    Returns ``(t, x, y, jump_axis, jump_sign, grid_index, grid_s)``: node times,
    cyclic coordinates after each node, unwrapped torus coordinates, the jump
    axis (-1 for grid nodes) and sign, the index of the node in the grid, and
    the time-to-go ``T - t`` of every grid node.
    """
    m = orders.size
    ug, F = u_grid(horizon, dt, refine, n)
    G = ug.size - 1
    ju, jax, jsg = _draw_jumps(orders, lam, horizon, seed, path)
    J = ju.size
    Wg = _brownian_on_grid(ug, F, n, seed, path)

    L = G + J
    un = np.empty(L + 1)
    Wn = np.zeros((L + 1, n))
    nax = np.full(L + 1, -1, np.int64)
    nsg = np.zeros(L + 1, np.int64)
    ngi = np.full(L + 1, -1, np.int64)

    split_st = np.empty((n, 8), np.uint64)
    split_sp = np.empty((n, 2))
    for j in range(n):
        s1, s2 = new_stream(seed, path, SPLIT, j)
        split_st[j] = s1
        split_sp[j] = s2

    k = 0
    jp = 0
    for l in range(G + 1):
        un[k] = ug[l]
        for j in range(n):
            Wn[k, j] = Wg[l, j]
        ngi[k] = l
        k += 1
        if l == G:
            break
        b = ug[l + 1]
        while jp < J and ju[jp] < b:
            a = un[k - 1]
            us = ju[jp]
            un[k] = us
            for j in range(n):
                wa = Wn[k - 1, j]
                wb = Wg[l + 1, j]
                span = b - a
                frac = (us - a) / span if span > 0 else 0.0
                var = 2.0 * (us - a) * (b - us) / span if span > 0 else 0.0
                Wn[k, j] = wa + frac * (wb - wa) + math.sqrt(max(var, 0.0)) * next_normal(split_st[j], split_sp[j])
            nax[k] = jax[jp]
            nsg[k] = jsg[jp]
            k += 1
            jp += 1

    # state along the sampling clock
    start_x = np.empty(m, np.int64)
    start_y = np.empty(n)
    if stationary:
        ss, _ = new_stream(seed, path, START, 0)
        for i in range(m):
            v = int(next_uniform(ss) * orders[i])
            start_x[i] = min(v, orders[i] - 1)
        for j in range(n):
            start_y[j] = TWO_PI * next_uniform(ss)
    else:
        for i in range(m):
            start_x[i] = x0[i] % orders[i]
        for j in range(n):
            start_y[j] = y0[j]
    xs = np.empty((L + 1, m), np.int64)
    cur = start_x.copy()
    for k in range(L + 1):
        if nax[k] >= 0:
            i = nax[k]
            cur[i] = (cur[i] + nsg[k]) % orders[i]
        xs[k] = cur

    t = np.empty(L + 1)
    x = np.empty((L + 1, m), np.int64)
    y = np.empty((L + 1, n))
    fax = np.full(L + 1, -1, np.int64)
    fsg = np.zeros(L + 1, np.int64)
    fgi = np.full(L + 1, -1, np.int64)
    grid_s = np.empty(G + 1)
    if stationary:
        for l in range(G + 1):
            grid_s[l] = ug[l]
        for jf in range(L + 1):
            k = L - jf
            t[jf] = horizon - un[k]
            x[jf] = xs[k - 1] if k >= 1 else xs[0]
            for j in range(n):
                y[jf, j] = start_y[j] + Wn[k, j]
            if nax[k] >= 0:
                fax[jf] = nax[k]
                fsg[jf] = -nsg[k]
            fgi[jf] = ngi[k]
        t[0] = 0.0
        t[L] = horizon
    else:
        for l in range(G + 1):
            grid_s[l] = horizon - ug[l]
        grid_s[G] = 0.0
        for k in range(L + 1):
            t[k] = un[k]
            x[k] = xs[k]
            for j in range(n):
                y[k, j] = start_y[j] + Wn[k, j]
            fax[k] = nax[k]
            fsg[k] = nsg[k]
            fgi[k] = ngi[k]
    return t, x, y, fax, fsg, fgi, grid_s


@numba.njit(cache=True, inline="always")
def _abs2(z):
    return z.real * z.real + z.imag * z.imag


# function data: nonzero coefficients with precomputed per-frequency factors

@numba.njit(cache=True, inline="always")
def eval_direct(fd_coef, fd_wx, fd_ky, fd_mu, fd_s2, fd_s0, x, y, s, grad, x2, x0):
    """Value of ``P_s f`` at (x, y); fills gradient in y, and X^2, X^0 values."""
    m = fd_wx.shape[1]
    n = fd_ky.shape[1]
    val = 0j
    for j in range(n):
        grad[j] = 0j
    for i in range(m):
        x2[i] = 0j
        x0[i] = 0j
    for q in range(fd_coef.size):
        ph = 0.0
        for i in range(m):
            ph += fd_wx[q, i] * x[i]
        for j in range(n):
            ph += fd_ky[q, j] * y[j]
        e = fd_coef[q] * math.exp(-fd_mu[q] * s) * complex(math.cos(ph), math.sin(ph))
        val += e
        for j in range(n):
            grad[j] += 1j * fd_ky[q, j] * e
        for i in range(m):
            x2[i] += fd_s2[q, i] * e
            x0[i] += fd_s0[q, i] * e
    return val


@numba.njit(cache=True, inline="always")
def drift_exact(fd_coef, fd_wx, fd_mu, fd_s2, x, s_a, s_b, lam, out):
    """``-(lam/2) int X_i^2 P_{T-t} f(x) dt`` over time-to-go from s_a down to s_b (no torus)."""
    m = fd_wx.shape[1]
    for i in range(m):
        out[i] = 0j
    for q in range(fd_coef.size):
        mu = fd_mu[q]
        if mu <= 0.0:
            continue
        ph = 0.0
        for i in range(m):
            ph += fd_wx[q, i] * x[i]
        w = fd_coef[q] * complex(math.cos(ph), math.sin(ph)) * (math.exp(-mu * s_b) - math.exp(-mu * s_a)) / mu
        for i in range(m):
            out[i] += -0.5 * lam * fd_s2[q, i] * w


@numba.njit(cache=True, inline="always")
def _cis_step(d):
    """exp(i d); Taylor series for the small Brownian increments, libm otherwise."""
    if abs(d) < 0.25:
        d2 = d * d
        c = 1.0 + d2 * (-1.0 / 2 + d2 * (1.0 / 24 + d2 * (-1.0 / 720 + d2 * (1.0 / 40320 + d2 * (
            -1.0 / 3628800 + d2 * (1.0 / 479001600 + d2 * (-1.0 / 87178291200)))))))
        sn = d * (1.0 + d2 * (-1.0 / 6 + d2 * (1.0 / 120 + d2 * (-1.0 / 5040 + d2 * (1.0 / 362880 + d2 * (
            -1.0 / 39916800 + d2 * (1.0 / 6227020800 + d2 * (-1.0 / 1307674368000))))))))
        return complex(c, sn)
    return complex(math.cos(d), math.sin(d))


@numba.njit(cache=True, inline="always")
def _torus_powers(eph, K, digits, E, pw):
    n = eph.size
    for j in range(n):
        e1 = eph[j]
        pw[j, K] = 1.0
        for k in range(1, K + 1):
            pw[j, K + k] = pw[j, K + k - 1] * e1
            pw[j, K - k] = pw[j, K + k].conjugate()
    for q in range(E.size):
        v = 1.0 + 0j
        for j in range(n):
            v *= pw[j, digits[q, j]]
        E[q] = v


@numba.njit(cache=True, inline="always")
def _eval_table(tab, g, xf, eph, K, digits, kyv, E, pw, grad, x2):
    """Table route for grid nodes: ``tab[g, x, q, 0]`` holds the time-decayed
    coefficient sums for torus frequency ``q``, ``tab[g, x, q, 1+i]`` the same
    multiplied by the ``X_i^2`` symbol. ``eph`` holds exp(i y_j)."""
    _torus_powers(eph, K, digits, E, pw)
    m = x2.size
    n = grad.size
    val = 0j
    for j in range(n):
        grad[j] = 0j
    for i in range(m):
        x2[i] = 0j
    for q in range(E.size):
        e = E[q]
        b0 = tab[g, xf, q, 0] * e
        val += b0
        for j in range(n):
            grad[j] += 1j * kyv[q, j] * b0
        for i in range(m):
            x2[i] += tab[g, xf, q, 1 + i] * e
    return val


@numba.njit(cache=True)
def ensemble_kernel(orders, n, lam, horizon, ug, F, seed, p0, p1, stationary, x0, y0,
                    f_coef, f_wx, f_ky, f_mu, f_s2, f_s0,
                    g_coef, g_wx, g_ky, g_mu, g_s2, g_s0,
                    alpha_x, alpha_y, norm2sq, choi_c, choi_r,
                    tab, K, digits, kyv, strides,
                    out_c, out_r, out_i, out_y):
    """Per-path summaries for paths ``p0 <= p < p1`` in a single streaming pass.

    Consumes exactly the draws of :func:`sample_nodes`, node by node in the
    sampling clock, so the path is the same; only order-free quantities (sums,
    brackets, extremes) are accumulated.

    out_c columns: M_0, f(Z_T), M^alpha_T, g(Z_T), Euler residual of M^f.
    out_r columns: [M^f]_T, [M^alpha]_T, min subordination-gap increment,
                   max Choi-gap increment, realized sum of squared increments,
                   forward time of the smallest gap increment.
    out_i columns: jump count, flat index of the cyclic part of Z_T.
    out_y: torus coordinates of Z_T (wrapped).
    """
    m = orders.size
    G = ug.size - 1
    A = digits.shape[0]
    fast = n == 1 and F == 1
    sd = np.sqrt(2.0 * (ug[1:] - ug[:-1]))
    want_choi = choi_r >= 0.0
    # scratch
    gradC = np.empty(n, np.complex128)
    x2C = np.empty(m, np.complex128)
    x0C = np.empty(m, np.complex128)
    gradP = np.empty(n, np.complex128)
    x2P = np.empty(m, np.complex128)
    x0P = np.empty(m, np.complex128)
    agrad = np.empty(n, np.complex128)
    dr = np.empty(m, np.complex128)
    E = np.empty(digits.shape[0], np.complex128)
    pw = np.empty((max(n, 1), 2 * K + 1), np.complex128)
    wf = np.zeros((F + 1, n))
    WP = np.zeros(n)
    WC = np.zeros(n)
    yP = np.empty(n)
    yC = np.empty(n)
    ephP = np.empty(n, np.complex128)
    ephC = np.empty(n, np.complex128)
    jt = np.empty((m, 8), np.uint64)
    js = np.empty((m, 8), np.uint64)
    next_u = np.empty(m)
    gs = np.empty((n, 8), np.uint64)
    gsp = np.empty((n, 2))
    rs = np.empty((n, 8), np.uint64)
    rsp = np.empty((n, 2))
    sp = np.empty((n, 8), np.uint64)
    spp = np.empty((n, 2))
    start_x = np.empty(m, np.int64)
    start_y = np.empty(n)
    x_cur = np.empty(m, np.int64)

    for p in range(p0, p1):
        for i in range(m):
            a1, _ = new_stream(seed, p, JUMP_TIMES, i)
            a2, _ = new_stream(seed, p, SIGNS, i)
            jt[i] = a1
            js[i] = a2
            u = next_exponential(jt[i]) / lam
            next_u[i] = u if u < horizon else np.inf
        for j in range(n):
            a1, b1 = new_stream(seed, p, GAUSSIANS, j)
            gs[j] = a1
            gsp[j] = b1
            a1, b1 = new_stream(seed, p, REFINE, j)
            rs[j] = a1
            rsp[j] = b1
            a1, b1 = new_stream(seed, p, SPLIT, j)
            sp[j] = a1
            spp[j] = b1
        if stationary:
            st0, _ = new_stream(seed, p, START, 0)
            for i in range(m):
                v = int(next_uniform(st0) * orders[i])
                start_x[i] = min(v, orders[i] - 1)
            for j in range(n):
                start_y[j] = TWO_PI * next_uniform(st0)
        else:
            for i in range(m):
                start_x[i] = x0[i] % orders[i]
            for j in range(n):
                start_y[j] = y0[j]
        for i in range(m):
            x_cur[i] = start_x[i]

        # node P: u = 0, grid node 0
        uP = 0.0
        sP = 0.0 if stationary else horizon
        for j in range(n):
            WP[j] = 0.0
            yP[j] = start_y[j]
            ephP[j] = complex(math.cos(yP[j]), math.sin(yP[j]))
        xf = 0
        for i in range(m):
            xf += x_cur[i] * strides[i]
        valP = _eval_table(tab, 0, xf, ephP, K, digits, kyv, E, pw, gradP, x2P)
        P_axis = -1
        P_sign = 0
        prev_pre = valP

        sum_f = 0j
        sum_a = 0j
        qf = 0.0
        qa = 0.0
        realized = 0.0
        gap_min = np.inf
        gap_t = 0.0
        choi_max = -np.inf
        njumps = 0

        l = 0
        q = F
        while l < G:
            if fast and q == F and (P_axis < 0 or not stationary):
                ubest = np.inf
                for i in range(m):
                    if next_u[i] < ubest:
                        ubest = next_u[i]
                b = ug[l + 1]
                if ubest >= b:
                    # plain grid step, one torus axis, no refinement
                    h = b - uP
                    wC = WP[0] + sd[l] * next_normal(gs[0], gsp[0])
                    y1 = start_y[0] + wC
                    if ((l + 1) & (RESYNC - 1)) == 0:
                        e1 = complex(math.cos(y1), math.sin(y1))
                    else:
                        e1 = ephP[0] * _cis_step(y1 - yP[0])
                    xf = 0
                    for i in range(m):
                        xf += x_cur[i] * strides[i]
                        x2C[i] = 0j
                    ec = e1.conjugate()
                    e = 1.0 + 0j
                    for _ in range(K):
                        e *= ec
                    valC = 0j
                    gr = 0j
                    qa_ = 0
                    for k in range(-K, K + 1):
                        if qa_ < A and digits[qa_, 0] == k + K:
                            b0 = tab[l + 1, xf, qa_, 0] * e
                            valC += b0
                            gr += k * b0
                            for i in range(m):
                                x2C[i] += tab[l + 1, xf, qa_, 1 + i] * e
                            qa_ += 1
                        e *= e1
                    gC = 1j * gr
                    dmf = 0j
                    dma = 0j
                    for i in range(m):
                        d = -0.25 * lam * h * (x2C[i] + x2P[i])
                        dmf += d
                        dma += alpha_x[i] * d
                    if stationary:
                        gA = gC
                        dy = WP[0] - wC
                    else:
                        gA = gradP[0]
                        dy = wC - WP[0]
                    ag = alpha_y[0, 0] * gA
                    dmf += gA * dy
                    dma += ag * dy
                    cq_f = 2.0 * h * _abs2(gA)
                    cq_a = 2.0 * h * _abs2(ag)
                    sum_f += dmf
                    sum_a += dma
                    qf += cq_f
                    qa += cq_a
                    gap = norm2sq * cq_f - cq_a
                    if gap < gap_min:
                        gap_min = gap
                        gap_t = horizon - uP if stationary else b
                    if want_choi:
                        cq_c = 2.0 * h * (_abs2(ag - choi_c * gA) - choi_r * choi_r * _abs2(gA))
                        if cq_c > choi_max:
                            choi_max = cq_c
                    if stationary:
                        realized += _abs2(prev_pre - valC)
                        prev_pre = valC
                    else:
                        realized += _abs2(valC - valP)
                    valP = valC
                    gradP[0] = gC
                    for i in range(m):
                        x2P[i] = x2C[i]
                    uP = b
                    sP = b if stationary else horizon - b
                    WP[0] = wC
                    yP[0] = y1
                    ephP[0] = e1
                    l += 1
                    continue
            if q == F:
                c = l // F
                for j in range(n):
                    wf[0, j] = WP[j]
                    a = c * F
                    h = ug[a + F] - ug[a]
                    wf[F, j] = wf[0, j] + math.sqrt(2.0 * h) * next_normal(gs[j], gsp[j])
                    step = F // 2
                    while step >= 1:
                        qq = step
                        while qq < F:
                            H = ug[a + qq + step] - ug[a + qq - step]
                            wf[qq, j] = 0.5 * (wf[qq - step, j] + wf[qq + step, j]) \
                                + math.sqrt(0.5 * H) * next_normal(rs[j], rsp[j])
                            qq += 2 * step
                        step //= 2
                q = 0
            b = ug[l + 1]
            istar = -1
            ubest = np.inf
            for i in range(m):
                if next_u[i] < ubest:
                    ubest = next_u[i]
                    istar = i
            C_axis = -1
            C_sign = 0
            C_grid = -1
            if istar >= 0 and ubest < b:
                uC = ubest
                span = b - uP
                for j in range(n):
                    frac = (uC - uP) / span if span > 0 else 0.0
                    var = 2.0 * (uC - uP) * (b - uC) / span if span > 0 else 0.0
                    WC[j] = WP[j] + frac * (wf[q + 1, j] - WP[j]) + math.sqrt(max(var, 0.0)) * next_normal(sp[j], spp[j])
                C_axis = istar
                C_sign = next_sign(js[istar])
                u = next_u[istar] + next_exponential(jt[istar]) / lam
                next_u[istar] = u if u < horizon else np.inf
            else:
                uC = b
                for j in range(n):
                    WC[j] = wf[q + 1, j]
                q += 1
                l += 1
                C_grid = l
            sC = uC if stationary else horizon - uC
            for j in range(n):
                yC[j] = start_y[j] + WC[j]
                if C_grid >= 0 and C_grid % RESYNC == 0:
                    ephC[j] = complex(math.cos(yC[j]), math.sin(yC[j]))
                else:
                    ephC[j] = ephP[j] * _cis_step(yC[j] - yP[j])
            xf = 0
            for i in range(m):
                xf += x_cur[i] * strides[i]
            if C_grid >= 0:
                valC = _eval_table(tab, C_grid, xf, ephC, K, digits, kyv, E, pw, gradC, x2C)
            else:
                valC = eval_direct(f_coef, f_wx, f_ky, f_mu, f_s2, f_s0, x_cur, yC, sC, gradC, x2C, x0C)

            # forward interval [A, B]: stationary A = C (pre), B = P (post); fixed A = P, B = C
            h = uC - uP
            dmf = 0j
            dma = 0j
            if n == 0:
                if stationary:
                    drift_exact(f_coef, f_wx, f_mu, f_s2, x_cur, sC, sP, lam, dr)
                else:
                    drift_exact(f_coef, f_wx, f_mu, f_s2, x_cur, sP, sC, lam, dr)
            else:
                for i in range(m):
                    dr[i] = -0.25 * lam * h * (x2C[i] + x2P[i])
            for i in range(m):
                dmf += dr[i]
                dma += alpha_x[i] * dr[i]
            cq_f = 0.0
            cq_a = 0.0
            cq_c = 0.0
            for j in range(n):
                gA = gradC[j] if stationary else gradP[j]
                dy = (WP[j] - WC[j]) if stationary else (WC[j] - WP[j])
                dmf += gA * dy
                acc = 0j
                for k2 in range(n):
                    acc += alpha_y[j, k2] * (gradC[k2] if stationary else gradP[k2])
                agrad[j] = acc
                dma += acc * dy
                cq_f += _abs2(gA)
                cq_a += _abs2(acc)
            if want_choi:
                sq = 0.0
                for j in range(n):
                    gA = gradC[j] if stationary else gradP[j]
                    sq += _abs2(agrad[j] - choi_c * gA)
                cq_c = 2.0 * h * (sq - choi_r * choi_r * cq_f)
            cq_f *= 2.0 * h
            cq_a *= 2.0 * h
            # jump at the forward right end B
            jq_f = 0.0
            jq_a = 0.0
            jq_c = 0.0
            jax = P_axis if stationary else C_axis
            if jax >= 0:
                if stationary:
                    dj = 0.5 * (x2P[jax] - P_sign * x0P[jax])
                else:
                    dj = 0.5 * (x2C[jax] + C_sign * x0C[jax])
                dmf += dj
                dma += alpha_x[jax] * dj
                jq_f = _abs2(dj)
                jq_a = _abs2(alpha_x[jax]) * jq_f
                if want_choi:
                    jq_c = (_abs2(alpha_x[jax] - choi_c) - choi_r * choi_r) * jq_f
                njumps += 1
            sum_f += dmf
            sum_a += dma
            qf += cq_f + jq_f
            qa += cq_a + jq_a
            gap = norm2sq * (cq_f + jq_f) - (cq_a + jq_a)
            if gap < gap_min:
                gap_min = gap
                gap_t = horizon - uP if stationary else uC
            if want_choi and cq_c + jq_c > choi_max:
                choi_max = cq_c + jq_c

            # post-node values at C
            if C_axis >= 0:
                x_cur[C_axis] = (x_cur[C_axis] + C_sign) % orders[C_axis]
                valC_post = eval_direct(f_coef, f_wx, f_ky, f_mu, f_s2, f_s0, x_cur, yC, sC, gradP, x2P, x0P)
            else:
                valC_post = valC
                for j in range(n):
                    gradP[j] = gradC[j]
                for i in range(m):
                    x2P[i] = x2C[i]
            if stationary:
                realized += _abs2(prev_pre - valC)
                prev_pre = valC
            else:
                realized += _abs2(valC_post - valP)
            valP = valC_post
            uP = uC
            sP = sC
            P_axis = C_axis
            P_sign = C_sign
            for j in range(n):
                WP[j] = WC[j]
                yP[j] = yC[j]
                ephP[j] = ephC[j]

        if stationary:
            m0 = eval_direct(f_coef, f_wx, f_ky, f_mu, f_s2, f_s0, x_cur, yP, horizon, gradC, x2C, x0C)
            for i in range(m):
                x_cur[i] = start_x[i]
            for j in range(n):
                yP[j] = start_y[j]
        else:
            m0 = eval_direct(f_coef, f_wx, f_ky, f_mu, f_s2, f_s0, start_x, start_y, horizon, gradC, x2C, x0C)
        mT = eval_direct(f_coef, f_wx, f_ky, f_mu, f_s2, f_s0, x_cur, yP, 0.0, gradC, x2C, x0C)
        gT = eval_direct(g_coef, g_wx, g_ky, g_mu, g_s2, g_s0, x_cur, yP, 0.0, gradC, x2C, x0C)
        r = p - p0
        out_c[r, 0] = m0
        out_c[r, 1] = mT
        out_c[r, 2] = m0 + sum_a
        out_c[r, 3] = gT
        out_c[r, 4] = mT - (m0 + sum_f)
        out_r[r, 0] = qf
        out_r[r, 1] = qa
        out_r[r, 2] = gap_min
        out_r[r, 3] = choi_max if want_choi else np.nan
        out_r[r, 4] = realized
        out_r[r, 5] = gap_t
        xf = 0
        for i in range(m):
            xf += x_cur[i] * strides[i]
        out_i[r, 0] = njumps
        out_i[r, 1] = xf
        for j in range(n):
            out_y[r, j] = yP[j] % TWO_PI
