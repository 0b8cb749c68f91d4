"""Per-pixel kernels: polynomial escape time and Schwarz-reflection orbits.

Each kernel has a numba version (one pixel at a time) and a numpy version
(all live pixels at once).  Both do the same real arithmetic in the same
order, using only + - * / on float64 pairs, so their outputs agree bit for
bit.  Set ``ARTIFACT_NO_NUMBA=1`` to force the numpy path.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and os.environ.get("ARTIFACT_NO_NUMBA", "") in ("", "0")

# orbit verdicts in the Schwarz kernel
TILE, BASIN, UNDECIDED = 0, 1, 2

ABERTH_ITERS = 100
ABERTH_TOL = 1e-28          # squared step size, relative to 1 + |w|^2
DROPLET_TOL = 1e-9          # |w|^2 <= 1 + DROPLET_TOL means no exterior root


def _jit(fn):
    if not USE_NUMBA:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


def pixel_grid(center: complex, width: float, nx: int, ny: int):
    """Pixel-center coordinates; symmetric about ``center`` bit for bit."""
    h = width / nx
    xs = center.real + (np.arange(nx) + 0.5 - nx / 2) * h
    ys = center.imag - (np.arange(ny) + 0.5 - ny / 2) * h
    return xs, ys


# ---------------------------------------------------------------- escape time

def _escape_pixel(zr, zi, cr, ci, R2, maxiter):
    n = cr.shape[0]
    for it in range(maxiter):
        if zr * zr + zi * zi > R2:
            return it
        wr = 0.0
        wi = 0.0
        for k in range(n):
            tr = wr * zr - wi * zi + cr[k]
            wi = wr * zi + wi * zr + ci[k]
            wr = tr
        zr = wr
        zi = wi
    return -1


_escape_pixel_jit = _jit(_escape_pixel)


def _escape_grid_numba(xs, ys, cr, ci, R2, maxiter):
    out = np.empty((ys.shape[0], xs.shape[0]), dtype=np.int32)
    for j in range(ys.shape[0]):
        for i in range(xs.shape[0]):
            out[j, i] = _escape_pixel_jit(xs[i], ys[j], cr, ci, R2, maxiter)
    return out


if USE_NUMBA:
    _escape_grid_numba = numba.njit(cache=True)(_escape_grid_numba)


def _escape_grid_numpy(xs, ys, cr, ci, R2, maxiter):
    zr = np.repeat(xs[None, :], ys.shape[0], 0).ravel().copy()
    zi = np.repeat(ys[:, None], xs.shape[0], 1).ravel().copy()
    out = np.full(zr.shape, -1, dtype=np.int32)
    live = np.arange(zr.size)
    for it in range(maxiter):
        esc = zr * zr + zi * zi > R2
        out[live[esc]] = it
        keep = ~esc
        live, zr, zi = live[keep], zr[keep], zi[keep]
        if not live.size:
            break
        wr = np.zeros_like(zr)
        wi = np.zeros_like(zi)
        for k in range(cr.shape[0]):
            tr = wr * zr - wi * zi + cr[k]
            wi = wr * zi + wi * zr + ci[k]
            wr = tr
        zr, zi = wr, wi
    return out.reshape(ys.shape[0], xs.shape[0])


def escape_time_grid(coeffs, xs, ys, R: float, maxiter: int, use_numba: bool | None = None):
    """Escape iteration per pixel (-1 if bounded for maxiter steps).

    ``coeffs`` are polynomial coefficients from the leading term down.
    """
    c = np.asarray(coeffs, dtype=complex)
    cr, ci = np.ascontiguousarray(c.real), np.ascontiguousarray(c.imag)
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    run = USE_NUMBA if use_numba is None else (use_numba and USE_NUMBA)
    fn = _escape_grid_numba if run else _escape_grid_numpy
    return fn(xs, ys, cr, ci, float(R) * float(R), int(maxiter))


# ---------------------------------------------------------------- Schwarz reflection
#
# The exterior inverse of f(w) = w + a_1/w + ... + a_d/w^d at z is the root of
# w^(d+1) - z w^d + a_1 w^(d-1) + ... + a_d outside the unit disk.  All roots
# are found by Aberth iteration from fixed starting points; then
# S(z) = f(1/conj(w)) = w/|w|^2 + sum_j a_j conj(w)^j.

def _schwarz_pixel(zr, zi, ar, ai, dirr, diri, R2, maxiter, wr, wi, nr, ni):
    d = ar.shape[0]
    D = d + 1
    for it in range(maxiter):
        if zr * zr + zi * zi > R2:
            return BASIN, it
        # monic coefficients c_0..c_D
        # c_0 = 1, c_1 = -z, c_{j+1} = a_j
        rho = 1.0 + np.sqrt(zr * zr + zi * zi)
        for j in range(d):
            m = np.sqrt(ar[j] * ar[j] + ai[j] * ai[j])
            if 1.0 + m > rho:
                rho = 1.0 + m
        for k in range(D):
            wr[k] = rho * dirr[k]
            wi[k] = rho * diri[k]
        for step in range(ABERTH_ITERS):
            big = 0.0
            for k in range(D):
                # Horner for p and p'
                pr = 1.0
                pi = 0.0
                qr = 0.0
                qi = 0.0
                xr = wr[k]
                xi = wi[k]
                for j in range(1, D + 1):
                    tr = qr * xr - qi * xi + pr
                    qi = qr * xi + qi * xr + pi
                    qr = tr
                    if j == 1:
                        cr_ = -zr
                        ci_ = -zi
                    else:
                        cr_ = ar[j - 2]
                        ci_ = ai[j - 2]
                    tr = pr * xr - pi * xi + cr_
                    pi = pr * xi + pi * xr + ci_
                    pr = tr
                den = qr * qr + qi * qi
                if den == 0.0:
                    nr[k] = 0.0
                    ni[k] = 0.0
                    continue
                # N = p / p'
                Nr = (pr * qr + pi * qi) / den
                Ni = (pi * qr - pr * qi) / den
                sr = 0.0
                si = 0.0
                for j in range(D):
                    if j != k:
                        ur = xr - wr[j]
                        ui = xi - wi[j]
                        du = ur * ur + ui * ui
                        if du > 0.0:
                            sr = sr + ur / du
                            si = si - ui / du
                # corr = N / (1 - N s)
                er = 1.0 - (Nr * sr - Ni * si)
                ei = -(Nr * si + Ni * sr)
                de = er * er + ei * ei
                if de == 0.0:
                    nr[k] = Nr
                    ni[k] = Ni
                else:
                    nr[k] = (Nr * er + Ni * ei) / de
                    ni[k] = (Ni * er - Nr * ei) / de
                mag = (nr[k] * nr[k] + ni[k] * ni[k]) / (1.0 + xr * xr + xi * xi)
                if mag > big:
                    big = mag
            for k in range(D):
                wr[k] = wr[k] - nr[k]
                wi[k] = wi[k] - ni[k]
            if big < ABERTH_TOL:
                break
        # exterior root: the one of largest modulus
        best = 0
        bm = wr[0] * wr[0] + wi[0] * wi[0]
        for k in range(1, D):
            m = wr[k] * wr[k] + wi[k] * wi[k]
            if m > bm:
                bm = m
                best = k
        if bm <= 1.0 + DROPLET_TOL:
            return TILE, it
        xr = wr[best]
        xi = wi[best]
        # S(z) = w / |w|^2 + sum_j a_j conj(w)^j
        sr = xr / bm
        si = xi / bm
        pr = 1.0
        pi = 0.0
        for j in range(d):
            tr = pr * xr + pi * xi
            pi = pi * xr - pr * xi
            pr = tr
            sr = sr + (ar[j] * pr - ai[j] * pi)
            si = si + (ar[j] * pi + ai[j] * pr)
        zr = sr
        zi = si
    return UNDECIDED, maxiter


_schwarz_pixel_jit = _jit(_schwarz_pixel)


def _schwarz_grid_numba(xs, ys, ar, ai, dirr, diri, R2, maxiter):
    kind = np.empty((ys.shape[0], xs.shape[0]), dtype=np.uint8)
    level = np.empty((ys.shape[0], xs.shape[0]), dtype=np.int32)
    D = ar.shape[0] + 1
    wr = np.empty(D)
    wi = np.empty(D)
    nr = np.empty(D)
    ni = np.empty(D)
    for j in range(ys.shape[0]):
        for i in range(xs.shape[0]):
            k, n = _schwarz_pixel_jit(xs[i], ys[j], ar, ai, dirr, diri, R2, maxiter,
                                      wr, wi, nr, ni)
            kind[j, i] = k
            level[j, i] = n
    return kind, level


if USE_NUMBA:
    _schwarz_grid_numba = numba.njit(cache=True)(_schwarz_grid_numba)


def _schwarz_points_numpy(zr, zi, ar, ai, dirr, diri, R2, maxiter):
    P = zr.size
    d = ar.shape[0]
    D = d + 1
    kind = np.full(P, UNDECIDED, dtype=np.uint8)
    level = np.full(P, maxiter, dtype=np.int32)
    live = np.arange(P)
    zr, zi = zr.copy(), zi.copy()
    for it in range(maxiter):
        esc = zr * zr + zi * zi > R2
        kind[live[esc]] = BASIN
        level[live[esc]] = it
        keep = ~esc
        live, zr, zi = live[keep], zr[keep], zi[keep]
        if not live.size:
            break
        rho = 1.0 + np.sqrt(zr * zr + zi * zi)
        for j in range(d):
            m = np.sqrt(ar[j] * ar[j] + ai[j] * ai[j])
            rho = np.where(1.0 + m > rho, 1.0 + m, rho)
        wr = [rho * dirr[k] for k in range(D)]
        wi = [rho * diri[k] for k in range(D)]
        act = np.arange(live.size)
        for step in range(ABERTH_ITERS):
            if not act.size:
                break
            cz_r, cz_i = zr[act], zi[act]
            xr_all = [w[act] for w in wr]
            xi_all = [w[act] for w in wi]
            big = np.zeros(act.size)
            corr_r, corr_i = [], []
            for k in range(D):
                xr, xi = xr_all[k], xi_all[k]
                pr = np.ones(act.size)
                pi = np.zeros(act.size)
                qr = np.zeros(act.size)
                qi = np.zeros(act.size)
                for j in range(1, D + 1):
                    tr = qr * xr - qi * xi + pr
                    qi = qr * xi + qi * xr + pi
                    qr = tr
                    if j == 1:
                        c_r, c_i = -cz_r, -cz_i
                    else:
                        c_r, c_i = ar[j - 2], ai[j - 2]
                    tr = pr * xr - pi * xi + c_r
                    pi = pr * xi + pi * xr + c_i
                    pr = tr
                den = qr * qr + qi * qi
                ok = den != 0.0
                safe = np.where(ok, den, 1.0)
                Nr = (pr * qr + pi * qi) / safe
                Ni = (pi * qr - pr * qi) / safe
                sr = np.zeros(act.size)
                si = np.zeros(act.size)
                for j in range(D):
                    if j != k:
                        ur = xr - xr_all[j]
                        ui = xi - xi_all[j]
                        du = ur * ur + ui * ui
                        pos = du > 0.0
                        sdu = np.where(pos, du, 1.0)
                        sr = np.where(pos, sr + ur / sdu, sr)
                        si = np.where(pos, si - ui / sdu, si)
                er = 1.0 - (Nr * sr - Ni * si)
                ei = -(Nr * si + Ni * sr)
                de = er * er + ei * ei
                dz = de == 0.0
                sde = np.where(dz, 1.0, de)
                cr_ = np.where(dz, Nr, (Nr * er + Ni * ei) / sde)
                ci_ = np.where(dz, Ni, (Ni * er - Nr * ei) / sde)
                cr_ = np.where(ok, cr_, 0.0)
                ci_ = np.where(ok, ci_, 0.0)
                mag = (cr_ * cr_ + ci_ * ci_) / (1.0 + xr * xr + xi * xi)
                big = np.where(mag > big, mag, big)
                corr_r.append(cr_)
                corr_i.append(ci_)
            for k in range(D):
                wr[k][act] = xr_all[k] - corr_r[k]
                wi[k][act] = xi_all[k] - corr_i[k]
            act = act[~(big < ABERTH_TOL)]
        W_r = np.stack(wr, axis=1)
        W_i = np.stack(wi, axis=1)
        mods = W_r * W_r + W_i * W_i
        # first index of the largest modulus, as in the scalar loop
        best = np.zeros(live.size, dtype=np.int64)
        bm = mods[:, 0].copy()
        for k in range(1, D):
            better = mods[:, k] > bm
            best = np.where(better, k, best)
            bm = np.where(better, mods[:, k], bm)
        tile = bm <= 1.0 + DROPLET_TOL
        kind[live[tile]] = TILE
        level[live[tile]] = it
        rows = np.arange(live.size)
        xr, xi = W_r[rows, best], W_i[rows, best]
        sr = xr / bm
        si = xi / bm
        pr = np.ones(live.size)
        pi = np.zeros(live.size)
        for j in range(d):
            tr = pr * xr + pi * xi
            pi = pi * xr - pr * xi
            pr = tr
            sr = sr + (ar[j] * pr - ai[j] * pi)
            si = si + (ar[j] * pi + ai[j] * pr)
        keep = ~tile
        live, zr, zi = live[keep], sr[keep], si[keep]
        if not live.size:
            break
    return kind, level


def _start_directions(D: int):
    # fixed, irrational-looking offsets avoid symmetric stalls
    t = 2 * np.pi * np.arange(D) / D + 0.4
    return np.ascontiguousarray(np.cos(t)), np.ascontiguousarray(np.sin(t))


def schwarz_grid(laurent, xs, ys, R: float, maxiter: int, use_numba: bool | None = None):
    """(kind, level) per pixel for the Schwarz reflection of f.

    ``laurent`` holds a_1..a_d of f(w) = w + sum a_j w^-j.
    """
    a = np.asarray(laurent, dtype=complex)
    ar, ai = np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag)
    dirr, diri = _start_directions(a.size + 1)
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    run = USE_NUMBA if use_numba is None else (use_numba and USE_NUMBA)
    if run:
        return _schwarz_grid_numba(xs, ys, ar, ai, dirr, diri, float(R) ** 2, int(maxiter))
    zr = np.repeat(xs[None, :], ys.shape[0], 0).ravel()
    zi = np.repeat(ys[:, None], xs.shape[0], 1).ravel()
    kind, level = _schwarz_points_numpy(zr, zi, ar, ai, dirr, diri, float(R) ** 2, int(maxiter))
    shape = (ys.shape[0], xs.shape[0])
    return kind.reshape(shape), level.reshape(shape)


def schwarz_points(laurent, zs, R: float, maxiter: int, use_numba: bool | None = None):
    """Kernel verdicts for an arbitrary 1-d array of points."""
    zs = np.asarray(zs, dtype=complex).ravel()
    a = np.asarray(laurent, dtype=complex)
    ar, ai = np.ascontiguousarray(a.real), np.ascontiguousarray(a.imag)
    dirr, diri = _start_directions(a.size + 1)
    run = USE_NUMBA if use_numba is None else (use_numba and USE_NUMBA)
    if run:
        # one row of pixels per point keeps a single compiled path
        kind = np.empty(zs.size, dtype=np.uint8)
        level = np.empty(zs.size, dtype=np.int32)
        for i, z in enumerate(zs):
            k, n = _schwarz_grid_numba(np.array([z.real]), np.array([z.imag]), ar, ai,
                                       dirr, diri, float(R) ** 2, int(maxiter))
            kind[i], level[i] = k[0, 0], n[0, 0]
        return kind, level
    return _schwarz_points_numpy(np.ascontiguousarray(zs.real), np.ascontiguousarray(zs.imag),
                                 ar, ai, dirr, diri, float(R) ** 2, int(maxiter))
