"""Numba kernels for the masked 3D convolution.

Bit-symmetry between encoder and decoder requires a pinned numeric recipe:
every output position accumulates weight*input products in float64, taps
visited input-channel-major then in kernel raster order, bias added last,
one final rounding to float32. fastmath stays off so LLVM cannot
reassociate the accumulation; batch elements never share an accumulator,
so batch-of-1 equals the matching slice of batch-of-k bit-exactly.
"""

import numpy as np
from numba import njit, prange


@njit(cache=True, parallel=True, fastmath=False)
def conv3d_forward(xp, w, bias, taps, out):
    """out[b,co,x,y,z] = f32( sum_{ci,t} f64(w)*f64(xp shifted) + f64(bias) ).

    xp is the zero-padded input (B, Ci, X+k-1, Y+k-1, Z+k-1); out is
    (B, Co, X, Y, Z) and is fully overwritten.
    """
    B, Co, X, Y, Z = out.shape
    Ci = xp.shape[1]
    T = taps.shape[0]
    for r in prange(B * Co * X * Y):
        b = r // (Co * X * Y)
        rem = r % (Co * X * Y)
        co = rem // (X * Y)
        rem2 = rem % (X * Y)
        x = rem2 // Y
        y = rem2 % Y
        acc = np.zeros(Z, np.float64)
        for ci in range(Ci):
            for t in range(T):
                kx = taps[t, 0]
                ky = taps[t, 1]
                kz = taps[t, 2]
                wv = np.float64(w[co, ci, kx, ky, kz])
                if wv == 0.0:
                    continue  # adding exact zero cannot change the sum
                for z in range(Z):
                    acc[z] += wv * np.float64(xp[b, ci, x + kx, y + ky, z + kz])
        bv = np.float64(bias[co])
        for z in range(Z):
            out[b, co, x, y, z] = np.float32(acc[z] + bv)


@njit(cache=True, parallel=False, fastmath=False)
def conv3d_region(x, w, bias, taps, out, x0, x1, y0, y1, z0, z1):
    """Recompute out[:, x0:x1, y0:y1, z0:z1] from the unpadded input x.

    x is (Ci, X, Y, Z), out is (Co, X, Y, Z); reads outside the volume act
    as zeros. Accumulation order per output position matches
    conv3d_forward exactly (input-channel-major, kernel raster order,
    float64, bias last, one float32 round), so a region recompute is
    bit-identical to the full forward: skipping an out-of-range read only
    drops a +/-0.0 term, which can never change an IEEE-754 sum that
    starts from +0.0.
    """
    Ci, X, Y, Z = x.shape
    Co = out.shape[0]
    T = taps.shape[0]
    k = w.shape[2]
    r = (k - 1) // 2
    n = z1 - z0
    acc = np.empty(n, np.float64)
    for ox in range(x0, x1):
        for oy in range(y0, y1):
            for co in range(Co):
                for j in range(n):
                    acc[j] = 0.0
                for ci in range(Ci):
                    for t in range(T):
                        kx = taps[t, 0]
                        ky = taps[t, 1]
                        kz = taps[t, 2]
                        xs = ox + kx - r
                        ys = oy + ky - r
                        if xs < 0 or xs >= X or ys < 0 or ys >= Y:
                            continue
                        wv = np.float64(w[co, ci, kx, ky, kz])
                        if wv == 0.0:
                            continue
                        lo = z0 if z0 > r - kz else r - kz
                        hi = z1 if z1 < Z + r - kz else Z + r - kz
                        dz = z0 + kz - r
                        for j in range(lo - z0, hi - z0):
                            acc[j] += wv * np.float64(x[ci, xs, ys, j + dz])
                bv = np.float64(bias[co])
                for j in range(n):
                    out[co, ox, oy, z0 + j] = np.float32(acc[j] + bv)


@njit(cache=True, parallel=True, fastmath=False)
def conv3d_backward_input(gp, w, taps, gi):
    """Gradient w.r.t. the convolution input.

    gp is grad_out zero-padded by k//2 on each spatial side; gi is
    (B, Ci, X, Y, Z) and is fully overwritten.
    """
    B, Ci, X, Y, Z = gi.shape
    Co = gp.shape[1]
    T = taps.shape[0]
    k = w.shape[2]
    for r in prange(B * Ci * X * Y):
        b = r // (Ci * X * Y)
        rem = r % (Ci * X * Y)
        ci = rem // (X * Y)
        rem2 = rem % (X * Y)
        x = rem2 // Y
        y = rem2 % Y
        acc = np.zeros(Z, np.float64)
        for co in range(Co):
            for t in range(T):
                kx = taps[t, 0]
                ky = taps[t, 1]
                kz = taps[t, 2]
                wv = np.float64(w[co, ci, kx, ky, kz])
                if wv == 0.0:
                    continue
                for z in range(Z):
                    acc[z] += wv * np.float64(
                        gp[b, co, x + k - 1 - kx, y + k - 1 - ky, z + k - 1 - kz])
        for z in range(Z):
            gi[b, ci, x, y, z] = np.float32(acc[z])


@njit(cache=True, parallel=True, fastmath=False)
def conv3d_backward_weight(xp, g, taps, gw):
    """Gradient w.r.t. the unmasked weights; masked taps stay zero.

    xp is the padded forward input; g is grad_out (B, Co, X, Y, Z); gw has
    the weight shape and must be zero-initialized by the caller.
    """
    B, Co, X, Y, Z = g.shape
    Ci = xp.shape[1]
    T = taps.shape[0]
    for r in prange(Co * Ci * T):
        co = r // (Ci * T)
        rem = r % (Ci * T)
        ci = rem // T
        t = rem % T
        kx = taps[t, 0]
        ky = taps[t, 1]
        kz = taps[t, 2]
        # z-lane partial sums folded left-to-right: fixed order, so the
        # result is deterministic (exact order is not pinned for gradients)
        lanes = np.zeros(Z, np.float64)
        for b in range(B):
            for x in range(X):
                for y in range(Y):
                    for z in range(Z):
                        lanes[z] += np.float64(g[b, co, x, y, z]) * np.float64(
                            xp[b, ci, x + kx, y + ky, z + kz])
        acc = 0.0
        for z in range(Z):
            acc += lanes[z]
        gw[co, ci, kx, ky, kz] = np.float32(acc)
