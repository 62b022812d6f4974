"""Numba kernels for the hard-sphere collision quadrature.

The bilinear operator is evaluated by direct quadrature over pairs of grid
nodes and a fixed spherical direction grid:

    Q(f,g)(xi_j) = 1/2 sum_l w_l sum_{S^2+} w_O B [f'g*' + f*'g' - f_j g_l - f_l g_j]

with B = |(xi_j - xi_l) . Omega| and post-collision points

    xi'  = xi_j - ((xi_j - xi_l) . Omega) Omega,
    xi*' = xi_l + ((xi_j - xi_l) . Omega) Omega.

The integrand is even under Omega -> -Omega, so the hemisphere integral equals
half the full-sphere sum; all kernels below use a full-sphere direction grid
with an extra factor 1/2.

Key structural facts exploited for speed (this runs on a single core):

* For a fixed relative offset r = j - l and direction Omega, the displacement
  d = ((xi_j - xi_l).Omega) Omega is independent of j, so the trilinear
  stencils of xi' (relative to node j) and xi*' (relative to node l) are fixed
  and the j loop is branch-free over a precomputed index box.
* The unordered pair (j,l) and (l,j) produce the same gain integrand value, so
  only half of the r space is visited and both rows are updated.
* Gain contributions whose stencil leaves the grid are dropped; the dropped
  quadrature weight is tallied.  Loss terms never leave the grid and are
  accumulated through a per-offset angular table S(r) = sum_O w_O |v_r . O|.
"""

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True)
def build_angular_table(nx, ny, nz, hx, hy, hz, omegas, ow):
    """S(r) = sum_Omega w_Omega |v_r . Omega| over the full sphere."""
    table = np.zeros((2 * nx - 1, 2 * ny - 1, 2 * nz - 1))
    nom = omegas.shape[0]
    for ix in range(2 * nx - 1):
        vx = (ix - (nx - 1)) * hx
        for iy in range(2 * ny - 1):
            vy = (iy - (ny - 1)) * hy
            for iz in range(2 * nz - 1):
                vz = (iz - (nz - 1)) * hz
                acc = 0.0
                for io in range(nom):
                    s = vx * omegas[io, 0] + vy * omegas[io, 1] + vz * omegas[io, 2]
                    acc += ow[io] * abs(s)
                table[ix, iy, iz] = acc
    return table


@njit(cache=True, fastmath=True)
def weighted_corr(f3, wx, wy, wz, table):
    """corr[j] = sum_l w_l S(j-l) f_l  (loss-term and collision-frequency core)."""
    nx, ny, nz = f3.shape
    out = np.zeros_like(f3)
    for lx in range(nx):
        for ly in range(ny):
            for lz in range(nz):
                c = wx[lx] * wy[ly] * wz[lz] * f3[lx, ly, lz]
                if c == 0.0:
                    continue
                for jx in range(nx):
                    sx = jx - lx + nx - 1
                    for jy in range(ny):
                        sy = jy - ly + ny - 1
                        for jz in range(nz):
                            out[jx, jy, jz] += c * table[sx, sy, jz - lz + nz - 1]
    return out


@njit(cache=True, fastmath=True)
def gain_same(f3, wx, wy, wz, hx, hy, hz, omegas, ow):
    """Gain part of Q(f,f): out[j] = sum 1/2 w_O B w_l f(xi') f(xi*').

    Returns (out, dropped_weight, total_weight) where the weights count
    quadrature measure w_O * B over (pair, direction) triples.
    """
    nx, ny, nz = f3.shape
    out = np.zeros_like(f3)
    nom = omegas.shape[0]
    dropped = 0.0
    total = 0.0
    for rx in range(0, nx):
        rylo = -(ny - 1) if rx > 0 else 0
        for ry in range(rylo, ny):
            rzlo = -(nz - 1) if (rx > 0 or ry > 0) else 1
            for rz in range(rzlo, nz):
                vx = rx * hx
                vy = ry * hy
                vz = rz * hz
                npair = float((nx - rx) * (ny - abs(ry)) * (nz - abs(rz)))
                for io in range(nom):
                    s = vx * omegas[io, 0] + vy * omegas[io, 1] + vz * omegas[io, 2]
                    bker = abs(s)
                    if bker == 0.0:
                        continue
                    cw = 0.5 * ow[io] * bker
                    total += 2.0 * cw * npair
                    dx = s * omegas[io, 0]
                    dy = s * omegas[io, 1]
                    dz = s * omegas[io, 2]
                    # stencil of xi' relative to node j (displacement -d)
                    t = -dx / hx
                    b1x = int(np.floor(t))
                    f1x = t - b1x
                    t = -dy / hy
                    b1y = int(np.floor(t))
                    f1y = t - b1y
                    t = -dz / hz
                    b1z = int(np.floor(t))
                    f1z = t - b1z
                    # stencil of xi*' relative to node l (displacement +d)
                    t = dx / hx
                    b2x = int(np.floor(t))
                    f2x = t - b2x
                    t = dy / hy
                    b2y = int(np.floor(t))
                    f2y = t - b2y
                    t = dz / hz
                    b2z = int(np.floor(t))
                    f2z = t - b2z

                    jxlo = max(0, -b1x, rx, rx - b2x)
                    jxhi = min(nx - 1, nx - 2 - b1x, rx + nx - 1, rx + nx - 2 - b2x)
                    jylo = max(0, -b1y, ry, ry - b2y)
                    jyhi = min(ny - 1, ny - 2 - b1y, ry + ny - 1, ry + ny - 2 - b2y)
                    jzlo = max(0, -b1z, rz, rz - b2z)
                    jzhi = min(nz - 1, nz - 2 - b1z, rz + nz - 1, rz + nz - 2 - b2z)
                    nvalid = 0.0
                    if jxhi >= jxlo and jyhi >= jylo and jzhi >= jzlo:
                        nvalid = float(
                            (jxhi - jxlo + 1) * (jyhi - jylo + 1) * (jzhi - jzlo + 1)
                        )
                    dropped += 2.0 * cw * (npair - nvalid)
                    if nvalid == 0.0:
                        continue

                    g1x = 1.0 - f1x
                    g1y = 1.0 - f1y
                    g1z = 1.0 - f1z
                    w000 = g1x * g1y * g1z
                    w001 = g1x * g1y * f1z
                    w010 = g1x * f1y * g1z
                    w011 = g1x * f1y * f1z
                    w100 = f1x * g1y * g1z
                    w101 = f1x * g1y * f1z
                    w110 = f1x * f1y * g1z
                    w111 = f1x * f1y * f1z
                    g2x = 1.0 - f2x
                    g2y = 1.0 - f2y
                    g2z = 1.0 - f2z
                    v000 = g2x * g2y * g2z
                    v001 = g2x * g2y * f2z
                    v010 = g2x * f2y * g2z
                    v011 = g2x * f2y * f2z
                    v100 = f2x * g2y * g2z
                    v101 = f2x * g2y * f2z
                    v110 = f2x * f2y * g2z
                    v111 = f2x * f2y * f2z

                    for jx in range(jxlo, jxhi + 1):
                        lx = jx - rx
                        ax = jx + b1x
                        cx = lx + b2x
                        wjx = wx[jx]
                        wlx = wx[lx]
                        for jy in range(jylo, jyhi + 1):
                            ly = jy - ry
                            ay = jy + b1y
                            cy = ly + b2y
                            wjxy = wjx * wy[jy]
                            wlxy = wlx * wy[ly]
                            for jz in range(jzlo, jzhi + 1):
                                lz = jz - rz
                                az = jz + b1z
                                cz = lz + b2z
                                fp = (
                                    w000 * f3[ax, ay, az]
                                    + w001 * f3[ax, ay, az + 1]
                                    + w010 * f3[ax, ay + 1, az]
                                    + w011 * f3[ax, ay + 1, az + 1]
                                    + w100 * f3[ax + 1, ay, az]
                                    + w101 * f3[ax + 1, ay, az + 1]
                                    + w110 * f3[ax + 1, ay + 1, az]
                                    + w111 * f3[ax + 1, ay + 1, az + 1]
                                )
                                fs = (
                                    v000 * f3[cx, cy, cz]
                                    + v001 * f3[cx, cy, cz + 1]
                                    + v010 * f3[cx, cy + 1, cz]
                                    + v011 * f3[cx, cy + 1, cz + 1]
                                    + v100 * f3[cx + 1, cy, cz]
                                    + v101 * f3[cx + 1, cy, cz + 1]
                                    + v110 * f3[cx + 1, cy + 1, cz]
                                    + v111 * f3[cx + 1, cy + 1, cz + 1]
                                )
                                val = cw * fp * fs
                                out[jx, jy, jz] += wlxy * wz[lz] * val
                                out[lx, ly, lz] += wjxy * wz[jz] * val
    return out, dropped, total


@njit(cache=True, fastmath=True)
def gain_pair(f3, g3, wx, wy, wz, hx, hy, hz, omegas, ow):
    """Gain part of the symmetric bilinear Q(f,g), f and g distinct."""
    nx, ny, nz = f3.shape
    out = np.zeros_like(f3)
    nom = omegas.shape[0]
    dropped = 0.0
    total = 0.0
    for rx in range(0, nx):
        rylo = -(ny - 1) if rx > 0 else 0
        for ry in range(rylo, ny):
            rzlo = -(nz - 1) if (rx > 0 or ry > 0) else 1
            for rz in range(rzlo, nz):
                vx = rx * hx
                vy = ry * hy
                vz = rz * hz
                npair = float((nx - rx) * (ny - abs(ry)) * (nz - abs(rz)))
                for io in range(nom):
                    s = vx * omegas[io, 0] + vy * omegas[io, 1] + vz * omegas[io, 2]
                    bker = abs(s)
                    if bker == 0.0:
                        continue
                    cw = 0.25 * ow[io] * bker
                    total += 2.0 * cw * npair
                    dx = s * omegas[io, 0]
                    dy = s * omegas[io, 1]
                    dz = s * omegas[io, 2]
                    t = -dx / hx
                    b1x = int(np.floor(t))
                    f1x = t - b1x
                    t = -dy / hy
                    b1y = int(np.floor(t))
                    f1y = t - b1y
                    t = -dz / hz
                    b1z = int(np.floor(t))
                    f1z = t - b1z
                    t = dx / hx
                    b2x = int(np.floor(t))
                    f2x = t - b2x
                    t = dy / hy
                    b2y = int(np.floor(t))
                    f2y = t - b2y
                    t = dz / hz
                    b2z = int(np.floor(t))
                    f2z = t - b2z

                    jxlo = max(0, -b1x, rx, rx - b2x)
                    jxhi = min(nx - 1, nx - 2 - b1x, rx + nx - 1, rx + nx - 2 - b2x)
                    jylo = max(0, -b1y, ry, ry - b2y)
                    jyhi = min(ny - 1, ny - 2 - b1y, ry + ny - 1, ry + ny - 2 - b2y)
                    jzlo = max(0, -b1z, rz, rz - b2z)
                    jzhi = min(nz - 1, nz - 2 - b1z, rz + nz - 1, rz + nz - 2 - b2z)
                    nvalid = 0.0
                    if jxhi >= jxlo and jyhi >= jylo and jzhi >= jzlo:
                        nvalid = float(
                            (jxhi - jxlo + 1) * (jyhi - jylo + 1) * (jzhi - jzlo + 1)
                        )
                    dropped += 2.0 * cw * (npair - nvalid)
                    if nvalid == 0.0:
                        continue

                    g1xv = 1.0 - f1x
                    g1yv = 1.0 - f1y
                    g1zv = 1.0 - f1z
                    w000 = g1xv * g1yv * g1zv
                    w001 = g1xv * g1yv * f1z
                    w010 = g1xv * f1y * g1zv
                    w011 = g1xv * f1y * f1z
                    w100 = f1x * g1yv * g1zv
                    w101 = f1x * g1yv * f1z
                    w110 = f1x * f1y * g1zv
                    w111 = f1x * f1y * f1z
                    g2xv = 1.0 - f2x
                    g2yv = 1.0 - f2y
                    g2zv = 1.0 - f2z
                    v000 = g2xv * g2yv * g2zv
                    v001 = g2xv * g2yv * f2z
                    v010 = g2xv * f2y * g2zv
                    v011 = g2xv * f2y * f2z
                    v100 = f2x * g2yv * g2zv
                    v101 = f2x * g2yv * f2z
                    v110 = f2x * f2y * g2zv
                    v111 = f2x * f2y * f2z

                    for jx in range(jxlo, jxhi + 1):
                        lx = jx - rx
                        ax = jx + b1x
                        cx = lx + b2x
                        wjx = wx[jx]
                        wlx = wx[lx]
                        for jy in range(jylo, jyhi + 1):
                            ly = jy - ry
                            ay = jy + b1y
                            cy = ly + b2y
                            wjxy = wjx * wy[jy]
                            wlxy = wlx * wy[ly]
                            for jz in range(jzlo, jzhi + 1):
                                lz = jz - rz
                                az = jz + b1z
                                cz = lz + b2z
                                fp = (
                                    w000 * f3[ax, ay, az]
                                    + w001 * f3[ax, ay, az + 1]
                                    + w010 * f3[ax, ay + 1, az]
                                    + w011 * f3[ax, ay + 1, az + 1]
                                    + w100 * f3[ax + 1, ay, az]
                                    + w101 * f3[ax + 1, ay, az + 1]
                                    + w110 * f3[ax + 1, ay + 1, az]
                                    + w111 * f3[ax + 1, ay + 1, az + 1]
                                )
                                gp = (
                                    w000 * g3[ax, ay, az]
                                    + w001 * g3[ax, ay, az + 1]
                                    + w010 * g3[ax, ay + 1, az]
                                    + w011 * g3[ax, ay + 1, az + 1]
                                    + w100 * g3[ax + 1, ay, az]
                                    + w101 * g3[ax + 1, ay, az + 1]
                                    + w110 * g3[ax + 1, ay + 1, az]
                                    + w111 * g3[ax + 1, ay + 1, az + 1]
                                )
                                fs = (
                                    v000 * f3[cx, cy, cz]
                                    + v001 * f3[cx, cy, cz + 1]
                                    + v010 * f3[cx, cy + 1, cz]
                                    + v011 * f3[cx, cy + 1, cz + 1]
                                    + v100 * f3[cx + 1, cy, cz]
                                    + v101 * f3[cx + 1, cy, cz + 1]
                                    + v110 * f3[cx + 1, cy + 1, cz]
                                    + v111 * f3[cx + 1, cy + 1, cz + 1]
                                )
                                gs = (
                                    v000 * g3[cx, cy, cz]
                                    + v001 * g3[cx, cy, cz + 1]
                                    + v010 * g3[cx, cy + 1, cz]
                                    + v011 * g3[cx, cy + 1, cz + 1]
                                    + v100 * g3[cx + 1, cy, cz]
                                    + v101 * g3[cx + 1, cy, cz + 1]
                                    + v110 * g3[cx + 1, cy + 1, cz]
                                    + v111 * g3[cx + 1, cy + 1, cz + 1]
                                )
                                val = cw * (fp * gs + fs * gp)
                                out[jx, jy, jz] += wlxy * wz[lz] * val
                                out[lx, ly, lz] += wjxy * wz[jz] * val
    return out, dropped, total


@njit(cache=True, fastmath=True)
def assemble_linearized(m3, wx, wy, wz, hx, hy, hz, omegas, ow, stable):
    """Dense matrix of h -> 2 Q(M, h) on the grid (row-major node order).

    The gain terms scatter the trilinear stencil weights of xi' and xi*' into
    the row of node j (and, by pair symmetry, node l); the loss terms use the
    per-offset angular table.
    """
    nx, ny, nz = m3.shape
    nv = nx * ny * nz
    a = np.zeros((nv, nv))
    mflat = m3.reshape(nv)

    # loss part: A[j,l] -= 1/2 w_l S(j-l) M_j ;  A[j,j] -= 1/2 sum_l w_l S(j-l) M_l
    for jx in range(nx):
        for jy in range(ny):
            for jz in range(nz):
                j = (jx * ny + jy) * nz + jz
                mj = mflat[j]
                nu_j = 0.0
                for lx in range(nx):
                    sx = jx - lx + nx - 1
                    for ly in range(ny):
                        sy = jy - ly + ny - 1
                        base = (lx * ny + ly) * nz
                        wxy = wx[lx] * wy[ly]
                        for lz in range(nz):
                            wl = wxy * wz[lz]
                            sval = stable[sx, sy, jz - lz + nz - 1]
                            a[j, base + lz] -= 0.5 * wl * sval * mj
                            nu_j += 0.5 * wl * sval * mflat[base + lz]
                a[j, j] -= nu_j

    sy_stride = nz
    sx_stride = ny * nz
    for rx in range(0, nx):
        rylo = -(ny - 1) if rx > 0 else 0
        for ry in range(rylo, ny):
            rzlo = -(nz - 1) if (rx > 0 or ry > 0) else 1
            for rz in range(rzlo, nz):
                vx = rx * hx
                vy = ry * hy
                vz = rz * hz
                for io in range(omegas.shape[0]):
                    s = vx * omegas[io, 0] + vy * omegas[io, 1] + vz * omegas[io, 2]
                    bker = abs(s)
                    if bker == 0.0:
                        continue
                    cw = 0.5 * ow[io] * bker
                    dx = s * omegas[io, 0]
                    dy = s * omegas[io, 1]
                    dz = s * omegas[io, 2]
                    t = -dx / hx
                    b1x = int(np.floor(t))
                    f1x = t - b1x
                    t = -dy / hy
                    b1y = int(np.floor(t))
                    f1y = t - b1y
                    t = -dz / hz
                    b1z = int(np.floor(t))
                    f1z = t - b1z
                    t = dx / hx
                    b2x = int(np.floor(t))
                    f2x = t - b2x
                    t = dy / hy
                    b2y = int(np.floor(t))
                    f2y = t - b2y
                    t = dz / hz
                    b2z = int(np.floor(t))
                    f2z = t - b2z

                    jxlo = max(0, -b1x, rx, rx - b2x)
                    jxhi = min(nx - 1, nx - 2 - b1x, rx + nx - 1, rx + nx - 2 - b2x)
                    jylo = max(0, -b1y, ry, ry - b2y)
                    jyhi = min(ny - 1, ny - 2 - b1y, ry + ny - 1, ry + ny - 2 - b2y)
                    jzlo = max(0, -b1z, rz, rz - b2z)
                    jzhi = min(nz - 1, nz - 2 - b1z, rz + nz - 1, rz + nz - 2 - b2z)
                    if jxhi < jxlo or jyhi < jylo or jzhi < jzlo:
                        continue

                    g1xv = 1.0 - f1x
                    g1yv = 1.0 - f1y
                    g1zv = 1.0 - f1z
                    w000 = g1xv * g1yv * g1zv
                    w001 = g1xv * g1yv * f1z
                    w010 = g1xv * f1y * g1zv
                    w011 = g1xv * f1y * f1z
                    w100 = f1x * g1yv * g1zv
                    w101 = f1x * g1yv * f1z
                    w110 = f1x * f1y * g1zv
                    w111 = f1x * f1y * f1z
                    g2xv = 1.0 - f2x
                    g2yv = 1.0 - f2y
                    g2zv = 1.0 - f2z
                    v000 = g2xv * g2yv * g2zv
                    v001 = g2xv * g2yv * f2z
                    v010 = g2xv * f2y * g2zv
                    v011 = g2xv * f2y * f2z
                    v100 = f2x * g2yv * g2zv
                    v101 = f2x * g2yv * f2z
                    v110 = f2x * f2y * g2zv
                    v111 = f2x * f2y * f2z

                    for jx in range(jxlo, jxhi + 1):
                        lx = jx - rx
                        ax = jx + b1x
                        cx = lx + b2x
                        wjx = wx[jx]
                        wlx = wx[lx]
                        for jy in range(jylo, jyhi + 1):
                            ly = jy - ry
                            ay = jy + b1y
                            cy = ly + b2y
                            wjxy = wjx * wy[jy]
                            wlxy = wlx * wy[ly]
                            for jz in range(jzlo, jzhi + 1):
                                lz = jz - rz
                                az = jz + b1z
                                cz = lz + b2z
                                j = (jx * ny + jy) * nz + jz
                                l = (lx * ny + ly) * nz + lz
                                st1 = (ax * ny + ay) * nz + az
                                st2 = (cx * ny + cy) * nz + cz
                                mp = (
                                    w000 * m3[ax, ay, az]
                                    + w001 * m3[ax, ay, az + 1]
                                    + w010 * m3[ax, ay + 1, az]
                                    + w011 * m3[ax, ay + 1, az + 1]
                                    + w100 * m3[ax + 1, ay, az]
                                    + w101 * m3[ax + 1, ay, az + 1]
                                    + w110 * m3[ax + 1, ay + 1, az]
                                    + w111 * m3[ax + 1, ay + 1, az + 1]
                                )
                                ms = (
                                    v000 * m3[cx, cy, cz]
                                    + v001 * m3[cx, cy, cz + 1]
                                    + v010 * m3[cx, cy + 1, cz]
                                    + v011 * m3[cx, cy + 1, cz + 1]
                                    + v100 * m3[cx + 1, cy, cz]
                                    + v101 * m3[cx + 1, cy, cz + 1]
                                    + v110 * m3[cx + 1, cy + 1, cz]
                                    + v111 * m3[cx + 1, cy + 1, cz + 1]
                                )
                                cj = cw * (wlxy * wz[lz])
                                cl = cw * (wjxy * wz[jz])
                                # row j: + M(xi') h(xi*')  + M(xi*') h(xi')
                                cjm = cj * mp
                                a[j, st2] += cjm * v000
                                a[j, st2 + 1] += cjm * v001
                                a[j, st2 + sy_stride] += cjm * v010
                                a[j, st2 + sy_stride + 1] += cjm * v011
                                a[j, st2 + sx_stride] += cjm * v100
                                a[j, st2 + sx_stride + 1] += cjm * v101
                                a[j, st2 + sx_stride + sy_stride] += cjm * v110
                                a[j, st2 + sx_stride + sy_stride + 1] += cjm * v111
                                cjs = cj * ms
                                a[j, st1] += cjs * w000
                                a[j, st1 + 1] += cjs * w001
                                a[j, st1 + sy_stride] += cjs * w010
                                a[j, st1 + sy_stride + 1] += cjs * w011
                                a[j, st1 + sx_stride] += cjs * w100
                                a[j, st1 + sx_stride + 1] += cjs * w101
                                a[j, st1 + sx_stride + sy_stride] += cjs * w110
                                a[j, st1 + sx_stride + sy_stride + 1] += cjs * w111
                                # row l (mirrored pair): xi'(l,j) = xi*'(j,l)
                                clm = cl * ms
                                a[l, st1] += clm * w000
                                a[l, st1 + 1] += clm * w001
                                a[l, st1 + sy_stride] += clm * w010
                                a[l, st1 + sy_stride + 1] += clm * w011
                                a[l, st1 + sx_stride] += clm * w100
                                a[l, st1 + sx_stride + 1] += clm * w101
                                a[l, st1 + sx_stride + sy_stride] += clm * w110
                                a[l, st1 + sx_stride + sy_stride + 1] += clm * w111
                                cls = cl * mp
                                a[l, st2] += cls * v000
                                a[l, st2 + 1] += cls * v001
                                a[l, st2 + sy_stride] += cls * v010
                                a[l, st2 + sy_stride + 1] += cls * v011
                                a[l, st2 + sx_stride] += cls * v100
                                a[l, st2 + sx_stride + 1] += cls * v101
                                a[l, st2 + sx_stride + sy_stride] += cls * v110
                                a[l, st2 + sx_stride + sy_stride + 1] += cls * v111
    return a
