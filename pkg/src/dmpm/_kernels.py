"""Numba kernels for the particle/grid pipeline.

Everything here is performance code behind the public API in ``engine`` /
``integrate`` / ``gradient``. All loops are sequential and in fixed order,
so results are bitwise reproducible. The tangent (``*_jvp``) kernels
propagate T directional derivatives alongside the primal state; tangent
axes are the trailing array dimension so the inner channel loops vectorize.

Status codes returned by steppers/rollouts:
0 ok, 1 non-finite state, 2 inverted deformation gradient, 3 particle
outside the grid interior.
"""

import numpy as np
from numba import njit

MASS_EPS = 0.0  # keep in sync with dmpm.grid.MASS_EPS

OK = 0
FAIL_NAN = 1
FAIL_INVERTED = 2
FAIL_OUT_OF_GRID = 3


@njit(cache=True)
def check_state(x, v, F, ox, oy, h, nx, ny):
    P = x.shape[0]
    xlo = ox + 2.0 * h
    ylo = oy + 2.0 * h
    xhi = ox + (nx - 1) * h - 2.0 * h
    yhi = oy + (ny - 1) * h - 2.0 * h
    for p in range(P):
        for d in range(2):
            if not np.isfinite(x[p, d]) or not np.isfinite(v[p, d]):
                return FAIL_NAN
        detF = F[p, 0, 0] * F[p, 1, 1] - F[p, 0, 1] * F[p, 1, 0]
        if not np.isfinite(detF):
            return FAIL_NAN
        if detF <= 0.0:
            return FAIL_INVERTED
        if x[p, 0] < xlo or x[p, 0] > xhi or x[p, 1] < ylo or x[p, 1] > yhi:
            return FAIL_OUT_OF_GRID
    return OK


@njit(cache=True)
def kinetic_energy(v, m):
    e = 0.0
    for p in range(v.shape[0]):
        e += 0.5 * m[p] * (v[p, 0] * v[p, 0] + v[p, 1] * v[p, 1])
    return e


@njit(cache=True)
def strain_energy(F, V0, lam, mu):
    e = 0.0
    for p in range(F.shape[0]):
        F00 = F[p, 0, 0]
        F01 = F[p, 0, 1]
        F10 = F[p, 1, 0]
        F11 = F[p, 1, 1]
        e00 = 0.5 * (F00 * F00 + F10 * F10 - 1.0)
        e01 = 0.5 * (F00 * F01 + F10 * F11)
        e11 = 0.5 * (F01 * F01 + F11 * F11 - 1.0)
        tr = e00 + e11
        frob2 = e00 * e00 + 2.0 * e01 * e01 + e11 * e11
        e += V0[p] * (0.5 * lam * tr * tr + mu * frob2)
    return e


@njit(cache=True, inline="always")
def _axis_kernel(r):
    """Quadratic B-spline value, first and second derivative at offset r."""
    ar = abs(r)
    if ar < 0.5:
        return 0.75 - ar * ar, -2.0 * r, -2.0
    elif ar < 1.5:
        t = 1.5 - ar
        if r > 0.0:
            return 0.5 * t * t, -t, 1.0
        return 0.5 * t * t, t, 1.0
    return 0.0, 0.0, 0.0


@njit(cache=True)
def _stencils(x, ox, oy, inv_h, bx, by, wx, wy, dwx, dwy, d2wx, d2wy):
    """Per-particle stencil data; also returns the touched-node bounding box."""
    P = x.shape[0]
    bxmin = 1 << 30
    bymin = 1 << 30
    bxmax = -(1 << 30)
    bymax = -(1 << 30)
    for p in range(P):
        fx = (x[p, 0] - ox) * inv_h
        fy = (x[p, 1] - oy) * inv_h
        bix = int(np.floor(fx - 0.5))
        biy = int(np.floor(fy - 0.5))
        bx[p] = bix
        by[p] = biy
        if bix < bxmin:
            bxmin = bix
        if bix > bxmax:
            bxmax = bix
        if biy < bymin:
            bymin = biy
        if biy > bymax:
            bymax = biy
        for k in range(3):
            w, dw, d2w = _axis_kernel(fx - (bix + k))
            wx[p, k] = w
            dwx[p, k] = dw
            d2wx[p, k] = d2w
            w, dw, d2w = _axis_kernel(fy - (biy + k))
            wy[p, k] = w
            dwy[p, k] = dw
            d2wy[p, k] = d2w
    return bxmin, bxmax + 3, bymin, bymax + 3


@njit(cache=True)
def deriv(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u,
    gm, gmv, gv, gf, ga,
    xdot, vdot, Fdot,
):
    """One derivative evaluation (P2G, G2P2G, grid acceleration, G2P).

    ``mode`` is an (nx, ny, 2) int8 array: 0 free, 1 fixed, 2 prescribed
    by the scalar control ``u``. Grid scratch arrays are zeroed here over
    the touched bounding box only; values outside it are never read.
    """
    P = x.shape[0]
    inv_h = 1.0 / h

    bx = np.empty(P, np.int64)
    by = np.empty(P, np.int64)
    wx = np.empty((P, 3))
    wy = np.empty((P, 3))
    dwx = np.empty((P, 3))
    dwy = np.empty((P, 3))
    d2wx = np.empty((P, 3))
    d2wy = np.empty((P, 3))
    i0, i1, j0, j1 = _stencils(x, ox, oy, inv_h, bx, by, wx, wy, dwx, dwy, d2wx, d2wy)
    if i0 < 0 or j0 < 0 or i1 > nx or j1 > ny:
        return FAIL_OUT_OF_GRID

    for i in range(i0, i1):
        for j in range(j0, j1):
            gm[i, j] = 0.0
            gmv[i, j, 0] = 0.0
            gmv[i, j, 1] = 0.0
            gf[i, j, 0] = 0.0
            gf[i, j, 1] = 0.0

    # P2G: mass and momentum
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        mp = m[p]
        mvx = mp * v[p, 0]
        mvy = mp * v[p, 1]
        for a in range(3):
            wa = wx[p, a]
            for b in range(3):
                w = wa * wy[p, b]
                gm[bix + a, biy + b] += w * mp
                gmv[bix + a, biy + b, 0] += w * mvx
                gmv[bix + a, biy + b, 1] += w * mvy

    # grid velocities + boundary conditions
    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                gv[i, j, 0] = gmv[i, j, 0] / mI
                gv[i, j, 1] = gmv[i, j, 1] / mI
            else:
                gv[i, j, 0] = 0.0
                gv[i, j, 1] = 0.0
            for d in range(2):
                mo = mode[i, j, d]
                if mo == 1:
                    gv[i, j, d] = 0.0
                elif mo == 2:
                    gv[i, j, d] = u

    # G2P2G: kinematics, stress, internal forces
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        xd0 = 0.0
        xd1 = 0.0
        L00 = 0.0
        L01 = 0.0
        L10 = 0.0
        L11 = 0.0
        for a in range(3):
            wa = wx[p, a]
            da = dwx[p, a] * inv_h
            for b in range(3):
                w = wa * wy[p, b]
                gwx = da * wy[p, b]
                gwy = wa * dwy[p, b] * inv_h
                vIx = gv[bix + a, biy + b, 0]
                vIy = gv[bix + a, biy + b, 1]
                xd0 += w * vIx
                xd1 += w * vIy
                L00 += vIx * gwx
                L01 += vIx * gwy
                L10 += vIy * gwx
                L11 += vIy * gwy
        xdot[p, 0] = xd0
        xdot[p, 1] = xd1
        F00 = F[p, 0, 0]
        F01 = F[p, 0, 1]
        F10 = F[p, 1, 0]
        F11 = F[p, 1, 1]
        Fd00 = L00 * F00 + L01 * F10
        Fd01 = L00 * F01 + L01 * F11
        Fd10 = L10 * F00 + L11 * F10
        Fd11 = L10 * F01 + L11 * F11
        Fdot[p, 0, 0] = Fd00
        Fdot[p, 0, 1] = Fd01
        Fdot[p, 1, 0] = Fd10
        Fdot[p, 1, 1] = Fd11
        detF = F00 * F11 - F01 * F10
        if detF <= 0.0 or not np.isfinite(detF):
            return FAIL_INVERTED
        # Green strain and strain rate
        e00 = 0.5 * (F00 * F00 + F10 * F10 - 1.0)
        e01 = 0.5 * (F00 * F01 + F10 * F11)
        e11 = 0.5 * (F01 * F01 + F11 * F11 - 1.0)
        ed00 = F00 * Fd00 + F10 * Fd10
        ed01 = 0.5 * (F00 * Fd01 + F10 * Fd11 + Fd00 * F01 + Fd10 * F11)
        ed11 = F01 * Fd01 + F11 * Fd11
        # Piola-Kirchhoff (elastic + dissipative), pushed to Cauchy stress
        trE = e00 + e11
        trEd = ed00 + ed11
        P00 = lam * trE + 2.0 * mu * e00 + lam_d * trEd + 2.0 * mu_d * ed00
        P01 = 2.0 * mu * e01 + 2.0 * mu_d * ed01
        P11 = lam * trE + 2.0 * mu * e11 + lam_d * trEd + 2.0 * mu_d * ed11
        t00 = F00 * P00 + F01 * P01
        t01 = F00 * P01 + F01 * P11
        t10 = F10 * P00 + F11 * P01
        t11 = F10 * P01 + F11 * P11
        s00 = t00 * F00 + t01 * F01
        s01 = t00 * F10 + t01 * F11
        s11 = t10 * F10 + t11 * F11
        Vp = detF * V0[p]
        Vs00 = Vp * s00
        Vs01 = Vp * s01
        Vs11 = Vp * s11
        mp = m[p]
        for a in range(3):
            wa = wx[p, a]
            da = dwx[p, a] * inv_h
            for b in range(3):
                w = wa * wy[p, b]
                gwx = da * wy[p, b]
                gwy = wa * dwy[p, b] * inv_h
                gf[bix + a, biy + b, 0] += w * mp * gx - (Vs00 * gwx + Vs01 * gwy)
                gf[bix + a, biy + b, 1] += w * mp * gy - (Vs01 * gwx + Vs11 * gwy)

    # grid accelerations + boundary conditions
    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                ga[i, j, 0] = gf[i, j, 0] / mI
                ga[i, j, 1] = gf[i, j, 1] / mI
            else:
                ga[i, j, 0] = 0.0
                ga[i, j, 1] = 0.0
            for d in range(2):
                if mode[i, j, d] != 0:
                    ga[i, j, d] = 0.0

    # G2P: particle accelerations
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        a0 = 0.0
        a1 = 0.0
        for a in range(3):
            wa = wx[p, a]
            for b in range(3):
                w = wa * wy[p, b]
                a0 += w * ga[bix + a, biy + b, 0]
                a1 += w * ga[bix + a, biy + b, 1]
        vdot[p, 0] = a0
        vdot[p, 1] = a1
    return OK


@njit(cache=True)
def rk4_step(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u, dt,
    gm, gmv, gv, gf, ga,
    xs, vs, Fs, kx, kv, kF, ax, av, aF,
):
    """Classical RK4 over (x, v, F) in place; control held across stages."""
    P = x.shape[0]
    # stage 1
    st = deriv(x, v, F, m, V0, ox, oy, h, nx, ny, lam, mu, lam_d, mu_d,
               gx, gy, mode, u, gm, gmv, gv, gf, ga, kx, kv, kF)
    if st != OK:
        return st
    for p in range(P):
        for d in range(2):
            ax[p, d] = kx[p, d]
            av[p, d] = kv[p, d]
            xs[p, d] = x[p, d] + 0.5 * dt * kx[p, d]
            vs[p, d] = v[p, d] + 0.5 * dt * kv[p, d]
        for i in range(2):
            for j in range(2):
                aF[p, i, j] = kF[p, i, j]
                Fs[p, i, j] = F[p, i, j] + 0.5 * dt * kF[p, i, j]
    # stage 2
    st = deriv(xs, vs, Fs, m, V0, ox, oy, h, nx, ny, lam, mu, lam_d, mu_d,
               gx, gy, mode, u, gm, gmv, gv, gf, ga, kx, kv, kF)
    if st != OK:
        return st
    for p in range(P):
        for d in range(2):
            ax[p, d] += 2.0 * kx[p, d]
            av[p, d] += 2.0 * kv[p, d]
            xs[p, d] = x[p, d] + 0.5 * dt * kx[p, d]
            vs[p, d] = v[p, d] + 0.5 * dt * kv[p, d]
        for i in range(2):
            for j in range(2):
                aF[p, i, j] += 2.0 * kF[p, i, j]
                Fs[p, i, j] = F[p, i, j] + 0.5 * dt * kF[p, i, j]
    # stage 3
    st = deriv(xs, vs, Fs, m, V0, ox, oy, h, nx, ny, lam, mu, lam_d, mu_d,
               gx, gy, mode, u, gm, gmv, gv, gf, ga, kx, kv, kF)
    if st != OK:
        return st
    for p in range(P):
        for d in range(2):
            ax[p, d] += 2.0 * kx[p, d]
            av[p, d] += 2.0 * kv[p, d]
            xs[p, d] = x[p, d] + dt * kx[p, d]
            vs[p, d] = v[p, d] + dt * kv[p, d]
        for i in range(2):
            for j in range(2):
                aF[p, i, j] += 2.0 * kF[p, i, j]
                Fs[p, i, j] = F[p, i, j] + dt * kF[p, i, j]
    # stage 4
    st = deriv(xs, vs, Fs, m, V0, ox, oy, h, nx, ny, lam, mu, lam_d, mu_d,
               gx, gy, mode, u, gm, gmv, gv, gf, ga, kx, kv, kF)
    if st != OK:
        return st
    c = dt / 6.0
    for p in range(P):
        for d in range(2):
            x[p, d] += c * (ax[p, d] + kx[p, d])
            v[p, d] += c * (av[p, d] + kv[p, d])
        for i in range(2):
            for j in range(2):
                F[p, i, j] += c * (aF[p, i, j] + kF[p, i, j])
    return OK


@njit(cache=True)
def rollout(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u_step, t0, dt, n_steps,
    rec_every, rec_t, rec_ekin, rec_estrain, rec_u,
):
    """Advance n_steps of RK4 in place, accumulating the kinetic-energy cost.

    ``u_step[s]`` is the control applied during step s (ZOH). Records go to
    the ``rec_*`` arrays every ``rec_every`` steps (slot 0 is the initial
    state); pass rec_every = 0 to disable recording. Returns
    (status, failed_step, cost).
    """
    P = x.shape[0]
    gm = np.zeros((nx, ny))
    gmv = np.zeros((nx, ny, 2))
    gv = np.zeros((nx, ny, 2))
    gf = np.zeros((nx, ny, 2))
    ga = np.zeros((nx, ny, 2))
    xs = np.empty((P, 2))
    vs = np.empty((P, 2))
    Fs = np.empty((P, 2, 2))
    kx = np.empty((P, 2))
    kv = np.empty((P, 2))
    kF = np.empty((P, 2, 2))
    ax = np.empty((P, 2))
    av = np.empty((P, 2))
    aF = np.empty((P, 2, 2))

    cost = 0.0
    rec_i = 0
    if rec_every > 0:
        rec_t[0] = t0
        rec_ekin[0] = kinetic_energy(v, m)
        rec_estrain[0] = strain_energy(F, V0, lam, mu)
        rec_u[0] = u_step[0] if n_steps > 0 else 0.0
        rec_i = 1
    st = check_state(x, v, F, ox, oy, h, nx, ny)
    if st != OK:
        return st, 0, cost
    for s in range(n_steps):
        u = u_step[s]
        st = rk4_step(x, v, F, m, V0, ox, oy, h, nx, ny, lam, mu, lam_d, mu_d,
                      gx, gy, mode, u, dt, gm, gmv, gv, gf, ga,
                      xs, vs, Fs, kx, kv, kF, ax, av, aF)
        if st == OK:
            st = check_state(x, v, F, ox, oy, h, nx, ny)
        if st != OK:
            return st, s, cost
        cost += kinetic_energy(v, m)
        if rec_every > 0 and ((s + 1) % rec_every == 0 or s == n_steps - 1):
            rec_t[rec_i] = t0 + (s + 1) * dt
            rec_ekin[rec_i] = kinetic_energy(v, m)
            rec_estrain[rec_i] = strain_energy(F, V0, lam, mu)
            rec_u[rec_i] = u
            rec_i += 1
    return OK, n_steps, cost


@njit(cache=True)
def flip_usl_step(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u, dt,
    gm, gmv, gv, gf, ga,
):
    """Standard FLIP update-stress-last step (dissipation baseline), in place.

    Grid momenta take a single Euler step; particles get the pure-FLIP
    velocity increment and advect with the updated grid velocities. ``ga``
    is reused to hold the updated grid velocity field.
    """
    P = x.shape[0]
    inv_h = 1.0 / h

    bx = np.empty(P, np.int64)
    by = np.empty(P, np.int64)
    wx = np.empty((P, 3))
    wy = np.empty((P, 3))
    dwx = np.empty((P, 3))
    dwy = np.empty((P, 3))
    d2wx = np.empty((P, 3))
    d2wy = np.empty((P, 3))
    i0, i1, j0, j1 = _stencils(x, ox, oy, inv_h, bx, by, wx, wy, dwx, dwy, d2wx, d2wy)
    if i0 < 0 or j0 < 0 or i1 > nx or j1 > ny:
        return FAIL_OUT_OF_GRID

    for i in range(i0, i1):
        for j in range(j0, j1):
            gm[i, j] = 0.0
            gmv[i, j, 0] = 0.0
            gmv[i, j, 1] = 0.0
            gf[i, j, 0] = 0.0
            gf[i, j, 1] = 0.0

    for p in range(P):
        bix = bx[p]
        biy = by[p]
        mp = m[p]
        mvx = mp * v[p, 0]
        mvy = mp * v[p, 1]
        for a in range(3):
            wa = wx[p, a]
            for b in range(3):
                w = wa * wy[p, b]
                gm[bix + a, biy + b] += w * mp
                gmv[bix + a, biy + b, 0] += w * mvx
                gmv[bix + a, biy + b, 1] += w * mvy

    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                gv[i, j, 0] = gmv[i, j, 0] / mI
                gv[i, j, 1] = gmv[i, j, 1] / mI
            else:
                gv[i, j, 0] = 0.0
                gv[i, j, 1] = 0.0
            for d in range(2):
                mo = mode[i, j, d]
                if mo == 1:
                    gv[i, j, d] = 0.0
                elif mo == 2:
                    gv[i, j, d] = u

    # stress from the current deformation state (USL ordering: this is the
    # stress evaluated at the end of the previous step) and nodal forces
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        L00 = 0.0
        L01 = 0.0
        L10 = 0.0
        L11 = 0.0
        for a in range(3):
            wa = wx[p, a]
            da = dwx[p, a] * inv_h
            for b in range(3):
                gwx = da * wy[p, b]
                gwy = wa * dwy[p, b] * inv_h
                vIx = gv[bix + a, biy + b, 0]
                vIy = gv[bix + a, biy + b, 1]
                L00 += vIx * gwx
                L01 += vIx * gwy
                L10 += vIy * gwx
                L11 += vIy * gwy
        F00 = F[p, 0, 0]
        F01 = F[p, 0, 1]
        F10 = F[p, 1, 0]
        F11 = F[p, 1, 1]
        detF = F00 * F11 - F01 * F10
        if detF <= 0.0 or not np.isfinite(detF):
            return FAIL_INVERTED
        Fd00 = L00 * F00 + L01 * F10
        Fd01 = L00 * F01 + L01 * F11
        Fd10 = L10 * F00 + L11 * F10
        Fd11 = L10 * F01 + L11 * F11
        e00 = 0.5 * (F00 * F00 + F10 * F10 - 1.0)
        e01 = 0.5 * (F00 * F01 + F10 * F11)
        e11 = 0.5 * (F01 * F01 + F11 * F11 - 1.0)
        ed00 = F00 * Fd00 + F10 * Fd10
        ed01 = 0.5 * (F00 * Fd01 + F10 * Fd11 + Fd00 * F01 + Fd10 * F11)
        ed11 = F01 * Fd01 + F11 * Fd11
        trE = e00 + e11
        trEd = ed00 + ed11
        P00 = lam * trE + 2.0 * mu * e00 + lam_d * trEd + 2.0 * mu_d * ed00
        P01 = 2.0 * mu * e01 + 2.0 * mu_d * ed01
        P11 = lam * trE + 2.0 * mu * e11 + lam_d * trEd + 2.0 * mu_d * ed11
        t00 = F00 * P00 + F01 * P01
        t01 = F00 * P01 + F01 * P11
        t10 = F10 * P00 + F11 * P01
        t11 = F10 * P01 + F11 * P11
        s00 = t00 * F00 + t01 * F01
        s01 = t00 * F10 + t01 * F11
        s11 = t10 * F10 + t11 * F11
        Vp = detF * V0[p]
        Vs00 = Vp * s00
        Vs01 = Vp * s01
        Vs11 = Vp * s11
        mp = m[p]
        for a in range(3):
            wa = wx[p, a]
            da = dwx[p, a] * inv_h
            for b in range(3):
                w = wa * wy[p, b]
                gwx = da * wy[p, b]
                gwy = wa * dwy[p, b] * inv_h
                gf[bix + a, biy + b, 0] += w * mp * gx - (Vs00 * gwx + Vs01 * gwy)
                gf[bix + a, biy + b, 1] += w * mp * gy - (Vs01 * gwx + Vs11 * gwy)

    # grid momentum update (Euler) -> updated grid velocities in ga
    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                ga[i, j, 0] = gv[i, j, 0] + dt * gf[i, j, 0] / mI
                ga[i, j, 1] = gv[i, j, 1] + dt * gf[i, j, 1] / mI
            else:
                ga[i, j, 0] = 0.0
                ga[i, j, 1] = 0.0
            for d in range(2):
                mo = mode[i, j, d]
                if mo == 1:
                    ga[i, j, d] = 0.0
                elif mo == 2:
                    ga[i, j, d] = u

    # G2P: FLIP velocity increment, advection, deformation update
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        dv0 = 0.0
        dv1 = 0.0
        xn0 = 0.0
        xn1 = 0.0
        L00 = 0.0
        L01 = 0.0
        L10 = 0.0
        L11 = 0.0
        for a in range(3):
            wa = wx[p, a]
            da = dwx[p, a] * inv_h
            for b in range(3):
                w = wa * wy[p, b]
                gwx = da * wy[p, b]
                gwy = wa * dwy[p, b] * inv_h
                vn0 = ga[bix + a, biy + b, 0]
                vn1 = ga[bix + a, biy + b, 1]
                dv0 += w * (vn0 - gv[bix + a, biy + b, 0])
                dv1 += w * (vn1 - gv[bix + a, biy + b, 1])
                xn0 += w * vn0
                xn1 += w * vn1
                L00 += vn0 * gwx
                L01 += vn0 * gwy
                L10 += vn1 * gwx
                L11 += vn1 * gwy
        v[p, 0] += dv0
        v[p, 1] += dv1
        x[p, 0] += dt * xn0
        x[p, 1] += dt * xn1
        F00 = F[p, 0, 0]
        F01 = F[p, 0, 1]
        F10 = F[p, 1, 0]
        F11 = F[p, 1, 1]
        F[p, 0, 0] = (1.0 + dt * L00) * F00 + dt * L01 * F10
        F[p, 0, 1] = (1.0 + dt * L00) * F01 + dt * L01 * F11
        F[p, 1, 0] = dt * L10 * F00 + (1.0 + dt * L11) * F10
        F[p, 1, 1] = dt * L10 * F01 + (1.0 + dt * L11) * F11
    return OK


@njit(cache=True)
def flip_rollout(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u_step, t0, dt, n_steps,
    rec_every, rec_t, rec_ekin, rec_estrain, rec_u,
):
    """FLIP USL baseline rollout, same recording contract as ``rollout``."""
    gm = np.zeros((nx, ny))
    gmv = np.zeros((nx, ny, 2))
    gv = np.zeros((nx, ny, 2))
    gf = np.zeros((nx, ny, 2))
    ga = np.zeros((nx, ny, 2))
    cost = 0.0
    rec_i = 0
    if rec_every > 0:
        rec_t[0] = t0
        rec_ekin[0] = kinetic_energy(v, m)
        rec_estrain[0] = strain_energy(F, V0, lam, mu)
        rec_u[0] = u_step[0] if n_steps > 0 else 0.0
        rec_i = 1
    st = check_state(x, v, F, ox, oy, h, nx, ny)
    if st != OK:
        return st, 0, cost
    for s in range(n_steps):
        u = u_step[s]
        st = flip_usl_step(x, v, F, m, V0, ox, oy, h, nx, ny,
                           lam, mu, lam_d, mu_d, gx, gy, mode, u, dt,
                           gm, gmv, gv, gf, ga)
        if st == OK:
            st = check_state(x, v, F, ox, oy, h, nx, ny)
        if st != OK:
            return st, s, cost
        cost += kinetic_energy(v, m)
        if rec_every > 0 and ((s + 1) % rec_every == 0 or s == n_steps - 1):
            rec_t[rec_i] = t0 + (s + 1) * dt
            rec_ekin[rec_i] = kinetic_energy(v, m)
            rec_estrain[rec_i] = strain_energy(F, V0, lam, mu)
            rec_u[rec_i] = u
            rec_i += 1
    return OK, n_steps, cost
