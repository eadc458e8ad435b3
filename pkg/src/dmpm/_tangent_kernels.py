"""Forward-mode tangent propagation through the MPM pipeline.

These kernels mirror ``_kernels.deriv`` / ``_kernels.rk4_step`` but carry T
directional derivatives (tangent channels) of the particle state with
respect to the window's control values. Tangent axes are trailing so the
per-channel inner loops are contiguous.

Branch handling: the 3x3 stencil assignment and the grid mass cutoff are
treated as locally constant (zero derivative through the branch), matching
the almost-everywhere derivative of the piecewise-polynomial kernels.
"""

import numpy as np
from numba import njit

from dmpm._kernels import (
    FAIL_INVERTED,
    FAIL_OUT_OF_GRID,
    MASS_EPS,
    OK,
    _stencils,
    check_state,
)


@njit(cache=True)
def deriv_jvp(
    x, v, F, xt, vt, Ft, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u, du,
    gm, gmv, gv, gf, ga,
    gmt, gmvt, gvt, gft, gat,
    xdot, vdot, Fdot, xdot_t, vdot_t, Fdot_t,
):
    """Primal derivative evaluation plus its JVP along T tangent channels.

    ``du`` is the (T,) tangent of the control value u. Tangent arrays:
    xt, vt (P, 2, T); Ft (P, 2, 2, T); grid tangents with matching
    trailing T axis.
    """
    P = x.shape[0]
    T = du.shape[0]
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

    # tangents of the per-axis kernel values and derivatives:
    # d/dtheta N(r) = N'(r) * xt / h,  d/dtheta N'(r) = N''(r) * xt / h
    wxt = np.empty((P, 3, T))
    wyt = np.empty((P, 3, T))
    dwxt = np.empty((P, 3, T))
    dwyt = np.empty((P, 3, T))
    for p in range(P):
        for k in range(3):
            cx = dwx[p, k] * inv_h
            c2x = d2wx[p, k] * inv_h
            cy = dwy[p, k] * inv_h
            c2y = d2wy[p, k] * inv_h
            for t in range(T):
                wxt[p, k, t] = cx * xt[p, 0, t]
                dwxt[p, k, t] = c2x * xt[p, 0, t]
                wyt[p, k, t] = cy * xt[p, 1, t]
                dwyt[p, k, t] = c2y * xt[p, 1, t]

    for i in range(i0, i1):
        for j in range(j0, j1):
            gm[i, j] = 0.0
            gmv[i, j, 0] = 0.0
            gmv[i, j, 1] = 0.0
            gf[i, j, 0] = 0.0
            gf[i, j, 1] = 0.0
            for t in range(T):
                gmt[i, j, t] = 0.0
                gmvt[i, j, 0, t] = 0.0
                gmvt[i, j, 1, t] = 0.0
                gft[i, j, 0, t] = 0.0
                gft[i, j, 1, t] = 0.0

    # P2G
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        mp = m[p]
        v0 = v[p, 0]
        v1 = v[p, 1]
        for a in range(3):
            wa = wx[p, a]
            for b in range(3):
                wb = wy[p, b]
                w = wa * wb
                i = bix + a
                j = biy + b
                gm[i, j] += w * mp
                gmv[i, j, 0] += w * mp * v0
                gmv[i, j, 1] += w * mp * v1
                for t in range(T):
                    wt = wxt[p, a, t] * wb + wa * wyt[p, b, t]
                    gmt[i, j, t] += wt * mp
                    gmvt[i, j, 0, t] += mp * (wt * v0 + w * vt[p, 0, t])
                    gmvt[i, j, 1, t] += mp * (wt * v1 + w * vt[p, 1, t])

    # grid velocities + BC
    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                inv_m = 1.0 / mI
                for d in range(2):
                    vd = gmv[i, j, d] * inv_m
                    gv[i, j, d] = vd
                    for t in range(T):
                        gvt[i, j, d, t] = (gmvt[i, j, d, t] - vd * gmt[i, j, t]) * inv_m
            else:
                for d in range(2):
                    gv[i, j, d] = 0.0
                    for t in range(T):
                        gvt[i, j, d, t] = 0.0
            for d in range(2):
                mo = mode[i, j, d]
                if mo == 1:
                    gv[i, j, d] = 0.0
                    for t in range(T):
                        gvt[i, j, d, t] = 0.0
                elif mo == 2:
                    gv[i, j, d] = u
                    for t in range(T):
                        gvt[i, j, d, t] = du[t]

    # G2P2G
    Lt = np.empty((2, 2, T))
    Fdt = np.empty((2, 2, T))
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        xd0 = 0.0
        xd1 = 0.0
        L00 = 0.0
        L01 = 0.0
        L10 = 0.0
        L11 = 0.0
        for t in range(T):
            xdot_t[p, 0, t] = 0.0
            xdot_t[p, 1, t] = 0.0
            for i in range(2):
                for j in range(2):
                    Lt[i, j, t] = 0.0
        for a in range(3):
            wa = wx[p, a]
            da = dwx[p, a] * inv_h
            for b in range(3):
                wb = wy[p, b]
                w = wa * wb
                gwx = da * wb
                gwy = wa * dwy[p, b] * inv_h
                i = bix + a
                j = biy + b
                vIx = gv[i, j, 0]
                vIy = gv[i, j, 1]
                xd0 += w * vIx
                xd1 += w * vIy
                L00 += vIx * gwx
                L01 += vIx * gwy
                L10 += vIy * gwx
                L11 += vIy * gwy
                for t in range(T):
                    wt = wxt[p, a, t] * wb + wa * wyt[p, b, t]
                    gwxt_ = dwxt[p, a, t] * inv_h * wb + da * wyt[p, b, t]
                    gwyt_ = wxt[p, a, t] * dwy[p, b] * inv_h + wa * dwyt[p, b, t] * inv_h
                    vIxt = gvt[i, j, 0, t]
                    vIyt = gvt[i, j, 1, t]
                    xdot_t[p, 0, t] += wt * vIx + w * vIxt
                    xdot_t[p, 1, t] += wt * vIy + w * vIyt
                    Lt[0, 0, t] += vIxt * gwx + vIx * gwxt_
                    Lt[0, 1, t] += vIxt * gwy + vIx * gwyt_
                    Lt[1, 0, t] += vIyt * gwx + vIy * gwxt_
                    Lt[1, 1, t] += vIyt * gwy + vIy * gwyt_
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
        for t in range(T):
            Ft00 = Ft[p, 0, 0, t]
            Ft01 = Ft[p, 0, 1, t]
            Ft10 = Ft[p, 1, 0, t]
            Ft11 = Ft[p, 1, 1, t]
            Fdt[0, 0, t] = Lt[0, 0, t] * F00 + Lt[0, 1, t] * F10 + L00 * Ft00 + L01 * Ft10
            Fdt[0, 1, t] = Lt[0, 0, t] * F01 + Lt[0, 1, t] * F11 + L00 * Ft01 + L01 * Ft11
            Fdt[1, 0, t] = Lt[1, 0, t] * F00 + Lt[1, 1, t] * F10 + L10 * Ft00 + L11 * Ft10
            Fdt[1, 1, t] = Lt[1, 0, t] * F01 + Lt[1, 1, t] * F11 + L10 * Ft01 + L11 * Ft11
            Fdot_t[p, 0, 0, t] = Fdt[0, 0, t]
            Fdot_t[p, 0, 1, t] = Fdt[0, 1, t]
            Fdot_t[p, 1, 0, t] = Fdt[1, 0, t]
            Fdot_t[p, 1, 1, t] = Fdt[1, 1, t]
        detF = F00 * F11 - F01 * F10
        if detF <= 0.0 or not np.isfinite(detF):
            return FAIL_INVERTED
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
        # tangent of V * sigma
        Vst = np.empty((3, T))
        for t in range(T):
            Ft00 = Ft[p, 0, 0, t]
            Ft01 = Ft[p, 0, 1, t]
            Ft10 = Ft[p, 1, 0, t]
            Ft11 = Ft[p, 1, 1, t]
            Fdt00 = Fdt[0, 0, t]
            Fdt01 = Fdt[0, 1, t]
            Fdt10 = Fdt[1, 0, t]
            Fdt11 = Fdt[1, 1, t]
            et00 = F00 * Ft00 + F10 * Ft10
            et01 = 0.5 * (Ft00 * F01 + F00 * Ft01 + Ft10 * F11 + F10 * Ft11)
            et11 = F01 * Ft01 + F11 * Ft11
            edt00 = Ft00 * Fd00 + F00 * Fdt00 + Ft10 * Fd10 + F10 * Fdt10
            edt01 = 0.5 * (
                Ft00 * Fd01 + F00 * Fdt01 + Ft10 * Fd11 + F10 * Fdt11
                + Fdt00 * F01 + Fd00 * Ft01 + Fdt10 * F11 + Fd10 * Ft11
            )
            edt11 = Ft01 * Fd01 + F01 * Fdt01 + Ft11 * Fd11 + F11 * Fdt11
            trEt = et00 + et11
            trEdt = edt00 + edt11
            Pt00 = lam * trEt + 2.0 * mu * et00 + lam_d * trEdt + 2.0 * mu_d * edt00
            Pt01 = 2.0 * mu * et01 + 2.0 * mu_d * edt01
            Pt11 = lam * trEt + 2.0 * mu * et11 + lam_d * trEdt + 2.0 * mu_d * edt11
            # sigma_t = Ft P F^T + F Pt F^T + F P Ft^T  via  tt = Ft P + F Pt
            tt00 = Ft00 * P00 + Ft01 * P01 + F00 * Pt00 + F01 * Pt01
            tt01 = Ft00 * P01 + Ft01 * P11 + F00 * Pt01 + F01 * Pt11
            tt10 = Ft10 * P00 + Ft11 * P01 + F10 * Pt00 + F11 * Pt01
            tt11 = Ft10 * P01 + Ft11 * P11 + F10 * Pt01 + F11 * Pt11
            st00 = tt00 * F00 + tt01 * F01 + t00 * Ft00 + t01 * Ft01
            st01 = tt00 * F10 + tt01 * F11 + t00 * Ft10 + t01 * Ft11
            st11 = tt10 * F10 + tt11 * F11 + t10 * Ft10 + t11 * Ft11
            detFt = Ft00 * F11 + F00 * Ft11 - Ft01 * F10 - F01 * Ft10
            Vpt = detFt * V0[p]
            Vst[0, t] = Vpt * s00 + Vp * st00
            Vst[1, t] = Vpt * s01 + Vp * st01
            Vst[2, t] = Vpt * s11 + Vp * st11
        for a in range(3):
            wa = wx[p, a]
            da = dwx[p, a] * inv_h
            for b in range(3):
                wb = wy[p, b]
                w = wa * wb
                gwx = da * wb
                gwy = wa * dwy[p, b] * inv_h
                i = bix + a
                j = biy + b
                gf[i, j, 0] += w * mp * gx - (Vs00 * gwx + Vs01 * gwy)
                gf[i, j, 1] += w * mp * gy - (Vs01 * gwx + Vs11 * gwy)
                for t in range(T):
                    wt = wxt[p, a, t] * wb + wa * wyt[p, b, t]
                    gwxt_ = dwxt[p, a, t] * inv_h * wb + da * wyt[p, b, t]
                    gwyt_ = wxt[p, a, t] * dwy[p, b] * inv_h + wa * dwyt[p, b, t] * inv_h
                    gft[i, j, 0, t] += wt * mp * gx - (
                        Vst[0, t] * gwx + Vs00 * gwxt_ + Vst[1, t] * gwy + Vs01 * gwyt_
                    )
                    gft[i, j, 1, t] += wt * mp * gy - (
                        Vst[1, t] * gwx + Vs01 * gwxt_ + Vst[2, t] * gwy + Vs11 * gwyt_
                    )

    # grid accelerations + BC
    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                inv_m = 1.0 / mI
                for d in range(2):
                    ad = gf[i, j, d] * inv_m
                    ga[i, j, d] = ad
                    for t in range(T):
                        gat[i, j, d, t] = (gft[i, j, d, t] - ad * gmt[i, j, t]) * inv_m
            else:
                for d in range(2):
                    ga[i, j, d] = 0.0
                    for t in range(T):
                        gat[i, j, d, t] = 0.0
            for d in range(2):
                if mode[i, j, d] != 0:
                    ga[i, j, d] = 0.0
                    for t in range(T):
                        gat[i, j, d, t] = 0.0

    # G2P
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        a0 = 0.0
        a1 = 0.0
        for t in range(T):
            vdot_t[p, 0, t] = 0.0
            vdot_t[p, 1, t] = 0.0
        for a in range(3):
            wa = wx[p, a]
            for b in range(3):
                wb = wy[p, b]
                w = wa * wb
                i = bix + a
                j = biy + b
                aIx = ga[i, j, 0]
                aIy = ga[i, j, 1]
                a0 += w * aIx
                a1 += w * aIy
                for t in range(T):
                    wt = wxt[p, a, t] * wb + wa * wyt[p, b, t]
                    vdot_t[p, 0, t] += wt * aIx + w * gat[i, j, 0, t]
                    vdot_t[p, 1, t] += wt * aIy + w * gat[i, j, 1, t]
        vdot[p, 0] = a0
        vdot[p, 1] = a1
    return OK


@njit(cache=True)
def window_rollout_jvp(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u_step, chan_step, n_chan, t0, dt, n_steps,
):
    """Windowed rollout with cost and its gradient w.r.t. the T controls.

    ``chan_step[s]`` names the tangent channel (ZOH slot) active during
    step s. The state arrays are advanced in place; tangents start at zero
    because the window start state does not depend on this window's
    controls. Returns (status, failed_step, cost, dcost).
    """
    P = x.shape[0]
    T = n_chan

    xt = np.zeros((P, 2, T))
    vt = np.zeros((P, 2, T))
    Ft = np.zeros((P, 2, 2, T))

    gm = np.zeros((nx, ny))
    gmv = np.zeros((nx, ny, 2))
    gv = np.zeros((nx, ny, 2))
    gf = np.zeros((nx, ny, 2))
    ga = np.zeros((nx, ny, 2))
    gmt = np.zeros((nx, ny, T))
    gmvt = np.zeros((nx, ny, 2, T))
    gvt = np.zeros((nx, ny, 2, T))
    gft = np.zeros((nx, ny, 2, T))
    gat = np.zeros((nx, ny, 2, T))

    kx = np.empty((P, 2))
    kv = np.empty((P, 2))
    kF = np.empty((P, 2, 2))
    kxt = np.empty((P, 2, T))
    kvt = np.empty((P, 2, T))
    kFt = np.empty((P, 2, 2, T))
    xs = np.empty((P, 2))
    vs = np.empty((P, 2))
    Fs = np.empty((P, 2, 2))
    xst = np.empty((P, 2, T))
    vst = np.empty((P, 2, T))
    Fst = np.empty((P, 2, 2, T))
    axp = np.empty((P, 2))
    avp = np.empty((P, 2))
    aFp = np.empty((P, 2, 2))
    axt = np.empty((P, 2, T))
    avt = np.empty((P, 2, T))
    aFt = np.empty((P, 2, 2, T))

    du = np.zeros(T)
    cost = 0.0
    dcost = np.zeros(T)

    st = check_state(x, v, F, ox, oy, h, nx, ny)
    if st != OK:
        return st, 0, cost, dcost

    stage_a = np.array([0.0, 0.5, 0.5, 1.0])
    stage_w = np.array([1.0, 2.0, 2.0, 1.0])

    for s in range(n_steps):
        u = u_step[s]
        chan = chan_step[s]
        for t in range(T):
            du[t] = 1.0 if t == chan else 0.0

        # RK4 over the extended (primal + tangent) state
        for stage in range(4):
            if stage == 0:
                st = deriv_jvp(
                    x, v, F, xt, vt, Ft, m, V0, ox, oy, h, nx, ny,
                    lam, mu, lam_d, mu_d, gx, gy, mode, u, du,
                    gm, gmv, gv, gf, ga, gmt, gmvt, gvt, gft, gat,
                    kx, kv, kF, kxt, kvt, kFt,
                )
            else:
                c = stage_a[stage] * dt
                for p in range(P):
                    for d in range(2):
                        xs[p, d] = x[p, d] + c * kx[p, d]
                        vs[p, d] = v[p, d] + c * kv[p, d]
                        for t in range(T):
                            xst[p, d, t] = xt[p, d, t] + c * kxt[p, d, t]
                            vst[p, d, t] = vt[p, d, t] + c * kvt[p, d, t]
                    for i in range(2):
                        for j in range(2):
                            Fs[p, i, j] = F[p, i, j] + c * kF[p, i, j]
                            for t in range(T):
                                Fst[p, i, j, t] = Ft[p, i, j, t] + c * kFt[p, i, j, t]
                st = deriv_jvp(
                    xs, vs, Fs, xst, vst, Fst, m, V0, ox, oy, h, nx, ny,
                    lam, mu, lam_d, mu_d, gx, gy, mode, u, du,
                    gm, gmv, gv, gf, ga, gmt, gmvt, gvt, gft, gat,
                    kx, kv, kF, kxt, kvt, kFt,
                )
            if st != OK:
                return st, s, cost, dcost
            w = stage_w[stage]
            if stage == 0:
                for p in range(P):
                    for d in range(2):
                        axp[p, d] = kx[p, d]
                        avp[p, d] = kv[p, d]
                        for t in range(T):
                            axt[p, d, t] = kxt[p, d, t]
                            avt[p, d, t] = kvt[p, d, t]
                    for i in range(2):
                        for j in range(2):
                            aFp[p, i, j] = kF[p, i, j]
                            for t in range(T):
                                aFt[p, i, j, t] = kFt[p, i, j, t]
            else:
                for p in range(P):
                    for d in range(2):
                        axp[p, d] += w * kx[p, d]
                        avp[p, d] += w * kv[p, d]
                        for t in range(T):
                            axt[p, d, t] += w * kxt[p, d, t]
                            avt[p, d, t] += w * kvt[p, d, t]
                    for i in range(2):
                        for j in range(2):
                            aFp[p, i, j] += w * kF[p, i, j]
                            for t in range(T):
                                aFt[p, i, j, t] += w * kFt[p, i, j, t]
        c = dt / 6.0
        for p in range(P):
            for d in range(2):
                x[p, d] += c * axp[p, d]
                v[p, d] += c * avp[p, d]
                for t in range(T):
                    xt[p, d, t] += c * axt[p, d, t]
                    vt[p, d, t] += c * avt[p, d, t]
            for i in range(2):
                for j in range(2):
                    F[p, i, j] += c * aFp[p, i, j]
                    for t in range(T):
                        Ft[p, i, j, t] += c * aFt[p, i, j, t]

        st = check_state(x, v, F, ox, oy, h, nx, ny)
        if st != OK:
            return st, s, cost, dcost

        for p in range(P):
            mp = m[p]
            cost += 0.5 * mp * (v[p, 0] * v[p, 0] + v[p, 1] * v[p, 1])
            for t in range(T):
                dcost[t] += mp * (v[p, 0] * vt[p, 0, t] + v[p, 1] * vt[p, 1, t])
    return OK, n_steps, cost, dcost


@njit(cache=True)
def deriv_primal(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u,
    gm, gmv, gv, gf, ga,
    xdot, vdot, Fdot,
):
    """Primal-only twin of deriv_jvp.

    Statement-for-statement copy of deriv_jvp's primal arithmetic with the
    tangent work removed, so its results are bit-identical to the primal
    half of the fused kernel. The finite-difference oracle differences this
    function: the rollout amplifies last-bit differences between
    arithmetically equal implementations into measurable state divergence,
    so the oracle must evaluate the exact floating-point function whose
    tangent deriv_jvp propagates.
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

    # P2G
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        mp = m[p]
        v0 = v[p, 0]
        v1 = v[p, 1]
        for a in range(3):
            wa = wx[p, a]
            for b in range(3):
                wb = wy[p, b]
                w = wa * wb
                i = bix + a
                j = biy + b
                gm[i, j] += w * mp
                gmv[i, j, 0] += w * mp * v0
                gmv[i, j, 1] += w * mp * v1

    # grid velocities + BC
    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                inv_m = 1.0 / mI
                for d in range(2):
                    vd = gmv[i, j, d] * inv_m
                    gv[i, j, d] = vd
            else:
                for d in range(2):
                    gv[i, j, d] = 0.0
            for d in range(2):
                mo = mode[i, j, d]
                if mo == 1:
                    gv[i, j, d] = 0.0
                elif mo == 2:
                    gv[i, j, d] = u

    # G2P2G
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
                wb = wy[p, b]
                w = wa * wb
                gwx = da * wb
                gwy = wa * dwy[p, b] * inv_h
                i = bix + a
                j = biy + b
                vIx = gv[i, j, 0]
                vIy = gv[i, j, 1]
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
                wb = wy[p, b]
                w = wa * wb
                gwx = da * wb
                gwy = wa * dwy[p, b] * inv_h
                i = bix + a
                j = biy + b
                gf[i, j, 0] += w * mp * gx - (Vs00 * gwx + Vs01 * gwy)
                gf[i, j, 1] += w * mp * gy - (Vs01 * gwx + Vs11 * gwy)

    # grid accelerations + BC
    for i in range(i0, i1):
        for j in range(j0, j1):
            mI = gm[i, j]
            if mI > MASS_EPS:
                inv_m = 1.0 / mI
                for d in range(2):
                    ad = gf[i, j, d] * inv_m
                    ga[i, j, d] = ad
            else:
                for d in range(2):
                    ga[i, j, d] = 0.0
            for d in range(2):
                if mode[i, j, d] != 0:
                    ga[i, j, d] = 0.0

    # G2P
    for p in range(P):
        bix = bx[p]
        biy = by[p]
        a0 = 0.0
        a1 = 0.0
        for a in range(3):
            wa = wx[p, a]
            for b in range(3):
                wb = wy[p, b]
                w = wa * wb
                i = bix + a
                j = biy + b
                aIx = ga[i, j, 0]
                aIy = ga[i, j, 1]
                a0 += w * aIx
                a1 += w * aIy
        vdot[p, 0] = a0
        vdot[p, 1] = a1
    return OK


@njit(cache=True)
def window_rollout_primal(
    x, v, F, m, V0,
    ox, oy, h, nx, ny,
    lam, mu, lam_d, mu_d, gx, gy,
    mode, u_step, t0, dt, n_steps,
):
    """Primal-only twin of window_rollout_jvp; returns (status, step, cost).

    Bit-identical to the cost window_rollout_jvp reports (see deriv_primal);
    this is what the finite-difference oracle evaluates.
    """
    P = x.shape[0]

    gm = np.zeros((nx, ny))
    gmv = np.zeros((nx, ny, 2))
    gv = np.zeros((nx, ny, 2))
    gf = np.zeros((nx, ny, 2))
    ga = np.zeros((nx, ny, 2))

    kx = np.empty((P, 2))
    kv = np.empty((P, 2))
    kF = np.empty((P, 2, 2))
    xs = np.empty((P, 2))
    vs = np.empty((P, 2))
    Fs = np.empty((P, 2, 2))
    axp = np.empty((P, 2))
    avp = np.empty((P, 2))
    aFp = np.empty((P, 2, 2))

    cost = 0.0

    st = check_state(x, v, F, ox, oy, h, nx, ny)
    if st != OK:
        return st, 0, cost

    stage_a = np.array([0.0, 0.5, 0.5, 1.0])
    stage_w = np.array([1.0, 2.0, 2.0, 1.0])

    for s in range(n_steps):
        u = u_step[s]

        for stage in range(4):
            if stage == 0:
                st = deriv_primal(
                    x, v, F, m, V0, ox, oy, h, nx, ny,
                    lam, mu, lam_d, mu_d, gx, gy, mode, u,
                    gm, gmv, gv, gf, ga, kx, kv, kF,
                )
            else:
                c = stage_a[stage] * dt
                for p in range(P):
                    for d in range(2):
                        xs[p, d] = x[p, d] + c * kx[p, d]
                        vs[p, d] = v[p, d] + c * kv[p, d]
                    for i in range(2):
                        for j in range(2):
                            Fs[p, i, j] = F[p, i, j] + c * kF[p, i, j]
                st = deriv_primal(
                    xs, vs, Fs, m, V0, ox, oy, h, nx, ny,
                    lam, mu, lam_d, mu_d, gx, gy, mode, u,
                    gm, gmv, gv, gf, ga, kx, kv, kF,
                )
            if st != OK:
                return st, s, cost
            w = stage_w[stage]
            if stage == 0:
                for p in range(P):
                    for d in range(2):
                        axp[p, d] = kx[p, d]
                        avp[p, d] = kv[p, d]
                    for i in range(2):
                        for j in range(2):
                            aFp[p, i, j] = kF[p, i, j]
            else:
                for p in range(P):
                    for d in range(2):
                        axp[p, d] += w * kx[p, d]
                        avp[p, d] += w * kv[p, d]
                    for i in range(2):
                        for j in range(2):
                            aFp[p, i, j] += w * kF[p, i, j]
        c = dt / 6.0
        for p in range(P):
            for d in range(2):
                x[p, d] += c * axp[p, d]
                v[p, d] += c * avp[p, d]
            for i in range(2):
                for j in range(2):
                    F[p, i, j] += c * aFp[p, i, j]

        st = check_state(x, v, F, ox, oy, h, nx, ny)
        if st != OK:
            return st, s, cost

        for p in range(P):
            mp = m[p]
            cost += 0.5 * mp * (v[p, 0] * v[p, 0] + v[p, 1] * v[p, 1])
    return OK, n_steps, cost
