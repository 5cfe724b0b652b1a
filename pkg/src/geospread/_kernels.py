"""Compiled inner loops.

Potentials are dispatched on an integer code with a flat parameter array so
that every loop can be jitted once for the whole catalog.
"""
import numpy as np
from numba import njit

QUADRATIC = 0
CHAIN = 1
HENON_HEILES = 2

MODE_BASE = 0
MODE_TANGENT = 1
MODE_JACOBI = 2

STATUS_OK = 0
STATUS_GUARD = 1
STATUS_BLOWUP = 2
STATUS_SINGULAR = 3


@njit(cache=True)
def potential(kind, params, q):
    if kind == QUADRATIC:
        v = 0.0
        for i in range(q.shape[0]):
            v += 0.5 * params[i] * q[i] * q[i]
        return v
    elif kind == CHAIN:
        k2 = params[0]
        k4 = params[1]
        n = q.shape[0]
        v = 0.0
        left = 0.0
        for i in range(n + 1):
            right = q[i] if i < n else 0.0
            d = right - left
            d2 = d * d
            v += 0.5 * k2 * d2 + 0.25 * k4 * d2 * d2
            left = right
        return v
    else:
        x = q[0]
        y = q[1]
        return 0.5 * (x * x + y * y) + x * x * y - y * y * y / 3.0


@njit(cache=True)
def gradient_into(kind, params, q, g):
    n = q.shape[0]
    if kind == QUADRATIC:
        for i in range(n):
            g[i] = params[i] * q[i]
    elif kind == CHAIN:
        k2 = params[0]
        k4 = params[1]
        for i in range(n):
            g[i] = 0.0
        left = 0.0
        for b in range(n + 1):
            right = q[b] if b < n else 0.0
            d = right - left
            f = k2 * d + k4 * d * d * d
            # bond b joins site b-1 (left) and site b (right)
            if b < n:
                g[b] += f
            if b > 0:
                g[b - 1] -= f
            left = right
    else:
        x = q[0]
        y = q[1]
        g[0] = x + 2.0 * x * y
        g[1] = y + x * x - y * y


@njit(cache=True)
def hessian_into(kind, params, q, h):
    n = q.shape[0]
    for i in range(n):
        for j in range(n):
            h[i, j] = 0.0
    if kind == QUADRATIC:
        for i in range(n):
            h[i, i] = params[i]
    elif kind == CHAIN:
        k2 = params[0]
        k4 = params[1]
        left = 0.0
        for b in range(n + 1):
            right = q[b] if b < n else 0.0
            d = right - left
            c = k2 + 3.0 * k4 * d * d
            if b < n:
                h[b, b] += c
            if b > 0:
                h[b - 1, b - 1] += c
            if 0 < b < n:
                h[b - 1, b] -= c
                h[b, b - 1] -= c
            left = right
    else:
        x = q[0]
        y = q[1]
        h[0, 0] = 1.0 + 2.0 * y
        h[0, 1] = 2.0 * x
        h[1, 0] = 2.0 * x
        h[1, 1] = 1.0 - 2.0 * y


@njit(cache=True)
def gradient(kind, params, q):
    g = np.empty(q.shape[0])
    gradient_into(kind, params, q, g)
    return g


@njit(cache=True)
def hessian(kind, params, q):
    n = q.shape[0]
    h = np.empty((n, n))
    hessian_into(kind, params, q, h)
    return h


@njit(cache=True)
def kinetic(m, p):
    t = 0.0
    for i in range(p.shape[0]):
        t += 0.5 * p[i] * p[i] / m[i]
    return t


@njit(cache=True)
def tangent_accel_into(h, m, xi, out):
    n = xi.shape[0]
    for i in range(n):
        acc = 0.0
        for j in range(n):
            acc += h[i, j] * xi[j]
        out[i] = -acc / m[i]


@njit(cache=True)
def tangent_accel(h, m, xi):
    out = np.empty(xi.shape[0])
    tangent_accel_into(h, m, xi, out)
    return out


@njit(cache=True)
def jacobi_accel_into(g, h, m, qd, kin, xi, xd, out):
    """Cartesian Jacobi-metric spread acceleration with a_ij = diag(m)."""
    n = xi.shape[0]
    # first  = a_ij qd^i xd^j + V_,l xi^l
    # second = V_,il qd^i xi^l + V_,j xd^j + V_,i qd^i V_,l xi^l / T
    first = 0.0
    g_xi = 0.0
    g_qd = 0.0
    qd_hxi = 0.0
    g_xd = 0.0
    for i in range(n):
        hxi = 0.0
        for j in range(n):
            hxi += h[i, j] * xi[j]
        out[i] = -hxi / m[i]
        first += m[i] * qd[i] * xd[i]
        g_xi += g[i] * xi[i]
        g_qd += g[i] * qd[i]
        qd_hxi += qd[i] * hxi
        g_xd += g[i] * xd[i]
    first += g_xi
    second = qd_hxi + g_xd + g_qd * g_xi / kin
    for i in range(n):
        out[i] -= (g[i] / m[i] * first - qd[i] * second) / kin


@njit(cache=True)
def jacobi_accel(g, h, m, qd, kin, xi, xd):
    out = np.empty(xi.shape[0])
    jacobi_accel_into(g, h, m, qd, kin, xi, xd, out)
    return out


@njit(cache=True)
def _deriv(kind, params, m, y, n, k, mode, out, g, h):
    """d/dt of the flat state y = [q, p, xs (k*n), vs (k*n)]; returns T."""
    q = y[0:n]
    p = y[n:2 * n]
    gradient_into(kind, params, q, g)
    kin = 0.0
    for i in range(n):
        out[i] = p[i] / m[i]
        out[n + i] = -g[i]
        kin += 0.5 * p[i] * p[i] / m[i]
    if k > 0:
        hessian_into(kind, params, q, h)
        qd = out[0:n]
        for r in range(k):
            xo = 2 * n + r * n
            vo = 2 * n + k * n + r * n
            for i in range(n):
                out[xo + i] = y[vo + i]
            if mode == MODE_JACOBI:
                jacobi_accel_into(g, h, m, qd, kin, y[xo:xo + n],
                                  y[vo:vo + n], out[vo:vo + n])
            else:
                tangent_accel_into(h, m, y[xo:xo + n], out[vo:vo + n])
    return kin


@njit(cache=True)
def _vec_norm(x, v, w):
    acc = 0.0
    for i in range(x.shape[0]):
        acc += w[i] * (x[i] * x[i] + v[i] * v[i])
    return np.sqrt(acc)


@njit(cache=True)
def _norm_weights(kind, params, m, q, mode, metric, energy):
    if not metric:
        return np.ones(q.shape[0])
    if mode == MODE_JACOBI:
        return 2.0 * (energy - potential(kind, params, q)) * m
    return m.copy()


@njit(cache=True)
def _all_finite(a):
    for x in a.ravel():
        if not np.isfinite(x):
            return False
    return True


@njit(cache=True)
def rk4_run(kind, params, m, q0, p0, t0, xs0, vs0, dt, nsteps, stride,
            mode, renorm, metric, energy, guard, guard_stop, kappa):
    """Classical RK4 on the joint (base, variational) system.

    ``xs0``/``vs0`` hold K variational vectors (K may be 0). Renormalization
    every ``renorm`` steps (0 disables it). Arc-length accumulators use the
    trapezoid rule on the step grid.
    """
    n = q0.shape[0]
    k = xs0.shape[0]
    dim = 2 * n + 2 * k * n
    xo = 2 * n
    vo = 2 * n + k * n
    nrec = nsteps // stride + 2
    rec_t = np.empty(nrec)
    rec_q = np.empty((nrec, n))
    rec_p = np.empty((nrec, n))
    rec_kin = np.empty(nrec)
    rec_pot = np.empty(nrec)
    rec_s = np.empty(nrec)
    rec_qx = np.empty(nrec)
    rec_log = np.empty((nrec, k))
    rec_lnn = np.empty((nrec, k))
    rec_cnt = np.empty(nrec, dtype=np.int64)
    rec_x = np.empty((nrec, k, n))
    rec_v = np.empty((nrec, k, n))
    rec_hits = np.empty(nrec, dtype=np.int64)

    y = np.empty(dim)
    y[0:n] = q0
    y[n:2 * n] = p0
    for r in range(k):
        y[xo + r * n:xo + (r + 1) * n] = xs0[r]
        y[vo + r * n:vo + (r + 1) * n] = vs0[r]
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    tmp = np.empty(dim)
    g = np.empty(n)
    h = np.empty((n, n))

    logsum = np.zeros(k)
    count = 0
    hits = 0
    s = 0.0
    qx = 0.0
    kin0 = kinetic(m, y[n:2 * n])
    pot0 = potential(kind, params, y[0:n])
    status = STATUS_OK
    status_t = np.nan
    t = t0
    j = 0
    kin1 = kin0
    pot1 = pot0

    for step in range(0, nsteps + 1):
        if step > 0:
            c1 = _deriv(kind, params, m, y, n, k, mode, k1, g, h)
            for i in range(dim):
                tmp[i] = y[i] + 0.5 * dt * k1[i]
            c2 = _deriv(kind, params, m, tmp, n, k, mode, k2, g, h)
            for i in range(dim):
                tmp[i] = y[i] + 0.5 * dt * k2[i]
            c3 = _deriv(kind, params, m, tmp, n, k, mode, k3, g, h)
            for i in range(dim):
                tmp[i] = y[i] + dt * k3[i]
            c4 = _deriv(kind, params, m, tmp, n, k, mode, k4, g, h)
            t = t0 + step * dt
            if mode == MODE_JACOBI and min(c1, c2, c3, c4) <= 0.0:
                status = STATUS_SINGULAR
                status_t = t - dt
                break
            finite = True
            for i in range(dim):
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
                if not np.isfinite(y[i]):
                    finite = False
            if not finite:
                status = STATUS_BLOWUP
                status_t = t
                break
            kin1 = kinetic(m, y[n:2 * n])
            pot1 = potential(kind, params, y[0:n])
            s += dt * (kin0 + kin1)
            qx += 0.5 * kappa * kappa * dt - 0.5 * dt * ((kin0 - pot0) + (kin1 - pot1))
            kin0 = kin1
            pot0 = pot1
            if renorm > 0 and step % renorm == 0 and k > 0:
                w = _norm_weights(kind, params, m, y[0:n], mode, metric, energy)
                for r in range(k):
                    xa = y[xo + r * n:xo + (r + 1) * n]
                    va = y[vo + r * n:vo + (r + 1) * n]
                    nrm = _vec_norm(xa, va, w)
                    logsum[r] += np.log(nrm)
                    for i in range(n):
                        xa[i] /= nrm
                        va[i] /= nrm
                count += 1
        hit = mode == MODE_JACOBI and kin1 < guard
        if hit:
            hits += 1
        stop = hit and guard_stop
        if step % stride == 0 or stop or step == nsteps:
            w = _norm_weights(kind, params, m, y[0:n], mode, metric, energy)
            rec_t[j] = t
            rec_q[j] = y[0:n]
            rec_p[j] = y[n:2 * n]
            rec_kin[j] = kin1
            rec_pot[j] = pot1
            rec_s[j] = s
            rec_qx[j] = qx
            for r in range(k):
                xa = y[xo + r * n:xo + (r + 1) * n]
                va = y[vo + r * n:vo + (r + 1) * n]
                rec_log[j, r] = logsum[r]
                rec_lnn[j, r] = np.log(_vec_norm(xa, va, w))
                rec_x[j, r] = xa
                rec_v[j, r] = va
            rec_cnt[j] = count
            rec_hits[j] = hits
            j += 1
        if stop:
            status = STATUS_GUARD
            status_t = t
            break

    return (rec_t[:j], rec_q[:j], rec_p[:j], rec_kin[:j], rec_pot[:j],
            rec_s[:j], rec_qx[:j], rec_log[:j], rec_lnn[:j], rec_cnt[:j],
            rec_x[:j], rec_v[:j], rec_hits[:j], status, status_t)


@njit(cache=True)
def verlet_run(kind, params, m, q0, p0, t0, dt, nsteps, stride, kappa):
    """Velocity Verlet with the same accumulators as ``rk4_run``."""
    n = q0.shape[0]
    nrec = nsteps // stride + 2
    rec_t = np.empty(nrec)
    rec_q = np.empty((nrec, n))
    rec_p = np.empty((nrec, n))
    rec_kin = np.empty(nrec)
    rec_pot = np.empty(nrec)
    rec_s = np.empty(nrec)
    rec_qx = np.empty(nrec)

    q = q0.copy()
    p = p0.copy()
    g = gradient(kind, params, q)
    kin0 = kinetic(m, p)
    pot0 = potential(kind, params, q)
    e0 = kin0 + pot0
    scale = abs(e0) if e0 != 0.0 else 1.0
    drift = 0.0
    s = 0.0
    qx = 0.0
    status = STATUS_OK
    status_t = np.nan

    j = 0
    rec_t[j] = t0
    rec_q[j] = q
    rec_p[j] = p
    rec_kin[j] = kin0
    rec_pot[j] = pot0
    rec_s[j] = 0.0
    rec_qx[j] = 0.0
    j += 1

    for step in range(1, nsteps + 1):
        ph = p - 0.5 * dt * g
        q = q + dt * ph / m
        g = gradient(kind, params, q)
        p = ph - 0.5 * dt * g
        t = t0 + step * dt
        if not (_all_finite(q) and _all_finite(p) and _all_finite(g)):
            status = STATUS_BLOWUP
            status_t = t
            break
        kin1 = kinetic(m, p)
        pot1 = potential(kind, params, q)
        s += dt * (kin0 + kin1)
        qx += 0.5 * kappa * kappa * dt - 0.5 * dt * ((kin0 - pot0) + (kin1 - pot1))
        kin0 = kin1
        pot0 = pot1
        d = abs(kin1 + pot1 - e0) / scale
        if d > drift:
            drift = d
        if step % stride == 0 or step == nsteps:
            rec_t[j] = t
            rec_q[j] = q
            rec_p[j] = p
            rec_kin[j] = kin1
            rec_pot[j] = pot1
            rec_s[j] = s
            rec_qx[j] = qx
            j += 1

    return (rec_t[:j], rec_q[:j], rec_p[:j], rec_kin[:j], rec_pot[:j],
            rec_s[:j], rec_qx[:j], drift, status, status_t)


def warmup():
    """Compile (or load from cache) every loop once."""
    m = np.ones(2)
    q = np.array([0.1, 0.0])
    p = np.array([0.0, 0.3])
    params = np.ones(2)
    xs = np.zeros((1, 2))
    xs[0, 0] = 1.0
    vs = np.zeros((1, 2))
    for kind in (QUADRATIC, CHAIN, HENON_HEILES):
        potential(kind, params, q)
        hessian(kind, params, q)
    for mode in (MODE_BASE, MODE_TANGENT, MODE_JACOBI):
        rk4_run(QUADRATIC, params, m, q, p, 0.0, xs if mode else xs[:0],
                vs if mode else vs[:0], 1e-3, 4, 2, mode, 2, False, 0.05,
                0.0, True, 1.0)
    verlet_run(QUADRATIC, params, m, q, p, 0.0, 1e-3, 4, 2, 1.0)
