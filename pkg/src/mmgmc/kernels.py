"""Hot loops: composite prox of l1 + ball indicator (multiplier bisection,
and Dykstra as a cross-check) and the inner proximal-gradient solve for the
scaled-l1 base family.

Every kernel exists twice: a numba version written with explicit loops and a
pure-numpy version. ``_jit.USE_NUMBA`` picks the exported name at import time;
both variants stay importable for tests and benchmarks.
"""
import numpy as np

from ._jit import USE_NUMBA, njit

# status codes returned by the inner kernels
OK = 0
PROX_FAILED = 1
NONFINITE = 2


# ---------------------------------------------------------------- numpy path


def soft_threshold_np(x, t):
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def project_ball_np(center, radius, x):
    diff = x - center
    nrm = np.sqrt(diff @ diff)
    if nrm <= radius:
        return x.copy()
    return center + (radius / nrm) * diff


def dykstra_l1_ball_np(threshold, center, radius, x, max_iter, tol):
    """Return ``(v, iterations, converged)`` for
    ``argmin threshold*||v||_1 + 0.5||v - x||^2  s.t. ||v - center|| <= radius``.

    Dykstra-like alternating prox (Bauschke & Combettes 2008) with the
    inactive-constraint shortcut tried first. Stops when successive iterates
    and the two half-steps all agree to ``tol``.
    """
    s = soft_threshold_np(x, threshold)
    d = s - center
    if d @ d <= radius * radius:
        return s, 0, True
    if threshold == 0.0:
        return project_ball_np(center, radius, x), 0, True
    xk = x.copy()
    p = np.zeros_like(x)
    q = np.zeros_like(x)
    for it in range(1, max_iter + 1):
        yk = project_ball_np(center, radius, xk + p)
        p = xk + p - yk
        xn = soft_threshold_np(yk + q, threshold)
        q = yk + q - xn
        step = max(np.max(np.abs(xn - xk)), np.max(np.abs(xn - yk)))
        xk = xn
        if step <= tol:
            return project_ball_np(center, radius, xk), it, True
    return project_ball_np(center, radius, xk), max_iter, False


def _shrunk_np(threshold, center, x, mu):
    return soft_threshold_np((x + mu * center) / (1.0 + mu), threshold / (1.0 + mu))


def multiplier_l1_ball_np(threshold, center, radius, x, max_iter, tol):
    """Same problem as :func:`dykstra_l1_ball_np`, solved through the ball
    multiplier.

    For multiplier ``mu >= 0`` the minimizer of
    ``threshold*||v||_1 + 0.5||v-x||^2 + 0.5*mu*||v-center||^2`` is a soft
    threshold in closed form, and its distance to ``center`` is nonincreasing
    in ``mu``. Bisection finds the ``mu`` putting it on the sphere.
    """
    s = soft_threshold_np(x, threshold)
    d = s - center
    r2 = radius * radius
    if d @ d <= r2:
        return s, 0, True
    if threshold == 0.0:
        return project_ball_np(center, radius, x), 0, True
    lo, hi = 0.0, 1.0
    it = 0
    while it < max_iter:
        it += 1
        d = _shrunk_np(threshold, center, x, hi) - center
        if d @ d <= r2:
            break
        lo, hi = hi, 2.0 * hi
    converged = False
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tol * max(1.0, hi):
            converged = True
            break
        d = _shrunk_np(threshold, center, x, mid) - center
        if d @ d <= r2:
            hi = mid
        else:
            lo = mid
    v = project_ball_np(center, radius, _shrunk_np(threshold, center, x, hi))
    return v, it, converged


def _scaled_l1_majorizer_np(A, y, lam, alpha, s, gamma, w, z):
    r = A @ z - y
    az = np.abs(z)
    huber = np.where(az <= s / alpha, 0.5 * alpha * z * z, s * az - 0.5 * s * s / alpha)
    dz = z - w
    return 0.5 * (r @ r) + lam * (az.sum() - huber.sum()) + lam * gamma * (dz @ dz)


def _scaled_l1_smooth_grad_np(A, y, lam, alpha, s, gamma, w, z):
    env_grad = alpha * (z - soft_threshold_np(z, s / alpha))
    return A.T @ (A @ z - y) - lam * env_grad + 2.0 * lam * gamma * (z - w)


def inner_scaled_l1_np(A, y, lam, alpha, s, gamma, w, radius, L,
                       tol, max_iter, dyk_iter, dyk_tol):
    """Proximal gradient on the majorizer over ``B_radius(w)``, started at ``w``.

    Returns ``(x_best, f_best, iterations, converged, status)``.
    """
    z = w.copy()
    f_best = _scaled_l1_majorizer_np(A, y, lam, alpha, s, gamma, w, z)
    x_best = z.copy()
    thr = lam / L
    for it in range(1, max_iter + 1):
        g = _scaled_l1_smooth_grad_np(A, y, lam, alpha, s, gamma, w, z)
        zn, _, ok = multiplier_l1_ball_np(thr, w, radius, z - g / L, dyk_iter, dyk_tol)
        if not ok:
            return x_best, f_best, it, False, PROX_FAILED
        if not np.all(np.isfinite(zn)):
            return x_best, f_best, it, False, NONFINITE
        fn = _scaled_l1_majorizer_np(A, y, lam, alpha, s, gamma, w, zn)
        if fn <= f_best:
            f_best = fn
            x_best = zn.copy()
        dz = zn - z
        z = zn
        if L * np.sqrt(dz @ dz) <= tol:
            return x_best, f_best, it, True, OK
    return x_best, f_best, max_iter, False, OK


# ---------------------------------------------------------------- numba path


@njit
def _soft_scalar(v, t):
    if v > t:
        return v - t
    if v < -t:
        return v + t
    return 0.0


@njit
def soft_threshold_nb(x, t):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = _soft_scalar(x[i], t)
    return out


@njit
def _project_ball_inplace(center, radius, v, out):
    n = v.shape[0]
    nrm2 = 0.0
    for i in range(n):
        d = v[i] - center[i]
        nrm2 += d * d
    if nrm2 <= radius * radius:
        for i in range(n):
            out[i] = v[i]
        return
    scale = radius / np.sqrt(nrm2)
    for i in range(n):
        out[i] = center[i] + scale * (v[i] - center[i])


@njit
def project_ball_nb(center, radius, x):
    out = np.empty_like(x)
    _project_ball_inplace(center, radius, x, out)
    return out


@njit
def dykstra_l1_ball_nb(threshold, center, radius, x, max_iter, tol):
    n = x.shape[0]
    s = np.empty(n)
    d2 = 0.0
    for i in range(n):
        s[i] = _soft_scalar(x[i], threshold)
        d = s[i] - center[i]
        d2 += d * d
    if d2 <= radius * radius:
        return s, 0, True
    out = np.empty(n)
    if threshold == 0.0:
        _project_ball_inplace(center, radius, x, out)
        return out, 0, True
    xk = x.copy()
    p = np.zeros(n)
    q = np.zeros(n)
    tmp = np.empty(n)
    yk = np.empty(n)
    for it in range(1, max_iter + 1):
        for i in range(n):
            tmp[i] = xk[i] + p[i]
        _project_ball_inplace(center, radius, tmp, yk)
        step = 0.0
        for i in range(n):
            p[i] = tmp[i] - yk[i]
            xn = _soft_scalar(yk[i] + q[i], threshold)
            q[i] = yk[i] + q[i] - xn
            diff = max(abs(xn - xk[i]), abs(xn - yk[i]))
            if diff > step:
                step = diff
            xk[i] = xn
        if step <= tol:
            _project_ball_inplace(center, radius, xk, out)
            return out, it, True
    _project_ball_inplace(center, radius, xk, out)
    return out, max_iter, False


@njit
def _sphere_gap_nb(threshold, center, x, mu, out):
    d2 = 0.0
    for i in range(x.shape[0]):
        out[i] = _soft_scalar((x[i] + mu * center[i]) / (1.0 + mu), threshold / (1.0 + mu))
        d = out[i] - center[i]
        d2 += d * d
    return d2


@njit
def multiplier_l1_ball_nb(threshold, center, radius, x, max_iter, tol):
    n = x.shape[0]
    v = np.empty(n)
    r2 = radius * radius
    if _sphere_gap_nb(threshold, center, x, 0.0, v) <= r2:
        return v, 0, True
    out = np.empty(n)
    if threshold == 0.0:
        _project_ball_inplace(center, radius, x, out)
        return out, 0, True
    lo = 0.0
    hi = 1.0
    it = 0
    while it < max_iter:
        it += 1
        if _sphere_gap_nb(threshold, center, x, hi, v) <= r2:
            break
        lo = hi
        hi = 2.0 * hi
    converged = False
    while it < max_iter:
        it += 1
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi or hi - lo <= tol * max(1.0, hi):
            converged = True
            break
        if _sphere_gap_nb(threshold, center, x, mid, v) <= r2:
            hi = mid
        else:
            lo = mid
    _sphere_gap_nb(threshold, center, x, hi, v)
    _project_ball_inplace(center, radius, v, out)
    return out, it, converged


@njit
def _scaled_l1_majorizer_nb(A, y, lam, alpha, s, gamma, w, z):
    m, n = A.shape
    fid = 0.0
    for i in range(m):
        r = -y[i]
        for j in range(n):
            r += A[i, j] * z[j]
        fid += r * r
    pen = 0.0
    prox_term = 0.0
    for j in range(n):
        az = abs(z[j])
        if az <= s[j] / alpha:
            hub = 0.5 * alpha * z[j] * z[j]
        else:
            hub = s[j] * az - 0.5 * s[j] * s[j] / alpha
        pen += az - hub
        dz = z[j] - w[j]
        prox_term += dz * dz
    return 0.5 * fid + lam * pen + lam * gamma * prox_term


@njit
def _scaled_l1_smooth_grad_nb(A, y, lam, alpha, s, gamma, w, z, resid, out):
    m, n = A.shape
    for i in range(m):
        r = -y[i]
        for j in range(n):
            r += A[i, j] * z[j]
        resid[i] = r
    for j in range(n):
        g = 0.0
        for i in range(m):
            g += A[i, j] * resid[i]
        env = alpha * (z[j] - _soft_scalar(z[j], s[j] / alpha))
        out[j] = g - lam * env + 2.0 * lam * gamma * (z[j] - w[j])


@njit
def inner_scaled_l1_nb(A, y, lam, alpha, s, gamma, w, radius, L,
                       tol, max_iter, dyk_iter, dyk_tol):
    m, n = A.shape
    z = w.copy()
    f_best = _scaled_l1_majorizer_nb(A, y, lam, alpha, s, gamma, w, z)
    x_best = z.copy()
    thr = lam / L
    g = np.empty(n)
    resid = np.empty(m)
    trial = np.empty(n)
    for it in range(1, max_iter + 1):
        _scaled_l1_smooth_grad_nb(A, y, lam, alpha, s, gamma, w, z, resid, g)
        for j in range(n):
            trial[j] = z[j] - g[j] / L
        zn, _, ok = multiplier_l1_ball_nb(thr, w, radius, trial, dyk_iter, dyk_tol)
        if not ok:
            return x_best, f_best, it, False, PROX_FAILED
        step2 = 0.0
        for j in range(n):
            if not np.isfinite(zn[j]):
                return x_best, f_best, it, False, NONFINITE
            d = zn[j] - z[j]
            step2 += d * d
        fn = _scaled_l1_majorizer_nb(A, y, lam, alpha, s, gamma, w, zn)
        if fn <= f_best:
            f_best = fn
            x_best[:] = zn
        z = zn
        if L * np.sqrt(step2) <= tol:
            return x_best, f_best, it, True, OK
    return x_best, f_best, max_iter, False, OK


if USE_NUMBA:
    multiplier_l1_ball = multiplier_l1_ball_nb
    dykstra_l1_ball = dykstra_l1_ball_nb
    inner_scaled_l1 = inner_scaled_l1_nb
else:
    multiplier_l1_ball = multiplier_l1_ball_np
    dykstra_l1_ball = dykstra_l1_ball_np
    inner_scaled_l1 = inner_scaled_l1_np
