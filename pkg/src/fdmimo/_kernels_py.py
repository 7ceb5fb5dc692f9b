"""Pure-numpy implementation of the inner SE integral and the field m.g.f.

Mirrors ``fdmimo._kernels`` (Cython) operation for operation; used when the
compiled extension is unavailable or ``FDMIMO_PURE_PYTHON`` is set.
"""

from __future__ import annotations

import math

import numpy as np

from .specfun import GAUSS_WEIGHTS, GK_NODES, GK_WEIGHTS

# log-mass below which the tail of the inner integrand is dropped
_LOG_TAIL = -45.0
_V_LO = -45.0
_MAX_INTERVALS = 200
_Y_SWITCH = 1.0


def _f_a1(alpha, gamma, w):
    """2F1(alpha, 1; gamma; w) for arrays w in [0, 1/2] (positive series)."""
    term = np.ones_like(w)
    total = np.ones_like(w)
    active = np.ones(w.shape, dtype=bool)
    k = 0
    while active.any() and k < 5000:
        term = term * (alpha + k) / (gamma + k) * w
        total = total + term
        k += 1
        if k > 2:
            active = (term > 1e-17 * total) | ((alpha + k) / (gamma + k) * w >= 1.0)
    return total


def field_bracket(y, U: float, beta: float):
    """Normalized bracket delta * A(y) of a Gamma-distributed PPP field.

    For a field with exclusion radius E, shape ``U`` and scale V the
    log-m.g.f. is ``-pi lam (zV)^delta * field_bracket(zV E^-beta)``.
    """
    y = np.asarray(y, dtype=float)
    d = 2.0 / beta
    g1 = math.exp(math.lgamma(1.0 - d) + math.lgamma(U + d) - math.lgamma(U))
    out = np.full(y.shape, g1)
    small = y < _Y_SWITCH
    big = (~small) & np.isfinite(y)
    if small.any():
        ys = y[small]
        w = ys / (1.0 + ys)
        t1 = -(ys ** -d) * -np.expm1(-U * np.log1p(ys))
        t2 = U * ys ** (1.0 - d) / (1.0 - d) * np.exp(-(U + 1.0) * np.log1p(ys)) * _f_a1(U + 1.0, 2.0 - d, w)
        out[small] = t1 + t2
    if big.any():
        yb = y[big]
        w = 1.0 / (1.0 + yb)
        tail = d / (d + U) * np.exp(-(d + U) * np.log(yb) - U * np.log1p(1.0 / yb)) * _f_a1(U, U + d + 1.0, w)
        out[big] = g1 - yb ** -d + tail
    return out


def field_log(z, lam: float, U: float, V: float, excl: float, beta: float):
    """Log m.g.f. of a PPP field with Gamma(U, 1) marks scaled by V.

    Parameters
    ----------
    z : array_like
        Laplace argument(s), ``z >= 0``.
    lam : float
        Field density.
    U, V : float
        Gamma shape of the fading mark and power scale.
    excl : float
        Exclusion radius around the origin (0 for none).
    beta : float
        Path-loss exponent (> 2).
    """
    z = np.asarray(z, dtype=float)
    if lam == 0.0 or V == 0.0:
        return np.zeros(z.shape)
    d = 2.0 / beta
    zv = z * V
    if excl == 0.0:
        g1 = math.exp(math.lgamma(1.0 - d) + math.lgamma(U + d) - math.lgamma(U))
        return -math.pi * lam * g1 * zv**d
    y = zv * excl**-beta
    out = np.zeros(z.shape)
    pos = zv > 0
    out[pos] = -math.pi * lam * zv[pos] ** d * field_bracket(y[pos], U, beta)
    return out


def _log_mgf_total(z, p):
    (excl, beta, sigma2, f_lam, f_U, f_V, cross_c, si_q, si_k, si_om, g_kappa, g_theta) = p
    out = field_log(z, f_lam, f_U, f_V, excl, beta) - sigma2 * z
    if cross_c:
        out = out - cross_c * z ** (2.0 / beta)
    if si_q:
        s = z * si_q * si_om
        out = out + math.log1p(si_k) - np.log1p(si_k + s) - s * si_k / (1.0 + si_k + s)
    if g_kappa:
        out = out - g_kappa * np.log1p(z * g_theta)
    return out


def _integrand(v, a, D, p):
    z = np.exp(v) / a
    gain = -np.expm1(-D * np.log1p(np.exp(v)))
    return gain * np.exp(_log_mgf_total(z, p))


def _gk(vals, half):
    k = half * float(GK_WEIGHTS @ vals)
    g = half * float(GAUSS_WEIGHTS @ vals)
    resabs = half * float(GK_WEIGHTS @ np.abs(vals))
    mean = k / (2.0 * half)
    resasc = half * float(GK_WEIGHTS @ np.abs(vals - mean))
    err = abs(k - g)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    return k, max(err, 1e-15 * resabs)


def _upper_limit(a, p):
    v = 0.0
    while v < 300.0:
        if _log_mgf_total(np.array([math.exp(v) / a]), p)[0] < _LOG_TAIL:
            return v
        v += 2.0
    return v


def inner_one(a, excl, D, p_rest, rel_tol, abs_tol):
    p = (excl,) + p_rest
    v_hi = _upper_limit(a, p)
    lo, hi = _V_LO, v_hi
    half = 0.5 * (hi - lo)
    r, e = _gk(_integrand(lo + half * (GK_NODES + 1.0), a, D, p), half)
    intervals = [[lo, hi, r, e]]
    total, err = r, e
    while err > max(abs_tol, rel_tol * abs(total)):
        if len(intervals) >= _MAX_INTERVALS:
            return total, err, False
        i = max(range(len(intervals)), key=lambda j: intervals[j][3])
        lo, hi, r0, e0 = intervals.pop(i)
        mid = 0.5 * (lo + hi)
        h = 0.5 * (mid - lo)
        nodes = np.concatenate([lo + h * (GK_NODES + 1.0), mid + h * (GK_NODES + 1.0)])
        vals = _integrand(nodes, a, D, p)
        r1, e1 = _gk(vals[:21], h)
        r2, e2 = _gk(vals[21:], h)
        intervals += [[lo, mid, r1, e1], [mid, hi, r2, e2]]
        total = math.fsum(iv[2] for iv in intervals)
        err = math.fsum(iv[3] for iv in intervals)
    return total, err, True


def inner_batch(a, excl, D, beta, sigma2, field_lam, field_U, field_V,
                cross_c=0.0, si_q=0.0, si_k=0.0, si_om=0.0, g_kappa=0.0,
                g_theta=0.0, rel_tol=1e-8, abs_tol=1e-14):
    """Inner z-integrals E[ln(1 + X / I) | r, p] in nats for arrays of links.

    Evaluates ``int_0^inf (1 - (1 + a z)^-D) M(z) dz / z`` with
    ``M(z) = M_field(z) exp(-cross_c z^(2/beta)) M_SI(z) (1 + z g_theta)^-g_kappa
    exp(-sigma2 z)`` in the variable ``v = ln(a z)``.

    Parameters
    ----------
    a, excl : array_like
        Intended-signal scale and field exclusion radius per link.

    Returns
    -------
    (values, errors, converged) arrays.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    excl = np.broadcast_to(np.asarray(excl, dtype=float), a.shape)
    p_rest = (float(beta), float(sigma2), float(field_lam), float(field_U), float(field_V),
              float(cross_c), float(si_q), float(si_k), float(si_om), float(g_kappa),
              float(g_theta))
    vals = np.empty(a.shape)
    errs = np.empty(a.shape)
    ok = np.empty(a.shape, dtype=bool)
    for i in range(a.size):
        vals.flat[i], errs.flat[i], ok.flat[i] = inner_one(
            float(a.flat[i]), float(excl.flat[i]), float(D), p_rest, rel_tol, abs_tol)
    return vals, errs, ok
