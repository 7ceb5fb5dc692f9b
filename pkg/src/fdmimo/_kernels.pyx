# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner SE integral and Gamma-field log-m.g.f.

Same algorithms as ``fdmimo._kernels_py``; scalar C loops instead of numpy
vector operations.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport exp, log, log1p, expm1, pow, fabs, lgamma, isfinite, M_PI

cnp.import_array()

cdef double LOG_TAIL = -45.0
cdef double V_LO = -45.0
cdef int MAX_INTERVALS = 200
cdef double Y_SWITCH = 1.0

cdef double XGK[11]
cdef double WGK[11]
cdef double WG[5]

XGK[:] = [0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
          0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
          0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
          0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
          0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
          0.0]
WGK[:] = [0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
          0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
          0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
          0.123491976262065851077208876213830, 0.134709217311473325928054001771707,
          0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
          0.149445554002916905664936468389821]
WG[:] = [0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
         0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
         0.295524224714752870173892994651338]


cdef struct Link:
    double a
    double D
    double excl
    double beta
    double sigma2
    double f_lam
    double f_U
    double f_V
    double f_g1
    double cross_c
    double si_q
    double si_k
    double si_om
    double g_kappa
    double g_theta


cdef inline double f_a1(double alpha, double gamma, double w) nogil:
    # 2F1(alpha, 1; gamma; w), positive series for 0 <= w <= 1/2
    cdef double term = 1.0, total = 1.0, ratio
    cdef int k = 0
    while k < 5000:
        ratio = (alpha + k) / (gamma + k) * w
        term *= ratio
        total += term
        k += 1
        if k > 2 and term <= 1e-17 * total and (alpha + k) / (gamma + k) * w < 1.0:
            break
    return total


cdef inline double bracket(double y, double U, double beta, double g1) nogil:
    cdef double d = 2.0 / beta
    cdef double w, t1, t2
    if not isfinite(y):
        return g1
    if y < Y_SWITCH:
        w = y / (1.0 + y)
        t1 = -pow(y, -d) * (-expm1(-U * log1p(y)))
        t2 = U * pow(y, 1.0 - d) / (1.0 - d) * exp(-(U + 1.0) * log1p(y)) * f_a1(U + 1.0, 2.0 - d, w)
        return t1 + t2
    w = 1.0 / (1.0 + y)
    return g1 - pow(y, -d) + d / (d + U) * exp(-(d + U) * log(y) - U * log1p(1.0 / y)) * f_a1(U, U + d + 1.0, w)


cdef inline double field_log_c(double z, double lam, double U, double V, double excl,
                               double beta, double g1) nogil:
    cdef double d = 2.0 / beta
    cdef double zv
    zv = z * V
    if lam == 0.0 or zv == 0.0:
        return 0.0
    if excl == 0.0:
        return -M_PI * lam * g1 * pow(zv, d)
    return -M_PI * lam * pow(zv, d) * bracket(zv * pow(excl, -beta), U, beta, g1)


cdef inline double log_mgf(double z, Link* p) nogil:
    cdef double out, s
    out = field_log_c(z, p.f_lam, p.f_U, p.f_V, p.excl, p.beta, p.f_g1) - p.sigma2 * z
    if p.cross_c != 0.0:
        out -= p.cross_c * pow(z, 2.0 / p.beta)
    if p.si_q != 0.0:
        s = z * p.si_q * p.si_om
        out += log1p(p.si_k) - log1p(p.si_k + s) - s * p.si_k / (1.0 + p.si_k + s)
    if p.g_kappa != 0.0:
        out -= p.g_kappa * log1p(z * p.g_theta)
    return out


cdef inline double integrand(double v, Link* p) nogil:
    cdef double ev = exp(v)
    cdef double gain = -expm1(-p.D * log1p(ev))
    return gain * exp(log_mgf(ev / p.a, p))


cdef void gk21(double lo, double hi, Link* p, double* res, double* err) nogil:
    cdef double centr = 0.5 * (lo + hi)
    cdef double half = 0.5 * (hi - lo)
    cdef double fv[21]
    cdef double resk = 0.0, resg = 0.0, resabs = 0.0, resasc = 0.0, mean, e
    cdef int j
    for j in range(10):
        fv[j] = integrand(centr - half * XGK[j], p)
        fv[20 - j] = integrand(centr + half * XGK[j], p)
    fv[10] = integrand(centr, p)
    for j in range(10):
        resk += WGK[j] * (fv[j] + fv[20 - j])
        resabs += WGK[j] * (fabs(fv[j]) + fabs(fv[20 - j]))
    resk += WGK[10] * fv[10]
    resabs += WGK[10] * fabs(fv[10])
    for j in range(5):
        resg += WG[j] * (fv[2 * j + 1] + fv[19 - 2 * j])
    mean = 0.5 * resk
    for j in range(10):
        resasc += WGK[j] * (fabs(fv[j] - mean) + fabs(fv[20 - j] - mean))
    resasc += WGK[10] * fabs(fv[10] - mean)
    resk *= half
    resg *= half
    resabs *= half
    resasc *= half
    e = fabs(resk - resg)
    if resasc != 0.0 and e != 0.0:
        e = resasc * min(1.0, pow(200.0 * e / resasc, 1.5))
    if e < 1e-15 * resabs:
        e = 1e-15 * resabs
    res[0] = resk
    err[0] = e


cdef double upper_limit(Link* p) nogil:
    cdef double v = 0.0
    while v < 300.0:
        if log_mgf(exp(v) / p.a, p) < LOG_TAIL:
            return v
        v += 2.0
    return v


cdef int inner_c(Link* p, double rel_tol, double abs_tol, double* value, double* error) nogil:
    cdef double lo[200]
    cdef double hi[200]
    cdef double rs[200]
    cdef double es[200]
    cdef int n = 1, i, imax
    cdef double total, err, a, b, mid, r1, e1, r2, e2, emax
    lo[0] = V_LO
    hi[0] = upper_limit(p)
    gk21(lo[0], hi[0], p, &rs[0], &es[0])
    total = rs[0]
    err = es[0]
    while err > max(abs_tol, rel_tol * fabs(total)):
        if n >= MAX_INTERVALS:
            value[0] = total
            error[0] = err
            return 0
        imax = 0
        emax = es[0]
        for i in range(1, n):
            if es[i] > emax:
                emax = es[i]
                imax = i
        a = lo[imax]
        b = hi[imax]
        mid = 0.5 * (a + b)
        gk21(a, mid, p, &r1, &e1)
        gk21(mid, b, p, &r2, &e2)
        hi[imax] = mid
        rs[imax] = r1
        es[imax] = e1
        lo[n] = mid
        hi[n] = b
        rs[n] = r2
        es[n] = e2
        n += 1
        total = 0.0
        err = 0.0
        for i in range(n):
            total += rs[i]
            err += es[i]
    value[0] = total
    error[0] = err
    return 1


cdef double gamma_one(double U, double beta):
    cdef double d = 2.0 / beta
    return exp(lgamma(1.0 - d) + lgamma(U + d) - lgamma(U))


def field_bracket(y, double U, double beta):
    """Normalized bracket of a Gamma-mark PPP field (see the numpy twin)."""
    cdef cnp.ndarray[double, ndim=1] yy = np.ascontiguousarray(np.atleast_1d(y), dtype=float).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty(yy.shape[0])
    cdef double g1 = gamma_one(U, beta)
    cdef Py_ssize_t i
    for i in range(yy.shape[0]):
        out[i] = bracket(yy[i], U, beta, g1)
    return out.reshape(np.shape(y))


def field_log(z, double lam, double U, double V, double excl, double beta):
    """Log m.g.f. of a PPP field with Gamma(U, 1) marks scaled by V."""
    cdef cnp.ndarray[double, ndim=1] zz = np.ascontiguousarray(np.atleast_1d(z), dtype=float).ravel()
    cdef cnp.ndarray[double, ndim=1] out = np.empty(zz.shape[0])
    cdef double g1 = gamma_one(U, beta)
    cdef Py_ssize_t i
    for i in range(zz.shape[0]):
        out[i] = field_log_c(zz[i], lam, U, V, excl, beta, g1)
    return out.reshape(np.shape(z))


def inner_batch(a, excl, double D, double beta, double sigma2, double field_lam,
                double field_U, double field_V, double cross_c=0.0, double si_q=0.0,
                double si_k=0.0, double si_om=0.0, double g_kappa=0.0,
                double g_theta=0.0, double rel_tol=1e-8, double abs_tol=1e-14):
    """Inner z-integrals in nats for arrays of links (see the numpy twin)."""
    cdef cnp.ndarray[double, ndim=1] aa = np.ascontiguousarray(np.atleast_1d(a), dtype=float).ravel()
    cdef cnp.ndarray[double, ndim=1] ee = np.ascontiguousarray(
        np.broadcast_to(np.asarray(excl, dtype=float), np.atleast_1d(a).shape), dtype=float).ravel()
    cdef Py_ssize_t n = aa.shape[0], i
    cdef cnp.ndarray[double, ndim=1] vals = np.empty(n)
    cdef cnp.ndarray[double, ndim=1] errs = np.empty(n)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ok = np.empty(n, dtype=np.uint8)
    cdef Link p
    cdef double v, e
    p.D = D
    p.beta = beta
    p.sigma2 = sigma2
    p.f_lam = field_lam
    p.f_U = field_U
    p.f_V = field_V
    p.f_g1 = gamma_one(field_U, beta) if field_lam != 0.0 else 0.0
    p.cross_c = cross_c
    p.si_q = si_q
    p.si_k = si_k
    p.si_om = si_om
    p.g_kappa = g_kappa
    p.g_theta = g_theta
    with nogil:
        for i in range(n):
            p.a = aa[i]
            p.excl = ee[i]
            ok[i] = inner_c(&p, rel_tol, abs_tol, &v, &e)
            vals[i] = v
            errs[i] = e
    shape = np.atleast_1d(a).shape
    return vals.reshape(shape), errs.reshape(shape), ok.astype(bool).reshape(shape)
