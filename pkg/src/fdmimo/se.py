"""Spectral efficiency of the DL and UL links and FD/HD comparisons.

The general evaluator nests three integrals: the MT power law (outer), the
serving distance (middle, in ``x = pi lam r^2``) and the Laplace variable
``z`` (inner, compiled kernel).  Values are computed in nats; ``units="bits"``
divides by ln 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels, specfun
from .mgf import ArrayDims, arccot, dl_cross_coefficient, ul_cross_coefficient
from .powerctl import PowerControlParams, RicianSI, bs_gamma_match, power_expectation
from .specfun import QuadratureError, QuadSpec

LOG2E = 1.0 / math.log(2.0)
KM2_TO_M2 = 1e-6

# distance law truncation: exp(-x) < 1e-12 at the top, negligible mass below
_X_LO = 1e-16
_X_HI = -math.log(1e-12)


def dbm_to_mw(dbm):
    """Convert dBm to mW."""
    return 10.0 ** (np.asarray(dbm, dtype=float) / 10.0) if np.ndim(dbm) else 10.0 ** (dbm / 10.0)


def db_to_lin(db):
    """Convert a dB ratio to linear scale."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0) if np.ndim(db) else 10.0 ** (db / 10.0)


def noise_mw(bandwidth_hz: float, noise_figure_db: float) -> float:
    """Thermal noise -170 dBm/Hz + 10 log10(B) + N_f, in mW."""
    return dbm_to_mw(-170.0 + 10.0 * math.log10(bandwidth_hz) + noise_figure_db)


def _scale(value: float, units: str) -> float:
    if units == "nats":
        return value
    if units == "bits":
        return value * LOG2E
    raise ValueError("units must be 'bits' or 'nats'")


@dataclass(frozen=True)
class NetworkConfig:
    """Network parameters.

    Attributes
    ----------
    lambda_d : float
        BS density per km^2 (distances are handled in meters).
    dims : ArrayDims
        Antennas and users per cell.
    p_d : float
        BS total transmit power (mW).
    pc : PowerControlParams
        MT power control (p0 in mW per m^(psi beta)).
    si_mt : RicianSI
        Residual SI channel at the MT.
    si_bs : RicianSI, optional
        Residual SI channel at the BS; defaults to ``si_mt``.
    beta : float
        Path-loss exponent.
    bandwidth_hz, noise_figure_db : float
        Noise parameters used when ``noise_dl`` / ``noise_ul`` are not given.
    noise_dl, noise_ul : float, optional
        Noise powers (mW) overriding the thermal-noise formula.
    lambda_u : float, optional
        MT density per km^2; informational (scheduled MTs have density U lambda_d).
    perfect_si : bool
        Remove SI from the SINR (the power law still uses ``si_mt``).
    interference_limited : bool
        Set both noise powers to zero.
    """

    lambda_d: float
    dims: ArrayDims
    p_d: float
    pc: PowerControlParams
    si_mt: RicianSI
    si_bs: RicianSI | None = None
    beta: float = 4.0
    bandwidth_hz: float = 20e6
    noise_figure_db: float = 10.0
    noise_dl: float | None = None
    noise_ul: float | None = None
    lambda_u: float | None = None
    perfect_si: bool = False
    interference_limited: bool = False

    def __post_init__(self):
        if not self.lambda_d > 0:
            raise ValueError("lambda_d must be positive")
        if not self.p_d > 0:
            raise ValueError("p_d must be positive")
        if not self.beta > 2:
            raise ValueError("beta must exceed 2")
        if not self.bandwidth_hz > 0:
            raise ValueError("bandwidth_hz must be positive")
        for name in ("noise_dl", "noise_ul"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def lam(self) -> float:
        """BS density per m^2."""
        return self.lambda_d * KM2_TO_M2

    @property
    def bs_si(self) -> RicianSI:
        return self.si_mt if self.si_bs is None else self.si_bs

    def _noise(self, override):
        if self.interference_limited:
            return 0.0
        return noise_mw(self.bandwidth_hz, self.noise_figure_db) if override is None else override

    @property
    def sigma2_dl(self) -> float:
        return self._noise(self.noise_dl)

    @property
    def sigma2_ul(self) -> float:
        return self._noise(self.noise_ul)


class Estimate(NamedTuple):
    """Integral value with its error estimate and a convergence flag."""

    value: float
    error: float
    converged: bool = True


@dataclass
class SEReport:
    """Per-link SEs of one configuration in FD and HD mode."""

    se_dl: float
    se_ul: float
    se_dl_hd: float
    se_ul_hd: float
    units: str = "bits"
    errors: dict = field(default_factory=dict)
    converged: bool = True

    @property
    def sum_fd(self) -> float:
        return 2.0 * (self.se_dl + self.se_ul)

    @property
    def sum_hd(self) -> float:
        return self.se_dl_hd + self.se_ul_hd

    @property
    def gain(self) -> float:
        return self.sum_fd / self.sum_hd

    @property
    def gain_dl(self) -> float:
        return 2.0 * self.se_dl / self.se_dl_hd

    @property
    def gain_ul(self) -> float:
        return 2.0 * self.se_ul / self.se_ul_hd


# ---------------------------------------------------------------------------
# general triple-integral pipeline
# ---------------------------------------------------------------------------


def _link_terms(cfg: NetworkConfig, link: str, duplex: str):
    """Static kernel arguments and the p-dependent ones as a callable."""
    dims, lam, b = cfg.dims, cfg.lam, cfg.beta
    u = dims.users
    fd = duplex == "fd"
    if duplex not in ("fd", "hd"):
        raise ValueError("duplex must be 'fd' or 'hd'")
    if link == "dl":
        if fd and not cfg.perfect_si:
            d = dims.d_dl
        else:
            d = dims.d_dl_plain
        static = dict(D=d, beta=b, sigma2=cfg.sigma2_dl, field_lam=lam, field_U=u,
                      field_V=cfg.p_d / u)
        if d < 1:
            raise ValueError("DL diversity must be >= 1")

        def varying(p):
            out = {}
            if fd:
                out["cross_c"] = dl_cross_coefficient(lam, u, p, b)
                if not cfg.perfect_si:
                    out.update(si_q=p, si_k=cfg.si_mt.k_factor, si_om=cfg.si_mt.omega)
            return out

        def a_of(p, r):
            return cfg.p_d / u * r**-b

        return static, varying, a_of, fd
    if link == "ul":
        d = dims.d_ul
        if d < 1:
            raise ValueError("UL diversity must be >= 1")
        static = dict(D=d, beta=b, sigma2=cfg.sigma2_ul, field_lam=u * lam, field_U=1.0)
        if fd:
            static["cross_c"] = ul_cross_coefficient(lam, u, cfg.p_d, b)
            if not cfg.perfect_si and not dims.zf_sin:
                si = cfg.bs_si
                if dims.n_t == dims.n_r == u == 1:
                    static.update(si_q=cfg.p_d, si_k=si.k_factor, si_om=si.omega)
                else:
                    kappa, theta = bs_gamma_match(si, u)
                    static.update(g_kappa=kappa, g_theta=theta * cfg.p_d / u)

        def varying(p):
            return {"field_V": p}

        def a_of(p, r):
            return p * r**-b

        return static, varying, a_of, True
    raise ValueError("link must be 'dl' or 'ul'")


def _distance_average(cfg, static, extra, a_fun, spec, inner_tol, flags):
    """E_r[inner] with r from the nearest-BS law, integrated in ln x."""
    lam = cfg.lam
    args = dict(static)
    args.update(extra)

    def f(t):
        x = np.exp(t)
        r = np.sqrt(x / (math.pi * lam))
        vals, _, ok = kernels.inner_batch(a_fun(r), r, rel_tol=inner_tol, **args)
        if not np.all(ok):
            flags.append("inner")
        return vals * x * np.exp(-x)

    try:
        v, e = specfun.quad_interval(f, math.log(_X_LO), math.log(_X_HI), spec)
    except QuadratureError as exc:
        flags.append("middle")
        v, e = exc.value, exc.error
    return v, e


def _se_link(cfg: NetworkConfig, link: str, spec: QuadSpec | None, duplex: str,
             units: str) -> Estimate:
    spec = spec or QuadSpec(rel_tol=1e-6)
    inner_tol = min(1e-8, spec.rel_tol * 1e-2)
    static, varying, a_of, depends_on_p = _link_terms(cfg, link, duplex)
    flags: list[str] = []
    if not depends_on_p:
        v, e = _distance_average(cfg, static, varying(None), lambda r: a_of(None, r), spec,
                                 inner_tol, flags)
    else:
        def g(ps):
            out = np.empty(len(ps))
            for i, p in enumerate(ps):
                out[i] = _distance_average(cfg, static, varying(float(p)),
                                           lambda r, p=float(p): a_of(p, r), spec, inner_tol,
                                           flags)[0]
            return out

        try:
            v, e = power_expectation(g, cfg.pc, cfg.lam, cfg.si_mt, cfg.beta, spec)
        except QuadratureError as exc:
            flags.append("outer")
            v, e = exc.value, exc.error
    return Estimate(_scale(v, units), _scale(e, units), not flags)


def se_dl(cfg: NetworkConfig, spec: QuadSpec | None = None, duplex: str = "fd",
          units: str = "bits") -> Estimate:
    """DL spectral efficiency of a typical MT.

    Parameters
    ----------
    cfg : NetworkConfig
    spec : QuadSpec, optional
        Tolerances of the power and distance integrals.
    duplex : {"fd", "hd"}
        HD drops the cross-link and SI terms and uses plain ZF.
    units : {"bits", "nats"}

    Returns
    -------
    Estimate
        ``converged`` is False when any quadrature level missed its tolerance.
    """
    return _se_link(cfg, "dl", spec, duplex, units)


def se_ul(cfg: NetworkConfig, spec: QuadSpec | None = None, duplex: str = "fd",
          units: str = "bits") -> Estimate:
    """UL spectral efficiency of a typical BS (see :func:`se_dl`)."""
    return _se_link(cfg, "ul", spec, duplex, units)


def se_report(cfg: NetworkConfig, spec: QuadSpec | None = None, units: str = "bits") -> SEReport:
    """FD and HD SEs of both links."""
    parts = {
        "dl": se_dl(cfg, spec, "fd", units),
        "ul": se_ul(cfg, spec, "fd", units),
        "dl_hd": se_dl(cfg, spec, "hd", units),
        "ul_hd": se_ul(cfg, spec, "hd", units),
    }
    return SEReport(parts["dl"].value, parts["ul"].value, parts["dl_hd"].value,
                    parts["ul_hd"].value, units, {k: v.error for k, v in parts.items()},
                    all(v.converged for v in parts.values()))


# ---------------------------------------------------------------------------
# reduced baseline-SISO expressions (beta = 4, interference-limited)
# ---------------------------------------------------------------------------

SISO_CASES = ("general_si", "no_si", "no_comp_dl", "no_comp_ul", "no_cap_dl", "no_cap_ul")


def _acot_sum(s):
    return s + arccot(s)


def _sin_ci_kernel(a):
    # sin(a) Ci(a) + cos(a) (pi/2 - Si(a)) = int_0^inf exp(-a t) / (1 + t^2) dt
    out = np.empty(np.shape(a))
    for i, ai in enumerate(np.ravel(a)):
        ai = float(ai)
        if ai >= 40.0:
            # the Si/Ci combination cancels like eps * a; asymptotic series instead
            inv2 = 1.0 / (ai * ai)
            term, total, k = 1.0 / ai, 1.0 / ai, 0
            while abs(term) > 1e-17 * total:
                ratio = (2 * k + 1) * (2 * k + 2) * inv2
                if ratio >= 1.0:
                    break
                term *= -ratio
                total += term
                k += 1
            out.flat[i] = total
            continue
        si, ci = specfun.trig_integrals(ai)
        out.flat[i] = math.sin(ai) * ci + math.cos(ai) * (0.5 * math.pi - si)
    return out


def _check_siso(cfg: NetworkConfig, case: str):
    d = cfg.dims
    if not (d.n_t == d.n_r == d.users == 1):
        raise specfun.DomainError("reduced SISO expressions need N_t = N_r = U = 1")
    if cfg.beta != 4:
        raise specfun.DomainError("reduced SISO expressions need beta = 4")
    if not cfg.interference_limited:
        raise specfun.DomainError("reduced SISO expressions need an interference-limited network")
    pc = cfg.pc
    if case == "general_si":
        if cfg.perfect_si:
            raise specfun.DomainError("general_si needs SI in the SINR")
        if cfg.si_mt.k_factor != 0 or cfg.bs_si.k_factor != 0:
            raise specfun.DomainError("general_si needs Rayleigh SI channels")
    elif not cfg.perfect_si:
        raise specfun.DomainError(f"{case} needs perfect SI subtraction")
    if case.startswith("no_comp"):
        if not (math.isinf(pc.p0) and math.isinf(pc.p_max)) or math.isinf(pc.i_si):
            raise specfun.DomainError("no_comp cases need p0 = p_max = inf and finite i_si")
        if cfg.si_mt.k_factor != 0:
            raise specfun.DomainError("no_comp cases need a Rayleigh SI channel")
    if case.startswith("no_cap"):
        if not (math.isinf(pc.i_si) and math.isinf(pc.p_max)) or math.isinf(pc.p0):
            raise specfun.DomainError("no_cap cases need i_si = p_max = inf and finite p0")
        if pc.psi != 1:
            raise specfun.DomainError("no_cap cases need psi = 1")


def se_siso_special(case: str, cfg: NetworkConfig, link: str | None = None,
                    spec: QuadSpec | None = None, units: str = "bits") -> Estimate:
    """Reduced double / single integral SEs of the baseline-SISO network.

    Parameters
    ----------
    case : str
        One of ``general_si`` (Rayleigh SI), ``no_si`` (perfect SI removal),
        ``no_comp_dl`` / ``no_comp_ul`` (no distance compensation, no cap),
        ``no_cap_dl`` / ``no_cap_ul`` (no SI cap, no maximum power).
    cfg : NetworkConfig
        Must describe a SISO, beta = 4, interference-limited network.
    link : {"dl", "ul"}
        Required for ``general_si`` and ``no_si``.

    Raises
    ------
    DomainError
        When the parameters do not match the case.
    """
    if case not in SISO_CASES:
        raise ValueError(f"unknown case {case!r}; valid: {', '.join(SISO_CASES)}")
    if case in ("general_si", "no_si"):
        if link not in ("dl", "ul"):
            raise ValueError("link must be 'dl' or 'ul' for this case")
    else:
        link = case.rsplit("_", 1)[1]
    _check_siso(cfg, case)
    spec = spec or QuadSpec(rel_tol=1e-8)
    lam, pd = cfg.lam, cfg.p_d
    s_spec = QuadSpec(rel_tol=spec.rel_tol * 1e-2, max_subdivisions=spec.max_subdivisions)

    def s_int(f):
        return specfun.quad_semi_infinite(f, 0.0, s_spec)[0]

    if case in ("general_si", "no_si"):
        om = cfg.si_mt.omega if link == "dl" else cfg.bs_si.omega

        def inner(p):
            w = pd / p if link == "dl" else p / pd
            sw = math.sqrt(w)
            if case == "no_si":
                return s_int(lambda s: 2.0 / ((1.0 + s * s) * (0.5 * math.pi / sw + _acot_sum(s))))
            c = math.pi * lam / math.sqrt(om)

            def f(s):
                a = c * (0.5 * math.pi + sw * _acot_sum(s))
                return 2.0 * c * sw / (1.0 + s * s) * _sin_ci_kernel(a)

            return s_int(f)

        def g(ps):
            return np.array([inner(float(p)) for p in ps])

        v, e = power_expectation(g, cfg.pc, lam, cfg.si_mt, 4.0, spec)
        return Estimate(_scale(v, units), _scale(e, units))

    if case.startswith("no_comp"):
        xi = cfg.pc.i_si / (pd * cfg.si_mt.omega)

        if link == "dl":
            def f(s):
                out = np.empty(np.shape(s))
                for i, si in enumerate(np.ravel(s)):
                    t = float(_acot_sum(si))
                    q = (0.5 * math.pi / t) ** 2 * xi
                    # exp(-q) Ei(q) and exp(-q) erfi(sqrt q) through scaled forms
                    br = (1.0 - math.pi * math.sqrt(math.pi) / (2.0 * t) * math.sqrt(xi)
                          - q * (specfun.ei_scaled(q)
                                 - math.pi * specfun.erfi_scaled(math.sqrt(q))))
                    out.flat[i] = 2.0 / ((1.0 + si * si) * t) * br
                return out
        else:
            def f(s):
                out = np.empty(np.shape(s))
                for i, si in enumerate(np.ravel(s)):
                    t = float(_acot_sum(si))
                    q = (2.0 * t / math.pi) ** 2 * xi
                    br = (math.sqrt(math.pi) + 2.0 * t / math.pi * math.sqrt(xi)
                          * (specfun.ei_scaled(q) - math.pi * specfun.erfi_scaled(math.sqrt(q))))
                    out.flat[i] = 4.0 / (math.pi * (1.0 + si * si)) * math.sqrt(xi) * br
                return out

        v, e = specfun.quad_semi_infinite(f, 0.0, s_spec)
        return Estimate(_scale(v, units), _scale(e, units))

    ratio = math.sqrt(pd / cfg.pc.p0)
    if link == "dl":
        def f(s):
            out = np.empty(np.shape(s))
            for i, si in enumerate(np.ravel(s)):
                q = 2.0 * lam * float(_acot_sum(si)) * ratio
                out.flat[i] = -4.0 * lam / (1.0 + si * si) * ratio * specfun.ei_scaled(-q)
            return out
    else:
        def f(s):
            out = np.empty(np.shape(s))
            for i, si in enumerate(np.ravel(s)):
                t = float(_acot_sum(si))
                q = math.pi**2 * lam / (2.0 * t) * ratio
                out.flat[i] = 2.0 / ((1.0 + si * si) * t) * (1.0 + q * specfun.ei_scaled(-q))
            return out

    v, e = specfun.quad_semi_infinite(f, 0.0, s_spec)
    return Estimate(_scale(v, units), _scale(e, units))


# ---------------------------------------------------------------------------
# FD versus HD: baseline SISO
# ---------------------------------------------------------------------------

BOUND_WINDOW = ((math.pi / (math.pi - 8.0)) ** 2, ((math.pi - 8.0) / math.pi) ** 2)


def psi_bound(alpha: float) -> float:
    """Closed-form bounding function of the baseline-SISO SE (alpha > 0)."""
    if not alpha > 0:
        raise specfun.DomainError("alpha must be positive")
    sa = math.sqrt(alpha)
    num = ((1.0 + alpha) * ((5.0 - alpha) * math.atan2(1.0, sa) + sa * math.log((1.0 + alpha) / 4.0))
           - 0.5 * math.pi * (5.0 - 4.0 * sa + alpha) * (1.0 - 2.0 * sa - alpha))
    return num / (sa / (1.0 + alpha) * (25.0 - 6.0 * alpha + alpha * alpha))


class SisoComparison(NamedTuple):
    """Two-slot SEs (nats) of the baseline-SISO FD/HD comparison."""

    s_fd: float
    s_hd: float
    s_fd_bounded: float
    s_hd_bounded: float
    bounds_valid: bool


def _siso_exact_fd(x: float, spec: QuadSpec) -> float:
    a = 0.5 * math.pi / math.sqrt(x)
    b = 0.5 * math.pi * math.sqrt(x)

    def f(s):
        t = _acot_sum(s)
        return 4.0 / (1.0 + s * s) * (1.0 / (a + t) + 1.0 / (b + t))

    return specfun.quad_semi_infinite(f, 0.0, spec)[0]


def _siso_exact_hd(spec: QuadSpec) -> float:
    return specfun.quad_semi_infinite(lambda s: 4.0 / ((1.0 + s * s) * _acot_sum(s)), 0.0, spec)[0]


def siso_bounded_fd(x: float) -> float:
    """Bounded two-slot FD SE (nats) at power ratio x = p_d / p_u."""
    return 2.0 * (psi_bound(8.0 / (math.pi * (1.0 + math.sqrt(1.0 / x))) - 1.0)
                  + psi_bound(8.0 / (math.pi * (1.0 + math.sqrt(x))) - 1.0))


def siso_bounded_hd() -> float:
    """Bounded two-slot HD SE (nats)."""
    return 2.0 * psi_bound(8.0 / math.pi - 1.0)


def fd_hd_siso(x: float, spec: QuadSpec | None = None) -> SisoComparison:
    """FD and HD two-slot SEs of baseline SISO with fixed powers, x = p_d / p_u.

    Exact values by quadrature; the bounded values are ``nan`` and
    ``bounds_valid`` False outside the window where the bound is defined.
    """
    if not x > 0:
        raise ValueError("x must be positive")
    spec = spec or QuadSpec(rel_tol=1e-11)
    valid = BOUND_WINDOW[0] < x < BOUND_WINDOW[1]
    fd_b = siso_bounded_fd(x) if valid else math.nan
    return SisoComparison(_siso_exact_fd(x, spec), _siso_exact_hd(spec), fd_b,
                          siso_bounded_hd(), valid)


class PowerRatioOptimum(NamedTuple):
    x_star: float
    gain_star: float
    unimodal: bool
    x_star_exact: float
    gain_star_exact: float


def _golden_max(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * (1.0 + abs(a) + abs(b)):
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def optimize_power_ratio(grid_points: int = 1000) -> PowerRatioOptimum:
    """Maximize the FD/HD gain of baseline SISO over x = p_d / p_u.

    Golden-section search on the bounded gain (in ln x over the validity
    window), a grid scan for a second local maximum, and a grid + refine
    pass on the exact gain.
    """
    hd_b = siso_bounded_hd()
    lo, hi = math.log(BOUND_WINDOW[0]), math.log(BOUND_WINDOW[1])
    eps = 1e-9 * (hi - lo)

    def bounded(t):
        return siso_bounded_fd(math.exp(t)) / hd_b

    t_star = _golden_max(bounded, lo + eps, hi - eps)
    ts = np.linspace(lo + eps, hi - eps, grid_points)
    vals = np.array([bounded(t) for t in ts])
    interior = (vals[1:-1] > vals[:-2]) & (vals[1:-1] > vals[2:])
    unimodal = int(interior.sum()) <= 1 and not (vals[0] > vals[1] and interior.any())

    spec = QuadSpec(rel_tol=1e-11)
    hd = _siso_exact_hd(spec)

    def exact(t):
        return _siso_exact_fd(math.exp(t), spec) / hd

    coarse = np.linspace(-3.0, 3.0, 61)
    k = int(np.argmax([exact(t) for t in coarse]))
    te = _golden_max(exact, coarse[max(k - 1, 0)], coarse[min(k + 1, 60)], 1e-7)
    return PowerRatioOptimum(math.exp(t_star), bounded(t_star), unimodal, math.exp(te), exact(te))


# ---------------------------------------------------------------------------
# FD versus HD: massive MIMO
# ---------------------------------------------------------------------------


class MimoComparison(NamedTuple):
    """Two-slot SEs (nats) of the massive-MIMO FD/HD comparison."""

    s_fd: float
    s_hd: float
    gain: float


def _numerator(s, u: int, n: int):
    # 1 + s^2 (1 - (1 + 1/s^2)^(u - n)), evaluated without cancellation
    s2 = s * s
    return 1.0 - s2 * np.expm1((u - n) * np.log1p(1.0 / s2))


def _dl_hd_den(s, u: int):
    s = np.atleast_1d(np.asarray(s, dtype=float))
    lg = math.lgamma(u + 0.5)
    out = np.empty(s.shape)
    for i, si in enumerate(s):
        # s^(2u+1) Gamma(u+1/2) 2F1~(u+1/2, u+1; u+3/2; -s^2), Pfaff-transformed
        w = si * si / (1.0 + si * si)
        f = specfun.hyp2f1(1.0, u + 1.0, u + 1.5, w)
        mid = math.exp(lg - math.lgamma(u + 1.5) + (2 * u + 1) * math.log(si)
                       - (u + 1.0) * math.log1p(si * si)) * f if si > 0 else 0.0
        out[i] = (si * math.exp(-u * math.log1p(1.0 / (si * si))) if si > 0 else 0.0) \
            - u * mid + math.sqrt(math.pi) * math.exp(lg - math.lgamma(u))
    return out


def _mimo_u1(n_t: int, n_r: int, spec: QuadSpec):
    q = lambda f: specfun.quad_semi_infinite(f, 0.0, spec)[0]
    w = lambda s: 2.0 / (1.0 + s * s)
    t = lambda s: _acot_sum(s)
    fd = 2.0 * (q(lambda s: w(s) * _numerator(s, 1, n_r) / (t(s) + 0.5 * math.pi))
                + q(lambda s: w(s) * _numerator(s, 1, n_t) / (t(s) + 0.5 * math.pi)))
    hd = (q(lambda s: w(s) * _numerator(s, 1, n_r) / t(s))
          + q(lambda s: w(s) * _numerator(s, 1, n_t) / t(s)))
    return fd, hd


def fd_hd_mimo(n, users: int, spec: QuadSpec | None = None,
               reduced: bool | None = None) -> MimoComparison:
    """FD and HD two-slot SEs (nats) with ZF beamforming and perfect SI removal.

    Parameters
    ----------
    n : int or (int, int)
        Antennas per side, or ``(n_t, n_r)``.
    users : int
    reduced : bool, optional
        Use the one-user expressions; defaults to ``users == 1``.
    """
    n_t, n_r = (n, n) if np.ndim(n) == 0 else (int(n[0]), int(n[1]))
    u = int(users)
    if u < 1 or u > min(n_t, n_r):
        raise ValueError("need 1 <= users <= min(n_t, n_r)")
    spec = spec or QuadSpec(rel_tol=1e-10)
    if reduced is None:
        reduced = u == 1
    if reduced:
        if u != 1:
            raise ValueError("reduced expressions need one user")
        fd, hd = _mimo_u1(n_t, n_r, spec)
        return MimoComparison(fd, hd, fd / hd)
    q = lambda f: specfun.quad_semi_infinite(f, 0.0, spec)[0]
    w = lambda s: 2.0 / (1.0 + s * s)
    ul_h = lambda s: _acot_sum(s) + (u - 1) * arccot(s)
    cross_ul = math.sqrt(math.pi / u) * math.exp(math.lgamma(u + 0.5) - math.lgamma(u))
    fd = 2.0 * (q(lambda s: w(s) * _numerator(s, u, n_r) / (ul_h(s) + cross_ul))
                + q(lambda s: w(s) * _numerator(s, u, n_t) / (_dl_hd_den(s, u) + 0.5 * math.pi * u)))
    hd = (q(lambda s: w(s) * _numerator(s, u, n_r) / ul_h(s))
          + q(lambda s: w(s) * _numerator(s, u, n_t) / _dl_hd_den(s, u)))
    return MimoComparison(fd, hd, fd / hd)


def nlcf_gain(n, users):
    """Curve-fitted FD/HD gain law 2 - 0.9 U^(4/25) / N^(1/10)."""
    n = np.asarray(n, dtype=float)
    users = np.asarray(users, dtype=float)
    if np.any(n < users):
        raise ValueError("need n >= users")
    out = 2.0 - 0.9 * users**0.16 / n**0.1
    return float(out) if out.ndim == 0 else out


class FitQuality(NamedTuple):
    r2: float
    max_abs_error: float
    gains: np.ndarray
    law: np.ndarray


def nlcf_fit(ns=(64, 128, 256, 512), users=(1, 2, 4, 8), spec: QuadSpec | None = None) -> FitQuality:
    """R^2 and maximum error of :func:`nlcf_gain` against :func:`fd_hd_mimo`."""
    gains = np.array([[fd_hd_mimo(n, u, spec).gain for u in users] for n in ns])
    law = np.array([[nlcf_gain(n, u) for u in users] for n in ns])
    resid = gains - law
    r2 = 1.0 - float(np.sum(resid**2) / np.sum((gains - gains.mean()) ** 2))
    return FitQuality(r2, float(np.max(np.abs(resid))), gains, law)
