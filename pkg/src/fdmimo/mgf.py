"""Conditional moment generating functions of the DL / UL signal terms.

All functions evaluate ``E[exp(-z S)]`` of one component ``S`` of the SINR
(intended signal, inter-cell interference, cross-link interference, residual
SI).  Interference fields are Poisson point processes whose marks are
Gamma-distributed fading gains; see :func:`mgf_gamma_field`.

Lengths can be in any unit as long as densities, distances and ``p0`` agree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels, specfun
from .powerctl import PowerControlParams, RicianSI


@dataclass(frozen=True)
class ArrayDims:
    """Antenna counts and the resulting ZF diversity orders.

    Attributes
    ----------
    n_t, n_r : int
        Transmit / receive antennas at each BS.
    users : int
        Scheduled MTs per cell.
    """

    n_t: int
    n_r: int
    users: int

    def __post_init__(self):
        if self.users < 1:
            raise ValueError("users must be >= 1")
        if self.users > min(self.n_t, self.n_r):
            raise ValueError("users must not exceed min(n_t, n_r)")

    @property
    def zf_sin(self) -> bool:
        """True when SI nulling at the transmitter is feasible."""
        return self.n_t >= self.n_r + self.users

    @property
    def d_dl(self) -> int:
        """DL diversity with SI nulling (plain ZF when nulling is infeasible)."""
        if self.zf_sin:
            return self.n_t - self.n_r - self.users + 1
        return self.d_dl_plain

    @property
    def d_dl_plain(self) -> int:
        """DL diversity of plain ZF precoding (HD or perfect SI removal)."""
        return self.n_t - self.users + 1

    @property
    def d_ul(self) -> int:
        """UL diversity of the ZF receiver."""
        return self.n_r - self.users + 1


@dataclass(frozen=True)
class LinkGeometry:
    """Reference-link geometry.

    Attributes
    ----------
    r : float
        Serving distance.
    beta : float
        Path-loss exponent (> 2).
    lambda_d : float
        BS density.
    users : int
        Scheduled MTs per cell.
    exclusion : float, optional
        Interference exclusion radius; defaults to ``r``.
    """

    r: float
    beta: float
    lambda_d: float
    users: int = 1
    exclusion: float | None = None

    def __post_init__(self):
        if not self.beta > 2:
            raise ValueError("beta must exceed 2 for a finite interference field")
        if self.r < 0:
            raise ValueError("r must be >= 0")
        if self.users < 1:
            raise ValueError("users must be >= 1")

    @property
    def excl(self) -> float:
        return self.r if self.exclusion is None else self.exclusion


def arccot(x):
    """arccot(x) = arctan(1/x) on [0, pi/2], with arccot(0) = pi/2."""
    return np.arctan2(1.0, np.asarray(x, dtype=float))


def _check_z(z):
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise ValueError("z must be >= 0")
    return z


def _out(val, z):
    return float(val) if np.ndim(z) == 0 else val


def mgf_gamma_field(z, lam: float, shape: float, scale: float, exclusion: float,
                    beta: float):
    """Laplace transform of a PPP field with Gamma(shape, 1) * scale marks.

    ``E[exp(-z sum_x Q_x |x|^-beta)]`` for interferers of density ``lam``
    outside a disc of radius ``exclusion`` around the receiver.
    """
    if not beta > 2:
        raise ValueError("beta must exceed 2 (field diverges)")
    if shape <= 0 or scale <= 0:
        raise ValueError("shape and scale must be positive")
    z = _check_z(z)
    return _out(np.exp(kernels.field_log(z, lam, shape, scale, exclusion, beta)), z)


def mgf_dl_intended(z, geom: LinkGeometry, dims: ArrayDims, p_d: float,
                    diversity: int | None = None):
    """Gamma(D_d, 1) intended DL gain at per-stream power p_d / U."""
    z = _check_z(z)
    d = dims.d_dl if diversity is None else diversity
    a = p_d / dims.users * geom.r ** -geom.beta
    return _out(np.exp(-d * np.log1p(z * a)), z)


def _dl_intercell_general(z, geom, p_d):
    # direct evaluation of the hypergeometric grouping (moderate arguments)
    U, b, r = float(geom.users), geom.beta, geom.r
    d = 2.0 / b
    out = np.empty(np.shape(z))
    for i, zi in enumerate(np.atleast_1d(z)):
        if zi == 0:
            out.flat[i] = 1.0
            continue
        zv = zi * p_d / U
        x = r**b / zv
        lg = math.lgamma(U + d)
        t1 = r * r * math.expm1(-U * math.log1p(1.0 / x))
        t2 = math.exp(lg + d * math.log(zv) + math.lgamma(1.0 - d) - math.lgamma(U))
        f = specfun.hyp2f1(U + 1.0, U + d, U + d + 1.0, -x, regularized=True)
        t3 = U * math.exp(lg + 2.0 * math.log(r) + U * math.log(x)) * f
        out.flat[i] = math.exp(-math.pi * geom.lambda_d * (t1 + t2 - t3))
    return out


def mgf_dl_intercell(z, geom: LinkGeometry, p_d: float, form: str = "auto"):
    """Inter-cell DL interference from other BSs outside the serving distance.

    Parameters
    ----------
    form : {"auto", "general", "closed", "engine"}
        ``general`` evaluates the hypergeometric expression directly,
        ``closed`` the arccot form (beta = 4, one user), ``engine`` the
        stable Gamma-field evaluation.  ``auto`` picks ``closed`` when
        applicable and ``engine`` otherwise.
    """
    z = _check_z(z)
    closed_ok = geom.beta == 4 and geom.users == 1
    if form == "auto":
        form = "closed" if closed_ok else "engine"
    if form == "closed":
        if not closed_ok:
            raise specfun.DomainError("arccot form needs beta = 4 and one user")
        s = np.sqrt(z * p_d)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(z > 0, np.exp(-math.pi * geom.lambda_d * s * arccot(geom.r**2 / np.where(s > 0, s, 1.0))), 1.0)
        return _out(val, z)
    if form == "general":
        return _out(_dl_intercell_general(z, geom, p_d), z)
    if form == "engine":
        return _out(np.exp(kernels.field_log(z, geom.lambda_d, geom.users, p_d / geom.users,
                                             geom.excl, geom.beta)), z)
    raise ValueError(f"unknown form {form!r}")


_CROSS_FORMS = ("conditional", "unconditioned_rayleigh_pl4", "unconditioned_no_comp",
                "unconditioned_no_si")


def mgf_dl_cross(z, p: float | None, geom: LinkGeometry, form: str = "conditional",
                 pc: PowerControlParams | None = None, si: RicianSI | None = None):
    """Cross-link MT-to-MT interference in the DL.

    ``conditional`` treats every interfering MT at the common power ``p``.
    The ``unconditioned_*`` forms average over the power-control law
    (beta = 4, psi = 1, no power cap) and need ``pc`` (and ``si`` for the
    SI-capped ones).

    Raises
    ------
    DomainError
        When the form does not apply to the parameters.
    """
    z = _check_z(z)
    U, lam, b = geom.users, geom.lambda_d, geom.beta
    d = 2.0 / b
    if form == "conditional":
        if p is None:
            raise ValueError("conditional form needs p")
        c = dl_cross_coefficient(lam, U, 1.0, b) * np.asarray(p, dtype=float) ** d
        val = np.exp(-c * z**d)
        return float(val) if np.ndim(val) == 0 else val
    if form not in _CROSS_FORMS:
        raise ValueError(f"unknown form {form!r}")
    if pc is None:
        raise ValueError("unconditioned forms need the power-control parameters")
    if b != 4 or pc.psi != 1 or not math.isinf(pc.p_max):
        raise specfun.DomainError("unconditioned forms need beta = 4, psi = 1, p_max = inf")
    if form == "unconditioned_no_si":
        if not math.isinf(pc.i_si) or math.isinf(pc.p0):
            raise specfun.DomainError("no_si form needs i_si = inf and finite p0")
        return _out(1.0 / (1.0 + 0.5 * math.pi * U * np.sqrt(z * pc.p0)), z)
    if si is None or si.k_factor != 0 or math.isinf(pc.i_si):
        raise specfun.DomainError("SI-capped forms need a Rayleigh SI channel and finite i_si")
    xi2 = pc.i_si / si.omega
    zs = np.atleast_1d(z)
    out = np.ones(zs.shape)
    if form == "unconditioned_no_comp":
        if not math.isinf(pc.p0):
            raise specfun.DomainError("no_comp form needs p0 = inf")
        for i, zi in enumerate(zs):
            if zi > 0:
                x = zi * xi2 * (math.pi**2 * U * lam / 4.0) ** 2
                out[i] = specfun.meijer_g_30_03(0.0, 0.5, 1.0, x) / math.sqrt(math.pi)
        return _out(out if np.ndim(z) else out[0], z)
    if math.isinf(pc.p0):
        raise specfun.DomainError("rayleigh_pl4 form needs finite p0")
    xi1 = math.pi * lam / math.sqrt(pc.p0)
    for i, zi in enumerate(zs):
        if zi > 0:
            bb = 0.5 * math.pi * U * math.sqrt(zi * pc.p0)
            x = xi2 * (xi1 * (1.0 + bb) / 2.0) ** 2
            out[i] = (1.0 / (1.0 + bb)
                      + specfun.meijer_g_30_03(0.0, 0.5, 1.0, x) / math.sqrt(math.pi)
                      - xi1 * math.sqrt(xi2) / (2.0 * math.sqrt(math.pi))
                      * specfun.meijer_g_30_03(-0.5, 0.0, 0.5, x))
    return _out(out if np.ndim(z) else out[0], z)


def mgf_si(z, p: float, si: RicianSI):
    """Residual SI term ``p H`` with H non-central chi-square (Rician)."""
    z = _check_z(z)
    k, om = si.k_factor, si.omega
    s = z * p * om
    return _out((1.0 + k) / (1.0 + k + s) * np.exp(-s * k / (1.0 + k + s)), z)


def mgf_ul_intended(z, geom: LinkGeometry, dims: ArrayDims, p: float):
    """Gamma(D_u, 1) intended UL gain at MT power p."""
    z = _check_z(z)
    a = p * geom.r ** -geom.beta
    return _out(np.exp(-dims.d_ul * np.log1p(z * a)), z)


def mgf_ul_intercell(z, p: float, geom: LinkGeometry, form: str = "auto"):
    """Inter-cell UL interference from MTs (density U lam) outside the exclusion.

    Parameters
    ----------
    form : {"auto", "general", "closed", "engine"}
        As in :func:`mgf_dl_intercell`; ``closed`` needs beta = 4.
    """
    z = _check_z(z)
    U, lam, b, r = geom.users, geom.lambda_d, geom.beta, geom.excl
    if form == "auto":
        form = "closed" if b == 4 else "engine"
    if form == "closed":
        if b != 4:
            raise specfun.DomainError("arccot form needs beta = 4")
        s = np.sqrt(z * p)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = np.where(z > 0, np.exp(-math.pi * U * lam * s * arccot(r * r / np.where(s > 0, s, 1.0))), 1.0)
        return _out(val, z)
    if form == "general":
        d = 2.0 / b
        g = math.gamma(1.0 - d) * math.gamma(1.0 + d)
        out = np.empty(np.shape(z))
        for i, zi in enumerate(np.atleast_1d(z)):
            if zi == 0:
                out.flat[i] = 1.0
                continue
            x = r**b / (zi * p)
            f = specfun.hyp2f1(1.0, 1.0 + d, 2.0 + d, -x)
            br = (zi * p) ** d * g - r * r * (1.0 - 2.0 * x / (b + 2.0) * f)
            out.flat[i] = math.exp(-math.pi * U * lam * br)
        return _out(out, z)
    if form == "engine":
        return _out(np.exp(kernels.field_log(z, U * lam, 1.0, p, r, b)), z)
    raise ValueError(f"unknown form {form!r}")


def ul_cross_coefficient(lam: float, users: int, p_d: float, beta: float) -> float:
    """Coefficient c of the UL cross-link log-m.g.f. ``-c z^(2/beta)``."""
    d = 2.0 / beta
    u = float(users)
    g = math.exp(math.lgamma(1.0 - d) + math.lgamma(u + d) - math.lgamma(u))
    return math.pi * lam * (p_d / u) ** d * g / u**d


def dl_cross_coefficient(lam: float, users: int, p: float, beta: float) -> float:
    """Coefficient c of the DL cross-link log-m.g.f. ``-c z^(2/beta)``."""
    d = 2.0 / beta
    return math.pi * users * lam * math.gamma(1.0 - d) * math.gamma(1.0 + d) * p**d


def mgf_ul_cross(z, geom: LinkGeometry, p_d: float):
    """Cross-link BS-to-BS interference in the UL (no exclusion).

    Gamma(U, 1) marks at per-stream power p_d / U with the additional
    U^(-2/beta) scaling of the aggregate; one user and beta = 4 give
    ``exp(-(pi^2 / 2) lam sqrt(z p_d))``.
    """
    z = _check_z(z)
    c = ul_cross_coefficient(geom.lambda_d, geom.users, p_d, geom.beta)
    return _out(np.exp(-c * z ** (2.0 / geom.beta)), z)
