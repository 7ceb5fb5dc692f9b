"""Uplink power control with a self-interference cap.

The MT transmit power is ``p = min(p0 d^(psi beta), I_SI / H, p_max)`` where
``d`` is the serving distance (nearest-BS law), ``H`` the Rician residual SI
gain with mean ``omega`` and K-factor ``k_factor``.  Infinite ``p0``,
``i_si`` or ``p_max`` switch off the corresponding branch of the minimum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .specfun import QuadSpec


@dataclass(frozen=True)
class PowerControlParams:
    """Parameters of the SI-aware fractional power control.

    Attributes
    ----------
    p0 : float
        Normalized power density (mW per unit distance^(psi beta));
        ``math.inf`` means no distance compensation.
    psi : float
        Compensation factor in (0, 1].
    i_si : float
        Tolerable residual SI level (mW); ``math.inf`` means no SI cap.
    p_max : float
        Maximum MT transmit power (mW); ``math.inf`` means uncapped.
    """

    p0: float
    psi: float = 1.0
    i_si: float = math.inf
    p_max: float = math.inf

    def __post_init__(self):
        if not self.p0 > 0:
            raise ValueError("p0 must be positive (math.inf disables compensation)")
        if not 0 < self.psi <= 1:
            raise ValueError("psi must lie in (0, 1]")
        if not self.i_si > 0:
            raise ValueError("i_si must be positive (math.inf disables the SI cap)")
        if not self.p_max > 0:
            raise ValueError("p_max must be positive")
        if math.isinf(self.p0) and math.isinf(self.i_si) and math.isinf(self.p_max):
            raise ValueError("at least one of p0, i_si, p_max must be finite")

    @property
    def fixed(self) -> bool:
        """True when the power is deterministic (always ``p_max``)."""
        return math.isinf(self.p0) and math.isinf(self.i_si)


@dataclass(frozen=True)
class RicianSI:
    """Residual SI channel with K-factor ``k_factor`` and mean gain ``omega``."""

    k_factor: float
    omega: float

    def __post_init__(self):
        if self.k_factor < 0:
            raise ValueError("k_factor must be >= 0")
        if not self.omega > 0:
            raise ValueError("omega must be positive")

    @property
    def mu(self) -> float:
        """Line-of-sight amplitude, mu^2 = K omega / (K + 1)."""
        return math.sqrt(self.k_factor * self.omega / (self.k_factor + 1.0))

    @property
    def nu(self) -> float:
        """Scattered standard deviation, nu^2 = omega / (K + 1)."""
        return math.sqrt(self.omega / (self.k_factor + 1.0))

    @property
    def kappa(self) -> float:
        """Shape of the moment-matched Gamma law."""
        return rician_gamma_match(self)[0]

    @property
    def theta(self) -> float:
        """Scale of the moment-matched Gamma law."""
        return rician_gamma_match(self)[1]


def _xi1(p, pc: PowerControlParams, lambda_d: float, beta: float):
    if math.isinf(pc.p0):
        return np.zeros_like(np.asarray(p, dtype=float))
    return math.pi * lambda_d * (np.asarray(p, dtype=float) / pc.p0) ** (2.0 / (pc.psi * beta))


def _xi2(p, pc: PowerControlParams, si: RicianSI):
    p = np.asarray(p, dtype=float)
    if math.isinf(pc.i_si):
        return np.full(p.shape, math.inf)
    with np.errstate(divide="ignore"):
        return pc.i_si / (p * si.omega)


def _q1_term(xi2: float, k: float) -> float:
    # 1 - Q1(sqrt(2K), sqrt(2(1+K) xi2)) = P[H > I_SI / p]
    if math.isinf(xi2):
        return 1.0
    return specfun.marcum_q1_complement(math.sqrt(2.0 * k), math.sqrt(2.0 * (1.0 + k) * xi2))


def _survival(p: float, pc, lambda_d, si, beta) -> float:
    # P[p_hat > p] for the uncapped power
    if p <= 0:
        return 1.0
    x1 = float(_xi1(p, pc, lambda_d, beta))
    x2 = float(_xi2(p, pc, si))
    return math.exp(-x1) * _q1_term(x2, si.k_factor)


def power_cdf(p, pc: PowerControlParams, lambda_d: float, si: RicianSI,
              beta: float = 4.0):
    """C.d.f. of the MT transmit power.

    Parameters
    ----------
    p : float or array_like
        Power level(s), mW.
    pc : PowerControlParams
    lambda_d : float
        BS density.  Any length unit works as long as ``p0`` uses the same
        one (the network layer passes densities per m^2).
    si : RicianSI
        Residual SI channel at the MT.
    beta : float
        Path-loss exponent.
    """
    scalar = np.ndim(p) == 0
    ps = np.atleast_1d(np.asarray(p, dtype=float))
    out = np.empty(ps.shape)
    for i, pi in enumerate(ps):
        if pi >= pc.p_max:
            out[i] = 1.0
        elif pi <= 0:
            out[i] = 0.0
        else:
            out[i] = 1.0 - _survival(pi, pc, lambda_d, si, beta)
    return float(out[0]) if scalar else out


def atom_at_pmax(pc: PowerControlParams, lambda_d: float, si: RicianSI,
                 beta: float = 4.0) -> float:
    """Probability mass sitting at ``p_max``."""
    if math.isinf(pc.p_max):
        return 0.0
    return _survival(pc.p_max, pc, lambda_d, si, beta)


def power_pdf(p, pc: PowerControlParams, lambda_d: float, si: RicianSI,
              beta: float = 4.0):
    """Density of the continuous part and the atom at ``p_max``.

    Returns
    -------
    (density, atom)
        ``density`` has the shape of ``p`` and vanishes for ``p >= p_max``;
        ``atom`` is the probability of transmitting at ``p_max``.
    """
    scalar = np.ndim(p) == 0
    ps = np.atleast_1d(np.asarray(p, dtype=float))
    dens = np.zeros(ps.shape)
    k = si.k_factor
    for i, pi in enumerate(ps):
        if pi <= 0 or pi >= pc.p_max:
            continue
        x1 = float(_xi1(pi, pc, lambda_d, beta))
        x2 = float(_xi2(pi, pc, si))
        part = 0.0
        if x1 > 0:
            part += 2.0 * x1 / (pc.psi * beta) * _q1_term(x2, k)
        if not math.isinf(x2):
            # (1+K) xi2 exp(-(K + (1+K) xi2)) 0F1~(;1;K(1+K) xi2) with scaled I0
            u = (1.0 + k) * x2
            part += u * math.exp(-(math.sqrt(k) - math.sqrt(u)) ** 2) * specfun.bessel_i0e(2.0 * math.sqrt(k * u))
        dens[i] = math.exp(-x1) * part / pi
    atom = atom_at_pmax(pc, lambda_d, si, beta)
    return (float(dens[0]) if scalar else dens), atom


def power_quantile(q: float, pc: PowerControlParams, lambda_d: float, si: RicianSI,
                   beta: float = 4.0) -> float:
    """Smallest power whose c.d.f. reaches ``q`` (bisection in log p)."""
    if pc.fixed:
        return pc.p_max
    if not 0 < q < 1:
        raise ValueError("q must lie in (0, 1)")
    lo, hi = -200.0, 200.0
    if not math.isinf(pc.p_max):
        hi = math.log(pc.p_max)
        if power_cdf(math.exp(hi) * (1 - 1e-15), pc, lambda_d, si, beta) < q:
            return pc.p_max
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if power_cdf(math.exp(mid), pc, lambda_d, si, beta) < q:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return math.exp(hi)


def power_expectation(g, pc: PowerControlParams, lambda_d: float, si: RicianSI,
                      beta: float = 4.0, spec: QuadSpec | None = None,
                      tail: float = 1e-10, extend: bool = False) -> tuple[float, float]:
    """E[g(p)] over the power law: continuous part in log p plus the atom.

    ``g`` maps an array of powers to an array of values.  The continuous
    part is truncated to the quantile range [tail^1.2, 1 - tail]; with
    ``extend`` the limits are widened until the weighted integrand is
    negligible (needed for heavy-tailed ``g`` such as moments).

    Returns
    -------
    (value, err_estimate)
    """
    spec = spec or QuadSpec(rel_tol=1e-6)
    atom = atom_at_pmax(pc, lambda_d, si, beta)
    value, err = 0.0, 0.0
    if atom > 0:
        value += atom * float(np.asarray(g(np.array([pc.p_max])))[0])
    if pc.fixed:
        return value, err
    lo = math.log(power_quantile(tail**1.2, pc, lambda_d, si, beta))
    capped = not math.isinf(pc.p_max)
    if capped and atom >= 1.0 - tail:
        return value, err
    hi = math.log(min(power_quantile(1.0 - tail, pc, lambda_d, si, beta), pc.p_max))

    def integrand(t):
        ps = np.exp(t)
        dens, _ = power_pdf(ps, pc, lambda_d, si, beta)
        w = dens * ps
        out = np.zeros_like(ps)
        nz = w > 0
        if nz.any():
            out[nz] = w[nz] * np.asarray(g(ps[nz]), dtype=float)
        return out

    if extend:
        # push the limits out while g makes the tails heavier than the law
        peak = float(np.max(np.abs(integrand(np.linspace(lo, hi, 41)))))
        cap = math.log(pc.p_max) if capped else math.inf
        for _ in range(400):
            step = min(1.0, cap - hi)
            if step <= 0 or abs(float(integrand(np.array([hi]))[0])) < 1e-17 * peak:
                break
            hi += step
        for _ in range(400):
            if abs(float(integrand(np.array([lo]))[0])) < 1e-17 * peak:
                break
            lo -= 1.0
    if hi > lo:
        v, e = specfun.quad_interval(integrand, lo, hi, spec)
        value += v
        err += e
    return value, err


_MOMENT_CASES = ("rayleigh_psi1_beta4", "no_compensation", "no_si_cap", "general")


def power_moment(order: float, case: str, pc: PowerControlParams, lambda_d: float,
                 si: RicianSI, beta: float = 4.0) -> float:
    """Moment E[p^order] of the MT transmit power.

    Parameters
    ----------
    order : float
        Moment order (``order < 1`` required for ``no_compensation``).
    case : {"rayleigh_psi1_beta4", "no_compensation", "no_si_cap", "general"}
        Closed form to use; the parameters must match the case.
        ``general`` integrates the density numerically.

    Raises
    ------
    ValueError
        When the parameters do not match the requested closed form or the
        moment does not exist.
    """
    if case not in _MOMENT_CASES:
        raise ValueError(f"unknown moment case {case!r}")
    b = float(order)
    if case == "general":
        val, _ = power_expectation(lambda p: p**b, pc, lambda_d, si, beta,
                                   QuadSpec(rel_tol=1e-11, max_subdivisions=1000),
                                   extend=True)
        return val
    if not math.isinf(pc.p_max):
        raise ValueError("closed-form moments need p_max = inf")
    if case == "no_si_cap":
        if not math.isinf(pc.i_si) or math.isinf(pc.p0):
            raise ValueError("no_si_cap needs i_si = inf and finite p0")
        xi1_hat = math.pi * lambda_d / pc.p0 ** (2.0 / (beta * pc.psi))
        e = pc.psi * beta * b / 2.0
        return math.gamma(e + 1.0) / xi1_hat**e
    if case == "no_compensation":
        if not math.isinf(pc.p0) or math.isinf(pc.i_si):
            raise ValueError("no_compensation needs p0 = inf and finite i_si")
        if b >= 1:
            raise ValueError("moment of order >= 1 does not exist without compensation")
        k = si.k_factor
        xi2_hat = pc.i_si / si.omega
        return ((1.0 + k) * xi2_hat) ** b * math.gamma(1.0 - b) * specfun.hyp_confluent("1F1", (b, 1.0), -k)
    # rayleigh_psi1_beta4
    if si.k_factor != 0 or pc.psi != 1 or beta != 4 or math.isinf(pc.p0) or math.isinf(pc.i_si):
        raise ValueError("rayleigh_psi1_beta4 needs K = 0, psi = 1, beta = 4, finite p0 and i_si")
    xi1_hat = math.pi * lambda_d / math.sqrt(pc.p0)
    xi2_hat = pc.i_si / si.omega
    x = xi1_hat**2 * xi2_hat / 4.0
    g1 = specfun.meijer_g_30_03(1.0 - b, 0.0, 0.5, x)
    g2 = specfun.meijer_g_30_03(-b - 0.5, 0.0, 0.5, x)
    return (xi2_hat**b / math.sqrt(math.pi) * (g1 - xi1_hat * math.sqrt(xi2_hat) / 2.0 * g2)
            + math.gamma(2.0 * b + 1.0) / xi1_hat ** (2.0 * b))


def sample_power(rng: np.random.Generator, pc: PowerControlParams, lambda_d: float,
                 si: RicianSI, beta: float = 4.0, size=None, distance=None):
    """Draw MT transmit powers.

    Parameters
    ----------
    rng : numpy.random.Generator
    distance : array_like, optional
        Serving distances; drawn from the nearest-BS law when omitted.

    Returns
    -------
    ndarray of powers (mW).
    """
    if distance is None:
        d2 = rng.standard_exponential(size) / (math.pi * lambda_d)
        shape = np.shape(d2)
    else:
        d2 = np.asarray(distance, dtype=float) ** 2
        shape = d2.shape
    p = np.full(shape, pc.p_max, dtype=float)
    if not math.isinf(pc.p0):
        p = np.minimum(p, pc.p0 * d2 ** (pc.psi * beta / 2.0))
    if not math.isinf(pc.i_si):
        # complex Gaussian with the LOS amplitude split over I and Q
        re = rng.standard_normal(shape) * si.nu / math.sqrt(2.0) + si.mu / math.sqrt(2.0)
        im = rng.standard_normal(shape) * si.nu / math.sqrt(2.0) + si.mu / math.sqrt(2.0)
        h = re * re + im * im
        with np.errstate(divide="ignore"):
            p = np.minimum(p, pc.i_si / h)
    return p


def rician_gamma_match(si: RicianSI) -> tuple[float, float]:
    """Gamma(kappa, theta) matched to the first two moments of the SI gain."""
    mu2, nu2 = si.mu**2, si.nu**2
    spread = (2.0 * mu2 + nu2) * nu2
    return (mu2 + nu2) ** 2 / spread, spread / (mu2 + nu2)


def bs_gamma_match(si: RicianSI, users: int) -> tuple[float, float]:
    """Gamma match of the aggregate BS SI seen through ``users`` streams.

    The line-of-sight part of the SI matrix is common to all entries, which
    inflates the variance through the (U + 2) mu^4 term.
    """
    if users < 1:
        raise ValueError("users must be >= 1")
    mu2, nu2 = si.mu**2, si.nu**2
    u = float(users)
    kappa = u * (mu2 + nu2) ** 2 / ((u + 2.0) * mu2 * mu2 + 2.0 * mu2 * nu2 + nu2 * nu2)
    theta = u * (mu2 + nu2) / kappa
    return kappa, theta
