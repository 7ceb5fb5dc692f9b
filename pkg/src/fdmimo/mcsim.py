"""Monte-Carlo simulation of the FD multi-cell network on Poisson point processes.

The typical receiver sits at the origin.  Each trial draws one realization of
the BS and MT point processes with their powers and fading, and averages the
rate over ``link_samples`` draws of the reference link (serving distance,
intended gain, SI gain, reference-MT power).  Given a serving distance r the
interferers are the points beyond r, which is the exact conditional law of a
PPP.  Serving distances can be drawn by importance sampling, in which case
they carry likelihood weights.

Every trial has its own generator spawned from ``SeedSequence(seed)``, so
results do not depend on the order in which trials are evaluated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .powerctl import bs_gamma_match, sample_power
from .se import NetworkConfig

_Z95 = 1.959963984540054
# log-uniform component of the serving-distance proposal, in x = pi lam r^2
_X_LO, _X_HI = 1e-15, 10.0
_MAX_RESAMPLE = 100


@dataclass(frozen=True)
class Scenario:
    """Simulation set-up.

    Attributes
    ----------
    cfg : NetworkConfig
    region_radius_km : float
        Radius of the simulated disc around the typical receiver.
    trials : int
        Number of topologies.
    seed : int
        Root seed.
    link_samples : int
        Reference-link draws per topology (conditional Monte Carlo).
    importance : bool
        Draw the serving distance from a heavier-tailed proposal.
    power_coupling : {"iid", "common"}
        Interfering MTs draw their own powers, or all use the reference-MT
        power (the conditioning of the analytic m.g.f.s).
    reference_power : {"independent", "coupled"}
        Reference-MT power independent of the serving distance (as in the
        analytic pipeline) or computed from it.
    """

    cfg: NetworkConfig
    region_radius_km: float = 20.0
    trials: int = 10_000
    seed: int = 0
    link_samples: int = 64
    importance: bool = True
    power_coupling: str = "iid"
    reference_power: str = "independent"

    def __post_init__(self):
        if not self.region_radius_km > 0:
            raise ValueError("region_radius_km must be positive")
        if self.trials < 1 or self.link_samples < 1:
            raise ValueError("trials and link_samples must be >= 1")
        if self.power_coupling not in ("iid", "common"):
            raise ValueError("power_coupling must be 'iid' or 'common'")
        if self.reference_power not in ("independent", "coupled"):
            raise ValueError("reference_power must be 'independent' or 'coupled'")

    @property
    def radius(self) -> float:
        """Region radius in meters."""
        return self.region_radius_km * 1e3


@dataclass(frozen=True)
class SimResult:
    """Monte-Carlo SE estimates (bits/s/Hz) with 95% normal half-widths."""

    mean_se_dl: float
    mean_se_ul: float
    ci_half_width_dl: float
    ci_half_width_ul: float
    trials: int
    seed: int
    duplex: str = "fd"

    @property
    def ci_half_width(self) -> float:
        return max(self.ci_half_width_dl, self.ci_half_width_ul)


# ---------------------------------------------------------------------------
# point processes
# ---------------------------------------------------------------------------


def _ppp_radii(rng, lam: float, r_in: float, r_out: float) -> np.ndarray:
    """Distances to the origin of a PPP of density lam in an annulus."""
    if r_out <= r_in or lam == 0:
        return np.empty(0)
    n = rng.poisson(lam * math.pi * (r_out * r_out - r_in * r_in))
    return np.sqrt(r_in * r_in + (r_out * r_out - r_in * r_in) * rng.random(n))


def _to_points(rng, radii):
    phi = rng.uniform(0.0, 2.0 * math.pi, radii.shape)
    return np.column_stack([radii * np.cos(phi), radii * np.sin(phi)])


def _draw_x(rng, importance: bool, size: int):
    """Serving distances in x = pi lam r^2 (Exp(1)) with likelihood weights."""
    if not importance:
        return rng.standard_exponential(size), np.ones(size)
    pick = rng.random(size) < 0.5
    x = np.where(pick, rng.standard_exponential(size),
                 np.exp(rng.uniform(math.log(_X_LO), math.log(_X_HI), size)))
    q = 0.5 * np.exp(-x) + np.where((x > _X_LO) & (x < _X_HI),
                                    0.5 / (x * math.log(_X_HI / _X_LO)), 0.0)
    return x, np.exp(-x) / q


def _tail_sums(radii, values, cut):
    """Sum of ``values`` over points with radius > cut, for each cut."""
    order = np.argsort(radii)
    r_sorted = radii[order]
    csum = np.concatenate([[0.0], np.cumsum(values[order])])
    k = np.searchsorted(r_sorted, cut, side="right")
    return csum[-1] - csum[k]


def sample_topology(rng: np.random.Generator, scenario: Scenario,
                    serving_distance: float | None = None):
    """BS positions (meters) and the distance to the nearest BS.

    Without ``serving_distance`` a full PPP is drawn in the region and the
    nearest BS serves the origin (redrawn when empty; after repeated empty
    draws the distance is ``inf``).  With it, the serving BS is placed at
    that distance and the others form a PPP outside it.

    Returns
    -------
    (points, serving_distance)
        ``points`` has shape (n, 2); the serving BS is row 0.
    """
    lam, big_r = scenario.cfg.lam, scenario.radius
    if serving_distance is None:
        for _ in range(_MAX_RESAMPLE):
            radii = _ppp_radii(rng, lam, 0.0, big_r)
            if radii.size:
                radii = np.sort(radii)
                return _to_points(rng, radii), float(radii[0])
        return np.empty((0, 2)), math.inf
    radii = np.concatenate([[serving_distance], _ppp_radii(rng, lam, serving_distance, big_r)])
    return _to_points(rng, radii), float(serving_distance)


def sample_interfering_mts(rng: np.random.Generator, scenario: Scenario, exclusion: float = 0.0,
                           common_power: float | None = None):
    """Scheduled MTs (density U lam) outside ``exclusion`` with their powers.

    Returns
    -------
    (points, powers)
        Positions in meters, shape (n, 2), and powers in mW (i.i.d. from the
        power-control law unless ``common_power`` is given).
    """
    if exclusion < 0:
        raise ValueError("exclusion must be >= 0")
    cfg = scenario.cfg
    radii = _ppp_radii(rng, cfg.dims.users * cfg.lam, exclusion, scenario.radius)
    powers = _mt_powers(rng, scenario, radii.size, common_power)
    return _to_points(rng, radii), powers


def _mt_powers(rng, scenario, n, common_power):
    cfg = scenario.cfg
    if common_power is not None:
        return np.full(n, common_power)
    return sample_power(rng, cfg.pc, cfg.lam, cfg.si_mt, cfg.beta, n)


def _rician_gain(rng, si, size):
    re = rng.standard_normal(size) * si.nu / math.sqrt(2.0) + si.mu / math.sqrt(2.0)
    im = rng.standard_normal(size) * si.nu / math.sqrt(2.0) + si.mu / math.sqrt(2.0)
    return re * re + im * im


def _reference_power(rng, scenario, r):
    cfg = scenario.cfg
    dist = r if scenario.reference_power == "coupled" else None
    return sample_power(rng, cfg.pc, cfg.lam, cfg.si_mt, cfg.beta, r.size, distance=dist)


# ---------------------------------------------------------------------------
# link simulators
# ---------------------------------------------------------------------------


def simulate_dl(rng: np.random.Generator, scenario: Scenario, duplex: str = "fd"):
    """SINR draws of the DL reference link for one topology.

    The ``link_samples`` draws share the interferer point processes; each
    has its own serving distance (the other BSs are the points beyond it),
    intended gain, SI gain and reference-MT power.

    Returns
    -------
    (sinr, weights)
        Arrays of length ``link_samples``; weights are the importance
        weights of the serving distances (ones without importance sampling).
    """
    cfg, dims = scenario.cfg, scenario.cfg.dims
    u, b, m = dims.users, cfg.beta, scenario.link_samples
    fd = duplex == "fd"
    if duplex not in ("fd", "hd"):
        raise ValueError("duplex must be 'fd' or 'hd'")
    x, w = _draw_x(rng, scenario.importance, m)
    r = np.sqrt(x / (math.pi * cfg.lam))
    bs = _ppp_radii(rng, cfg.lam, 0.0, scenario.radius)
    i_dd = cfg.p_d / u * _tail_sums(bs, rng.gamma(u, size=bs.size) * bs**-b, r)
    d = dims.d_dl if fd and not cfg.perfect_si else dims.d_dl_plain
    signal = cfg.p_d / u * r**-b * rng.gamma(d, size=m)
    interference = i_dd + cfg.sigma2_dl
    if fd:
        p = _reference_power(rng, scenario, r)
        mts = _ppp_radii(rng, u * cfg.lam, 0.0, scenario.radius)
        fade = rng.standard_exponential(mts.size) * mts**-b
        if scenario.power_coupling == "common":
            interference = interference + p * float(np.sum(fade))
        else:
            interference = interference + float(np.sum(_mt_powers(rng, scenario, mts.size, None) * fade))
        if not cfg.perfect_si:
            interference = interference + p * _rician_gain(rng, cfg.si_mt, m)
    return signal / interference, w


def simulate_ul(rng: np.random.Generator, scenario: Scenario, duplex: str = "fd"):
    """SINR draws of the UL reference link for one topology (see simulate_dl).

    Interfering MTs of each draw are the points beyond its serving distance.
    """
    cfg, dims = scenario.cfg, scenario.cfg.dims
    u, b, m = dims.users, cfg.beta, scenario.link_samples
    fd = duplex == "fd"
    if duplex not in ("fd", "hd"):
        raise ValueError("duplex must be 'fd' or 'hd'")
    x, w = _draw_x(rng, scenario.importance, m)
    r = np.sqrt(x / (math.pi * cfg.lam))
    p = _reference_power(rng, scenario, r)
    mts = _ppp_radii(rng, u * cfg.lam, 0.0, scenario.radius)
    fade = rng.standard_exponential(mts.size) * mts**-b
    signal = p * r**-b * rng.gamma(dims.d_ul, size=m)
    if scenario.power_coupling == "common":
        interference = p * _tail_sums(mts, fade, r) + cfg.sigma2_ul
    else:
        powers = _mt_powers(rng, scenario, mts.size, None)
        interference = _tail_sums(mts, powers * fade, r) + cfg.sigma2_ul
    if fd:
        bs = _ppp_radii(rng, cfg.lam, 0.0, scenario.radius)
        # aggregate over U streams: Gamma(U, 1/U) at per-stream power p_d / U
        interference = interference + cfg.p_d / u * float(
            np.sum(rng.gamma(u, 1.0 / u, size=bs.size) * bs**-b))
        if not cfg.perfect_si and not dims.zf_sin:
            if dims.n_t == dims.n_r == u == 1:
                interference = interference + cfg.p_d * _rician_gain(rng, cfg.bs_si, m)
            else:
                kappa, theta = bs_gamma_match(cfg.bs_si, u)
                interference = interference + cfg.p_d / u * rng.gamma(kappa, theta, size=m)
    return signal / interference, w


def _trial_rngs(scenario: Scenario, stream: int):
    root = np.random.SeedSequence([scenario.seed, stream])
    return [np.random.default_rng(s) for s in root.spawn(scenario.trials)]


def _estimate_link(scenario: Scenario, link: str, duplex: str) -> tuple[float, float]:
    sim = simulate_dl if link == "dl" else simulate_ul
    stream = {"dl": 0, "ul": 1}[link] + (0 if duplex == "fd" else 2)
    vals = np.empty(scenario.trials)
    for i, rng in enumerate(_trial_rngs(scenario, stream)):
        sinr, w = sim(rng, scenario, duplex)
        vals[i] = float(np.mean(w * np.log2(1.0 + sinr)))
    mean = float(np.mean(vals))
    half = _Z95 * float(np.std(vals, ddof=1)) / math.sqrt(vals.size) if vals.size > 1 else math.inf
    return mean, half


def estimate_se(scenario: Scenario, duplex: str = "fd", links=("dl", "ul")) -> SimResult:
    """Mean DL / UL rate (bits/s/Hz) with 95% confidence half-widths.

    Links not in ``links`` are reported as ``nan``.
    """
    out = {"dl": (math.nan, math.nan), "ul": (math.nan, math.nan)}
    for link in links:
        out[link] = _estimate_link(scenario, link, duplex)
    return SimResult(out["dl"][0], out["ul"][0], out["dl"][1], out["ul"][1], scenario.trials,
                     scenario.seed, duplex)


# ---------------------------------------------------------------------------
# matrix-level check of the ZF-SIN / ZF gain laws
# ---------------------------------------------------------------------------


def _cn(rng, shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def validate_zf_sin(n_t: int, n_r: int, users: int, samples: int, rng: np.random.Generator,
                    k_factor: float = 1.0, batch: int = 20_000) -> dict:
    """Build ZF-SIN precoders and ZF decoders from random channels.

    Checks SI nulling and multi-user nulling residuals and compares the
    effective intended gains with Gamma(N_t - N_r - U + 1, 1) (DL) and
    Gamma(N_r - U + 1, 1) (UL) by Kolmogorov-Smirnov tests.

    Returns
    -------
    dict
        Residuals, diversity orders, KS statistics and p-values, and
        ``passed`` (residuals < 1e-10 and both p-values > 0.01).
    """
    if users < 1 or n_t < n_r + users or n_r < users:
        raise ValueError("need n_t >= n_r + users and n_r >= users")
    d_dl, d_ul = n_t - n_r - users + 1, n_r - users + 1
    mu = math.sqrt(k_factor / (k_factor + 1.0))
    nu = math.sqrt(1.0 / (k_factor + 1.0))
    dl_gain, ul_gain = [], []
    si_res = mu_res = 0.0
    done = 0
    while done < samples:
        s = min(batch, samples - done)
        g = _cn(rng, (s, users, n_t))
        g_si = mu + nu * _cn(rng, (s, n_r, n_t))
        # projector onto the null space of the SI channel
        gram = g_si @ np.conj(np.swapaxes(g_si, 1, 2))
        proj = np.eye(n_t) - np.conj(np.swapaxes(g_si, 1, 2)) @ np.linalg.solve(gram, g_si)
        geff = g @ proj
        a = geff @ np.conj(np.swapaxes(geff, 1, 2))
        v = np.conj(np.swapaxes(geff, 1, 2)) @ np.linalg.inv(a)
        v = v / np.linalg.norm(v, axis=1, keepdims=True)
        gv = g @ v
        si_res = max(si_res, float(np.max(np.linalg.norm(g_si @ v, axis=(1, 2))
                                           / np.linalg.norm(g_si, axis=(1, 2)))))
        off = gv * (1.0 - np.eye(users))
        mu_res = max(mu_res, float(np.max(np.abs(off)) / np.max(np.abs(np.diagonal(gv, axis1=1, axis2=2)))))
        dl_gain.append(np.abs(gv[:, 0, 0]) ** 2)
        h = _cn(rng, (s, n_r, users))
        hh = np.conj(np.swapaxes(h, 1, 2)) @ h
        ul_gain.append(1.0 / np.real(np.linalg.inv(hh)[:, 0, 0]))
        done += s
    dl_gain = np.concatenate(dl_gain)
    ul_gain = np.concatenate(ul_gain)
    ks_dl = stats.kstest(dl_gain, stats.gamma(d_dl).cdf)
    ks_ul = stats.kstest(ul_gain, stats.gamma(d_ul).cdf)
    passed = (si_res < 1e-10 and mu_res < 1e-10 and ks_dl.pvalue > 0.01 and ks_ul.pvalue > 0.01)
    return {
        "n_t": n_t, "n_r": n_r, "users": users, "samples": samples,
        "d_dl": d_dl, "d_ul": d_ul,
        "si_nulling_residual": si_res, "multiuser_residual": mu_res,
        "ks_dl_statistic": float(ks_dl.statistic), "ks_dl_pvalue": float(ks_dl.pvalue),
        "ks_ul_statistic": float(ks_ul.statistic), "ks_ul_pvalue": float(ks_ul.pvalue),
        "passed": bool(passed),
    }
