import math

import numpy as np
import pytest
from scipy import integrate, stats

from fdmimo import powerctl
from fdmimo.powerctl import PowerControlParams, RicianSI

INF = math.inf
LAM = 4.0 / math.pi


def random_law(rng):
    """Random (pc, si) including the infinite-parameter limits."""
    kind = rng.integers(0, 5)
    p0 = 10 ** rng.uniform(-2, 1)
    i_si = 10 ** rng.uniform(-2, 1)
    p_max = 10 ** rng.uniform(0, 2)
    psi = rng.uniform(0.3, 1.0)
    if kind == 1:
        i_si = INF
    elif kind == 2:
        p0 = INF
    elif kind == 3:
        p_max = INF
    elif kind == 4:
        i_si, p_max = INF, INF
    si = RicianSI(float(rng.choice([0.0, rng.uniform(0, 6)])), 10 ** rng.uniform(-2, 0))
    return PowerControlParams(p0, psi, i_si, p_max), si, float(rng.uniform(2.5, 5))


def test_param_validation():
    with pytest.raises(ValueError):
        PowerControlParams(INF, 1.0, INF, INF)
    with pytest.raises(ValueError):
        PowerControlParams(1.0, 1.5)
    with pytest.raises(ValueError):
        RicianSI(-1.0, 1.0)
    si = RicianSI(2.0, 0.3)
    assert si.mu**2 + si.nu**2 == pytest.approx(0.3, rel=1e-15)
    si0 = RicianSI(0.0, 0.3)
    assert si0.mu == 0 and si0.kappa == pytest.approx(1.0) and si0.theta == pytest.approx(0.3)


def test_cdf_known_branches():
    pc = PowerControlParams(0.5, 1.0, INF, 3.0)
    si = RicianSI(0.0, 1.0)
    assert powerctl.power_cdf(3.0, pc, LAM, si) == 1.0
    assert powerctl.power_cdf(7.0, pc, LAM, si) == 1.0
    for p in [0.01, 0.3, 1.0, 2.9]:
        xi1 = math.pi * LAM * (p / 0.5) ** 0.5
        assert powerctl.power_cdf(p, pc, LAM, si) == pytest.approx(-math.expm1(-xi1), rel=1e-14)


def test_cdf_monotone_right_continuous(rng):
    for _ in range(10):
        pc, si, beta = random_law(rng)
        top = pc.p_max if not math.isinf(pc.p_max) else 1e4
        ps = np.logspace(-8, math.log10(top), 1000)
        c = powerctl.power_cdf(ps, pc, LAM, si, beta)
        assert np.all(np.diff(c) >= -1e-15)
        assert c[-1] == 1.0 or math.isinf(pc.p_max)
        assert 0 <= c.min() and c.max() <= 1


def test_cdf_against_sampler_deciles():
    pc = PowerControlParams(1e-11, 1.0, 2e-20, 1e-11)
    si = RicianSI(1.0, 1e-8)
    draws = powerctl.sample_power(np.random.default_rng(7), pc, LAM, si, 4.0, size=1_000_000)
    for q in np.linspace(0.1, 0.9, 9):
        p = np.quantile(draws, q)
        if p >= pc.p_max:
            continue
        assert powerctl.power_cdf(p, pc, LAM, si) == pytest.approx(np.mean(draws <= p), abs=2e-3)


def test_sampler_ks_distance():
    pc = PowerControlParams(0.2, 0.8, 0.5, 4.0)
    si = RicianSI(1.5, 0.2)
    n = 1_000_000
    draws = powerctl.sample_power(np.random.default_rng(11), pc, LAM, si, 3.5, size=n)
    cont = np.sort(draws[draws < pc.p_max])
    emp = np.arange(1, cont.size + 1) / n
    model = powerctl.power_cdf(cont[:: max(1, cont.size // 20000)], pc, LAM, si, 3.5)
    ks = np.max(np.abs(model - emp[:: max(1, cont.size // 20000)]))
    assert ks < min(0.002, 3 / math.sqrt(n))
    assert np.mean(draws == pc.p_max) == pytest.approx(powerctl.atom_at_pmax(pc, LAM, si, 3.5),
                                                       abs=3e-3)


def test_pdf_matches_cdf_differences(rng):
    pc = PowerControlParams(0.3, 0.9, 0.8, 5.0)
    si = RicianSI(2.0, 0.4)
    for p in np.logspace(-3, math.log10(4.9), 50):
        h = 1e-6 * p
        fd = (powerctl.power_cdf(p + h, pc, LAM, si) - powerctl.power_cdf(p - h, pc, LAM, si)) / (2 * h)
        dens, _ = powerctl.power_pdf(p, pc, LAM, si)
        assert dens == pytest.approx(fd, rel=1e-5, abs=1e-9)


def test_pdf_no_si_cap_closed_form():
    pc = PowerControlParams(0.4, 0.7, INF, INF)
    si = RicianSI(1.0, 0.1)
    for p in [0.01, 0.2, 1.0, 5.0]:
        xi1 = math.pi * LAM * (p / 0.4) ** (2 / (0.7 * 4))
        ref = 2 * xi1 / (0.7 * 4 * p) * math.exp(-xi1)
        assert powerctl.power_pdf(p, pc, LAM, si)[0] == pytest.approx(ref, rel=1e-13)


def test_mass_is_one(rng):
    for _ in range(25):
        pc, si, beta = random_law(rng)
        mass, _ = powerctl.power_expectation(lambda p: np.ones_like(p), pc, LAM, si, beta,
                                             powerctl.QuadSpec(rel_tol=1e-12), tail=1e-14)
        assert mass == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("which", ["p0", "i_si"])
def test_infinite_limits_match_large_finite(which):
    si = RicianSI(1.0, 0.2)
    base = dict(p0=0.3, psi=1.0, i_si=0.5, p_max=8.0)
    lim = PowerControlParams(**{**base, which: INF})
    big = PowerControlParams(**{**base, which: 1e12})
    lam = LAM * 1e-6  # per square meter, as used by the network layer
    for p in np.logspace(-3, 0.8, 20):
        assert powerctl.power_cdf(p, big, lam, si) == pytest.approx(
            powerctl.power_cdf(p, lim, lam, si), abs=1e-6)


def test_rayleigh_limit_of_rician():
    pc = PowerControlParams(0.3, 1.0, 0.5, 8.0)
    for p in np.logspace(-3, 0.8, 20):
        a = powerctl.power_pdf(p, pc, LAM, RicianSI(1e-9, 0.2))[0]
        b = powerctl.power_pdf(p, pc, LAM, RicianSI(0.0, 0.2))[0]
        assert a == pytest.approx(b, rel=1e-6)


def test_moments():
    si0, si1 = RicianSI(0.0, 0.3), RicianSI(1.5, 0.3)
    pc = PowerControlParams(0.2, 1.0, INF, INF)
    assert powerctl.power_moment(0.0, "no_si_cap", pc, LAM, si0) == pytest.approx(1.0)
    assert powerctl.power_moment(1.0, "no_si_cap", pc, LAM, si0) == pytest.approx(
        2 * 0.2 / (math.pi * LAM) ** 2, rel=1e-14)
    assert powerctl.power_moment(1.0, "general", pc, LAM, si0) == pytest.approx(
        2 * 0.2 / (math.pi * LAM) ** 2, rel=1e-6)
    pc_nc = PowerControlParams(INF, 1.0, 0.4, INF)
    for b in [0.0, 0.25, 0.5, 0.8]:
        assert powerctl.power_moment(b, "no_compensation", pc_nc, LAM, si1) == pytest.approx(
            powerctl.power_moment(b, "general", pc_nc, LAM, si1), rel=1e-6)
    with pytest.raises(ValueError):
        powerctl.power_moment(1.0, "no_compensation", pc_nc, LAM, si1)
    pc_r = PowerControlParams(0.2, 1.0, 0.4, INF)
    for b in [0.0, 0.5, 1.0, 2.0]:
        closed = powerctl.power_moment(b, "rayleigh_psi1_beta4", pc_r, LAM, si0)
        # E[p^b] = int b t^(b-1) P[p > t] dt with the Rayleigh survival function
        surv = lambda t: math.exp(-math.pi * LAM * math.sqrt(t / 0.2)) * -math.expm1(-0.4 / (t * 0.3))
        if b == 0:
            ref = 1.0
        else:
            ref = integrate.quad(lambda t: b * t ** (b - 1) * surv(t), 0, np.inf,
                                 epsrel=1e-11, limit=400)[0]
        assert closed == pytest.approx(ref, rel=1e-6)
    with pytest.raises(ValueError):
        powerctl.power_moment(1.0, "rayleigh_psi1_beta4", pc_r, LAM, si1)


def test_sampler_mean_matches_moment():
    pc = PowerControlParams(0.2, 1.0, INF, INF)
    draws = powerctl.sample_power(np.random.default_rng(3), pc, LAM, RicianSI(0, 1), 4.0,
                                  size=400_000)
    m = powerctl.power_moment(1.0, "no_si_cap", pc, LAM, RicianSI(0, 1))
    assert draws.mean() == pytest.approx(m, rel=4 * draws.std() / math.sqrt(draws.size) / m)


def test_sampler_rayleigh_si_exponential():
    pc = PowerControlParams(INF, 1.0, 1.0, INF)
    draws = powerctl.sample_power(np.random.default_rng(5), pc, LAM, RicianSI(0, 0.5), 4.0,
                                  size=200_000)
    h = 1.0 / draws
    assert stats.kstest(h, stats.expon(scale=0.5).cdf).pvalue > 1e-3


def test_sampler_with_distances():
    pc = PowerControlParams(2.0, 0.5, INF, INF)
    d = np.array([0.5, 1.0, 2.0])
    p = powerctl.sample_power(np.random.default_rng(0), pc, LAM, RicianSI(0, 1), 4.0, distance=d)
    np.testing.assert_allclose(p, 2.0 * d ** (0.5 * 4.0))


def test_rician_gamma_match():
    assert powerctl.rician_gamma_match(RicianSI(0.0, 0.7)) == pytest.approx((1.0, 0.7))
    for k in [0.3, 1.0, 5.0]:
        si = RicianSI(k, 0.7)
        kap, th = powerctl.rician_gamma_match(si)
        assert kap * th == pytest.approx(0.7, rel=1e-14)
        assert kap * th * th == pytest.approx((2 * si.mu**2 + si.nu**2) * si.nu**2, rel=1e-14)


def test_rician_gamma_match_distance_recorded():
    si = RicianSI(1.0, 1.0)
    kap, th = powerctl.rician_gamma_match(si)
    h = np.linspace(1e-3, 8, 400)
    exact = stats.ncx2.cdf(2 * h / si.nu**2, 2, 2 * si.mu**2 / si.nu**2)
    approx = stats.gamma.cdf(h, kap, scale=th)
    sup = np.max(np.abs(exact - approx))
    print(f"matched-Gamma sup c.d.f. distance at K=1: {sup:.4f}")
    assert sup < 0.05


def test_bs_gamma_match():
    si0 = RicianSI(0.0, 0.4)
    kap, th = powerctl.bs_gamma_match(si0, 1)
    assert (kap, th) == pytest.approx((1.0, 0.4))
    for u in [1, 3, 8]:
        kap, th = powerctl.bs_gamma_match(RicianSI(2.0, 0.4), u)
        assert kap * th == pytest.approx(u * 0.4, rel=1e-14)


def test_bs_gamma_match_matrix_mean():
    # ||w^T G V||^2 with Rician G, isotropic unit w and orthonormal V
    rng = np.random.default_rng(17)
    u, n_r, n_t, trials = 4, 6, 10, 20_000
    si = RicianSI(2.0, 1.0)
    vals = np.empty(trials)
    for i in range(trials):
        g = si.mu * np.exp(1j * rng.uniform(0, 2 * np.pi)) * np.ones((n_r, n_t)) + si.nu * (
            rng.standard_normal((n_r, n_t)) + 1j * rng.standard_normal((n_r, n_t))) / math.sqrt(2)
        w = rng.standard_normal(n_r) + 1j * rng.standard_normal(n_r)
        w /= np.linalg.norm(w)
        v, _ = np.linalg.qr(rng.standard_normal((n_t, u)) + 1j * rng.standard_normal((n_t, u)))
        vals[i] = np.sum(np.abs(w @ g @ v) ** 2)
    kap, th = powerctl.bs_gamma_match(si, u)
    assert vals.mean() == pytest.approx(kap * th, rel=0.02)
