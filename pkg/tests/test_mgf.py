import math

import numpy as np
import pytest
from scipy import integrate, special

from fdmimo import mgf, powerctl
from fdmimo.mgf import ArrayDims, LinkGeometry
from fdmimo.powerctl import PowerControlParams, RicianSI
from fdmimo.specfun import DomainError

INF = math.inf
LAM = 0.3


def all_mgfs(z, geom=LinkGeometry(1.2, 4.0, LAM, 3), dims=ArrayDims(10, 4, 3)):
    si = RicianSI(1.0, 0.2)
    return {
        "dl_intended": mgf.mgf_dl_intended(z, geom, dims, 2.0),
        "dl_intercell": mgf.mgf_dl_intercell(z, geom, 2.0),
        "dl_cross": mgf.mgf_dl_cross(z, 0.7, geom),
        "si": mgf.mgf_si(z, 0.7, si),
        "ul_intended": mgf.mgf_ul_intended(z, geom, dims, 0.7),
        "ul_intercell": mgf.mgf_ul_intercell(z, 0.7, geom),
        "ul_cross": mgf.mgf_ul_cross(z, geom, 2.0),
    }


def test_unity_at_zero_and_decreasing():
    for name, val in all_mgfs(0.0).items():
        assert abs(val - 1.0) <= 1e-12, name
    z = np.logspace(-4, 4, 60)
    for name, vals in all_mgfs(z).items():
        assert np.all(vals > 0) and np.all(vals <= 1), name
        assert np.all(np.diff(vals) < 0), name


def test_negative_z_rejected():
    with pytest.raises(ValueError):
        mgf.mgf_si(-1.0, 1.0, RicianSI(0, 1))


def test_geometry_and_dims_validation():
    with pytest.raises(ValueError):
        LinkGeometry(1.0, 2.0, LAM)
    with pytest.raises(ValueError):
        ArrayDims(2, 2, 3)
    d = ArrayDims(80, 20, 8)
    assert (d.d_dl, d.d_ul, d.zf_sin) == (53, 13, True)
    s = ArrayDims(1, 1, 1)
    assert (s.zf_sin, s.d_dl, s.d_ul) == (False, 1, 1)
    assert mgf.arccot(0.0) == pytest.approx(math.pi / 2)


def test_gamma_field_no_exclusion_closed_form(rng):
    for _ in range(20):
        u, b = float(rng.integers(1, 12)), rng.uniform(2.2, 6)
        z, v = 10 ** rng.uniform(-2, 2), 10 ** rng.uniform(-1, 1)
        d = 2 / b
        ref = math.exp(-math.pi * LAM * (z * v) ** d * math.gamma(1 - d) * math.gamma(u + d) / math.gamma(u))
        assert mgf.mgf_gamma_field(z, LAM, u, v, 0.0, b) == pytest.approx(ref, rel=1e-12)
    with pytest.raises(ValueError):
        mgf.mgf_gamma_field(1.0, LAM, 1, 1, 0.0, 2.0)


def test_intended_closed_forms(rng):
    geom = LinkGeometry(0.8, 3.5, LAM, 2)
    d1 = ArrayDims(3, 2, 2)
    for z in [0.1, 1.0, 10.0]:
        a = 1.5 / 2 * 0.8**-3.5
        assert mgf.mgf_dl_intended(z, geom, d1, 1.5, diversity=1) == pytest.approx(1 / (1 + z * a))
        assert mgf.mgf_ul_intended(z, geom, ArrayDims(4, 2, 2), 0.9) == pytest.approx(
            1 / (1 + z * 0.9 * 0.8**-3.5))
    dims = ArrayDims(12, 4, 3)
    g = rng.gamma(dims.d_dl, size=400_000)
    for z in [0.05, 0.5, 3.0]:
        a = 2.0 / 3 * 1.2**-4
        samples = np.exp(-z * a * g)
        ref = mgf.mgf_dl_intended(z, LinkGeometry(1.2, 4.0, LAM, 3), dims, 2.0)
        assert samples.mean() == pytest.approx(ref, abs=4 * samples.std() / math.sqrt(g.size))


def test_si_against_density_quadrature(rng):
    for _ in range(10):
        k, om = rng.uniform(0, 5), 10 ** rng.uniform(-2, 0)
        z, p = 10 ** rng.uniform(-1, 1), 10 ** rng.uniform(-1, 1)
        mu2, nu2 = k * om / (k + 1), om / (k + 1)

        def f(h):
            return (math.exp(-z * p * h) / nu2 * special.i0e(2 * math.sqrt(h * mu2) / nu2)
                    * math.exp(-(math.sqrt(h) - math.sqrt(mu2)) ** 2 / nu2))

        ref = integrate.quad(f, 0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)[0]
        assert mgf.mgf_si(z, p, RicianSI(k, om)) == pytest.approx(ref, abs=1e-8)
    assert mgf.mgf_si(2.0, 0.5, RicianSI(0.0, 0.3)) == pytest.approx(1 / (1 + 2 * 0.5 * 0.3))


@pytest.mark.parametrize("form", ["general", "engine"])
def test_dl_intercell_closed_equals_general(form, rng):
    for _ in range(20):
        z, r, p = 10 ** rng.uniform(-2, 2), 10 ** rng.uniform(-1, 1), 10 ** rng.uniform(-1, 1)
        g = LinkGeometry(r, 4.0, LAM, 1)
        a = mgf.mgf_dl_intercell(z, g, p, "closed")
        assert a == pytest.approx(mgf.mgf_dl_intercell(z, g, p, form), rel=1e-9)


@pytest.mark.parametrize("form", ["general", "engine"])
def test_ul_intercell_closed_equals_general(form, rng):
    for _ in range(20):
        z, r, p = 10 ** rng.uniform(-2, 2), 10 ** rng.uniform(-1, 1), 10 ** rng.uniform(-1, 1)
        g = LinkGeometry(r, 4.0, LAM, int(rng.integers(1, 6)))
        a = mgf.mgf_ul_intercell(z, p, g, "closed")
        assert a == pytest.approx(mgf.mgf_ul_intercell(z, p, g, form), rel=1e-9)


def test_general_forms_match_engine_other_beta(rng):
    for _ in range(30):
        u, b = int(rng.integers(1, 9)), rng.uniform(2.5, 5)
        r, z, p = 10 ** rng.uniform(-1, 1), 10 ** rng.uniform(-2, 2), 10 ** rng.uniform(-1, 1)
        g = LinkGeometry(r, b, LAM, u)
        assert mgf.mgf_dl_intercell(z, g, p, "general") == pytest.approx(
            mgf.mgf_dl_intercell(z, g, p, "engine"), rel=1e-9)
        assert mgf.mgf_ul_intercell(z, p, g, "general") == pytest.approx(
            mgf.mgf_ul_intercell(z, p, g, "engine"), rel=1e-9)


def test_closed_form_domain_errors():
    with pytest.raises(DomainError):
        mgf.mgf_dl_intercell(1.0, LinkGeometry(1, 4.0, LAM, 2), 1.0, "closed")
    with pytest.raises(DomainError):
        mgf.mgf_ul_intercell(1.0, 1.0, LinkGeometry(1, 3.0, LAM, 1), "closed")


def test_cross_specializations_of_engine(rng):
    for _ in range(20):
        u, b = int(rng.integers(1, 9)), rng.uniform(2.5, 5)
        z, p, p_d = 10 ** rng.uniform(-2, 2), 10 ** rng.uniform(-1, 1), 10 ** rng.uniform(-1, 1)
        g = LinkGeometry(1.0, b, LAM, u)
        # BS-to-BS: Gamma(U) marks at p_d / U^2, density lam, no exclusion
        assert mgf.mgf_ul_cross(z, g, p_d) == pytest.approx(
            mgf.mgf_gamma_field(z, LAM, u, p_d / u**2, 0.0, b), rel=1e-9)
        # MT-to-MT: exponential marks at p, density U lam, no exclusion
        assert mgf.mgf_dl_cross(z, p, g) == pytest.approx(
            mgf.mgf_gamma_field(z, u * LAM, 1.0, p, 0.0, b), rel=1e-9)


def test_cross_pl4_closed_forms():
    g1 = LinkGeometry(1.0, 4.0, LAM, 1)
    g3 = LinkGeometry(1.0, 4.0, LAM, 3)
    for z in [0.01, 1.0, 50.0]:
        assert mgf.mgf_ul_cross(z, g1, 2.0) == pytest.approx(
            math.exp(-math.pi**2 / 2 * LAM * math.sqrt(z * 2.0)), rel=1e-12)
        assert mgf.mgf_dl_cross(z, 0.6, g3) == pytest.approx(
            math.exp(-math.pi**2 / 2 * 3 * LAM * math.sqrt(z * 0.6)), rel=1e-12)
    vals = mgf.mgf_dl_cross(1.0, np.array([0.1, 1.0]), g3)
    assert vals.shape == (2,)


@pytest.mark.parametrize("form,pc,si", [
    ("unconditioned_no_si", PowerControlParams(0.5), RicianSI(0.0, 0.7)),
    ("unconditioned_no_comp", PowerControlParams(INF, 1.0, 2.0), RicianSI(0.0, 0.7)),
    ("unconditioned_rayleigh_pl4", PowerControlParams(0.5, 1.0, 2.0), RicianSI(0.0, 0.7)),
])
def test_unconditioned_cross_against_power_quadrature(form, pc, si):
    g = LinkGeometry(1.0, 4.0, LAM, 2)
    for z in [0.05, 1.0, 5.0, 40.0]:
        ref, _ = powerctl.power_expectation(lambda p: mgf.mgf_dl_cross(z, p, g), pc, LAM, si, 4.0,
                                            powerctl.QuadSpec(rel_tol=1e-11), tail=1e-14)
        assert mgf.mgf_dl_cross(z, None, g, form, pc, si) == pytest.approx(ref, rel=1e-7)


def test_unconditioned_domain_errors():
    g = LinkGeometry(1.0, 4.0, LAM, 2)
    with pytest.raises(DomainError):
        mgf.mgf_dl_cross(1.0, None, g, "unconditioned_no_si", PowerControlParams(0.5, 1.0, 2.0))
    with pytest.raises(DomainError):
        mgf.mgf_dl_cross(1.0, None, g, "unconditioned_no_comp", PowerControlParams(INF, 1.0, 2.0),
                         RicianSI(1.0, 0.7))
    with pytest.raises(DomainError):
        mgf.mgf_dl_cross(1.0, None, LinkGeometry(1.0, 3.0, LAM, 2), "unconditioned_no_si",
                         PowerControlParams(0.5))


# --- PPP Monte-Carlo oracles -------------------------------------------------

def ppp_annulus_sums(rng, lam, shape, scale, r_in, r_out, beta, n):
    counts = rng.poisson(lam * math.pi * (r_out**2 - r_in**2), n)
    total = counts.sum()
    radii = np.sqrt(rng.uniform(r_in**2, r_out**2, total))
    marks = rng.gamma(shape, scale, total)
    contrib = marks * radii**-beta
    owner = np.repeat(np.arange(n), counts)
    return np.bincount(owner, weights=contrib, minlength=n)


def check_against_mc(sums, analytic, zs):
    # analytic(z) is the m.g.f. restricted to the simulated annulus
    for z in zs:
        x = np.exp(-z * sums)
        se = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - analytic(z)) <= 3 * se + 1e-12, z


R_OUT = 8.0
ZS = np.logspace(-1.5, 1.5, 10)


def test_gamma_field_mc():
    lam, u, v, e, b = 4 / math.pi, 4, 1.0, 0.5, 4.0
    sums = ppp_annulus_sums(np.random.default_rng(1), lam, u, v, e, R_OUT, b, 100_000)

    def ana(z):
        return mgf.mgf_gamma_field(z, lam, u, v, e, b) / mgf.mgf_gamma_field(z, lam, u, v, R_OUT, b)

    check_against_mc(sums, ana, [2.0] + list(ZS))


def test_dl_intercell_mc():
    lam, u, p_d, r, b = 0.5, 3, 2.0, 0.7, 3.6
    g = LinkGeometry(r, b, lam, u)
    sums = ppp_annulus_sums(np.random.default_rng(2), lam, u, p_d / u, r, R_OUT, b, 100_000)

    def ana(z):
        return (mgf.mgf_dl_intercell(z, g, p_d, "general")
                / mgf.mgf_gamma_field(z, lam, u, p_d / u, R_OUT, b))

    check_against_mc(sums, ana, ZS)


def test_ul_intercell_mc():
    lam, u, p, r, b = 0.5, 2, 0.8, 0.6, 4.0
    g = LinkGeometry(r, b, lam, u)
    sums = ppp_annulus_sums(np.random.default_rng(3), u * lam, 1.0, p, r, R_OUT, b, 100_000)

    def ana(z):
        return mgf.mgf_ul_intercell(z, p, g, "closed") / mgf.mgf_gamma_field(z, u * lam, 1.0, p, R_OUT, b)

    check_against_mc(sums, ana, ZS)
