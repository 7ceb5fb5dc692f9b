import math

import numpy as np
import pytest

from fdmimo import se
from fdmimo.mgf import ArrayDims
from fdmimo.powerctl import PowerControlParams, RicianSI
from fdmimo.se import NetworkConfig, dbm_to_mw
from fdmimo.specfun import DomainError, QuadSpec

INF = math.inf
SPEC = QuadSpec(rel_tol=1e-6)


def small_cfg(**kw):
    base = dict(lambda_d=4 / math.pi, dims=ArrayDims(8, 2, 2), p_d=dbm_to_mw(30.0),
                pc=PowerControlParams(dbm_to_mw(-80.0), 1.0, INF, dbm_to_mw(23.0)),
                si_mt=RicianSI(1.0, 1e-8))
    base.update(kw)
    return NetworkConfig(**base)


def test_unit_helpers():
    assert dbm_to_mw(30.0) == pytest.approx(1000.0)
    assert se.noise_mw(20e6, 10.0) == pytest.approx(dbm_to_mw(-170 + 10 * math.log10(20e6) + 10))
    cfg = small_cfg()
    assert cfg.lam == pytest.approx(4 / math.pi * 1e-6)
    assert cfg.sigma2_dl == cfg.sigma2_ul > 0
    assert small_cfg(interference_limited=True).sigma2_dl == 0.0
    with pytest.raises(ValueError):
        small_cfg(beta=2.0)


def test_units_and_report():
    cfg = small_cfg()
    bits = se.se_dl(cfg, SPEC, units="bits")
    nats = se.se_dl(cfg, SPEC, units="nats")
    assert bits.value == pytest.approx(nats.value * se.LOG2E, rel=1e-12)
    assert bits.converged and bits.error <= 1e-4 * bits.value
    rep = se.se_report(cfg, SPEC)
    assert rep.sum_fd == pytest.approx(2 * (rep.se_dl + rep.se_ul))
    assert rep.sum_hd == pytest.approx(rep.se_dl_hd + rep.se_ul_hd)
    assert rep.gain == pytest.approx(rep.sum_fd / rep.sum_hd)
    assert min(rep.se_dl, rep.se_ul, rep.se_dl_hd, rep.se_ul_hd) >= 0


def test_noise_dominated_se_vanishes():
    cfg = small_cfg(noise_dl=1e12, noise_ul=1e12)
    assert se.se_dl(cfg, SPEC).value < 1e-6
    assert se.se_ul(cfg, SPEC).value < 1e-6


def test_se_non_increasing_in_omega():
    vals = [se.se_dl(small_cfg(si_mt=RicianSI(1.0, 10 ** (om / 10))), SPEC).value
            for om in (-110, -95, -80, -65, -50)]
    assert np.all(np.diff(vals) <= 1e-9)
    assert vals[0] > vals[-1]


@pytest.mark.parametrize("link", ["dl", "ul"])
def test_se_non_increasing_in_noise(link):
    fn = se.se_dl if link == "dl" else se.se_ul
    vals = [fn(small_cfg(noise_dl=n, noise_ul=n), SPEC).value
            for n in (1e-12, 1e-10, 1e-8, 1e-6, 1e-4)]
    assert np.all(np.diff(vals) <= 1e-9)


def test_hd_ignores_si():
    a = se.se_dl(small_cfg(si_mt=RicianSI(1.0, 1e-5)), SPEC, duplex="hd").value
    b = se.se_dl(small_cfg(si_mt=RicianSI(1.0, 1e-11)), SPEC, duplex="hd").value
    assert a == pytest.approx(b, rel=1e-9)


def test_invalid_link_arguments():
    with pytest.raises(ValueError):
        se.se_dl(small_cfg(), SPEC, duplex="xd")


# --- reduced SISO expressions -----------------------------------------------

def siso_cfg(pc, perfect):
    return NetworkConfig(4 / math.pi, ArrayDims(1, 1, 1), dbm_to_mw(43.0), pc, RicianSI(0.0, 1e-8),
                         interference_limited=True, perfect_si=perfect)


SISO_LAWS = {
    "general_si": PowerControlParams(dbm_to_mw(-80.0), 1.0, INF, dbm_to_mw(23.0)),
    "no_si": PowerControlParams(dbm_to_mw(-80.0), 1.0, 1e-6, dbm_to_mw(23.0)),
    "no_comp": PowerControlParams(INF, 1.0, 1e-5, INF),
    "no_cap": PowerControlParams(dbm_to_mw(-80.0), 1.0, INF, INF),
}


def siso_pairs():
    for case in se.SISO_CASES:
        key = case if case in SISO_LAWS else case.rsplit("_", 1)[0]
        cfg = siso_cfg(SISO_LAWS[key], perfect=case != "general_si")
        links = ("dl", "ul") if case in ("general_si", "no_si") else (case[-2:],)
        for link in links:
            yield case, link, cfg


@pytest.mark.parametrize("case,link,cfg", list(siso_pairs()),
                         ids=[f"{c}-{l}" for c, l, _ in siso_pairs()])
def test_siso_reductions_match_pipeline(case, link, cfg):
    arg = link if case in ("general_si", "no_si") else None
    red = se.se_siso_special(case, cfg, arg, units="nats")
    full = (se.se_dl if link == "dl" else se.se_ul)(cfg, SPEC, units="nats")
    assert red.value == pytest.approx(full.value, rel=1e-3)


def test_siso_case_mismatch():
    cfg = siso_cfg(SISO_LAWS["no_cap"], perfect=True)
    with pytest.raises(DomainError):
        se.se_siso_special("no_comp_dl", cfg)
    with pytest.raises(DomainError):
        se.se_siso_special("general_si", cfg, "dl")
    with pytest.raises(DomainError):
        se.se_siso_special("no_si", small_cfg(perfect_si=True, interference_limited=True), "dl")


# --- baseline-SISO FD vs HD -------------------------------------------------

def test_siso_symmetry(rng):
    for x in 10 ** rng.uniform(-1.5, 1.5, 20):
        a = se.fd_hd_siso(x).s_fd
        b = se.fd_hd_siso(1 / x).s_fd
        assert abs(a - b) <= 1e-9


def test_bounded_below_exact_in_window():
    lo, hi = se.BOUND_WINDOW
    for x in np.linspace(lo * 1.001, hi * 0.999, 25):
        c = se.fd_hd_siso(x)
        assert c.bounds_valid
        assert c.s_fd_bounded <= c.s_fd and c.s_hd_bounded <= c.s_hd


def test_bounds_flagged_outside_window():
    c = se.fd_hd_siso(0.1)
    assert not c.bounds_valid and c.s_fd > 0


def test_psi_bound_closed_form():
    assert 2 * se.psi_bound(8 / math.pi - 1) == pytest.approx(se.siso_bounded_hd())
    assert se.siso_bounded_fd(1.0) / se.siso_bounded_hd() == pytest.approx(1.13005, abs=1e-5)


def test_exact_optimum_symmetric():
    opt = se.optimize_power_ratio()
    assert opt.unimodal
    assert opt.x_star_exact == pytest.approx(1.0, abs=1e-3)


# --- massive-MIMO FD vs HD ----------------------------------------------------

def test_mimo_reduced_equals_general():
    a = se.fd_hd_mimo((8, 8), 1, reduced=True)
    b = se.fd_hd_mimo((8, 8), 1, reduced=False)
    assert a.s_fd == pytest.approx(b.s_fd, rel=1e-9)
    assert a.s_hd == pytest.approx(b.s_hd, rel=1e-9)


def test_mimo_gain_monotone_on_grid():
    ns, us = (64, 128, 256, 512), (1, 2, 4, 8)
    g = np.array([[se.fd_hd_mimo(n, u).gain for u in us] for n in ns])
    assert np.all(np.diff(g, axis=0) > 0)
    assert np.all(np.diff(g, axis=1) < 0)
    assert np.all((g > 1) & (g < 2))


@pytest.mark.xfail(strict=True, reason="gain grows logarithmically: 1.574 at N = 4096")
def test_mimo_gain_near_two_at_4096():
    assert se.fd_hd_mimo(4096, 1).gain > 1.9


def test_nlcf_law():
    assert se.nlcf_gain(100, 1) == pytest.approx(2 - 0.9 * 100**-0.1, rel=1e-15)
    assert se.nlcf_gain(100, 1) == pytest.approx(1.43214, abs=1e-5)
    assert se.nlcf_gain(64, 8) == pytest.approx(2 - 0.9 * 8**0.16 / 64**0.1, rel=1e-15)
    assert se.nlcf_gain(1e30, 4) == pytest.approx(2.0, abs=1e-2)
    with pytest.raises(ValueError):
        se.nlcf_gain(2, 4)
