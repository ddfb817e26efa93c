import math

import numpy as np
import pytest

import afcmem

DEV1 = dict(kappa_ext=991e6, kappa_loss=119e6, kappa_ions=1778e6)


def test_version():
    assert afcmem.__version__.count(".") == 2


def test_critical_coupling_zero():
    p = afcmem.CavityParams(kappa_ext=500e6, kappa_loss=200e6)
    assert abs(afcmem.field_transmission(p, 300e6, 0.0)) < 1e-12


def test_on_resonance_transmission_matches_closed_form():
    p = afcmem.CavityParams(**DEV1)
    t = afcmem.field_transmission(p, p.kappa_ions, 0.0)
    assert t == pytest.approx(1 - 2 * 991 / 2888, abs=1e-12)


def test_fano_round_trip_recovers_linewidth():
    p = afcmem.CavityParams(**DEV1)
    kt = p.kappa_total
    det = np.linspace(-6 * kt, 6 * kt, 961)
    power = afcmem.power_transmission(p, det, 0.0)
    r = afcmem.fano_extract(det, power)
    assert r["fwhm"] == pytest.approx(kt, rel=1e-3)
    assert r["q_loaded"] == pytest.approx(195.69e12 / kt, rel=1e-3)


def test_closed_form_efficiency_and_sweep():
    p = afcmem.CavityParams(**DEV1)
    e = afcmem.afc_efficiency(p, afcmem.CombSpec())
    assert 0.24 <= e["eta"] <= 0.25
    grid = np.arange(1.5, 12.0, 0.01)
    s = afcmem.sweep_finesse(p, afcmem.CombSpec(), grid)
    assert s["eta"].shape == grid.shape
    assert s["peak"] == pytest.approx(s["eta"].max())


def test_store_echo_near_closed_form():
    p = afcmem.CavityParams(**DEV1)
    comb = afcmem.CombSpec(n_teeth=41)
    r = afcmem.store(p, comb, n=8192)
    analytic = afcmem.afc_efficiency(p, comb)["eta"]
    assert r["eta"] == pytest.approx(analytic, rel=0.1)
    t_peak = r["t"][np.argmax(np.abs(r["field"][r["t"] > 90e-9]) ** 2) + np.count_nonzero(r["t"] <= 90e-9)]
    assert abs(t_peak - 140e-9) < 8e-9


def test_witness_with_measured_inputs():
    w, sigma = afcmem.witness((4.54, 0.30), (0.5117, 0.0119), (0.5130, 0.0121))
    assert w == pytest.approx(-0.1033, abs=1e-3)
    assert sigma > 0


def test_exp_decay_fit():
    x = np.linspace(0, 900, 31)
    y = 0.8 * np.exp(-x / 277.6)
    r = afcmem.fit("exp_decay", x, y, [1.0, 100.0])
    assert r["converged"]
    assert r["params"]["tau"] == pytest.approx(277.6, rel=1e-6)


def test_crosstalk_oracle():
    chi = afcmem.lorentzian_crosstalk(543e6, 2.69e9)
    half = 543e6 / 2
    assert chi == pytest.approx((half**2 / (half**2 + 2.69e9**2)) ** 2, rel=1e-12)


def test_optimize_field_inside_range():
    b = afcmem.optimize_field(10e6, 1.5, 2.2)
    assert 1.5 <= b <= 2.2
    assert math.isfinite(b)


def test_invalid_parameters_raise_with_code():
    with pytest.raises(afcmem.AfcmemError) as info:
        afcmem.CavityParams(kappa_ext=-1.0, kappa_loss=1.0)
    assert info.value.code == "NegativeRate"
    with pytest.raises(afcmem.AfcmemError):
        afcmem.fit("nonsense", [0.0, 1.0], [1.0, 2.0], [1.0])
