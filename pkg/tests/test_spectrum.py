import numpy as np
import pytest

from rtndd.noise import Fluctuator, analytic_spectrum, ensemble_mean, ensemble_variance
from rtndd.spectrum import (
    OneOverFWindowNotFound,
    SpectrumEstimate,
    estimate_effective_cutoffs,
    fit_loglog_slope,
    synthesize_trace,
    welch_spectrum,
)


def test_frozen_fluctuator_constant_trace():
    f = Fluctuator(v=2.0, gamma=1e-12, delta_p_eq=0.0)
    tr = synthesize_trace([f], 0.1, 200, 1, init_mode=1)
    assert np.allclose(tr, 1.0)  # xi = s v/2 = +1


def test_trace_moments_match_master_equation():
    fls = [Fluctuator(v=1.0, gamma=2.0, delta_p_eq=0.3),
           Fluctuator(v=0.5, gamma=0.5, delta_p_eq=0.3)]
    n = 400_000
    dt = 0.05
    tr = synthesize_trace(fls, dt, n, 7)
    mean_o = ensemble_mean(fls)
    var_o = ensemble_variance(fls)
    # correlated samples: effective sample count ~ T / (2 tau_c)
    n_eff = n * dt * 0.5 / 2
    assert abs(tr.mean() - mean_o) < 3 * np.sqrt(var_o / n_eff)
    assert abs(tr.var() - var_o) / var_o < 0.05


def test_trace_autocorrelation_rate():
    # stationary RTN autocovariance is var * exp(-gamma |tau|)
    f = Fluctuator(v=2.0, gamma=1.0, delta_p_eq=0.2)
    dt, n = 0.02, 2_000_000
    tr = synthesize_trace([f], dt, n, 11)
    x = tr - tr.mean()
    lags = np.arange(1, 40)
    ac = np.array([np.dot(x[:-l], x[l:]) / (n - l) for l in lags])
    slope = np.polyfit(lags * dt, np.log(ac), 1)[0]
    assert abs(-slope - f.gamma) / f.gamma < 0.05


def test_welch_sinusoid_peak():
    dt = 0.1
    n = 64 * 1024
    t = dt * np.arange(n)
    w0 = 2 * np.pi * 0.7
    est = welch_spectrum(np.sin(w0 * t), dt, 64)
    assert est.omegas[np.argmax(est.s_hat)] == pytest.approx(w0, rel=0.02)


def test_welch_matches_lorentzian_per_bin():
    f = Fluctuator(v=2.0, gamma=1.0, delta_p_eq=0.0)
    dt = 0.05
    n_seg, seg = 1024, 2048
    tr = synthesize_trace([f], dt, n_seg * seg, 13)
    est = welch_spectrum(tr, dt, n_seg)
    sel = (est.omegas >= 0.1) & (est.omegas <= 10.0)
    s_ref = analytic_spectrum([f], est.omegas[sel])
    rel = np.abs(est.s_hat[sel] - s_ref) / s_ref
    assert np.max(rel) < 0.15


def test_welch_kolmogorov_log_ratio():
    f = Fluctuator(v=2.0, gamma=1.0, delta_p_eq=0.0)
    dt = 0.05
    tr = synthesize_trace([f], dt, 512 * 2048, 17)
    est = welch_spectrum(tr, dt, 512)
    sel = (est.omegas >= 0.2) & (est.omegas <= 5.0)
    ratio = np.log(est.s_hat[sel] / analytic_spectrum([f], est.omegas[sel]))
    assert np.max(np.abs(ratio)) < 0.2


def test_welch_parseval():
    # band-resolvable ensemble: integrated density recovers the variance
    fls = [Fluctuator(v=1.0, gamma=2.0, delta_p_eq=0.1),
           Fluctuator(v=0.7, gamma=8.0, delta_p_eq=0.1)]
    dt = 0.01
    tr = synthesize_trace(fls, dt, 128 * 4096, 19)
    est = welch_spectrum(tr, dt, 128)
    var = np.var(tr)
    assert abs(est.integrated_variance() - var) / var < 0.05


def test_welch_error_scales_with_segments():
    f = Fluctuator(v=2.0, gamma=1.0, delta_p_eq=0.0)
    dt = 0.05
    tr = synthesize_trace([f], dt, 256 * 1024, 23)
    rms = {}
    for n_seg in (64, 256):
        est = welch_spectrum(tr[: n_seg * 1024], dt, n_seg)
        sel = (est.omegas >= 0.2) & (est.omegas <= 5.0)
        ref = analytic_spectrum([f], est.omegas[sel])
        rms[n_seg] = np.sqrt(np.mean((est.s_hat[sel] / ref - 1) ** 2))
    # fourfold averaging halves the relative error
    assert abs(rms[64] / rms[256] / 2 - 1) < 0.35


def test_welch_input_validation():
    with pytest.raises(ValueError):
        welch_spectrum(np.zeros(10), 0.1, 20)  # shorter than one segment
    with pytest.raises(ValueError):
        welch_spectrum(np.zeros(3 * 100), 0.1, 3)  # 100 not a power of two


def _synthetic_estimate(omegas, values):
    return SpectrumEstimate(omegas=omegas, s_hat=values, n_segments=1, dt_sample=1.0)


def test_fit_slope_exact_power_law():
    w = np.logspace(-3, 2, 400)
    est = _synthetic_estimate(w, 7.0 / w)
    slope, err = fit_loglog_slope(est, 1e-3, 1e2)
    assert slope == pytest.approx(-1.0, abs=1e-12)
    assert err < 1e-12


def test_fit_slope_lorentzian_tail():
    w = np.logspace(2, 3, 200)  # omega >> gamma = 1
    est = _synthetic_estimate(w, analytic_spectrum([Fluctuator(v=2.0, gamma=1.0)], w))
    slope, _ = fit_loglog_slope(est, w[0], w[-1])
    assert slope == pytest.approx(-2.0, abs=1e-4)


def test_fit_slope_needs_bins():
    w = np.logspace(-1, 1, 50)
    est = _synthetic_estimate(w, 1.0 / w)
    with pytest.raises(ValueError):
        fit_loglog_slope(est, 1.0, 1.1)


def test_cutoffs_full_range_for_pure_power_law():
    w = np.logspace(-3, 2, 600)
    est = _synthetic_estimate(w, 4.0 / w)
    lo, hi = estimate_effective_cutoffs(est)
    # edges are window centers: half a decade inside the data range
    assert lo <= 10 ** (-3 + 0.55) and hi >= 10 ** (2 - 0.55)


def test_cutoffs_not_found_for_single_lorentzian():
    w = np.logspace(-3, 2, 600)
    est = _synthetic_estimate(w, analytic_spectrum([Fluctuator(v=2.0, gamma=0.3)], w))
    with pytest.raises(OneOverFWindowNotFound):
        estimate_effective_cutoffs(est)


def test_cutoffs_need_three_decades():
    w = np.logspace(-1, 1, 100)
    est = _synthetic_estimate(w, 1.0 / w)
    with pytest.raises(ValueError):
        estimate_effective_cutoffs(est)


def test_cutoffs_locate_upper_rolloff():
    # analytic ensemble spectrum: the 1/f window ends near gamma_max / 10
    from rtndd.noise import EnsembleSpec, sample_ensemble

    spec = EnsembleSpec(gamma_min=1e-4, gamma_max=100.0, n_d=200, v_mean=0.01,
                        v_sd=0.002, delta_p_eq=0.08)
    ens = sample_ensemble(spec, np.random.default_rng(29))
    w = np.logspace(-3, 2.4, 800)
    est = _synthetic_estimate(w, analytic_spectrum(ens, w))
    lo, hi = estimate_effective_cutoffs(est)
    assert 5.0 <= hi <= 20.0  # within a factor 2 of 10
    assert lo >= spec.gamma_min and hi <= spec.gamma_max


def test_trace_input_validation():
    f = Fluctuator(v=1.0, gamma=1.0)
    with pytest.raises(ValueError):
        synthesize_trace([f], -0.1, 10, 1)
    with pytest.raises(ValueError):
        synthesize_trace([f], 0.1, 0, 1)
    with pytest.raises(ValueError):
        synthesize_trace([f], 0.1, 10, 1, init_mode="up")
