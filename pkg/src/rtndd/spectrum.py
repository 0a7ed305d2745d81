"""Noise-trace synthesis, spectral estimation, and 1/f diagnostics.

Spectra use the two-sided angular-frequency convention: S(omega) is the
Fourier transform of the autocovariance over dtau, so integrating S over
omega and dividing by 2*pi recovers the variance.  This matches
noise.analytic_spectrum pointwise.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from .noise import FluctuatorArrays, ensemble_mean, ensemble_variance
from .rng import trace_stream

TRACE_CHUNK_EVENTS = 4_000_000


class OneOverFWindowNotFound(RuntimeError):
    """No contiguous band with local log-log slope near -1 was found."""


@dataclass
class SpectrumEstimate:
    """Averaged periodogram with optional slope/cutoff annotations."""

    omegas: np.ndarray
    s_hat: np.ndarray
    n_segments: int
    dt_sample: float
    slope: float | None = None
    slope_err: float | None = None
    cutoffs: tuple[float, float] | None = None

    def integrated_variance(self) -> float:
        """integral of S over all omega / (2 pi); estimates the trace variance.

        Only positive-frequency bins are stored; the density is two-sided and
        symmetric, hence the factor 2.
        """
        return float(2 * np.trapezoid(self.s_hat, self.omegas) / (2 * np.pi))


def synthesize_trace(
    ensemble: list,
    dt_sample: float,
    n_samples: int,
    rng_or_seed,
    init_mode: str | int = "thermal",
) -> np.ndarray:
    """Sample Xi(t) on a uniform grid with exact event-driven switching.

    With init_mode='thermal' (default) fluctuators start in the stationary
    mixture, which makes the trace stationary from t = 0; switching between
    sample points is resolved exactly, never discretized.  Accepts a
    Generator or an integer seed.
    """
    if dt_sample <= 0:
        raise ValueError("dt_sample must be > 0")
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = rng_or_seed if isinstance(rng_or_seed, np.random.Generator) else trace_stream(int(rng_or_seed))
    arr = FluctuatorArrays(ensemble)
    t_end = n_samples * dt_sample
    sample_times = dt_sample * np.arange(1, n_samples + 1)
    if init_mode == "thermal":
        s = np.where(rng.random(arr.m) < arr.p_plus, 1.0, -1.0)
    elif init_mode in (1, -1):
        s = np.full(arr.m, float(init_mode))
    else:
        raise ValueError(f"init_mode must be 'thermal' or +-1, got {init_mode!r}")
    xi0 = float(np.dot(s, arr.v) / 2)
    exit_rate = np.where(s > 0, arr.gamma_minus, arr.gamma_plus)
    next_flip = rng.exponential(1.0 / exit_rate)

    out = np.empty(n_samples)
    total_rate = float(arr.gamma.sum())
    chunk_t = max(dt_sample, TRACE_CHUNK_EVENTS / max(total_rate, 1e-300))
    t0 = 0.0
    xi_cur = xi0
    pos = 0
    while pos < n_samples:
        t1 = min(t_end, t0 + chunk_t)
        ev_t = []
        ev_dxi = []
        for k in range(arr.m):
            tk = next_flip[k]
            if tk > t1:
                continue
            flips = [tk]
            sk = s[k]
            while True:
                sk = -sk
                rate = arr.gamma_minus[k] if sk > 0 else arr.gamma_plus[k]
                tk = tk + rng.exponential(1.0 / rate)
                if tk > t1:
                    break
                flips.append(tk)
            nfl = len(flips)
            ev_t.append(np.asarray(flips))
            ev_dxi.append(arr.v[k] * s[k] * np.where(np.arange(1, nfl + 1) % 2 == 1, -1.0, 1.0))
            s[k] = s[k] * (1 if nfl % 2 == 0 else -1)
            next_flip[k] = tk
        hi = np.searchsorted(sample_times, t1, side="right")
        times_chunk = sample_times[pos:hi]
        if ev_t:
            et = np.concatenate(ev_t)
            ed = np.concatenate(ev_dxi)
            order = np.argsort(et)
            et = et[order]
            xi_steps = xi_cur + np.cumsum(ed[order])
            idx = np.searchsorted(et, times_chunk, side="right")
            out[pos:hi] = np.where(idx == 0, xi_cur, xi_steps[np.maximum(idx - 1, 0)])
            xi_cur = float(xi_steps[-1])
        else:
            out[pos:hi] = xi_cur
        pos = hi
        t0 = t1
    return out


def welch_spectrum(trace: np.ndarray, dt_sample: float, n_segments: int) -> SpectrumEstimate:
    """Mean-removed, Hann-windowed, segment-averaged power density.

    The trace is split into n_segments non-overlapping segments whose length
    must be a power of two.  Returns positive-frequency bins of the two-sided
    density (no one-sided doubling), directly comparable to analytic_spectrum.
    """
    trace = np.asarray(trace, dtype=float)
    if n_segments < 1:
        raise ValueError("n_segments must be >= 1")
    nper = trace.size // n_segments
    if nper < 2:
        raise ValueError("trace shorter than one segment")
    if nper & (nper - 1):
        raise ValueError(f"segment length must be a power of two, got {nper}")
    freqs, psd = scipy.signal.welch(
        trace[: nper * n_segments],
        fs=1.0 / dt_sample,
        window="hann",
        nperseg=nper,
        noverlap=0,
        detrend="constant",
        return_onesided=False,
        scaling="density",
    )
    # two-sided per-Hz density relabeled to angular frequency: S(omega)=S_f(omega/2pi)
    pos = freqs > 0
    order = np.argsort(freqs[pos])
    return SpectrumEstimate(
        omegas=2 * np.pi * freqs[pos][order],
        s_hat=psd[pos][order],
        n_segments=n_segments,
        dt_sample=dt_sample,
    )


def fit_loglog_slope(
    estimate: SpectrumEstimate, omega_lo: float, omega_hi: float
) -> tuple[float, float]:
    """Least-squares slope of log s_hat vs log omega on [omega_lo, omega_hi]."""
    sel = (estimate.omegas >= omega_lo) & (estimate.omegas <= omega_hi) & (estimate.s_hat > 0)
    if sel.sum() < 10:
        raise ValueError(f"need >= 10 bins in the fit window, have {int(sel.sum())}")
    x = np.log(estimate.omegas[sel])
    y = np.log(estimate.s_hat[sel])
    (slope, intercept), cov = np.polyfit(x, y, 1, cov=True)
    return float(slope), float(np.sqrt(cov[0, 0]))


def _local_slopes(estimate: SpectrumEstimate, window_decades: float = 1.0):
    """Local log-log slope from a sliding fit one decade wide."""
    sel = estimate.s_hat > 0
    x = np.log10(estimate.omegas[sel])
    y = np.log10(estimate.s_hat[sel])
    centers = []
    slopes = []
    lo = x[0]
    hi = x[-1]
    step = window_decades / 8
    c = lo + window_decades / 2
    while c <= hi - window_decades / 2 + 1e-12:
        m = (x >= c - window_decades / 2) & (x <= c + window_decades / 2)
        if m.sum() >= 4:
            p = np.polyfit(x[m], y[m], 1)
            centers.append(c)
            slopes.append(p[0])
        c += step
    return np.array(centers), np.array(slopes)


def estimate_effective_cutoffs(
    estimate: SpectrumEstimate, band: tuple[float, float] = (-1.1, -0.9)
) -> tuple[float, float]:
    """Edges of the largest contiguous window whose decade-smoothed local
    slope stays inside `band`; these are the effective 1/f cutoffs.

    The reported edges are the outermost qualifying window centers (each
    center summarizes a one-decade fit around it).  Raises
    OneOverFWindowNotFound when no window at least one decade wide qualifies.
    """
    span = np.log10(estimate.omegas[-1] / estimate.omegas[0])
    if span < 3:
        raise ValueError("cutoff estimation needs a spectrum spanning >= 3 decades")
    centers, slopes = _local_slopes(estimate)
    ok = (slopes >= band[0]) & (slopes <= band[1])
    best = (0, -1, -1)  # length, start, end
    i = 0
    while i < ok.size:
        if not ok[i]:
            i += 1
            continue
        j = i
        while j + 1 < ok.size and ok[j + 1]:
            j += 1
        if j - i > best[0]:
            best = (j - i, i, j)
        i = j + 1
    if best[1] < 0 or centers[best[2]] - centers[best[1]] < 1.0:
        raise OneOverFWindowNotFound("no decade-wide window with slope near -1")
    return 10 ** centers[best[1]], 10 ** centers[best[2]]
