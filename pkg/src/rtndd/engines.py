"""Vectorized Monte Carlo engines behind run_ensemble.

Two exact trajectory engines:

* run_dephasing (Delta = 0): each trajectory's coherence is a pure phase,
  a functional of integrals of Xi(t) between breakpoints.  Per fluctuator,
  all trajectories' switch times are generated at once and binned to the
  breakpoints with two weighted histograms; there is no per-event loop.
  Identity used: integral of Xi over [0, b] = b * Xi(b) - sum_{flips<=b}
  dXi * t_flip, with Xi(b) accumulated from the same histogram.

* run_general (any Delta): lockstep loop over uniformized switch events.
  Every fluctuator k emits candidate events at rate U_k = max(rate_in,
  rate_out); a candidate flips its fluctuator with probability
  exit_rate/U_k (thinning, exact).  All trajectories advance one candidate
  per iteration; segment boundaries regenerate the exponential clock, which
  is exact by memorylessness.

Both engines work in fixed-size trajectory blocks with block-derived
streams, so results are bit-identical at any worker count.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .noise import FluctuatorArrays
from .rng import block_stream
from .su2 import su2_matrix

DEPHASING_BLOCK = 4096
GENERAL_BLOCK = 4096
_CHUNK_FLOATS = 1 << 23  # per-temporary budget in the dephasing histogrammer
_BUDGET_SIGMAS = 10.0
_RNG_CHUNK = 256


def _merge_stats(blocks):
    """Chan merge of (n, mean, m2) tuples, two at a time in block order."""
    n, mean, m2 = blocks[0]
    for nb, mb, m2b in blocks[1:]:
        tot = n + nb
        delta = mb - mean
        mean = mean + delta * (nb / tot)
        m2 = m2 + m2b + delta**2 * (n * nb / tot)
        n = tot
    return n, mean, m2


def _batch_stats(samples: np.ndarray):
    """(n, mean, m2) over axis 0."""
    n = samples.shape[0]
    mean = samples.mean(axis=0)
    m2 = ((samples - mean) ** 2).sum(axis=0)
    return n, mean, m2


def _finalize(blocks):
    n, mean, m2 = _merge_stats(blocks)
    if n > 1:
        sem = np.sqrt(m2 / (n - 1) / n)
    else:
        sem = np.zeros_like(mean)
    return mean, sem


def _block_sizes(n_traj: int, block: int):
    sizes = []
    left = n_traj
    while left > 0:
        sizes.append(min(block, left))
        left -= sizes[-1]
    return sizes


def _run_blocks(worker, payloads, workers: int):
    if workers > 1 and len(payloads) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(worker, payloads))
    else:
        blocks = [worker(p) for p in payloads]
    return _finalize(blocks)


# ---------------------------------------------------------------------------
# breakpoint layout shared by both engines
# ---------------------------------------------------------------------------


def _breakpoints(schedule, grid):
    """Sorted union of pulse and sample times with flags.

    Returns (bp, pulse_sign_at_bp (0 when none), grid_index_at_bp (-1 when
    none), eta_interval, parity_after).  A pulse coinciding with a sample is
    applied before the sample is recorded.
    """
    grid = np.asarray(grid, dtype=float)
    bp = np.union1d(schedule.pulse_times, grid)
    signs = np.zeros(bp.size, dtype=np.int64)
    if schedule.pulse_times.size:
        pos = np.searchsorted(bp, schedule.pulse_times)
        signs[pos] = schedule.pulse_signs
    gidx = np.full(bp.size, -1, dtype=np.int64)
    gidx[np.searchsorted(bp, grid)] = np.arange(grid.size)
    eta = schedule.eta_between(bp)
    parity = schedule.parity(bp)
    return bp, signs, gidx, eta, parity


# ---------------------------------------------------------------------------
# dephasing engine
# ---------------------------------------------------------------------------


def _lattice_lut(bp: np.ndarray, nb: int):
    """Uniform-lattice shortcut for binning flip times to breakpoints.

    When all breakpoints sit on a uniform lattice of pitch h, a flip time
    maps to its breakpoint bin with one multiply and one table lookup
    instead of a binary search.  Returns (inv_h, lut) or None.
    """
    pos = bp[bp > 0]
    if pos.size == 0:
        return None
    diffs = np.diff(np.concatenate(([0.0], pos)))
    h = diffs[diffs > 1e-15 * pos[-1]].min()
    ratio = pos / h
    if not np.allclose(ratio, np.round(ratio), rtol=0, atol=1e-6):
        return None
    n_lat = int(round(pos[-1] / h))
    if n_lat > 8_000_000:
        return None
    lat_times = h * np.arange(n_lat + 1)
    lut = np.searchsorted(bp, lat_times - h * 1e-9, side="left").astype(np.int64)
    # times beyond the last breakpoint overflow to the discard bin
    lut = np.concatenate((lut, [nb]))
    return 1.0 / h, lut


def _bin_times(times: np.ndarray, bp: np.ndarray, nb: int, lut):
    if lut is None:
        return np.searchsorted(bp, times, side="left")
    inv_h, table = lut
    m = np.ceil(times * inv_h - 1e-9).astype(np.int64)
    np.clip(m, 0, table.size - 1, out=m)
    return table[m]


def _telegraph_histograms(rng, nt, v, gp, gm, p_plus, t_end, bp, nb, lut, dxi_acc, dxt_acc, xi0_acc):
    """Accumulate one fluctuator's flip histograms for nt trajectories.

    Adds sum(dXi) and sum(dXi * t_flip) per (trajectory, breakpoint bin) into
    the accumulators, and the initial signal value into xi0_acc.
    """
    rate_max = max(gp, gm)
    lam = rate_max * t_end
    m_budget = int(lam + _BUDGET_SIGMAS * math.sqrt(lam) + 8)
    rows_per_chunk = max(1, int(_CHUNK_FLOATS // max(m_budget, 1)))
    col_sign = np.where(np.arange(m_budget) % 2 == 0, -1.0, 1.0)
    start = 0
    while start < nt:
        nc = min(rows_per_chunk, nt - start)
        sl = slice(start, start + nc)
        s0 = np.where(rng.random(nc) < p_plus, 1.0, -1.0)
        xi0_acc[sl] += s0 * (v / 2)
        waits = rng.exponential(size=(nc, m_budget))
        inv_first = np.where(s0 > 0, 1.0 / gm, 1.0 / gp)
        inv_second = np.where(s0 > 0, 1.0 / gp, 1.0 / gm)
        waits[:, 0::2] *= inv_first[:, None]
        waits[:, 1::2] *= inv_second[:, None]
        times = np.cumsum(waits, axis=1)
        dxi = (v * s0)[:, None] * col_sign[None, :]
        bins = _bin_times(times, bp, nb, lut)
        flat = (np.arange(nc)[:, None] * (nb + 1) + bins).ravel()
        size = nc * (nb + 1)
        dxi_flat = dxi.ravel()
        dxi_acc[sl] += np.bincount(flat, weights=dxi_flat, minlength=size).reshape(nc, nb + 1)
        dxt_acc[sl] += np.bincount(flat, weights=dxi_flat * times.ravel(), minlength=size).reshape(nc, nb + 1)
        # rare stragglers whose budget did not reach t_end: extend one by one
        short = np.nonzero(times[:, -1] <= t_end)[0]
        for r in short:
            t_last = times[r, -1]
            n_flips = m_budget
            s_cur = s0[r] * (1.0 if m_budget % 2 == 0 else -1.0)
            while t_last <= t_end:
                rate = gm if s_cur > 0 else gp
                t_last += rng.exponential(1.0 / rate)
                if t_last > t_end:
                    break
                n_flips += 1
                step = v * s0[r] * (-1.0 if n_flips % 2 == 1 else 1.0)
                b = int(_bin_times(np.array([t_last]), bp, nb, lut)[0])
                dxi_acc[start + r, b] += step
                dxt_acc[start + r, b] += step * t_last
                s_cur = -s_cur
        start += nc


def _dephasing_block(payload):
    (seed, blk, nt, v, gp, gm, p_plus, init_mode, bp, eta, parity, gidx,
     omega, z0, pz0, lut) = payload
    rng = block_stream(seed, blk)
    nb = bp.size
    t_end = bp[-1] if nb else 0.0
    dxi = np.zeros((nt, nb + 1))
    dxt = np.zeros((nt, nb + 1))
    xi0 = np.zeros(nt)
    for k in range(v.size):
        pk = p_plus[k] if init_mode == "thermal" else (1.0 if init_mode == 1 else 0.0)
        _telegraph_histograms(rng, nt, v[k], gp[k], gm[k], pk, t_end, bp, nb, lut, dxi, dxt, xi0)
    xi_at = xi0[:, None] + np.cumsum(dxi[:, :nb], axis=1)
    phi = bp[None, :] * xi_at - np.cumsum(dxt[:, :nb], axis=1)
    dphi = np.diff(phi, axis=1, prepend=0.0)
    s_noise = np.cumsum(eta[None, :] * dphi, axis=1)
    cols = np.nonzero(gidx >= 0)[0]
    order = gidx[cols]
    db = np.diff(bp, prepend=0.0)
    e_det = np.cumsum(eta * db)
    z = z0 * np.exp(2j * s_noise[:, cols])
    z *= np.exp(-1j * omega * e_det[cols])[None, :]
    flip = parity[cols] < 0
    z[:, flip] = np.conj(z[:, flip])
    ng = cols.size
    samples = np.empty((nt, 3, ng))
    samples[:, 0, order] = 2 * z.real
    samples[:, 1, order] = 2 * z.imag
    samples[:, 2, order] = (parity[cols] * pz0)[None, :]
    return _batch_stats(samples)


def run_dephasing(q, arrays: FluctuatorArrays, schedule, grid, state0, init_mode,
                  n_traj, master_seed, workers: int = 1):
    """Exact pure-dephasing ensemble average; see module docstring."""
    grid = np.asarray(grid, dtype=float)
    bp, _, gidx, eta, parity = _breakpoints(schedule, grid)
    lut = _lattice_lut(bp, bp.size)
    z0 = complex(np.conj(state0[0]) * state0[1])
    pz0 = float(abs(state0[0]) ** 2 - abs(state0[1]) ** 2)
    payloads = []
    for blk, nt in enumerate(_block_sizes(n_traj, DEPHASING_BLOCK)):
        payloads.append((master_seed, blk, nt, arrays.v, arrays.gamma_plus,
                         arrays.gamma_minus, arrays.p_plus, init_mode, bp, eta,
                         parity, gidx, q.omega, z0, pz0, lut))
    return _run_blocks(_dephasing_block, payloads, workers)


# ---------------------------------------------------------------------------
# general engine
# ---------------------------------------------------------------------------


class _DrawCache:
    """Pre-drawn exponential/uniform variates, consumed slice by slice."""

    def __init__(self, rng, nt):
        self.rng = rng
        self.nt = nt
        self._fill()

    def _fill(self):
        self.exp = self.rng.exponential(size=(_RNG_CHUNK, self.nt))
        self.u1 = self.rng.random((_RNG_CHUNK, self.nt))
        self.u2 = self.rng.random((_RNG_CHUNK, self.nt))
        self.pos = 0

    def next(self):
        if self.pos >= _RNG_CHUNK:
            self._fill()
        i = self.pos
        self.pos += 1
        return self.exp[i], self.u1[i], self.u2[i]


def _general_block(payload):
    (seed, blk, nt, v, gp, gm, p_plus, init_mode, bp, signs, gidx,
     omega, delta, state0) = payload
    rng = block_stream(seed, blk)
    m = v.size
    u_rate = np.maximum(gp, gm)
    u_tot = float(u_rate.sum())
    inv_u_tot = 1.0 / u_tot if u_tot > 0 else 0.0
    cum_u = np.cumsum(u_rate)
    c0 = np.full(nt, state0[0], dtype=complex)
    c1 = np.full(nt, state0[1], dtype=complex)
    if m:
        if init_mode == "thermal":
            s = np.where(rng.random((nt, m)) < p_plus[None, :], 1, -1).astype(np.int8)
        else:
            s = np.full((nt, m), int(init_mode), dtype=np.int8)
        xi = s.astype(float) @ (v / 2)
    else:
        s = np.zeros((nt, 0), dtype=np.int8)
        xi = np.zeros(nt)
    s_flat = s.reshape(-1)
    row_offsets = np.arange(nt) * max(m, 1)
    draws = _DrawCache(rng, nt) if m and u_tot > 0 else None
    hx = -delta / 2
    hx2 = hx * hx
    om2 = omega / 2
    pulse_mats = {sg: su2_matrix(sg * math.pi / 2, 0.0, 1.0) for sg in (1, -1)}
    ng = int((gidx >= 0).sum())
    samples = np.empty((nt, 3, ng))

    def apply_drift(tau):
        nonlocal c0, c1
        hz = xi - om2
        h = np.sqrt(hz * hz + hx2)
        theta = h * tau
        if hx == 0.0:
            h[h == 0.0] = 1.0
        st = np.sin(theta)
        st /= h
        ct = np.cos(theta)
        sthz = st * hz
        u00 = ct - 1j * sthz
        u01 = (-1j * hx) * st
        nc0 = u00 * c0
        nc0 += u01 * c1
        nc1 = u01 * c0
        nc1 += np.conj(u00) * c1
        c0, c1 = nc0, nc1

    t = np.zeros(nt)
    t_prev = 0.0
    for ib in range(bp.size):
        b = bp[ib]
        if b > t_prev:
            if draws is not None:
                while True:
                    w, u1, u2 = draws.next()
                    t_next = t + w * inv_u_tot
                    crossed = t_next > b
                    clipped = np.where(crossed, b, t_next)
                    apply_drift(clipped - t)
                    t = clipped
                    k = np.searchsorted(cum_u, u1 * u_tot)
                    np.minimum(k, m - 1, out=k)
                    sk = s_flat[row_offsets + k]
                    exit_rate = np.where(sk > 0, gm[k], gp[k])
                    acc = u2 * u_rate[k] < exit_rate
                    acc &= ~crossed
                    if acc.any():
                        ai = np.nonzero(acc)[0]
                        ak = k[ai]
                        ski = sk[ai].astype(float)
                        xi[ai] -= ski * v[ak]
                        s_flat[ai * m + ak] = -sk[ai]
                    if crossed.all():
                        break
            else:
                apply_drift(b - t)
                t = np.full(nt, b)
        if signs[ib]:
            p = pulse_mats[int(signs[ib])]
            c0, c1 = p[0, 0] * c0 + p[0, 1] * c1, p[1, 0] * c0 + p[1, 1] * c1
        gi = gidx[ib]
        if gi >= 0:
            z = np.conj(c0) * c1
            samples[:, 0, gi] = 2 * z.real
            samples[:, 1, gi] = 2 * z.imag
            samples[:, 2, gi] = c0.real**2 + c0.imag**2 - c1.real**2 - c1.imag**2
        t_prev = b
    return _batch_stats(samples)


def run_general(q, arrays: FluctuatorArrays, schedule, grid, state0, init_mode,
                n_traj, master_seed, workers: int = 1):
    """Exact any-working-point ensemble average; see module docstring."""
    grid = np.asarray(grid, dtype=float)
    bp, signs, gidx, _, _ = _breakpoints(schedule, grid)
    payloads = []
    for blk, nt in enumerate(_block_sizes(n_traj, GENERAL_BLOCK)):
        payloads.append((master_seed, blk, nt, arrays.v, arrays.gamma_plus,
                         arrays.gamma_minus, arrays.p_plus, init_mode, bp, signs,
                         gidx, q.omega, q.delta, np.asarray(state0, dtype=complex)))
    return _run_blocks(_general_block, payloads, workers)
