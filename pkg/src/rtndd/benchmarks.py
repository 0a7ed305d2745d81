"""Closed-form controlled dephasing by a single bistable charge, with oracles.

For pure dephasing (no transverse splitting) under the asymmetric two-pulse
cycle, the normalized coherence after N cycles of duration 2*dt has a closed
form built from a per-cycle weight `a`, a boundary bracket assembled from
f(alpha) evaluated at +-alpha, and two terminating hypergeometric sums in
z^2 = (2 exp(-gamma dt)/a)^2.  The form is equivalent to powering the 2x2
one-cycle transfer matrix of the conditional coherence vector; the transfer
matrix solver here is an independent implementation used as the arbiter for
every sign and normalization convention.

Conventions fixed by that arbiter (and by the Monte Carlo engines):
  * the telegraph signal is xi = s*v/2 and enters the coherence phase at
    rate 2*xi = s*v, so the dimensionless coupling symbol inside the closed
    form is 2*v/gamma (twice the source classification ratio g = v/gamma);
  * hyperbolic/oscillatory arguments carry the full gamma*dt;
  * delta_p0 = +1 means the charge starts in the state with xi = +v/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .schedule import Pulse, Schedule
from .su2 import expm_2x2, sinhc

__all__ = [
    "UnsupportedParametersError",
    "UnsupportedRegimeError",
    "SingleChargeParams",
    "AlphaDecomposition",
    "alpha",
    "regularized_hyp2f1",
    "decay_a",
    "decay_f",
    "Z_single",
    "Z_multi",
    "transfer_matrix_Z",
    "transfer_matrix_Z_cycles",
    "conditional_liouvillian",
    "GAUSSIAN_SOURCE_THRESHOLD",
]

# sources with v/gamma below this are classified as Gaussian
GAUSSIAN_SOURCE_THRESHOLD = 0.1


class UnsupportedParametersError(ValueError):
    """Hypergeometric parameters outside the terminating families served here."""


class UnsupportedRegimeError(ValueError):
    """Operation invoked outside its validity regime (e.g. transverse splitting)."""


@dataclass
class SingleChargeParams:
    """One charge: coupling v, switching rate gamma, bias, initial condition.

    init is 'thermal' (start from the stationary mixture) or +-1 (definite
    initial population difference delta_p0).  gamma = 0 is allowed only for
    the transfer-matrix oracle (static-shift limit).
    """

    v: float
    gamma: float
    delta_p_eq: float = 0.0
    init: str | int = "thermal"

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"v must be >= 0, got {self.v}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if abs(self.delta_p_eq) >= 1:
            raise ValueError(f"|delta_p_eq| must be < 1, got {self.delta_p_eq}")
        if self.init not in ("thermal", 1, -1):
            raise ValueError(f"init must be 'thermal' or +-1, got {self.init!r}")

    @property
    def g(self) -> float:
        """Coupling-to-switching ratio; inf in the static limit."""
        return self.v / self.gamma if self.gamma > 0 else math.inf

    @property
    def is_gaussian(self) -> bool:
        return self.g < GAUSSIAN_SOURCE_THRESHOLD

    def initial_weights(self) -> tuple[float, float]:
        """(w_plus, w_minus) over delta_p0 = +1 / -1."""
        if self.init == "thermal":
            return (1 + self.delta_p_eq) / 2, (1 - self.delta_p_eq) / 2
        return (1.0, 0.0) if self.init == 1 else (0.0, 1.0)


@dataclass(frozen=True)
class AlphaDecomposition:
    """alpha = alpha_re + i*alpha_im with alpha^2 = 1 - g^2 - 2i g dp_eq."""

    alpha: complex

    @property
    def alpha_re(self) -> float:
        return self.alpha.real

    @property
    def alpha_im(self) -> float:
        return self.alpha.imag


def alpha(g: float, delta_p_eq: float = 0.0) -> AlphaDecomposition:
    """Principal square root of 1 - g^2 - 2i*g*delta_p_eq (Re alpha >= 0).

    Takes its dimensionless argument at face value; callers decide which
    coupling symbol to pass (see module docstring).
    """
    if g < 0:
        raise ValueError(f"g must be >= 0, got {g}")
    # +0.0 normalizes a negative-zero imaginary part onto the principal branch
    radicand = complex(1 - g * g, -2 * g * delta_p_eq + 0.0)
    return AlphaDecomposition(alpha=complex(np.sqrt(radicand)))


def _pochhammer(x: Fraction | float, n: int):
    out = x * 0 + 1  # one, in the arithmetic of x
    for j in range(n):
        out *= x + j
    return out


def _termination_order(a: float, b: float) -> int:
    """Smallest p with (a)_{p+1} = 0 or (b)_{p+1} = 0, from a non-positive
    integer upper parameter; raises if the series does not terminate."""
    orders = []
    for x in (a, b):
        if x <= 0 and float(x) == int(x):
            orders.append(int(-x))
    if not orders:
        raise UnsupportedParametersError(
            f"series with upper parameters ({a}, {b}) does not terminate"
        )
    return min(orders)


def regularized_hyp2f1(a: float, b: float, c: float, z, exact: bool = False):
    """Gauss hypergeometric sum for the terminating families used by Z_single.

    Evaluates sum_n (a)_n (b)_n z^n / (norm(c, n) n!) where the sum is cut at
    the first vanishing upper Pochhammer.  For c a non-positive integer the
    normalization is the Pochhammer product (c)_n, the operative reading for
    the decay-law families, whose sums terminate before (c)_n can vanish; for
    other c it is Gamma(c + n), the standard regularization.  z = 0 returns
    the n = 0 term for any parameters.  With exact=True and rational inputs,
    the sum is carried out in exact rational arithmetic.

    Raises UnsupportedParametersError for non-terminating parameter families
    (this module serves the closed-form decay law only).
    """
    c_is_nonpos_int = c <= 0 and float(c) == int(c)
    if z == 0:
        p = 0
    else:
        p = _termination_order(a, b)
    if c_is_nonpos_int and p >= 1 - c:
        raise UnsupportedParametersError(
            f"(c)_n vanishes inside the terminating sum: a={a}, b={b}, c={c}"
        )
    if exact:
        a, b, c = Fraction(a), Fraction(b), Fraction(c)
        z = Fraction(z)
    total = None
    for n in range(p + 1):
        num = _pochhammer(a, n) * _pochhammer(b, n)
        if exact:
            term = num * z**n / (_pochhammer(c, n) * math.factorial(n))
            if not c_is_nonpos_int:
                raise ValueError("exact mode supports Pochhammer normalization only")
        else:
            if c_is_nonpos_int:
                denom = _pochhammer(float(c), n) * math.factorial(n)
            else:
                denom = math.gamma(c + n) * math.factorial(n)
            term = num * (z**n) / denom
        total = term if total is None else total + term
    return total


def _cycle_quantities(v: float, gamma: float, delta_p_eq: float, dt: float):
    """Per-cycle building blocks (ghat, a, z, and the coherence bracket parts).

    Everything is expressed through cosh(p*alpha) and sinh(p*alpha)/alpha with
    p = gamma*dt/2, both entire in alpha^2, so the exceptional point alpha = 0
    (ghat = 1, zero bias) is handled smoothly.
    """
    if gamma <= 0:
        raise ValueError("closed form needs gamma > 0")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    ghat = 2 * v / gamma
    al = alpha(ghat, delta_p_eq).alpha
    p = gamma * dt / 2
    w = p * al
    c = np.cosh(w)
    spl = p * sinhc(w)  # sinh(p alpha)/alpha
    c2 = abs(c) ** 2
    s2 = abs(spl) ** 2
    e = math.exp(-gamma * dt)
    a = 2 * e * (c2 + (1 + ghat * ghat) * s2)
    z = 2 * e / a
    return ghat, al, c, spl, c2, s2, a, z


def _cycle_bracket(ghat: float, delta_p_eq: float, delta_p0: float, c, spl, c2, s2) -> complex:
    """G = <1| M |w0>: the one-cycle coherence sandwich, normalized so that
    [f(alpha) + f(-alpha)]/4 = G."""
    cross = 2 * ((1 - 1j * ghat * delta_p0) * spl * np.conj(c)).real
    return c2 + cross + (1 + ghat * ghat) * s2 + 2j * ghat * (delta_p_eq - delta_p0) * s2


def decay_a(params: SingleChargeParams, dt: float) -> float:
    """Per-cycle weight a; equals the trace of the one-cycle transfer matrix.

    Equivalent form: (e^{-gamma dt}/|alpha|^2) [(1+g^2+|alpha|^2) cosh(gamma
    alpha' dt) - (1+g^2-|alpha|^2) cos(gamma alpha'' dt)] with the coupling
    symbol g = 2v/gamma.  a -> 2 as dt -> 0.
    """
    *_, a, _ = _cycle_quantities(params.v, params.gamma, params.delta_p_eq, dt)
    return a


def decay_f(params: SingleChargeParams, dt: float, delta_p0: int | None = None) -> complex:
    """Boundary factor f(alpha); [f(alpha) + f(-alpha)]/4 is the one-cycle
    coherence bracket entering Z_single.

    f(alpha) = (1/|alpha|^2) { e^{gamma alpha' dt} [P + 2(alpha' - g dp0 alpha'')]
               + e^{i gamma alpha'' dt} [Q - 2i(alpha'' + g dp0 alpha')] }
    with P = |alpha|^2 + 1 + g^2 + 2ig(dp_eq - dp0), Q = |alpha|^2 - (1+g^2)
    - 2ig(dp_eq - dp0) and g = 2v/gamma.  For thermal init the two definite
    initial conditions are averaged linearly with weights (1 +- dp_eq)/2.
    Singular at the exceptional point alpha = 0; Z_single avoids the division.
    """
    if delta_p0 is None:
        if params.init == "thermal":
            wp, wm = params.initial_weights()
            return wp * decay_f(params, dt, +1) + wm * decay_f(params, dt, -1)
        delta_p0 = int(params.init)
    ghat, al, *_ = _cycle_quantities(params.v, params.gamma, params.delta_p_eq, dt)
    if abs(al) == 0:
        raise UnsupportedRegimeError("f(alpha) is singular at alpha = 0; use Z_single")
    ar, ai = al.real, al.imag
    g2 = ghat * ghat
    aa = abs(al) ** 2
    pq = 2j * ghat * (params.delta_p_eq - delta_p0)
    p_term = aa + 1 + g2 + pq
    q_term = aa - (1 + g2) - pq
    e1 = math.exp(params.gamma * ar * dt)
    e2 = np.exp(1j * params.gamma * ai * dt)
    f = e1 * (p_term + 2 * (ar - ghat * delta_p0 * ai)) + e2 * (q_term - 2j * (ai + ghat * delta_p0 * ar))
    return complex(f / aa)


def _hyp_pair(n: int, z2: float) -> tuple[float, float]:
    """The two terminating hypergeometric sums of the decay law at cycle count n."""
    f1 = regularized_hyp2f1((1 - n) / 2, 1 - n / 2, 1 - n, z2)
    f2 = regularized_hyp2f1(1 - n / 2, (3 - n) / 2, 2 - n, z2) if n >= 2 else 0.0
    return float(f1), float(f2)

# beyond this cycle count the alternating hypergeometric sums lose precision
# (cancellation grows like 2^N eps); the equivalent damped Chebyshev
# recurrence below is stable at any N
_HYP_MAX_CYCLES = 12


def _damped_chebyshev_pair(n: int, a: float, d: float) -> tuple[float, float]:
    """(e^{-(n-1) gamma dt} U_{n-1}, e^{-(n-2) gamma dt} U_{n-2}) at 1/z,
    via v_k = a v_{k-1} - d v_{k-2} with d = e^{-2 gamma dt}; their closed
    forms are the decay law's hypergeometric sums times powers of a z/2."""
    v_prev, v_cur = 0.0, 1.0  # v_{-1}, v_0
    for _ in range(n - 1):
        v_prev, v_cur = v_cur, a * v_cur - d * v_prev
    return v_cur, v_prev


def Z_single(params: SingleChargeParams, dt: float, n_cycles: int) -> float:
    """Coherence |<s+>(t)| / |<s+>(0)| after n_cycles asymmetric cycles,
    t = 2 * n_cycles * dt, from the closed form.

    Valid for pure dephasing at the cycle boundaries.  v = 0 gives 1 exactly;
    the result approaches 1 for dt -> 0 at fixed t.
    """
    if n_cycles < 0:
        raise ValueError("n_cycles must be >= 0")
    if n_cycles == 0 or params.v == 0:
        return 1.0
    ghat, al, c, spl, c2, s2, a, z = _cycle_quantities(
        params.v, params.gamma, params.delta_p_eq, dt
    )
    wp, wm = params.initial_weights()
    bracket = wp * _cycle_bracket(ghat, params.delta_p_eq, +1, c, spl, c2, s2)
    if wm:
        bracket = bracket + wm * _cycle_bracket(ghat, params.delta_p_eq, -1, c, spl, c2, s2)
    if n_cycles <= _HYP_MAX_CYCLES:
        f1, f2 = _hyp_pair(n_cycles, z * z)
        zc = a**n_cycles * ((z / 2) * bracket * f1 - (z * z / 4) * f2)
    else:
        e = math.exp(-params.gamma * dt)
        u1, u2 = _damped_chebyshev_pair(n_cycles, a, e * e)
        zc = e * u1 * bracket - e * e * u2
    return abs(zc)


def Z_multi(charges: list[SingleChargeParams], dt: float, n_cycles: int) -> float:
    """Product of single-charge decays: independent sources factorize."""
    out = 1.0
    for p in charges:
        out *= Z_single(p, dt, n_cycles)
    return out


# ---------------------------------------------------------------------------
# Transfer-matrix oracle (exact, pure dephasing, arbitrary pi-pulse schedule)
# ---------------------------------------------------------------------------


def _w_generator(v: float, gamma_plus: float, gamma_minus: float, eta: float) -> np.ndarray:
    """Generator of the conditional coherence vector w = (w+, w-) on a drift
    segment with toggling sign eta: dw/dt = (-i eta D + W) w, D = diag(v, -v)."""
    return np.array(
        [
            [-1j * eta * v - gamma_minus, gamma_plus],
            [gamma_minus, 1j * eta * v - gamma_plus],
        ],
        dtype=complex,
    )


def _initial_w(params: SingleChargeParams) -> np.ndarray:
    wp, wm = params.initial_weights()
    return np.array([wp, wm], dtype=complex)


def transfer_matrix_Z(
    params: SingleChargeParams,
    schedule: Schedule,
    times,
    qubit=None,
) -> np.ndarray:
    """Exact dephasing decay Z(t) for one charge under an arbitrary schedule.

    Propagates w_s(t) = E[phase * 1{state=s}] through closed-form 2x2 matrix
    exponentials, toggling the coupling sign at each pulse; Z = |w+ + w-|.
    Works at any time inside the schedule span, not only cycle boundaries.
    Requires pure dephasing: a transverse splitting is rejected.
    """
    if qubit is not None and getattr(qubit, "delta", 0.0) != 0.0:
        raise UnsupportedRegimeError("transfer-matrix oracle requires delta = 0")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(times > schedule.total_time + 1e-12):
        raise ValueError("requested times fall outside the schedule span")
    order = np.argsort(times)
    gp, gm = (params.gamma * (1 + params.delta_p_eq) / 2, params.gamma * (1 - params.delta_p_eq) / 2) if params.gamma > 0 else (0.0, 0.0)
    w = _initial_w(params)
    out = np.empty(times.size)
    idx = 0
    t = 0.0
    eta = 1.0
    sorted_times = times[order]
    # record t = 0 samples
    while idx < times.size and sorted_times[idx] <= 0.0:
        out[order[idx]] = abs(w[0] + w[1])
        idx += 1
    for seg in schedule.segments:
        if isinstance(seg, Pulse):
            eta = -eta
            continue
        t_end = t + seg.duration
        gen = _w_generator(params.v, gp, gm, eta)
        while idx < times.size and sorted_times[idx] <= t_end + 1e-15:
            tau = sorted_times[idx] - t
            wq = expm_2x2(gen, tau) @ w
            out[order[idx]] = abs(wq[0] + wq[1])
            idx += 1
        w = expm_2x2(gen, seg.duration) @ w
        t = t_end
    while idx < times.size:  # times at the very end within tolerance
        out[order[idx]] = abs(w[0] + w[1])
        idx += 1
    return out


def _cycle_matrix(params: SingleChargeParams, dt: float, kind: str = "asymmetric") -> np.ndarray:
    gp = params.gamma * (1 + params.delta_p_eq) / 2
    gm = params.gamma * (1 - params.delta_p_eq) / 2
    e_plus = lambda tau: expm_2x2(_w_generator(params.v, gp, gm, +1.0), tau)
    e_minus = lambda tau: expm_2x2(_w_generator(params.v, gp, gm, -1.0), tau)
    if kind == "asymmetric":
        return e_minus(dt) @ e_plus(dt)
    if kind == "symmetric":
        return e_plus(dt / 2) @ e_minus(dt) @ e_plus(dt / 2)
    raise ValueError(f"kind must be 'asymmetric' or 'symmetric', got {kind!r}")


def transfer_matrix_Z_cycles(
    params: SingleChargeParams,
    dt: float,
    n_cycles,
    kind: str = "asymmetric",
) -> np.ndarray:
    """Z at cycle boundaries t = 2*n*dt via powers of the one-cycle matrix.

    Cost is logarithmic in n, so continuous-limit studies with n in the
    millions are cheap.
    """
    ns = np.atleast_1d(np.asarray(n_cycles, dtype=int))
    cyc = _cycle_matrix(params, dt, kind)
    w0 = _initial_w(params)
    out = np.empty(ns.size)
    for i, n in enumerate(ns):
        w = np.linalg.matrix_power(cyc, int(n)) @ w0
        out[i] = abs(w[0] + w[1])
    return out


# ---------------------------------------------------------------------------
# Conditional-Liouvillian oracle (exact, any working point, few charges)
# ---------------------------------------------------------------------------

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def conditional_liouvillian(
    qubit,
    fluctuators: list,
    schedule: Schedule,
    times,
    init_state: np.ndarray,
    init_env: str | int = "thermal",
) -> dict:
    """Exact ensemble means for up to three charges at any working point.

    Evolves density matrices conditioned on the charge configuration
    sigma in {+-1}^M:

        d rho_sigma/dt = -i [H + Xi(sigma) sz, rho_sigma]
                         + sum_k ( rate_in * rho_{flip_k sigma} - rate_out * rho_sigma )

    with the generator exponentiated per schedule segment and pulses applied
    to every conditional block.  Returns {'times', 'mean_x', 'mean_y',
    'mean_z'}.  The state dimension is 4 * 2^M, so M <= 3.
    """
    import scipy.linalg

    m = len(fluctuators)
    if m > 3:
        raise ValueError(f"conditional_liouvillian supports at most 3 charges, got {m}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0) or np.any(times > schedule.total_time + 1e-12):
        raise ValueError("requested times fall outside the schedule span")
    n_cfg = 2**m
    dim = 4 * n_cfg
    h0 = -(qubit.omega * _PAULI["z"] + qubit.delta * _PAULI["x"]) / 2

    def cfg_states(icfg: int) -> np.ndarray:
        return np.array([1 if (icfg >> k) & 1 == 0 else -1 for k in range(m)])

    eye2 = np.eye(2, dtype=complex)
    gen = np.zeros((dim, dim), dtype=complex)
    for icfg in range(n_cfg):
        s = cfg_states(icfg)
        xi = sum(fl.v / 2 * si for fl, si in zip(fluctuators, s))
        h = h0 + xi * _PAULI["z"]
        # row-major vec: vec(A rho B) = (A kron B^T) vec(rho)
        comm = -1j * (np.kron(h, eye2) - np.kron(eye2, h.T))
        blk = slice(4 * icfg, 4 * icfg + 4)
        gen[blk, blk] += comm
        for k, fl in enumerate(fluctuators):
            gp, gm = fl.rates
            rate_out = gm if s[k] == 1 else gp  # rate of leaving the current state
            rate_in = gp if s[k] == 1 else gm  # rate into it from the flipped config
            gen[blk, blk] -= rate_out * np.eye(4)
            jcfg = icfg ^ (1 << k)
            gen[blk, 4 * jcfg : 4 * jcfg + 4] += rate_in * np.eye(4)

    # initial conditional blocks: product of per-charge occupation weights
    rho0 = np.outer(init_state, np.conj(init_state))
    vec0 = np.zeros(dim, dtype=complex)
    for icfg in range(n_cfg):
        s = cfg_states(icfg)
        wgt = 1.0
        for k, fl in enumerate(fluctuators):
            if init_env == "thermal":
                wgt *= (1 + fl.delta_p_eq) / 2 if s[k] == 1 else (1 - fl.delta_p_eq) / 2
            else:
                wgt *= 1.0 if s[k] == int(init_env) else 0.0
        vec0[4 * icfg : 4 * icfg + 4] = wgt * rho0.reshape(-1)

    from .su2 import su2_matrix

    pulse_mats = {
        +1: su2_matrix(math.pi / 2, 0.0, 1.0),  # pi about +x
        -1: su2_matrix(-math.pi / 2, 0.0, 1.0),
    }

    def pulse_super(sign: int) -> np.ndarray:
        p = pulse_mats[sign]
        block = np.kron(p, np.conj(p))
        out = np.zeros((dim, dim), dtype=complex)
        for icfg in range(n_cfg):
            blk = slice(4 * icfg, 4 * icfg + 4)
            out[blk, blk] = block
        return out

    expm_cache: dict[float, np.ndarray] = {}

    def seg_propagator(tau: float) -> np.ndarray:
        if tau not in expm_cache:
            expm_cache[tau] = scipy.linalg.expm(gen * tau)
        return expm_cache[tau]

    order = np.argsort(times)
    sorted_times = times[order]
    out = {k: np.empty(times.size) for k in ("mean_x", "mean_y", "mean_z")}

    def record(vec: np.ndarray, pos: int):
        rho = vec.reshape(n_cfg, 2, 2).sum(axis=0)
        out["mean_x"][order[pos]] = np.trace(_PAULI["x"] @ rho).real
        out["mean_y"][order[pos]] = np.trace(_PAULI["y"] @ rho).real
        out["mean_z"][order[pos]] = np.trace(_PAULI["z"] @ rho).real

    idx = 0
    t = 0.0
    vec = vec0
    while idx < times.size and sorted_times[idx] <= 0.0:
        record(vec, idx)
        idx += 1
    for seg in schedule.segments:
        if isinstance(seg, Pulse):
            vec = pulse_super(seg.sign) @ vec
            continue
        t_end = t + seg.duration
        while idx < times.size and sorted_times[idx] <= t_end + 1e-15:
            record(seg_propagator(sorted_times[idx] - t) @ vec, idx)
            idx += 1
        vec = seg_propagator(seg.duration) @ vec
        t = t_end
    while idx < times.size:
        record(vec, idx)
        idx += 1
    return {"times": times, **out}
