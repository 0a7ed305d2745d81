"""Bistable fluctuators and 1/f noise ensembles.

A fluctuator is an asymmetric random telegraph signal xi(t) = s(t) * v / 2
with s = +-1, switching at rates gamma_plus (into s=+1) and gamma_minus
(into s=-1), gamma = gamma_plus + gamma_minus.  An ensemble with switching
rates distributed as P(gamma) ~ 1/gamma over [gamma_min, gamma_max] produces
a 1/f power spectrum between effective cutoffs interior to that window.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np


def switching_rates(gamma: float, delta_p_eq: float) -> tuple[float, float]:
    """Split a total rate into (gamma_plus, gamma_minus).

    gamma_plus is the rate of transitions INTO s=+1, gamma_minus into s=-1.
    With this convention the stationary occupation difference p+ - p- equals
    delta_p_eq.
    """
    if gamma <= 0:
        raise ValueError(f"gamma must be > 0, got {gamma}")
    if abs(delta_p_eq) >= 1:
        raise ValueError(f"|delta_p_eq| must be < 1, got {delta_p_eq}")
    return gamma * (1 + delta_p_eq) / 2, gamma * (1 - delta_p_eq) / 2


@dataclass
class Fluctuator:
    """One bistable charge: coupling v, total switching rate gamma, bias.

    The signal value is xi = state * v / 2.  `state` is the initial value;
    simulation code keeps its own per-trajectory copies.
    """

    v: float
    gamma: float
    delta_p_eq: float = 0.0
    state: int = 1

    def __post_init__(self):
        if self.v < 0:
            raise ValueError(f"v must be >= 0, got {self.v}")
        if self.gamma <= 0:
            raise ValueError(f"gamma must be > 0, got {self.gamma}")
        if abs(self.delta_p_eq) >= 1:
            raise ValueError(f"|delta_p_eq| must be < 1, got {self.delta_p_eq}")
        if self.state not in (-1, 1):
            raise ValueError(f"state must be +-1, got {self.state}")

    @property
    def rates(self) -> tuple[float, float]:
        return switching_rates(self.gamma, self.delta_p_eq)


@dataclass
class EnsembleSpec:
    """Recipe for a 1/f ensemble.

    Rates are drawn log-uniformly on [gamma_min, gamma_max] (realizing
    P(gamma) ~ 1/gamma), couplings from a normal distribution truncated to
    v > 0.  The ensemble holds n_d fluctuators per decade of rates.
    """

    gamma_min: float
    gamma_max: float
    n_d: int
    v_mean: float
    v_sd: float
    delta_p_eq: float = 0.0

    def __post_init__(self):
        if not 0 < self.gamma_min < self.gamma_max:
            raise ValueError(
                f"need 0 < gamma_min < gamma_max, got ({self.gamma_min}, {self.gamma_max})"
            )
        if self.n_d < 1:
            raise ValueError(f"n_d must be >= 1, got {self.n_d}")
        if self.v_mean <= 0:
            raise ValueError(f"v_mean must be > 0, got {self.v_mean}")
        if self.v_sd < 0:
            raise ValueError(f"v_sd must be >= 0, got {self.v_sd}")
        if abs(self.delta_p_eq) >= 1:
            raise ValueError(f"|delta_p_eq| must be < 1, got {self.delta_p_eq}")
        if self.size < 1:
            raise ValueError("ensemble would be empty")

    @property
    def decades(self) -> float:
        return math.log10(self.gamma_max / self.gamma_min)

    @property
    def size(self) -> int:
        # round half up, so the count is deterministic
        return int(math.floor(self.n_d * self.decades + 0.5))

    def to_json(self) -> str:
        return json.dumps(
            {
                "gamma_min": self.gamma_min,
                "gamma_max": self.gamma_max,
                "n_d": self.n_d,
                "v_mean": self.v_mean,
                "v_sd": self.v_sd,
                "delta_p_eq": self.delta_p_eq,
            }
        )

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        return cls(
            gamma_min=float(d["gamma_min"]),
            gamma_max=float(d["gamma_max"]),
            n_d=int(d["n_d"]),
            v_mean=float(d["v_mean"]),
            v_sd=float(d["v_sd"]),
            delta_p_eq=float(d.get("delta_p_eq", 0.0)),
        )


def sample_ensemble(spec: EnsembleSpec, rng: np.random.Generator) -> list[Fluctuator]:
    """Draw a quenched set of fluctuators from an ensemble recipe."""
    m = spec.size
    u = rng.random(m)
    gammas = spec.gamma_min * (spec.gamma_max / spec.gamma_min) ** u
    if spec.v_sd == 0:
        vs = np.full(m, spec.v_mean)
    else:
        vs = rng.normal(spec.v_mean, spec.v_sd, size=m)
        # resample non-positive couplings (truncation to v > 0)
        bad = vs <= 0
        while np.any(bad):
            vs[bad] = rng.normal(spec.v_mean, spec.v_sd, size=int(bad.sum()))
            bad = vs <= 0
    return [
        Fluctuator(v=float(v), gamma=float(g), delta_p_eq=spec.delta_p_eq)
        for v, g in zip(vs, gammas)
    ]


def sample_initial_state(
    f: Fluctuator, mode: str | int, rng: np.random.Generator | None = None
) -> int:
    """Initial s for one fluctuator.

    mode = 'thermal' draws s=+1 with probability (1 + delta_p_eq)/2;
    mode = +-1 returns that value.
    """
    if mode == "thermal":
        if rng is None:
            raise ValueError("thermal mode needs an rng")
        return 1 if rng.random() < (1 + f.delta_p_eq) / 2 else -1
    if mode in (1, -1):
        return int(mode)
    raise ValueError(f"mode must be 'thermal' or +-1, got {mode!r}")


def next_flip_time(
    f: Fluctuator, s: int, now: float, rng: np.random.Generator
) -> float:
    """Time of the next flip given the current state s.

    The exit rate from s=+1 is gamma_minus and from s=-1 gamma_plus; waiting
    times are exponential, so regeneration after unrelated events is exact.
    """
    gp, gm = f.rates
    rate = gm if s == 1 else gp
    return now + rng.exponential(1.0 / rate)


@dataclass(frozen=True)
class SwitchEvent:
    """One switch of one fluctuator; event times within a trajectory are
    strictly increasing."""

    time: float
    index: int


def switch_events(
    ensemble: list[Fluctuator],
    states: list[int],
    t_end: float,
    rng: np.random.Generator,
) -> list[SwitchEvent]:
    """Time-ordered switch record of an ensemble realization up to t_end.

    Mainly a debugging/inspection aid; the simulation engines work with the
    same waiting-time draws in columnar form.
    """
    import heapq

    s = list(states)
    heap = [(next_flip_time(f, s[k], 0.0, rng), k) for k, f in enumerate(ensemble)]
    heapq.heapify(heap)
    out: list[SwitchEvent] = []
    while heap and heap[0][0] <= t_end:
        t, k = heapq.heappop(heap)
        out.append(SwitchEvent(time=t, index=k))
        s[k] = -s[k]
        heapq.heappush(heap, (next_flip_time(ensemble[k], s[k], t, rng), k))
    return out


def analytic_spectrum(ensemble: list[Fluctuator], omega) -> np.ndarray | float:
    """Two-sided power density of Xi(t) = sum_k xi_k(t) about its mean.

    S(omega) = sum_k (v_k^2/4)(1 - dp_eq^2) * 2 gamma_k / (gamma_k^2 + omega^2).
    Integrating over all omega gives 2*pi times the total variance.  In the
    interior of a log-uniform rate window this approximates A/|omega| with
    A = pi * n_d * <v^2> * (1 - dp_eq^2) / (4 ln 10).
    """
    w = np.asarray(omega, dtype=float)
    if np.any(w == 0):
        raise ValueError("analytic_spectrum is undefined at omega = 0")
    v = np.array([f.v for f in ensemble])
    g = np.array([f.gamma for f in ensemble])
    dp = np.array([f.delta_p_eq for f in ensemble])
    var = (v**2 / 4) * (1 - dp**2)
    s = np.sum(var[:, None] * 2 * g[:, None] / (g[:, None] ** 2 + w.ravel()[None, :] ** 2), axis=0)
    if np.isscalar(omega) or w.ndim == 0:
        return float(s[0])
    return s.reshape(w.shape)


def one_over_f_amplitude(spec: EnsembleSpec) -> float:
    """A in S(|omega|) ~ A/|omega| for the interior of the rate window.

    Derived for the log-uniform rate law: A = pi n_d <v^2> (1-dp^2)/(4 ln 10),
    with <v^2> = v_mean^2 + v_sd^2 (truncation correction ignored).
    """
    v2 = spec.v_mean**2 + spec.v_sd**2
    return math.pi * spec.n_d * v2 * (1 - spec.delta_p_eq**2) / (4 * math.log(10))


def ensemble_variance(ensemble: list[Fluctuator]) -> float:
    """Stationary variance of Xi(t)."""
    return float(sum((f.v**2 / 4) * (1 - f.delta_p_eq**2) for f in ensemble))


def ensemble_mean(ensemble: list[Fluctuator]) -> float:
    """Stationary mean of Xi(t); a static detuning, deliberately not removed."""
    return float(sum(f.v * f.delta_p_eq / 2 for f in ensemble))


class FluctuatorArrays:
    """Column layout of an ensemble for the vectorized engines."""

    __slots__ = ("v", "gamma", "gamma_plus", "gamma_minus", "delta_p_eq", "m")

    def __init__(self, ensemble: list[Fluctuator]):
        self.m = len(ensemble)
        self.v = np.array([f.v for f in ensemble])
        self.gamma = np.array([f.gamma for f in ensemble])
        self.delta_p_eq = np.array([f.delta_p_eq for f in ensemble])
        self.gamma_plus = self.gamma * (1 + self.delta_p_eq) / 2
        self.gamma_minus = self.gamma * (1 - self.delta_p_eq) / 2

    @property
    def p_plus(self) -> np.ndarray:
        return (1 + self.delta_p_eq) / 2
