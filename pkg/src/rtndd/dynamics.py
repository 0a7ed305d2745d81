"""Qubit evolution under telegraph noise with bang-bang control.

The qubit Hamiltonian is H(t) = -[Omega sz + Delta sx]/2 + Xi(t) sz with
Xi(t) the summed fluctuator signal.  Trajectories are pure states evolved
event by event with the closed-form 2x2 propagator; ensembles average the
Pauli expectations over many independent noise realizations.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import engines
from .noise import EnsembleSpec, Fluctuator, FluctuatorArrays, next_flip_time, sample_ensemble, sample_initial_state
from .rng import ensemble_stream, trajectory_stream
from .schedule import Drift, Pulse, PulseProtocol, Schedule, build_schedule
from .su2 import su2_matrix


@dataclass
class QubitParams:
    """Longitudinal splitting Omega and transverse splitting Delta."""

    omega: float = 0.0
    delta: float = 0.0

    @property
    def delta_e(self) -> float:
        return math.hypot(self.omega, self.delta)

    @property
    def pure_dephasing(self) -> bool:
        return self.delta == 0.0


@dataclass
class QubitState:
    """Normalized amplitude pair (c0, c1)."""

    c0: complex
    c1: complex

    def __post_init__(self):
        n = abs(self.c0) ** 2 + abs(self.c1) ** 2
        if abs(n - 1) > 1e-12:
            raise ValueError(f"state not normalized: |c0|^2+|c1|^2 = {n}")

    @classmethod
    def superposition(cls) -> "QubitState":
        r = 1 / math.sqrt(2)
        return cls(c0=r, c1=r)

    @classmethod
    def ground(cls) -> "QubitState":
        return cls(c0=1.0, c1=0.0)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.c0, self.c1], dtype=complex)


def propagator(q: QubitParams, xi_total: float, tau: float) -> np.ndarray:
    """exp(-i H tau) for H = (-Omega/2 + Xi) sz - (Delta/2) sx, closed form."""
    if tau < 0:
        raise ValueError("tau must be >= 0")
    return su2_matrix(-q.delta / 2, -q.omega / 2 + xi_total, tau)


def pulse_unitary(sign: int) -> np.ndarray:
    """pi rotation about +-x: exp(-+ i pi sx / 2) = -+ i sx."""
    if sign not in (1, -1):
        raise ValueError("sign must be +-1")
    return su2_matrix(sign * math.pi / 2, 0.0, 1.0)


@dataclass
class ObservableSeries:
    """Ensemble means and standard errors of the Pauli expectations."""

    times: np.ndarray
    mean_x: np.ndarray
    mean_y: np.ndarray
    mean_z: np.ndarray
    sem_x: np.ndarray
    sem_y: np.ndarray
    sem_z: np.ndarray
    n_traj: int

    @property
    def coh(self) -> np.ndarray:
        """|<s+>| = |mean_x + i mean_y| / 2."""
        return np.abs(self.mean_x + 1j * self.mean_y) / 2

    @property
    def sem_coh(self) -> np.ndarray:
        """Conservative error bar for coh."""
        return np.hypot(self.sem_x, self.sem_y) / 2

    def csv_text(self) -> str:
        cols = np.column_stack(
            [self.times, self.mean_x, self.sem_x, self.mean_y, self.sem_y,
             self.mean_z, self.sem_z, self.coh]
        )
        lines = ["t,mean_x,sem_x,mean_y,sem_y,mean_z,sem_z,coh"]
        for row in cols:
            lines.append(",".join(f"{x:.17g}" for x in row))
        return "\n".join(lines) + "\n"

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.csv_text())


class Welford:
    """Parallel-mergeable running mean/variance over trajectory samples.

    Blocks are merged two at a time in a fixed order, so the reduction is
    independent of which worker produced which block.
    """

    def __init__(self, shape):
        self.n = 0
        self.mean = np.zeros(shape)
        self.m2 = np.zeros(shape)

    @classmethod
    def from_batch(cls, samples: np.ndarray) -> "Welford":
        """samples: (n_traj, ...) batch."""
        acc = cls(samples.shape[1:])
        acc.n = samples.shape[0]
        acc.mean = samples.mean(axis=0)
        acc.m2 = ((samples - acc.mean) ** 2).sum(axis=0)
        return acc

    def merge(self, other: "Welford") -> "Welford":
        if other.n == 0:
            return self
        if self.n == 0:
            self.n, self.mean, self.m2 = other.n, other.mean, other.m2
            return self
        n = self.n + other.n
        delta = other.mean - self.mean
        self.mean = self.mean + delta * (other.n / n)
        self.m2 = self.m2 + other.m2 + delta**2 * (self.n * other.n / n)
        self.n = n
        return self

    def sem(self) -> np.ndarray:
        if self.n < 2:
            return np.zeros_like(self.mean)
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def _resolve_init(init) -> QubitState:
    if isinstance(init, QubitState):
        return init
    if init == "superposition":
        return QubitState.superposition()
    if init == "ground":
        return QubitState.ground()
    raise ValueError(f"init must be a QubitState, 'superposition' or 'ground', got {init!r}")


def run_trajectory(
    q: QubitParams,
    ensemble: list[Fluctuator],
    schedule: Schedule,
    grid,
    init: QubitState | str,
    init_mode: str | int,
    rng: np.random.Generator,
) -> np.ndarray:
    """One noise realization; returns (3, n_grid) of <sx>, <sy>, <sz>.

    Event-driven: pending flip times live in a binary min-heap; between
    consecutive events (flip, pulse or sample) the state advances with the
    closed-form propagator at the current constant Xi; flips resample only
    the flipped fluctuator's next switch (exact, by memorylessness).
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(grid < 0) or np.any(grid > schedule.total_time + 1e-12):
        raise ValueError("grid times fall outside the schedule span")
    state = _resolve_init(init).vector.copy()
    s = np.array([sample_initial_state(f, init_mode, rng) for f in ensemble])
    xi = float(sum(f.v / 2 * sk for f, sk in zip(ensemble, s)))
    heap = [(next_flip_time(f, s[k], 0.0, rng), k) for k, f in enumerate(ensemble)]
    heapq.heapify(heap)

    # merged boundary stream; pulses come before samples at equal times
    bounds: list[tuple[float, int, int]] = [(tp, 0, sg) for tp, sg in zip(schedule.pulse_times, schedule.pulse_signs)]
    bounds += [(tg, 1, i) for i, tg in enumerate(grid)]
    bounds.sort(key=lambda e: (e[0], e[1]))

    out = np.empty((3, grid.size))
    px = pulse_unitary(+1)
    mx = pulse_unitary(-1)
    t = 0.0
    for tb, kind, payload in bounds:
        while heap and heap[0][0] <= tb:
            tf, k = heapq.heappop(heap)
            if tf > t:
                u = propagator(q, xi, tf - t)
                state = u @ state
                t = tf
            xi -= s[k] * ensemble[k].v  # flip k
            s[k] = -s[k]
            heapq.heappush(heap, (next_flip_time(ensemble[k], s[k], tf, rng), k))
        if tb > t:
            state = propagator(q, xi, tb - t) @ state
            t = tb
        if kind == 0:
            state = (px if payload == 1 else mx) @ state
        else:
            z = np.conj(state[0]) * state[1]
            out[0, payload] = 2 * z.real
            out[1, payload] = 2 * z.imag
            out[2, payload] = abs(state[0]) ** 2 - abs(state[1]) ** 2
    return out


def _resolve_ensemble(ensemble, master_seed: int) -> list[Fluctuator]:
    if isinstance(ensemble, EnsembleSpec):
        return sample_ensemble(ensemble, ensemble_stream(master_seed))
    return list(ensemble)


def run_ensemble(
    q: QubitParams,
    ensemble: EnsembleSpec | list[Fluctuator],
    protocol: PulseProtocol,
    grid,
    init: QubitState | str,
    init_mode: str | int,
    n_traj: int,
    master_seed: int,
    engine: str = "auto",
    workers: int = 1,
) -> ObservableSeries:
    """Trajectory average over n_traj independent noise realizations.

    The quenched ensemble (rates, couplings) is drawn once from the master
    seed and shared by all trajectories.  Results are bit-reproducible for a
    fixed (master_seed, n_traj, engine) at any worker count.

    engine: 'auto' picks the vectorized pure-dephasing path when Delta = 0
    and the general lockstep path otherwise; 'reference' forces the
    per-trajectory heap implementation (per-trajectory streams).
    """
    if n_traj < 1:
        raise ValueError("n_traj must be >= 1")
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be non-empty and strictly increasing")
    flucts = _resolve_ensemble(ensemble, master_seed)
    schedule = build_schedule(protocol, total_time=float(grid[-1]) if protocol.kind == "none" else None)
    if protocol.kind != "none" and np.any(grid > schedule.total_time + 1e-12):
        raise ValueError("grid extends past the protocol span 2 * cycles * dt")
    state = _resolve_init(init)
    if engine == "auto":
        engine = "dephasing" if q.pure_dephasing else "general"
    if engine == "reference":
        acc = Welford((3, grid.size))
        for i in range(n_traj):
            rng = trajectory_stream(master_seed, i)
            acc.merge(Welford.from_batch(run_trajectory(q, flucts, schedule, grid, state, init_mode, rng)[None]))
        mean, sem = acc.mean, acc.sem()
    elif engine == "dephasing":
        if not q.pure_dephasing:
            raise ValueError("dephasing engine requires Delta = 0")
        mean, sem = engines.run_dephasing(
            q, FluctuatorArrays(flucts), schedule, grid, state.vector, init_mode,
            n_traj, master_seed, workers=workers,
        )
    elif engine == "general":
        mean, sem = engines.run_general(
            q, FluctuatorArrays(flucts), schedule, grid, state.vector, init_mode,
            n_traj, master_seed, workers=workers,
        )
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return ObservableSeries(
        times=grid,
        mean_x=mean[0], mean_y=mean[1], mean_z=mean[2],
        sem_x=sem[0], sem_y=sem[1], sem_z=sem[2],
        n_traj=n_traj,
    )
