"""Bang-bang control cycles: free-evolution segments and instantaneous pulses.

Two cycle layouts of duration 2*dt are supported, both applying a pi rotation
about +x and one about -x per cycle:

    asymmetric:  dt, pi(+x), dt, pi(-x)
    symmetric:   dt/2, pi(+x), dt, pi(-x), dt/2

The symmetric layout is time-reversal symmetric about the cycle midpoint and
cancels higher-order average-Hamiltonian corrections.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PROTOCOL_KINDS = ("none", "asymmetric", "symmetric")


@dataclass(frozen=True)
class Drift:
    duration: float


@dataclass(frozen=True)
class Pulse:
    sign: int  # +1 -> pi about +x, -1 -> pi about -x


@dataclass
class PulseProtocol:
    """Control descriptor: kind, pulse interval dt, cycle count."""

    kind: str
    dt: float = 0.0
    cycles: int = 0

    def __post_init__(self):
        if self.kind not in PROTOCOL_KINDS:
            raise ValueError(f"kind must be one of {PROTOCOL_KINDS}, got {self.kind!r}")
        if self.kind != "none":
            if self.dt <= 0:
                raise ValueError(f"dt must be > 0 for controlled protocols, got {self.dt}")
            if self.cycles < 0:
                raise ValueError(f"cycles must be >= 0, got {self.cycles}")

    @property
    def cycle_time(self) -> float:
        return 2 * self.dt if self.kind != "none" else 0.0

    @property
    def total_time(self) -> float:
        return self.cycles * self.cycle_time


@dataclass
class Schedule:
    """Resolved control sequence: ordered segments plus derived event times."""

    segments: list
    pulse_times: np.ndarray = field(default=None, repr=False)
    total_time: float = 0.0
    stroboscopic_times: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        t = 0.0
        pulses = []
        for seg in self.segments:
            if isinstance(seg, Drift):
                if seg.duration < 0:
                    raise ValueError("drift duration must be >= 0")
                t += seg.duration
            elif isinstance(seg, Pulse):
                pulses.append(t)
            else:
                raise ValueError(f"unknown segment {seg!r}")
        self.total_time = t
        self.pulse_times = np.array(pulses)
        if self.stroboscopic_times is None:
            self.stroboscopic_times = np.array([0.0, t])

    @property
    def pulse_signs(self) -> np.ndarray:
        return np.array([s.sign for s in self.segments if isinstance(s, Pulse)])

    def parity(self, times) -> np.ndarray:
        """(-1)**(number of pulses applied at or before each time)."""
        n = np.searchsorted(self.pulse_times, np.asarray(times, dtype=float), side="right")
        return np.where(n % 2 == 0, 1, -1)

    def eta_between(self, breakpoints: np.ndarray) -> np.ndarray:
        """Toggling sign of the z coupling on each interval (b[i-1], b[i]].

        Entry i applies to the interval ending at breakpoints[i]; an implied
        interval start at t=0 precedes breakpoints[0].
        """
        starts = np.concatenate(([0.0], np.asarray(breakpoints, dtype=float)[:-1]))
        n = np.searchsorted(self.pulse_times, starts, side="right")
        return np.where(n % 2 == 0, 1.0, -1.0)


def build_schedule(protocol: PulseProtocol, total_time: float | None = None) -> Schedule:
    """Expand a protocol into an explicit segment list.

    For kind='none' a total_time is required; controlled kinds span
    cycles * 2 * dt and record the cycle boundaries as stroboscopic times.
    """
    if protocol.kind == "none":
        if total_time is None or total_time <= 0:
            raise ValueError("free evolution needs total_time > 0")
        return Schedule(segments=[Drift(total_time)])
    dt, n = protocol.dt, protocol.cycles
    segs: list = []
    if protocol.kind == "asymmetric":
        for _ in range(n):
            segs += [Drift(dt), Pulse(+1), Drift(dt), Pulse(-1)]
    else:
        for _ in range(n):
            segs += [Drift(dt / 2), Pulse(+1), Drift(dt), Pulse(-1), Drift(dt / 2)]
    strobo = 2 * dt * np.arange(n + 1)
    return Schedule(segments=segs, stroboscopic_times=strobo)
