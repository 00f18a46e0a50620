"""Pulse-sequence generators and combinators.

Sequences are written in the literature as right-to-left operator products,
e.g. [Y U_tau Y U_tau] applies the rightmost U_tau first. Event lists here
are stored in APPLICATION order: events[0] acts first in time. The text
serializer preserves that order, one event per line.

Delays carry a bias sign: -1 marks evolution with the longitudinal bias
field reversed (the overbar in symmetrized/concatenated uniaxial cycles).
Pulses are instantaneous hard rotations of the central/collective spin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .spin_algebra import Rotation, x_pulse, y_pulse, ybar_pulse, z_pulse

TIME_REL_TOL = 1e-12


@dataclass(frozen=True)
class Delay:
    duration: float
    bias_sign: int = 1

    def __post_init__(self):
        if self.duration < 0:
            raise ValueError("delay duration must be >= 0")
        if self.bias_sign not in (1, -1):
            raise ValueError("bias sign must be +1 or -1")


@dataclass(frozen=True)
class Pulse:
    rotation: Rotation


Event = Delay | Pulse


@dataclass(frozen=True)
class Sequence:
    """One cycle of events (application order) repeated `cycles` times."""

    label: str
    cycle: tuple[Event, ...]
    cycles: int = 1
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.cycles < 1:
            raise ValueError("cycle count must be >= 1")
        if not self.cycle:
            raise ValueError("empty cycle")

    @property
    def cycle_time(self) -> float:
        return sum(e.duration for e in self.cycle if isinstance(e, Delay))

    @property
    def total_time(self) -> float:
        return self.cycles * self.cycle_time

    @property
    def pulses_per_cycle(self) -> int:
        return sum(1 for e in self.cycle if isinstance(e, Pulse))

    @property
    def pulse_count(self) -> int:
        return self.cycles * self.pulses_per_cycle

    def events(self):
        """All events in application order."""
        for _ in range(self.cycles):
            yield from self.cycle


def reverse_bias(events) -> tuple[Event, ...]:
    """Flip the bias sign of every delay (an involution); pulses unchanged."""
    return tuple(
        Delay(e.duration, -e.bias_sign) if isinstance(e, Delay) else e for e in events
    )


def symmetrize(cycle_events) -> tuple[Event, ...]:
    """Append the time-mirrored, bias-reversed image of a cycle."""
    cycle_events = tuple(cycle_events)
    return cycle_events + reverse_bias(reversed(cycle_events))


def free_evolution(dt: float, L: int) -> Sequence:
    """No pulses; one delay of dt per cycle so records land every dt."""
    if dt <= 0 or L < 1:
        raise ValueError("need dt > 0 and L >= 1")
    return Sequence(label="FE", cycle=(Delay(dt),), cycles=L)


def uni_dd(tau: float, L: int, epsilon: float = 0.0, modified: bool = False) -> Sequence:
    """Uniaxial cycle [Y U_tau Y U_tau]; modified form [Ybar U_tau Y U_tau].

    Per cycle: delay tau, y-axis pulse, delay tau, second pulse about +y
    (or -y when modified). Both pulse angles are (1 - epsilon) pi.
    """
    if tau <= 0 or L < 1 or not 0 <= epsilon < 1:
        raise ValueError("need tau > 0, L >= 1, 0 <= epsilon < 1")
    second = ybar_pulse(epsilon) if modified else y_pulse(epsilon)
    cycle = (Delay(tau), Pulse(y_pulse(epsilon)), Delay(tau), Pulse(second))
    label = "Uni-DD-mod" if modified else "Uni-DD"
    return Sequence(label=label, cycle=cycle, cycles=L,
                    metadata={"tau": tau, "epsilon": epsilon})


def pdd(tau: float, L: int) -> Sequence:
    """Periodic biaxial cycle [Z U_tau X U_tau Z U_tau X U_tau]."""
    if tau <= 0 or L < 1:
        raise ValueError("need tau > 0 and L >= 1")
    cycle = (Delay(tau), Pulse(x_pulse()), Delay(tau), Pulse(z_pulse()),
             Delay(tau), Pulse(x_pulse()), Delay(tau), Pulse(z_pulse()))
    return Sequence(label="PDD", cycle=cycle, cycles=L, metadata={"tau": tau})


def hahn(t: float, omega: float | None = None) -> Sequence:
    """Two-pulse echo [Y U(t/2) Y U(t/2)].

    When omega is given, omega*(t/2) is checked against integer multiples of
    2 pi; a violation is recorded in the metadata, not raised.
    """
    if t <= 0:
        raise ValueError("total time must be positive")
    meta: dict = {"t": t}
    if omega is not None:
        phase = omega * t / 2.0
        k = round(phase / (2.0 * math.pi))
        if abs(phase - k * 2.0 * math.pi) > 1e-9:
            meta["magic_violation"] = (
                f"omega*t/2 = {phase:.12g} is not an integer multiple of 2*pi")
    cycle = (Delay(t / 2.0), Pulse(y_pulse()), Delay(t / 2.0), Pulse(y_pulse()))
    return Sequence(label="Hahn", cycle=cycle, cycles=1, metadata=meta)


def suni_dd(tau: float, L: int) -> Sequence:
    """Symmetrized uniaxial cycle [Ubar Y Ubar U Y U]: the half-cycle
    U_tau Y U_tau followed by its bias-reversed mirror."""
    if tau <= 0 or L < 1:
        raise ValueError("need tau > 0 and L >= 1")
    half = (Delay(tau), Pulse(y_pulse()), Delay(tau))
    return Sequence(label="SUni-DD", cycle=symmetrize(half), cycles=L,
                    metadata={"tau": tau})


def concat_uni(level: int, tau: float, L: int = 1) -> Sequence:
    """Concatenated uniaxial cycles: C1 is the symmetrized cycle and
    C2 = [C1bar Y C1bar C1 Y C1] (bias reversal applies to whole blocks)."""
    if level not in (1, 2):
        raise ValueError("only concatenation levels 1 and 2 are defined")
    if tau <= 0 or L < 1:
        raise ValueError("need tau > 0 and L >= 1")
    c1 = suni_dd(tau, 1).cycle
    if level == 1:
        return Sequence(label="CUni-DD1", cycle=c1, cycles=L, metadata={"tau": tau})
    c1bar = reverse_bias(c1)
    cycle = c1 + (Pulse(y_pulse()),) + c1 + c1bar + (Pulse(y_pulse()),) + c1bar
    return Sequence(label="CUni-DD2", cycle=cycle, cycles=L, metadata={"tau": tau})


def sdd(tau: float, L: int) -> Sequence:
    """Symmetrized biaxial cycle [U X U Z U X U U X U Z U X U]: the mirrored
    PDD halves with the junction Z pair already merged away."""
    if tau <= 0 or L < 1:
        raise ValueError("need tau > 0 and L >= 1")
    half = (Delay(tau), Pulse(x_pulse()), Delay(tau), Pulse(z_pulse()),
            Delay(tau), Pulse(x_pulse()), Delay(tau))
    return Sequence(label="SDD", cycle=half + half, cycles=L, metadata={"tau": tau})


def cdd2(tau: float, L: int) -> Sequence:
    """Second-level concatenated biaxial cycle [Z C1 X C1 Z C1 X C1] with
    C1 = PDD. Adjacent pulses stay distinct events (no merging)."""
    if tau <= 0 or L < 1:
        raise ValueError("need tau > 0 and L >= 1")
    c1 = pdd(tau, 1).cycle
    cycle = (c1 + (Pulse(x_pulse()),) + c1 + (Pulse(z_pulse()),)
             + c1 + (Pulse(x_pulse()),) + c1 + (Pulse(z_pulse()),))
    return Sequence(label="CDD2", cycle=cycle, cycles=L, metadata={"tau": tau})


def uhrig_times(Np: int, t: float, count: int | None = None) -> np.ndarray:
    """Pulse times t_j = t sin^2(j pi / (2 Np - 2)) for j = 1..count.

    Note the denominator follows the source convention 2 Np - 2 (not the
    canonical 2 n + 2 of an n-pulse Uhrig sequence); j = Np - 1 lands
    exactly at t. Default count is Np - 1.
    """
    if Np < 2 or t <= 0:
        raise ValueError("need Np >= 2 and t > 0")
    if count is None:
        count = Np - 1
    j = np.arange(1, count + 1, dtype=float)
    return t * np.sin(j * np.pi / (2.0 * Np - 2.0)) ** 2


def _z_block(times: np.ndarray, block_time: float, leading_z: bool,
             bias_sign: int = 1) -> tuple[Event, ...]:
    """Inner block U_{T-t_n} Z U_{tau_n} Z ... U_{tau_1}, applied left of a
    leading Z when leading_z (so the last pulse sits at the block end)."""
    events: list[Event] = []
    prev = 0.0
    for tj in times:
        events.append(Delay(tj - prev, bias_sign))
        events.append(Pulse(z_pulse()))
        prev = float(tj)
    tail = block_time - prev
    if tail < -1e-12:
        raise ValueError("Uhrig times exceed the block time")
    events.append(Delay(max(tail, 0.0), bias_sign))
    if leading_z:
        events.append(Pulse(z_pulse()))
    return tuple(events)


def cudd(n: int, t: float) -> Sequence:
    """Concatenated-Uhrig sequence: four quarter blocks of n Z pulses on the
    source Uhrig grid (denominator 2 Np - 2, Np = 4n + 2), with X pulses
    after the first and third blocks. Total pulses 4n + 2."""
    if n < 1 or t <= 0:
        raise ValueError("need n >= 1 and t > 0")
    Np = 4 * n + 2
    quarter = t / 4.0
    inner_times = uhrig_times(Np, quarter, count=n)
    block = _z_block(inner_times, quarter, leading_z=False)
    cycle = block + (Pulse(x_pulse()),) + block + block + (Pulse(x_pulse()),) + block
    seq = Sequence(label=f"CUDD{n}", cycle=cycle, cycles=1,
                   metadata={"n": n, "t": t, "Np": Np})
    assert seq.pulse_count == Np, (seq.pulse_count, Np)
    return seq


def qdd(n: int, t: float) -> Sequence:
    """Quadratic sequence for odd n: n + 1 outer blocks on the Uhrig grid
    sin^2(j pi / (2n + 2)) (which ends exactly at t), each an inner Z-Uhrig
    block of n + 1 pulses including one at the block end, each block followed
    by an X pulse. Total pulses (n + 1)(n + 2)."""
    if n < 1 or t <= 0:
        raise ValueError("need n >= 1 and t > 0")
    if n % 2 == 0:
        raise ValueError("only odd cancelation orders are defined")
    Np = (n + 1) * (n + 2)
    # outer grid: j = 1..n+1 with eps_{n+1} = t exactly
    eps = uhrig_times(n + 2, t, count=n + 1)
    events: list[Event] = []
    prev = 0.0
    for ej in eps:
        delta = float(ej) - prev
        inner_times = uhrig_times(n + 2, delta, count=n)
        events.extend(_z_block(inner_times, delta, leading_z=True))
        events.append(Pulse(x_pulse()))
        prev = float(ej)
    seq = Sequence(label=f"QDD{n}", cycle=tuple(events), cycles=1,
                   metadata={"n": n, "t": t, "Np": Np})
    assert seq.pulse_count == Np, (seq.pulse_count, Np)
    assert abs(seq.total_time - t) <= 1e-9 * max(t, 1.0), seq.total_time
    return seq


def serialize(seq: Sequence) -> str:
    """Line-oriented text form, one event per line in application order:
    `D <duration> <bias_sign>` or `P <ax> <ay> <az> <angle>`."""
    lines = [f"# {seq.label} cycles={seq.cycles}"]
    for e in seq.events():
        if isinstance(e, Delay):
            lines.append(f"D {e.duration:.17g} {e.bias_sign:+d}")
        else:
            ax = e.rotation.axis
            lines.append(f"P {ax[0]:.17g} {ax[1]:.17g} {ax[2]:.17g} {e.rotation.angle:.17g}")
    return "\n".join(lines) + "\n"
