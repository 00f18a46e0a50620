"""Metrics: spin average, squeezing parameter, fidelity, worst-case curves,
and threshold-crossing characteristic times.

Squeezing uses the fixed-laboratory-axes form xi^2 = 2 min{Var Jx, Var Jy,
Var Jz} / J. Note this differs from the minimal-variance-plane definition:
the minimum runs over the three lab axes including the one along the mean
spin, so an eigenstate of any J component (e.g. a CSS) evaluates to 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spin_algebra import SpinOperators, StateVector

METRIC_TOL = 1e-9

# Metric columns recorded per model family. BEC runs record the linear spin
# moments so that noise averaging happens before the nonlinear j and xi^2
# are derived; fidelity is linear in the density matrix, so it is recorded
# directly.
BEC_MOMENT_KEYS = ("jx", "jy", "jz", "jx2", "jy2", "jz2")


@dataclass(frozen=True)
class MetricRecord:
    """One time point of derived metrics."""

    t: float
    spin_avg: float | None = None
    xi2: float | None = None
    fidelity: float | None = None

    def __post_init__(self):
        for name in ("spin_avg", "fidelity"):
            v = getattr(self, name)
            if v is not None and not -METRIC_TOL <= v <= 1.0 + METRIC_TOL:
                raise ValueError(f"{name} = {v} outside [0, 1]")
        if self.xi2 is not None and self.xi2 < -METRIC_TOL:
            raise ValueError(f"xi2 = {self.xi2} negative")


@dataclass(frozen=True)
class CharacteristicTime:
    """First threshold crossing of a metric, or the horizon if never reached."""

    threshold: float
    value: float | None
    horizon: float

    @property
    def reached(self) -> bool:
        return self.value is not None


class SpinMomentRecorder:
    """Record hook computing the six spin moments; converts the operators
    to CSR once so per-record cost is O(dim)."""

    def __init__(self, spin_ops: SpinOperators):
        self._mats = (spin_ops.jx.sparse(), spin_ops.jy.sparse(), spin_ops.jz.sparse())

    def __call__(self, t: float, psi) -> dict[str, float]:
        a = psi.amplitudes if isinstance(psi, StateVector) else psi
        out = {}
        for key, mat in zip(("jx", "jy", "jz"), self._mats):
            v = mat @ a
            out[key] = float(np.vdot(a, v).real)
            out[key + "2"] = float(np.vdot(v, v).real)
        return out


def spin_moments(psi: np.ndarray | StateVector, spin_ops: SpinOperators) -> dict[str, float]:
    """First and second moments of Jx, Jy, Jz (the linear record columns)."""
    return SpinMomentRecorder(spin_ops)(0.0, psi)


def spin_average_from_moments(moments: dict[str, float], J: float) -> float:
    j = float(np.sqrt(moments["jx"] ** 2 + moments["jy"] ** 2 + moments["jz"] ** 2))
    return j / J


def squeezing_from_moments(moments: dict[str, float], J: float) -> float:
    variances = [moments[k + "2"] - moments[k] ** 2 for k in ("jx", "jy", "jz")]
    return 2.0 * min(variances) / J


def spin_average(psi: np.ndarray | StateVector, spin_ops: SpinOperators, J: float) -> float:
    """Normalized spin average j/J with j = |(<Jx>, <Jy>, <Jz>)|."""
    return spin_average_from_moments(spin_moments(psi, spin_ops), J)


def squeezing(psi: np.ndarray | StateVector, spin_ops: SpinOperators, J: float) -> float:
    """Fixed-axes squeezing parameter 2 min{Var Jx, Var Jy, Var Jz} / J."""
    return squeezing_from_moments(spin_moments(psi, spin_ops), J)


def reduced_central_density(psi_full: np.ndarray | StateVector) -> np.ndarray:
    """Trace out all bath sites; site 0 holds the most significant bit."""
    a = psi_full.amplitudes if isinstance(psi_full, StateVector) else psi_full
    dim = a.shape[0]
    if dim % 2 or dim < 2:
        raise ValueError(f"state dimension {dim} is not a central-spin register")
    mat = a.reshape(2, dim // 2)
    rho = mat @ mat.conj().T
    tr = float(rho.trace().real)
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(f"partial trace lost probability: Tr = {tr}")
    return rho


def fidelity(rho_e0: np.ndarray, psi_full: np.ndarray | StateVector, n_bath: int | None = None) -> float:
    """Overlap Tr[rho_e(0) rho_e(t)] of the reduced central-spin state."""
    rho_e0 = np.asarray(rho_e0, dtype=complex)
    if rho_e0.shape != (2, 2):
        raise ValueError("initial central density matrix must be 2x2")
    a = psi_full.amplitudes if isinstance(psi_full, StateVector) else psi_full
    if n_bath is not None and a.shape[0] != 2 ** (n_bath + 1):
        raise ValueError(f"state dim {a.shape[0]} != 2^{n_bath + 1}")
    rho_t = reduced_central_density(a)
    f = float(np.trace(rho_e0 @ rho_t).real)
    if not -METRIC_TOL <= f <= 1.0 + METRIC_TOL:
        raise ValueError(f"fidelity {f} outside [0, 1]")
    return min(max(f, 0.0), 1.0)


# Aggregation direction for the worst case over benchmark initial states:
# losing metrics fall, so worst = min; squeezing degrades upward, worst = max.
WORST_DIRECTION = {"spin_avg": "min", "fidelity": "min", "xi2": "max"}


def worst_case(trajectories, key: str):
    """Pointwise worst metric across runs on identical time grids."""
    from .propagation import Trajectory  # local import to avoid a cycle

    trajs = list(trajectories)
    if not trajs:
        raise ValueError("no trajectories")
    times = trajs[0].times
    for tr in trajs[1:]:
        if len(tr.times) != len(times) or not np.allclose(tr.times, times, rtol=0, atol=1e-12):
            raise ValueError("worst_case requires identical time grids")
    stack = np.stack([tr.columns[key] for tr in trajs])
    agg = np.min(stack, axis=0) if WORST_DIRECTION.get(key, "min") == "min" else np.max(stack, axis=0)
    return Trajectory(times=times.copy(), columns={key: agg},
                      metadata={"aggregate": "worst_case", "key": key})


def characteristic_time(traj, key: str, threshold: float, direction: str) -> CharacteristicTime:
    """First crossing of `threshold`, linearly interpolated between samples.

    direction="falling" for spin average / fidelity, "rising" for xi^2.
    """
    if direction not in ("falling", "rising"):
        raise ValueError(f"direction must be falling|rising, got {direction!r}")
    times = np.asarray(traj.times, dtype=float)
    values = np.asarray(traj.columns[key], dtype=float)
    if times.size == 0:
        raise ValueError("empty trajectory")
    horizon = float(times[-1])
    sign = 1.0 if direction == "falling" else -1.0
    # crossing when sign*(value - threshold) goes from >0 to <=0
    rel = sign * (values - threshold)
    if rel[0] <= 0.0:
        return CharacteristicTime(threshold=threshold, value=0.0, horizon=horizon)
    below = np.nonzero(rel <= 0.0)[0]
    if below.size == 0:
        return CharacteristicTime(threshold=threshold, value=None, horizon=horizon)
    i = int(below[0])
    t0, t1 = times[i - 1], times[i]
    v0, v1 = values[i - 1], values[i]
    frac = (threshold - v0) / (v1 - v0)
    return CharacteristicTime(threshold=threshold, value=float(t0 + frac * (t1 - t0)),
                              horizon=horizon)
