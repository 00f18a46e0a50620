"""Time evolution under piecewise-constant Hamiltonians.

Two engines: a dense eigendecomposition propagator (the oracle, and the
workhorse for the collective-spin model where the Hamiltonian is small and
constant over whole noise segments), and a sparse Chebyshev expansion (the
workhorse for central-spin registers). run_sequence drives a Sequence
against a model, splitting delays at stray-field segment boundaries and
recording at cycle boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import jv

from . import models as _models
from .noise import NoiseRealization
from .sequences import Delay, Pulse, Sequence
from .spin_algebra import Operator, Rotation, StateVector, rotation_matrix, spin_half_matrices
from .spin_algebra import single_site_operator

MAX_EXACT_DIM = 4096
NORM_DRIFT_TOL = 1e-10


class ChebyshevError(RuntimeError):
    """Chebyshev expansion failed to converge within the term budget."""


@dataclass(frozen=True)
class PropagatorConfig:
    engine: str = "auto"  # auto | exact | chebyshev
    cheb_tol: float = 1e-12
    spectral_margin: float = 1.05

    def __post_init__(self):
        if self.engine not in ("auto", "exact", "chebyshev"):
            raise ValueError(f"unknown engine {self.engine!r}")
        if not 0.0 < self.cheb_tol <= 1e-6:
            raise ValueError("cheb_tol must lie in (0, 1e-6]")
        if self.spectral_margin < 1.0:
            raise ValueError("spectral margin must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Time-stamped observable records for one run (or an average of runs)."""

    times: np.ndarray
    columns: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if t.ndim != 1 or (t.size > 1 and not np.all(np.diff(t) > 0)):
            raise ValueError("times must be strictly increasing")
        object.__setattr__(self, "times", t)
        cols = {k: np.asarray(v, dtype=float) for k, v in self.columns.items()}
        for k, v in cols.items():
            if v.shape != t.shape:
                raise ValueError(f"column {k!r} length mismatch")
        object.__setattr__(self, "columns", cols)


def _as_array(psi) -> np.ndarray:
    return psi.amplitudes if isinstance(psi, StateVector) else np.asarray(psi, dtype=complex)


class ExactPropagator:
    """exp(-iHt) via one eigendecomposition, reusable across durations."""

    def __init__(self, h):
        h = h.dense() if isinstance(h, Operator) else np.asarray(h)
        if sp.issparse(h):
            h = h.toarray()
        if h.shape[0] > MAX_EXACT_DIM:
            raise ValueError(f"dense propagator refused at dim {h.shape[0]} > {MAX_EXACT_DIM}")
        self.evals, self.evecs = np.linalg.eigh(h)
        self.evecs_h = np.ascontiguousarray(self.evecs.conj().T)

    def apply(self, psi: np.ndarray, t: float) -> np.ndarray:
        c = self.evecs_h @ psi
        return self.evecs @ (np.exp(-1j * t * self.evals) * c)

    def matrix(self, t: float) -> np.ndarray:
        return (self.evecs * np.exp(-1j * t * self.evals)) @ self.evecs_h


def evolve_exact(h, psi, t: float) -> StateVector:
    """Oracle propagation exp(-iHt) psi by dense eigendecomposition."""
    out = ExactPropagator(h).apply(_as_array(psi), t)
    n = np.linalg.norm(out)
    if abs(n - 1.0) > NORM_DRIFT_TOL:
        raise ValueError(f"exact propagation norm drift {abs(n - 1.0):.3e}")
    return StateVector(out / n)


def spectral_bound(h, margin: float = 1.05) -> float:
    """Safe bound on the spectral radius: max absolute row sum times margin."""
    if isinstance(h, Operator):
        h = h.matrix
    if sp.issparse(h):
        rowsum = np.abs(h).sum(axis=1)
        bound = float(rowsum.max())
    else:
        bound = float(np.abs(h).sum(axis=1).max())
    return bound * margin


def _chebyshev_coefficients(theta: float, tol: float, max_terms: int) -> np.ndarray:
    """Coefficients c_k = (2 - d_k0) (-i)^k J_k(theta), truncated at the last
    |c_k| >= tol. Larger tol never yields more terms."""
    if theta == 0.0:
        return np.ones(1, dtype=complex)
    K = int(math.ceil(theta)) + 32
    while True:
        k = np.arange(K + 1)
        bes = jv(k, theta)
        mags = np.abs(bes) * np.where(k == 0, 1.0, 2.0)
        keep = np.nonzero(mags >= tol)[0]
        cutoff = int(keep[-1]) if keep.size else 0
        if cutoff < K - 8:
            break
        if K >= max_terms:
            raise ChebyshevError(
                f"expansion needs > {max_terms} terms at theta = {theta:.6g}")
        K = int(K * 1.6) + 16
    if cutoff + 1 > max_terms:
        raise ChebyshevError(
            f"expansion needs {cutoff + 1} terms, budget {max_terms} at theta = {theta:.6g}")
    k = np.arange(cutoff + 1)
    return (2.0 - (k == 0)) * (-1j) ** k * bes[: cutoff + 1]


def evolve_chebyshev(h, psi, t: float, cfg: PropagatorConfig = PropagatorConfig(),
                     bound: float | None = None) -> StateVector:
    """exp(-iHt) psi by Chebyshev expansion of the rescaled Hamiltonian.

    H is rescaled by a spectral-radius bound so its spectrum fits [-1, 1];
    the expansion in Chebyshev polynomials with Bessel-function coefficients
    is iterated by the three-term recurrence until the coefficients fall
    below cheb_tol. Norm drift beyond 1e-10 raises instead of renormalizing.
    """
    mat = h.sparse() if isinstance(h, Operator) else sp.csr_matrix(h)
    a = _as_array(psi)
    if bound is None:
        bound = spectral_bound(mat, cfg.spectral_margin)
    if bound == 0.0 or t == 0.0:
        return StateVector(a.copy())
    theta = bound * abs(t)
    max_terms = int(10.0 * theta + 100)
    coeffs = _chebyshev_coefficients(theta, cfg.cheb_tol, max_terms)
    if t < 0:
        coeffs = coeffs.conj()
    inv = 1.0 / bound
    phi_prev = a
    acc = coeffs[0] * phi_prev
    if len(coeffs) > 1:
        phi = (mat @ a) * inv
        acc = acc + coeffs[1] * phi
        for ck in coeffs[2:]:
            phi_next = 2.0 * inv * (mat @ phi) - phi_prev
            acc = acc + ck * phi_next
            phi_prev, phi = phi, phi_next
    n = np.linalg.norm(acc)
    if abs(n - 1.0) > NORM_DRIFT_TOL:
        raise ChebyshevError(f"norm drift {abs(n - 1.0):.3e} exceeds {NORM_DRIFT_TOL}")
    return StateVector(acc / n)


class _BecEngine:
    requires_noise = True
    supports_cycle_cache = True

    def __init__(self, model: _models.BecModel, cfg: PropagatorConfig):
        self.model = model
        self.cfg = cfg
        self.ops = model.spin_ops()
        self._pulse_memo: dict = {}
        self._delay_memo: dict = {}
        self._cycle_memo: dict = {}

    def pulse_matrix(self, rot: Rotation):
        key = (rot.axis, rot.angle)
        if key not in self._pulse_memo:
            self._pulse_memo[key] = rotation_matrix(rot, self.ops)
        return self._pulse_memo[key]

    def delay_propagator(self, seg_key, b, sign: int):
        key = (seg_key, sign)
        if key not in self._delay_memo:
            h = _models.bec_hamiltonian(self.model, b, bias_sign=sign)
            self._delay_memo[key] = ExactPropagator(h)
        return self._delay_memo[key]

    def apply_delay(self, psi, dt, seg_key, b, sign):
        if self.cfg.engine == "chebyshev":
            h = _models.bec_hamiltonian(self.model, b, bias_sign=sign).sparse()
            return evolve_chebyshev(h, psi, dt, self.cfg).amplitudes
        return self.delay_propagator(seg_key, b, sign).apply(psi, dt)

    def cycle_matrix(self, seg_key, b, cycle_events, token):
        """Full-cycle propagator for a cycle contained in one noise segment.

        One matrix-vector product then advances a whole cycle; repeated
        cycles within a segment dominate the long decoupled runs."""
        key = (seg_key, token)
        if key not in self._cycle_memo:
            u = np.eye(self.ops.dim, dtype=complex)
            for e in cycle_events:
                if isinstance(e, Pulse):
                    u = self.pulse_matrix(e.rotation) @ u
                else:
                    u = self.delay_propagator(seg_key, b, e.bias_sign).matrix(e.duration) @ u
            self._cycle_memo[key] = u
        return self._cycle_memo[key]


class _CentralSpinEngine:
    requires_noise = False

    def __init__(self, model, cfg: PropagatorConfig):
        self.cfg = cfg
        self.n_bath = model.N
        if isinstance(model, _models.QdModel):
            base = _models.qd_hamiltonian(model, include_bias=False)
        else:
            base = _models.nv_hamiltonian(model)
        self.omega = model.omega
        sz0 = _models.central_sz(model.N)
        self._h = {+1: (base.sparse() + self.omega * sz0).tocsr(),
                   -1: (base.sparse() - self.omega * sz0).tocsr()}
        self._bounds = {s: spectral_bound(m, cfg.spectral_margin) for s, m in self._h.items()}
        self._exact: dict = {}
        self._pulse_memo: dict = {}

    def pulse_matrix(self, rot: Rotation):
        key = (rot.axis, rot.angle)
        if key not in self._pulse_memo:
            ops2 = _spin_half_ops()
            u2 = rotation_matrix(rot, ops2)
            self._pulse_memo[key] = single_site_operator(self.n_bath, 0, u2).sparse()
        return self._pulse_memo[key]

    def apply_delay(self, psi, dt, seg_key, b, sign):
        use_exact = self.cfg.engine == "exact" or (
            self.cfg.engine == "auto" and self._h[sign].shape[0] <= 2048)
        if use_exact:
            if sign not in self._exact:
                self._exact[sign] = ExactPropagator(self._h[sign].toarray())
            return self._exact[sign].apply(psi, dt)
        return evolve_chebyshev(self._h[sign], psi, dt, self.cfg,
                                bound=self._bounds[sign]).amplitudes


_SPIN_HALF_CACHE = {}


def _spin_half_ops():
    """SpinOperators view of a single spin-1/2 (for 2x2 pulse matrices)."""
    if "ops" not in _SPIN_HALF_CACHE:
        from .spin_algebra import collective_spin_operators
        _SPIN_HALF_CACHE["ops"] = collective_spin_operators(0.5)
    return _SPIN_HALF_CACHE["ops"]


def make_engine(model, cfg: PropagatorConfig):
    """Propagation engine for a model; reusable across runs of the same
    model. A collective-spin engine caches delay propagators per stray-field
    segment, so only share it across runs that use the same realization."""
    if isinstance(model, _models.BecModel):
        return _BecEngine(model, cfg)
    if isinstance(model, (_models.QdModel, _models.NvModel)):
        return _CentralSpinEngine(model, cfg)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def run_sequence(model, sequence: Sequence, psi0, noise: NoiseRealization | None,
                 cfg: PropagatorConfig = PropagatorConfig(),
                 record_hook=None, engine=None, cycle_token=None) -> Trajectory:
    """Propagate psi0 through all cycles of `sequence` against `model`.

    Delays evolve under the model Hamiltonian assembled with the active
    stray-field segment (collective-spin model only) and the delay's bias
    sign; pulses rotate the central/collective spin instantaneously.
    record_hook(t, psi) is invoked at t = 0 and at every cycle boundary and
    may return a dict of metric columns. Pass `engine` (from make_engine) to
    reuse cached propagators across runs; with a `cycle_token` (unique per
    cycle structure within the engine's lifetime) whole-cycle propagators
    are cached for cycles that fit inside one noise segment.
    """
    if engine is None:
        engine = make_engine(model, cfg)
    if engine.requires_noise and noise is None:
        raise ValueError("collective-spin runs need a stray-field realization")
    if not engine.requires_noise and noise is not None:
        raise ValueError("central-spin models carry their own quantum bath; noise must be None")
    if noise is not None and noise.total_time < sequence.total_time - 1e-9:
        raise ValueError(
            f"noise realization covers {noise.total_time}, sequence needs {sequence.total_time}")

    psi = _as_array(psi0).copy()
    dim_expected = model.dim
    if psi.shape[0] != dim_expected:
        raise ValueError(f"state dim {psi.shape[0]} != model dim {dim_expected}")

    fast = (cycle_token is not None and noise is not None
            and getattr(engine, "supports_cycle_cache", False)
            and cfg.engine != "chebyshev" and sequence.cycles > 1)
    cycle_time = sequence.cycle_time

    times = [0.0]
    rows = [record_hook(0.0, psi)] if record_hook else [None]

    seg_i = 0
    t = 0.0
    for ci in range(sequence.cycles):
        handled = False
        if fast:
            t_start = ci * cycle_time
            t_end = (ci + 1) * cycle_time
            while seg_i < len(noise.segments) - 1 and t_start >= noise.segments[seg_i][1] - 1e-12:
                seg_i += 1
            start, end, b = noise.segments[seg_i]
            if t_end <= end + 1e-12:
                psi = engine.cycle_matrix(seg_i, b, sequence.cycle, cycle_token) @ psi
                t = t_end
                handled = True
        if not handled:
            for event in sequence.cycle:
                if isinstance(event, Pulse):
                    psi = engine.pulse_matrix(event.rotation) @ psi
                    continue
                remaining = event.duration
                while remaining > 1e-15:
                    if noise is None:
                        dt = remaining
                        seg_key, b = 0, None
                    else:
                        while seg_i < len(noise.segments) - 1 and t >= noise.segments[seg_i][1] - 1e-12:
                            seg_i += 1
                        start, end, b = noise.segments[seg_i]
                        dt = min(remaining, end - t)
                        seg_key = seg_i
                    psi = engine.apply_delay(psi, dt, seg_key, b, event.bias_sign)
                    t += dt
                    remaining -= dt
        t_rec = (ci + 1) * cycle_time
        n = np.linalg.norm(psi)
        if abs(n - 1.0) > NORM_DRIFT_TOL:
            raise ValueError(f"norm drift {abs(n - 1.0):.3e} at t = {t_rec}")
        times.append(t_rec)
        if record_hook:
            rows.append(record_hook(t_rec, psi))

    columns: dict[str, np.ndarray] = {}
    if record_hook and rows[0] is not None:
        keys = rows[0].keys()
        columns = {k: np.array([r[k] for r in rows], dtype=float) for k in keys}
    meta = {"sequence": sequence.label, "cycles": sequence.cycles,
            "model": type(model).__name__}
    if noise is not None:
        meta["realization"] = noise.realization_id
    return Trajectory(times=np.array(times), columns=columns, metadata=meta)


def average_trajectories(trajectories) -> Trajectory:
    """Pointwise mean of all columns, reduced in realization-index order."""
    trajs = list(trajectories)
    if not trajs:
        raise ValueError("nothing to average")
    order = sorted(range(len(trajs)),
                   key=lambda i: trajs[i].metadata.get("realization", i))
    first = trajs[order[0]]
    for tr in trajs:
        if len(tr.times) != len(first.times) or not np.array_equal(tr.times, first.times):
            raise ValueError("trajectories must share one time grid")
        if set(tr.columns) != set(first.columns):
            raise ValueError("trajectories must share the same columns")
    columns = {}
    for key in first.columns:
        stack = np.stack([trajs[i].columns[key] for i in order])
        columns[key] = np.add.reduce(stack, axis=0) / len(trajs)
    meta = dict(first.metadata)
    meta.pop("realization", None)
    meta["averaged"] = len(trajs)
    return Trajectory(times=first.times.copy(), columns=columns, metadata=meta)
