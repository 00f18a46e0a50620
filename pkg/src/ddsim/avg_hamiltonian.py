"""Numerical checks of the uniaxial cycle's effective Hamiltonian.

At the magic condition (bias precession an identity over one delay) the
cycle propagator U_2tau = Y U_tau Y U_tau is compared against
exp(-i 2 tau Hbar), where Hbar comes from the rotating-frame expansion:

classical field b, bias Larmor frequency omega = gamma B:
    H_F0  = gamma b_z Jz
    H_F1  = gamma (b_z/B)(b_x Jx + b_y Jy) + gamma Jz (b_x^2 + b_y^2)/(2B)
    Hbar  = c2' J^2 + (b_z/B) gamma b_y Jy

quantum bath fields h_a = sum_k A_k I_ka:
    H_F0  = h_z Sz
    H_F1  = Sx(h_z h_x + h_x h_z)/(2w) + Sy(h_z h_y + h_y h_z)/(2w)
            + Sz(h_x^2 + h_y^2)/(2w) + i(h_x h_y - h_y h_x)/(4w)
    Hbar  = Sy(h_z h_y + h_y h_z)/(2w) + i(h_x h_y - h_y h_x)/(4w)

The i[h_x, h_y] term is Hermitian because the commutator is anti-Hermitian.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import BecModel, QdModel, bec_hamiltonian, central_sz, overhauser_operators
from .models import nv_hamiltonian, qd_hamiltonian, NvModel
from .propagation import ExactPropagator
from .sequences import Delay, Pulse
from .spin_algebra import Operator, rotation_matrix
from .propagation import make_engine, PropagatorConfig

MAX_DENSE_BATH = 10


@dataclass(frozen=True)
class FerTerms:
    hf0: Operator
    hf1: Operator
    hbar: Operator
    omega: float


def classical_fer_terms(model: BecModel, b) -> FerTerms:
    if model.omega == 0:
        raise ValueError("the rotating-frame expansion needs a nonzero bias")
    b = np.asarray(b, dtype=float)
    ops = model.spin_ops()
    jx, jy, jz = ops.jx.dense(), ops.jy.dense(), ops.jz.dense()
    g = model.gamma
    B = model.omega / g
    hf0 = g * b[2] * jz
    hf1 = g * (b[2] / B) * (b[0] * jx + b[1] * jy) + g * jz * (b[0] ** 2 + b[1] ** 2) / (2 * B)
    hbar = model.c2p * ops.jsq.dense() + (b[2] / B) * g * b[1] * jy
    return FerTerms(hf0=Operator(hf0, hermitian=True),
                    hf1=Operator(hf1, hermitian=True),
                    hbar=Operator(hbar, hermitian=True),
                    omega=model.omega)


def quantum_fer_terms(model: QdModel) -> FerTerms:
    if model.omega == 0:
        raise ValueError("the rotating-frame expansion needs a nonzero bias")
    if model.N > MAX_DENSE_BATH:
        raise ValueError(f"dense assembly refused for N = {model.N} > {MAX_DENSE_BATH}")
    w = model.omega
    hx, hy, hz = (h.toarray() for h in overhauser_operators(model))
    from .models import _site_ops
    sx, sy, sz = (o.toarray() for o in _site_ops(model.N, 0))
    hf0 = sz @ (hz)
    hf1 = (sx @ (hz @ hx + hx @ hz) / (2 * w)
           + sy @ (hz @ hy + hy @ hz) / (2 * w)
           + sz @ (hx @ hx + hy @ hy) / (2 * w)
           + 1j * (hx @ hy - hy @ hx) / (4 * w))
    hbar = (sy @ (hz @ hy + hy @ hz) / (2 * w)
            + 1j * (hx @ hy - hy @ hx) / (4 * w))
    return FerTerms(hf0=Operator(hf0, hermitian=True),
                    hf1=Operator(hf1, hermitian=True),
                    hbar=Operator(hbar, hermitian=True),
                    omega=w)


def cycle_propagator_exact(model, cycle_events, b=None) -> Operator:
    """Literal product of the cycle's pulse and delay unitaries (dense)."""
    engine = make_engine(model, PropagatorConfig(engine="exact"))
    dim = model.dim
    if dim > 4096:
        raise ValueError(f"dense cycle propagator refused at dim {dim}")
    u = np.eye(dim, dtype=complex)
    props: dict = {}
    for event in cycle_events:
        if isinstance(event, Pulse):
            m = engine.pulse_matrix(event.rotation)
            m = m.toarray() if hasattr(m, "toarray") else m
            u = m @ u
        else:
            sign = event.bias_sign
            if sign not in props:
                if isinstance(model, BecModel):
                    if b is None:
                        raise ValueError("collective-spin cycle needs a static stray field")
                    props[sign] = ExactPropagator(bec_hamiltonian(model, b, bias_sign=sign))
                elif isinstance(model, QdModel):
                    h = qd_hamiltonian(model, include_bias=False).dense() \
                        + sign * model.omega * central_sz(model.N).toarray()
                    props[sign] = ExactPropagator(h)
                else:
                    h = nv_hamiltonian(model).dense() \
                        + sign * model.omega * central_sz(model.N).toarray()
                    props[sign] = ExactPropagator(h)
            u = props[sign].matrix(event.duration) @ u
    return Operator(u)


def effective_cycle_distance(model, cycle_events, fer: FerTerms, b=None) -> float:
    """Spectral-norm distance || U_cycle - exp(-i T Hbar) || over one cycle,
    minimized over a global phase.

    For a half-integer central spin the exact cycle carries physically
    irrelevant signs (the pulse pair squares to -1, the 2 pi bias winding
    to -1 per delay) that the effective form drops; the trace-aligned phase
    removes them.
    """
    u = cycle_propagator_exact(model, cycle_events, b=b).dense()
    T = sum(e.duration for e in cycle_events if isinstance(e, Delay))
    ueff = ExactPropagator(fer.hbar).matrix(T)
    overlap = np.trace(ueff.conj().T @ u)
    phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
    return float(np.linalg.norm(u - phase * ueff, 2))


def suppression_factor(model, b=None, omega_list=None, n_magic: int = 1):
    """Scan the magic line omega = 2 pi n / tau: per point, the distance
    d(omega) between the exact cycle and exp(-i 2 tau Hbar), plus the
    effective-coupling ratio |Hbar stray part| / |full stray coupling|.

    Returns a list of dicts with keys omega, tau, distance, coupling_ratio.
    """
    from dataclasses import replace
    from .sequences import uni_dd

    if omega_list is None:
        base = 2 * np.pi / 0.05
        omega_list = [base * 2 ** k for k in range(5)]
    rows = []
    for omega in omega_list:
        tau = 2 * np.pi * n_magic / omega
        m = replace(model, omega=omega)
        cycle = uni_dd(tau, 1).cycle
        if isinstance(m, BecModel):
            fer = classical_fer_terms(m, b)
            stray_eff = fer.hbar.dense() - m.c2p * m.spin_ops().jsq.dense()
            bvec = np.asarray(b, dtype=float)
            full = m.gamma * (bvec[0] * m.spin_ops().jx.dense()
                              + bvec[1] * m.spin_ops().jy.dense()
                              + bvec[2] * m.spin_ops().jz.dense())
        else:
            fer = quantum_fer_terms(m)
            stray_eff = fer.hbar.dense()
            hx, hy, hz = (h.toarray() for h in overhauser_operators(m))
            from .models import _site_ops
            sx, sy, sz = (o.toarray() for o in _site_ops(m.N, 0))
            full = sx @ hx + sy @ hy + sz @ hz
        d = effective_cycle_distance(m, cycle, fer, b=b)
        denom = np.linalg.norm(full, 2)
        ratio = float(np.linalg.norm(stray_eff, 2) / denom) if denom > 0 else 0.0
        rows.append({"omega": float(omega), "tau": float(tau),
                     "distance": d, "coupling_ratio": ratio})
    return rows
