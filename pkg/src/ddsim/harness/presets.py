"""Experiment presets. Each preset fully enumerates its parameters; `scale`
switches between desk-sized defaults (minutes on a laptop) and the original
heavy parameter set (J=1000, N=20, r=100), which runs but prints a resource
warning.
"""

from __future__ import annotations

import math

from .config import ExperimentConfig

_SQ2 = math.sqrt(2.0)

# detunings shown in the trajectory panels
_OFFSETS = (-2.0, -1.0, 0.0, 1.0, 2.0)


def _bec_base(scale: str) -> dict:
    d = dict(model="bec", tau=0.05, n_magic=1, c2p=-0.5, b_c=1.0,
             tau_c=math.inf, engine="auto")
    if scale == "paper":
        d.update(J=1000.0, realizations=100)
    else:
        d.update(J=100.0, realizations=20)
    return d


def _qd_base(scale: str) -> dict:
    d = dict(model="qd", tau=0.05, n_magic=1, bath_samples=1,
             hyperfine_wx=1.5 * _SQ2, hyperfine_wy=2.0 * _SQ2,
             hyperfine_x0=0.1, hyperfine_y0=0.2, hyperfine_scale=1.0,
             dipolar_max=0.01, dipolar_scale=1.0, engine="auto")
    if scale == "paper":
        d.update(N=20, grid_nx=4, grid_ny=5, max_bath=20)
    else:
        d.update(N=10, grid_nx=5, grid_ny=2)
    return d


def fig2a(scale="desk") -> dict:
    d = _bec_base(scale)
    d.update(experiment="fig2a", initial_state="css", metric="spin_avg",
             threshold=0.9, direction="falling", omega_offsets=_OFFSETS,
             horizon=240.0 if scale == "desk" else 600.0, record_dt=0.1)
    return d


def fig2b(scale="desk") -> dict:
    d = fig2a(scale)
    d.update(experiment="fig2b", omega_offsets=(),
             omega_scan_min=-15.0, omega_scan_max=15.0, omega_scan_step=0.5)
    return d


def fig2c(scale="desk") -> dict:
    d = _bec_base(scale)
    d.update(experiment="fig2c", initial_state="sss", metric="xi2",
             threshold=0.05, direction="rising", omega_offsets=_OFFSETS,
             sss_method="tat",
             target_xi2=0.01 if scale == "desk" else 0.00091,
             horizon=30.0 if scale == "desk" else 100.0, record_dt=0.1)
    return d


def fig2d(scale="desk") -> dict:
    d = fig2c(scale)
    d.update(experiment="fig2d", omega_offsets=(),
             omega_scan_min=-15.0, omega_scan_max=15.0, omega_scan_step=0.5)
    return d


def fig3a(scale="desk") -> dict:
    d = _qd_base(scale)
    d.update(experiment="fig3a", initial_state="css", metric="fidelity",
             threshold=0.9, direction="falling", omega_offsets=_OFFSETS,
             protocols=("fe", "hahn", "pdd"),
             horizon=40.0, record_dt=0.1)
    return d


def fig3b(scale="desk") -> dict:
    d = _qd_base(scale)
    d.update(experiment="fig3b", metric="fidelity", threshold=0.9,
             direction="falling",
             omega_scan_min=-15.0, omega_scan_max=15.0, omega_scan_step=1.0,
             horizon=120.0, record_dt=0.1)
    return d


def fig4(scale="desk") -> dict:
    d = _qd_base(scale)
    d.update(experiment="fig4", metric="fidelity", threshold=0.9,
             direction="falling", epsilons=(0.0, 0.01, 0.03),
             horizon=10.0, record_dt=0.1)
    return d


def s1(scale="desk") -> dict:
    d = _bec_base(scale)
    if scale == "desk":
        d.update(realizations=20)
    d.update(experiment="s1", initial_state="css", metric="spin_avg",
             threshold=0.9, direction="falling",
             tau_c_list=(0.5, 3.0, 30.0), horizon=100.0, record_dt=0.1,
             t_grid=tuple(round(0.5 * k, 10) for k in range(1, 201)))
    return d


def s2(scale="desk") -> dict:
    d = _qd_base(scale)
    d.update(experiment="s2", metric="fidelity", threshold=0.9,
             direction="falling",
             protocols=("uni_dd", "hahn", "suni_dd", "cuni_dd2",
                        "pdd", "sdd", "cdd2", "fe"),
             horizon=60.0, record_dt=0.1)
    return d


def s3(scale="desk") -> dict:
    d = _qd_base(scale)
    d.update(experiment="s3", metric="fidelity", threshold=0.9,
             direction="falling", dipolar_scale=5.0, np_budget=210,
             cudd_n=52, qdd_n=13,
             protocols=("uni_dd_budget", "cudd", "qdd"),
             t_grid=(1.0, 2.0, 4.0, 7.0, 10.0, 14.0, 20.0, 28.0, 40.0, 56.0, 80.0))
    return d


def s4(scale="desk") -> dict:
    d = dict(model="nv", N=10, nv_coupling_max=1.0, bath_samples=1,
             tau=0.05, n_magic=1, engine="auto")
    if scale == "paper":
        d.update(N=16)
    d.update(experiment="s4", metric="fidelity", threshold=0.9,
             direction="falling", horizon=30.0, record_dt=0.1)
    return d


PRESETS = {
    "fig2a": fig2a, "fig2b": fig2b, "fig2c": fig2c, "fig2d": fig2d,
    "fig3a": fig3a, "fig3b": fig3b, "fig4": fig4,
    "s1": s1, "s2": s2, "s3": s3, "s4": s4,
}

PRESET_NOTES = {
    "fig2a": "collective spin, spin-average trajectories at detunings around the magic bias",
    "fig2b": "collective spin, T0.9 versus bias frequency (magic resonance)",
    "fig2c": "collective spin, squeezing-parameter trajectories (initial squeezed state)",
    "fig2d": "collective spin, T0.05 versus bias frequency (initial squeezed state)",
    "fig3a": "central spin, worst-case fidelity trajectories plus FE/Hahn/PDD",
    "fig3b": "central spin, T0.9 versus bias frequency",
    "fig4":  "central spin, pulse-angle-error robustness (plain vs sign-alternated cycle)",
    "s1":    "collective spin, uniaxial cycle vs Hahn echo over noise correlation times",
    "s2":    "central spin, equidistant protocol comparison",
    "s3":    "central spin, fixed pulse budget: uniaxial vs Uhrig-family sequences",
    "s4":    "dipolar-bath central spin, FE vs uniaxial cycle",
}


def build_config(values: dict) -> ExperimentConfig:
    """Merge preset defaults (when experiment != custom) with explicit values."""
    exp = values.get("experiment", "custom")
    scale = values.get("scale", "desk")
    merged: dict = {}
    if exp in PRESETS:
        merged.update(PRESETS[exp](scale))
    merged.update(values)
    return ExperimentConfig(**merged)
