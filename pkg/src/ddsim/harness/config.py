"""Flat, typed key = value experiment configuration.

File format (version 1): one `key = value` per line, `#` starts a comment,
blank lines ignored. Unknown keys are errors. Lists are comma-separated;
`inf` is a valid float. A config names a preset in `experiment` and may
override any of its parameters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

CONFIG_VERSION = 1

EXPERIMENT_IDS = ("fig2a", "fig2b", "fig2c", "fig2d", "fig3a", "fig3b",
                  "fig4", "s1", "s2", "s3", "s4", "custom")

PROTOCOLS = ("fe", "uni_dd", "uni_dd_mod", "hahn", "pdd", "sdd", "cdd2",
             "suni_dd", "cuni_dd2", "cudd", "qdd", "uni_dd_budget")


def _float(s: str) -> float:
    return float(s)


def _int(s: str) -> int:
    return int(s)


def _bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes"):
        return True
    if low in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _str(s: str) -> str:
    return s.strip()


def _float_list(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _str_list(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


@dataclass
class ExperimentConfig:
    """Full parameter set of one experiment run.

    Presets fully enumerate their parameters; every non-default value lands
    in the CSV header block as provenance.
    """

    config_version: int = CONFIG_VERSION
    experiment: str = "custom"
    scale: str = "desk"
    seed: int = 12345
    workers: int = 1
    out: str = ""

    # model
    model: str = "bec"  # bec | qd | nv
    J: float = 100.0
    c2p: float = -0.5
    b_c: float = 1.0
    tau_c: float = math.inf
    realizations: int = 20
    bath_samples: int = 1
    N: int = 12
    grid_nx: int = 4
    grid_ny: int = 3
    hyperfine_wx: float = 1.5 * math.sqrt(2.0)
    hyperfine_wy: float = 2.0 * math.sqrt(2.0)
    hyperfine_x0: float = 0.1
    hyperfine_y0: float = 0.2
    hyperfine_scale: float = 1.0
    dipolar_max: float = 0.01
    dipolar_scale: float = 1.0
    nv_coupling_max: float = 1.0
    max_bath: int = 16

    # sequences / scan
    protocol: str = "uni_dd"
    protocols: tuple[str, ...] = ()
    tau: float = 0.05
    epsilon: float = 0.0
    epsilons: tuple[float, ...] = ()
    modified: bool = False
    omega: float = 0.0  # 0 means "magic value from tau" for uniaxial runs
    omega_offsets: tuple[float, ...] = ()
    omega_scan_min: float = -15.0
    omega_scan_max: float = 15.0
    omega_scan_step: float = 0.5
    n_magic: int = 1
    tau_c_list: tuple[float, ...] = ()
    np_budget: int = 0
    cudd_n: int = 52
    qdd_n: int = 13
    t_grid: tuple[float, ...] = ()
    horizon: float = 50.0
    record_dt: float = 0.1

    # metric / initial state
    initial_state: str = "css"  # css | sss
    target_xi2: float = 0.01
    sss_method: str = "tat"
    metric: str = "spin_avg"  # spin_avg | xi2 | fidelity
    threshold: float = 0.9
    direction: str = "falling"

    # propagation
    engine: str = "auto"
    cheb_tol: float = 1e-12
    spectral_margin: float = 1.05

    def __post_init__(self):
        if self.config_version != CONFIG_VERSION:
            raise ValueError(f"unsupported config_version {self.config_version}")
        if self.experiment not in EXPERIMENT_IDS:
            raise ValueError(f"unknown experiment id {self.experiment!r}; "
                             f"valid ids: {', '.join(EXPERIMENT_IDS)}")
        if self.model not in ("bec", "qd", "nv"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.scale not in ("desk", "paper"):
            raise ValueError(f"scale must be desk|paper, got {self.scale!r}")
        for p in (self.protocol, *self.protocols):
            if p not in PROTOCOLS:
                raise ValueError(f"unknown protocol {p!r}")
        if self.workers < 1 or self.realizations < 1 or self.bath_samples < 1:
            raise ValueError("workers, realizations, bath_samples must be >= 1")

    def header_items(self) -> list[tuple[str, str]]:
        # execution details (output path, worker count) are not provenance:
        # the CSV bytes must be a pure function of the physics parameters
        skip = {"out", "workers"}
        out = []
        for f in fields(self):
            if f.name in skip:
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(str(x) for x in v)
            out.append((f.name, str(v)))
        return out


_PARSERS = {
    int: _int, float: _float, str: _str, bool: _bool,
    tuple[str, ...]: _str_list, tuple[float, ...]: _float_list,
}


def _field_parsers() -> dict:
    table = {}
    for f in fields(ExperimentConfig):
        if f.type in ("int",):
            table[f.name] = _int
        elif f.type in ("float",):
            table[f.name] = _float
        elif f.type in ("str",):
            table[f.name] = _str
        elif f.type in ("bool",):
            table[f.name] = _bool
        elif "tuple[str" in str(f.type):
            table[f.name] = _str_list
        elif "tuple[float" in str(f.type):
            table[f.name] = _float_list
        else:
            raise TypeError(f"unhandled config field type {f.type} for {f.name}")
    return table


FIELD_PARSERS = _field_parsers()


def parse_config_text(text: str) -> dict:
    """Parse config lines to a {field: typed value} dict; unknown keys error."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if key not in FIELD_PARSERS:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = FIELD_PARSERS[key](val.strip())
        except ValueError as exc:
            raise ValueError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    return values


def load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config_text(fh.read())
