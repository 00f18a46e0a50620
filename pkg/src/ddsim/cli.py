"""Command line entry point.

    ddsim run --config FILE [--seed S] [--workers W] [--out PATH]
    ddsim presets
    ddsim verify [--out PATH]
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import models
from .avg_hamiltonian import classical_fer_terms, quantum_fer_terms, effective_cycle_distance
from .harness import PRESET_NOTES, PRESETS, build_config, load_config, run_experiment
from .sequences import uni_dd


def _cmd_run(args) -> int:
    values = load_config(args.config)
    if args.seed is not None:
        values["seed"] = args.seed
    if args.workers is not None:
        values["workers"] = args.workers
    if args.out is not None:
        values["out"] = args.out
    cfg = build_config(values)
    path = run_experiment(cfg)
    print(f"wrote {path}")
    return 0


def _cmd_presets(_args) -> int:
    width = max(len(k) for k in PRESETS)
    for name in PRESETS:
        print(f"{name:<{width}}  {PRESET_NOTES[name]}")
    return 0


def _cmd_verify(args) -> int:
    """Effective-Hamiltonian check: cycle propagator vs exp(-i 2 tau Hbar)
    along the magic line, classical (J=20) and quantum (N=4) routes."""
    tau0 = 0.05
    omegas = [2 * np.pi / tau0 * 2 ** k for k in range(5)]
    rng = np.random.default_rng(args.seed)
    b = rng.uniform(-1.0, 1.0, 3)
    b /= max(1.0, np.linalg.norm(b))
    rows = []
    ok = True

    print(f"classical route: J=20, b = ({b[0]:.4f}, {b[1]:.4f}, {b[2]:.4f})")
    prev = np.inf
    for om in omegas:
        tau = 2 * np.pi / om
        m = models.BecModel(J=20, omega=om)
        d = effective_cycle_distance(m, uni_dd(tau, 1).cycle,
                                     classical_fer_terms(m, b), b=b)
        flag = "ok" if d <= 0.05 and d <= prev + 1e-15 else "FAIL"
        ok &= flag == "ok"
        print(f"  omega = {om:10.4f}  tau = {tau:.6f}  d = {d:.3e}  [{flag}]")
        rows.append(("classical", om, tau, d))
        prev = d

    A = tuple(models.hyperfine_couplings(2, 2, args.wx, args.wy, 0.1, 0.2))
    print(f"quantum route: N=4, couplings = {np.round(A, 4)}")
    prev = np.inf
    for om in omegas:
        tau = 2 * np.pi / om
        qd = models.QdModel(N=4, couplings=A,
                            dipolar=models.sample_dipolar_couplings(2, 2, 0.01, seed=args.seed),
                            omega=om)
        d = effective_cycle_distance(qd, uni_dd(tau, 1).cycle, quantum_fer_terms(qd))
        flag = "ok" if d <= 0.05 and d <= prev + 1e-15 else "FAIL"
        ok &= flag == "ok"
        print(f"  omega = {om:10.4f}  tau = {tau:.6f}  d = {d:.3e}  [{flag}]")
        rows.append(("quantum", om, tau, d))
        prev = d

    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("route,omega,tau,distance\n")
            for route, om, tau, d in rows:
                fh.write(f"{route},{om!r},{tau!r},{d!r}\n")
        print(f"wrote {args.out}")
    print("verify:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="ddsim",
                                     description="pulse-sequence decoupling simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--seed", type=int)
    p_run.add_argument("--workers", type=int)
    p_run.add_argument("--out")
    p_run.set_defaults(func=_cmd_run)

    p_pre = sub.add_parser("presets", help="list experiment presets")
    p_pre.set_defaults(func=_cmd_presets)

    p_ver = sub.add_parser("verify", help="run the effective-Hamiltonian checks")
    p_ver.add_argument("--out", default="")
    p_ver.add_argument("--seed", type=int, default=42)
    p_ver.add_argument("--wx", type=float, default=1.5 * np.sqrt(2.0))
    p_ver.add_argument("--wy", type=float, default=2.0 * np.sqrt(2.0))
    p_ver.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
