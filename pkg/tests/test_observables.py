import numpy as np
import pytest
from scipy.linalg import expm

from ddsim import observables as obs
from ddsim import spin_algebra as sa
from ddsim.propagation import Trajectory


def test_spin_average_css_is_one():
    for d in [(1, 0, 0), (0, 0, 1), (0.6, 0.8, 0)]:
        ops = sa.collective_spin_operators(8)
        st = sa.coherent_spin_state(8, d)
        assert obs.spin_average(st, ops, 8) == pytest.approx(1.0, abs=1e-10)


def test_spin_average_cat_state_is_zero():
    J = 3
    ops = sa.collective_spin_operators(J)
    amp = np.zeros(7, dtype=complex)
    amp[0] = amp[-1] = 1 / np.sqrt(2)
    assert obs.spin_average(sa.StateVector(amp), ops, J) == pytest.approx(0.0, abs=1e-10)


def test_spin_average_m0_state_is_zero():
    J = 2
    ops = sa.collective_spin_operators(J)
    amp = np.zeros(5, dtype=complex)
    amp[2] = 1.0  # m = 0
    assert obs.spin_average(sa.StateVector(amp), ops, J) == pytest.approx(0.0, abs=1e-10)


def test_squeezing_pole_state_zero():
    J = 4
    ops = sa.collective_spin_operators(J)
    amp = np.zeros(9, dtype=complex)
    amp[0] = 1.0
    assert obs.squeezing(sa.StateVector(amp), ops, J) == pytest.approx(0.0, abs=1e-12)


def test_squeezing_twisted_state_matches_brute_force():
    # J=2 one-axis twisted at theta=0.3, compared against direct 5-dim
    # expectation values computed with independently built matrices
    J = 2
    dim = 5
    m = J - np.arange(dim)
    jz = np.diag(m.astype(complex))
    jp = np.zeros((dim, dim), dtype=complex)
    for i in range(1, dim):
        mm = J - i
        jp[i - 1, i] = np.sqrt(J * (J + 1) - mm * (mm + 1))
    jx = (jp + jp.conj().T) / 2
    jy = (jp - jp.conj().T) / 2j
    css = sa.coherent_spin_state(J, (1, 0, 0)).amplitudes
    psi = np.exp(-1j * 0.3 * m ** 2) * css

    def var(op):
        v = op @ psi
        return (np.vdot(v, v) - np.vdot(psi, v) ** 2).real

    expected = 2 * min(var(jx), var(jy), var(jz)) / J
    ops = sa.collective_spin_operators(J)
    got = obs.squeezing(sa.StateVector(psi), ops, J)
    assert got == pytest.approx(expected, abs=1e-12)


def test_fidelity_initial_product_state_is_one():
    spinor = np.array([1.0, 1.0j], dtype=complex) / np.sqrt(2)
    bath = np.array([0.3, 0.5, 0.1, 0.8], dtype=complex)
    bath /= np.linalg.norm(bath)
    psi = np.kron(spinor, bath)
    rho0 = np.outer(spinor, spinor.conj())
    assert obs.fidelity(rho0, psi, n_bath=2) == pytest.approx(1.0, abs=1e-12)


def test_fidelity_flipped_central_spin_is_zero():
    up = np.array([1.0, 0.0], dtype=complex)
    dn = np.array([0.0, 1.0], dtype=complex)
    bath = np.ones(8, dtype=complex) / np.sqrt(8)
    psi = np.kron(dn, bath)
    rho0 = np.outer(up, up.conj())
    assert obs.fidelity(rho0, psi) == pytest.approx(0.0, abs=1e-12)


def test_fidelity_conserved_under_commuting_hamiltonian():
    # pure-dephasing coupling Sz h_z leaves a z-polarized central spin intact
    rng = np.random.default_rng(3)
    sz = np.diag([0.5, -0.5]).astype(complex)
    hz = np.diag(rng.standard_normal(4)).astype(complex)
    H = np.kron(sz, hz)
    up = np.array([1.0, 0.0], dtype=complex)
    bath = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    bath /= np.linalg.norm(bath)
    psi0 = np.kron(up, bath)
    rho0 = np.outer(up, up.conj())
    for t in (0.5, 2.0, 11.0):
        psi = expm(-1j * t * H) @ psi0
        assert obs.fidelity(rho0, psi) == pytest.approx(1.0, abs=1e-10)


def test_partial_trace_preserves_trace():
    rng = np.random.default_rng(9)
    psi = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    psi /= np.linalg.norm(psi)
    rho = obs.reduced_central_density(psi)
    assert rho.trace().real == pytest.approx(1.0, abs=1e-10)
    assert sa.herm_deviation(rho) <= 1e-12


def _traj(values, key="fidelity"):
    times = np.arange(len(values), dtype=float)
    return Trajectory(times=times, columns={key: np.asarray(values, float)})


def test_worst_case_identical_unchanged():
    t1 = _traj([1.0, 0.8, 0.6])
    out = obs.worst_case([t1, t1, t1], "fidelity")
    assert np.allclose(out.columns["fidelity"], [1.0, 0.8, 0.6])


def test_worst_case_picks_lowest_curve():
    hi = _traj([1.0, 0.9, 0.8])
    lo = _traj([0.9, 0.7, 0.5])
    out = obs.worst_case([hi, lo], "fidelity")
    assert np.allclose(out.columns["fidelity"], lo.columns["fidelity"])


def test_worst_case_xi2_takes_maximum():
    a = _traj([0.01, 0.02], key="xi2")
    b = _traj([0.02, 0.01], key="xi2")
    out = obs.worst_case([a, b], "xi2")
    assert np.allclose(out.columns["xi2"], [0.02, 0.02])


def test_worst_case_grid_mismatch():
    a = _traj([1.0, 0.9])
    b = Trajectory(times=np.array([0.0, 2.0]), columns={"fidelity": np.array([1.0, 0.9])})
    with pytest.raises(ValueError):
        obs.worst_case([a, b], "fidelity")


def test_characteristic_time_linear_interpolation():
    ct = obs.characteristic_time(_traj([1.0, 0.8]), "fidelity", 0.9, "falling")
    assert ct.value == pytest.approx(0.5, abs=1e-12)


def test_characteristic_time_starts_below():
    ct = obs.characteristic_time(_traj([0.85, 0.8]), "fidelity", 0.9, "falling")
    assert ct.value == 0.0


def test_characteristic_time_never_crosses():
    ct = obs.characteristic_time(_traj([1.0, 0.95, 0.92]), "fidelity", 0.9, "falling")
    assert not ct.reached
    assert ct.horizon == 2.0


def test_characteristic_time_rising():
    ct = obs.characteristic_time(_traj([0.01, 0.03, 0.09], key="xi2"), "xi2", 0.05, "rising")
    assert ct.value == pytest.approx(1.0 + (0.05 - 0.03) / 0.06, abs=1e-12)


def test_characteristic_time_monotone_in_threshold():
    vals = [1.0, 0.97, 0.9, 0.7, 0.4, 0.35, 0.1]
    tr = _traj(vals)
    prev = -1.0
    for thr in (0.95, 0.9, 0.8, 0.5, 0.2):
        ct = obs.characteristic_time(tr, "fidelity", thr, "falling")
        assert ct.value >= prev
        prev = ct.value


def test_metric_record_validation():
    obs.MetricRecord(t=0.0, spin_avg=1.0, xi2=3.0, fidelity=0.5)
    with pytest.raises(ValueError):
        obs.MetricRecord(t=0.0, fidelity=1.5)
    with pytest.raises(ValueError):
        obs.MetricRecord(t=0.0, xi2=-0.5)
