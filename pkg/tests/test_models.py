import math

import numpy as np
import pytest

from ddsim import models
from ddsim import spin_algebra as sa

SQ2 = math.sqrt(2.0)


def test_hyperfine_peak_equals_scale():
    grid = [(2.6, 3.2)]
    a = models.hyperfine_couplings(1, 1, 1.5, 2.0, x0=2.6, y0=3.2, grid=grid, scale=0.7)
    assert a[0] == pytest.approx(0.7, abs=1e-15)


def test_hyperfine_flat_limit():
    a = models.hyperfine_couplings(3, 3, 1e9, 1e9, scale=2.5)
    assert np.allclose(a, 2.5, atol=1e-12)


def test_hyperfine_reproduces_published_range():
    # 4x5 grid with sigma-convention effective widths lands exactly on
    # couplings in [0.309, 0.960]
    a = models.hyperfine_couplings(4, 5, 1.5 * SQ2, 2.0 * SQ2, 0.1, 0.2)
    assert a.min() == pytest.approx(0.309, abs=5e-4)
    assert a.max() == pytest.approx(0.960, abs=5e-4)
    assert a.min() / a.max() == pytest.approx(0.322, abs=1e-3)
    # row-major order: first entry is site (1, 1)
    cx, cy = 2.5 + 0.1, 3.0 + 0.2
    expected00 = np.exp(-((1 - cx) / (1.5 * SQ2)) ** 2 - ((1 - cy) / (2.0 * SQ2)) ** 2)
    assert a[0] == pytest.approx(expected00, abs=1e-12)


def test_hyperfine_grid_size_mismatch():
    with pytest.raises(ValueError):
        models.hyperfine_couplings(2, 2, 1.0, 1.0, grid=[(0, 0)])


def test_neighbor_pairs_count():
    pairs = models.neighbor_pairs(4, 3)
    assert len(pairs) == 3 * 3 + 4 * 2  # (nx-1)*ny + nx*(ny-1)
    assert all(0 <= i < j < 12 for i, j in pairs)


def test_dipolar_sampling_bounds():
    dip = models.sample_dipolar_couplings(4, 5, 0.01, seed=3)
    assert set(dip) == set(models.neighbor_pairs(4, 5))
    assert all(0.0 <= v <= 0.01 for v in dip.values())
    again = models.sample_dipolar_couplings(4, 5, 0.01, seed=3)
    assert dip == again


def test_bec_spectrum_no_stray_field():
    m = models.BecModel(J=3, omega=2.0, c2p=-0.5)
    h = models.bec_hamiltonian(m, (0, 0, 0)).dense()
    expected = sorted(-0.5 * 12 + 2.0 * mm for mm in range(-3, 4))
    assert np.allclose(np.linalg.eigvalsh(h), expected, atol=1e-12)


def test_bec_casimir_commutes():
    m = models.BecModel(J=2, omega=1.3)
    h = models.bec_hamiltonian(m, (0.3, -0.8, 0.5)).dense()
    jsq = m.spin_ops().jsq.dense()
    assert abs(h @ jsq - jsq @ h).max() <= 1e-12


def test_bec_rotated_zeeman_spectrum():
    m = models.BecModel(J=2, omega=0.0, c2p=-0.5)
    h = models.bec_hamiltonian(m, (1.0, 0.0, 0.0)).dense()
    # c2p J(J+1) + m for the field along x
    assert np.allclose(np.linalg.eigvalsh(h), [-5, -4, -3, -2, -1], atol=1e-12)


def test_bec_rejects_bad_field():
    m = models.BecModel(J=1, omega=1.0)
    with pytest.raises(ValueError):
        models.bec_hamiltonian(m, (np.inf, 0, 0))


def test_qd_bias_only():
    m = models.QdModel(N=2, couplings=(1e-12, 1e-12), omega=3.0)
    h = models.qd_hamiltonian(m, include_bias=True).dense()
    assert np.allclose(np.linalg.eigvalsh(h), [-1.5] * 4 + [1.5] * 4, atol=1e-9)


def test_qd_total_z_conserved():
    a = tuple(models.hyperfine_couplings(2, 2, 1.5 * SQ2, 2.0 * SQ2, 0.1, 0.2))
    m = models.QdModel(N=4, couplings=a,
                       dipolar=models.sample_dipolar_couplings(2, 2, 0.01, seed=1),
                       omega=7.7)
    h = models.qd_hamiltonian(m, include_bias=True).dense()
    ztot = models.central_sz(4).toarray()
    for k in range(4):
        ztot = ztot + models._site_ops(4, k + 1)[2].toarray()
    assert abs(h @ ztot - ztot @ h).max() <= 1e-12


def test_qd_uniform_coupling_spectrum_by_angular_momentum_addition():
    # S.(I1+I2) has eigenvalues 1/2 (x4), -1 (x2), 0 (x2)
    m = models.QdModel(N=2, couplings=(1.0, 1.0), omega=0.0)
    h = models.qd_hamiltonian(m, include_bias=False).dense()
    assert np.allclose(np.linalg.eigvalsh(h),
                       [-1.0, -1.0, 0.0, 0.0, 0.5, 0.5, 0.5, 0.5], atol=1e-12)


def test_qd_resource_guard():
    with pytest.raises(ValueError, match="resource guard"):
        models.qd_hamiltonian(
            models.QdModel(N=17, couplings=(1.0,) * 17, omega=0.0))


def test_qd_coupling_validation():
    with pytest.raises(ValueError):
        models.QdModel(N=2, couplings=(1.0, -0.5), omega=0.0)
    with pytest.raises(ValueError):
        models.QdModel(N=2, couplings=(1.0, 1.0), dipolar={(1, 0): 0.01}, omega=0.0)


def test_nv_single_bond_spectrum():
    m = models.NvModel(N=1, couplings=(1.0,))
    h = models.nv_hamiltonian(m).dense()
    assert np.allclose(np.linalg.eigvalsh(h), [-0.5, -0.5, 0.0, 1.0], atol=1e-12)


def test_nv_zero_couplings():
    m = models.NvModel(N=2, couplings=(0.0, 0.0))
    assert abs(models.nv_hamiltonian(m).dense()).max() == 0.0


def test_nv_total_z_conserved():
    m = models.NvModel(N=3, couplings=tuple(models.sample_nv_couplings(3, seed=2)))
    h = models.nv_hamiltonian(m).dense()
    ztot = models.central_sz(3).toarray()
    for k in range(3):
        ztot = ztot + models._site_ops(3, k + 1)[2].toarray()
    assert abs(h @ ztot - ztot @ h).max() <= 1e-12


def test_nv_couplings_in_range():
    c = models.sample_nv_couplings(50, seed=11, coupling_max=1.0)
    assert np.all((0.0 <= c) & (c <= 1.0))


def test_hamiltonians_hermitian():
    a = tuple(models.hyperfine_couplings(3, 2, 1.5, 2.0))
    qd = models.QdModel(N=6, couplings=a,
                        dipolar=models.sample_dipolar_couplings(3, 2, 0.01, seed=4),
                        omega=5.0)
    assert sa.herm_deviation(models.qd_hamiltonian(qd).sparse()) <= 1e-12
    nv = models.NvModel(N=4, couplings=tuple(models.sample_nv_couplings(4, seed=5)))
    assert sa.herm_deviation(models.nv_hamiltonian(nv).sparse()) <= 1e-12
    bec = models.BecModel(J=5, omega=2.0)
    assert sa.herm_deviation(models.bec_hamiltonian(bec, (0.1, 0.2, -0.3)).dense()) <= 1e-12
