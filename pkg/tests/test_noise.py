import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ddsim import noise


def test_quasi_static_single_segment():
    cfg = noise.StrayFieldConfig(b_c=1.0, tau_c=math.inf, realizations=3, seed=1)
    nr = noise.sample_realization(cfg, 0, 50.0)
    assert len(nr.segments) == 1
    assert nr.segments[0][:2] == (0.0, 50.0)


def test_segment_boundaries_at_correlation_time_multiples():
    cfg = noise.StrayFieldConfig(b_c=1.0, tau_c=0.5, realizations=1, seed=7)
    nr = noise.sample_realization(cfg, 0, 100.0)
    assert len(nr.segments) == 200
    starts = [s[0] for s in nr.segments]
    assert np.allclose(starts, [0.5 * k for k in range(200)], atol=1e-12)
    assert nr.segments[-1][1] == 100.0


def test_partial_last_segment():
    cfg = noise.StrayFieldConfig(tau_c=0.4, realizations=1, seed=7)
    nr = noise.sample_realization(cfg, 0, 1.0)
    assert len(nr.segments) == 3
    assert nr.segments[-1][:2] == (0.8, 1.0)


def test_determinism_bit_identical():
    cfg = noise.StrayFieldConfig(b_c=1.0, tau_c=2.0, realizations=4, seed=99)
    a = noise.sample_realization(cfg, 2, 10.0)
    b = noise.sample_realization(cfg, 2, 10.0)
    for (s0, e0, f0), (s1, e1, f1) in zip(a.segments, b.segments):
        assert (s0, e0) == (s1, e1)
        assert np.array_equal(f0, f1)


def test_distinct_indices_disjoint_streams():
    cfg = noise.StrayFieldConfig(realizations=4, seed=99)
    a = noise.sample_realization(cfg, 0, 10.0)
    b = noise.sample_realization(cfg, 1, 10.0)
    assert not np.allclose(a.segments[0][2], b.segments[0][2])


def test_longer_horizon_extends_prefix():
    cfg = noise.StrayFieldConfig(tau_c=1.0, realizations=1, seed=5)
    short = noise.sample_realization(cfg, 0, 5.0)
    long = noise.sample_realization(cfg, 0, 12.0)
    for s, l in zip(short.segments, long.segments):
        assert np.array_equal(s[2], l[2])


def test_index_out_of_range():
    cfg = noise.StrayFieldConfig(realizations=2, seed=0)
    with pytest.raises(ValueError):
        noise.sample_realization(cfg, 2, 1.0)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2 ** 63 - 1), index=st.integers(0, 1000),
       bc=st.floats(0.1, 5.0))
def test_bounds_never_exceeded(seed, index, bc):
    cfg = noise.StrayFieldConfig(b_c=bc, tau_c=0.7, realizations=1001, seed=seed)
    nr = noise.sample_realization(cfg, index, 7.0)
    for _, _, f in nr.segments:
        assert np.all(np.abs(f) <= bc)


def test_field_lookup():
    cfg = noise.StrayFieldConfig(tau_c=1.0, realizations=1, seed=8)
    nr = noise.sample_realization(cfg, 0, 3.0)
    assert np.array_equal(nr.field_at(0.5), nr.segments[0][2])
    assert np.array_equal(nr.field_at(1.5), nr.segments[1][2])
    assert nr.segment_index(2.4) == 2


def test_empirical_moments_uniform():
    cfg = noise.StrayFieldConfig(b_c=1.0, realizations=1, seed=123)
    m = noise.empirical_moments(cfg, 10 ** 6)
    assert np.all(np.abs(m["mean"]) <= 0.01)
    assert np.all(np.abs(m["variance"] - 1 / 3) <= 0.05 / 3)


def test_empirical_moments_scale():
    m1 = noise.empirical_moments(noise.StrayFieldConfig(b_c=1.0, seed=22), 200000)
    m2 = noise.empirical_moments(noise.StrayFieldConfig(b_c=2.0, seed=22), 200000)
    assert np.allclose(m2["variance"], 4.0 * m1["variance"], rtol=1e-12)


def test_config_validation():
    with pytest.raises(ValueError):
        noise.StrayFieldConfig(b_c=0.0)
    with pytest.raises(ValueError):
        noise.StrayFieldConfig(tau_c=-1.0)
    with pytest.raises(ValueError):
        noise.StrayFieldConfig(realizations=0)


def test_bath_state_deterministic_and_normalized():
    a = noise.random_bath_state(3, 1, 64)
    b = noise.random_bath_state(3, 1, 64)
    assert np.array_equal(a, b)
    assert np.linalg.norm(a) == pytest.approx(1.0, abs=1e-12)
    c = noise.random_bath_state(3, 2, 64)
    assert not np.allclose(a, c)
