"""Classical stray-field sampling: piecewise-constant three-component fields,
uniform on [-b_c, b_c] per component, resampled every correlation time.

All randomness flows through counter-based Philox streams keyed by
(seed, stream tag, item index), so every draw is a pure function of the
configuration and is bit-reproducible across platforms and worker counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Stream tags partition the 64-bit second key word as tag << 48 | index.
TAG_NOISE = 0
TAG_BATH_STATE = 1
TAG_MOMENTS = 2
TAG_DIPOLAR = 3
TAG_NV_COUPLINGS = 4

_INDEX_BITS = 48


def stream(seed: int, tag: int, index: int) -> np.random.Generator:
    """Independent, platform-stable generator for (seed, tag, index)."""
    if not 0 <= index < (1 << _INDEX_BITS):
        raise ValueError(f"stream index {index} out of range")
    key = np.array([np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
                    np.uint64((tag << _INDEX_BITS) | index)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class StrayFieldConfig:
    b_c: float = 1.0
    tau_c: float = math.inf
    realizations: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.b_c <= 0:
            raise ValueError("cutoff b_c must be positive")
        if not (self.tau_c > 0):
            raise ValueError("correlation time must be positive or infinite")
        if self.realizations < 1:
            raise ValueError("need at least one realization")


@dataclass(frozen=True)
class NoiseRealization:
    """One stray-field trajectory: contiguous (start, end, b) segments on [0, T]."""

    segments: tuple[tuple[float, float, np.ndarray], ...]
    realization_id: int

    def __post_init__(self):
        prev_end = 0.0
        for start, end, b in self.segments:
            if abs(start - prev_end) > 1e-12 or end <= start:
                raise ValueError("segments must be contiguous and forward in time")
            prev_end = end

    @property
    def total_time(self) -> float:
        return self.segments[-1][1]

    def field_at(self, t: float) -> np.ndarray:
        """Field active at time t (segments are half-open [start, end))."""
        for start, end, b in self.segments:
            if t < end:
                return b
        return self.segments[-1][2]

    def segment_index(self, t: float) -> int:
        for i, (start, end, b) in enumerate(self.segments):
            if t < end - 1e-15:
                return i
        return len(self.segments) - 1


def sample_realization(cfg: StrayFieldConfig, index: int, T: float) -> NoiseRealization:
    """Draw realization `index` covering [0, T].

    Components are independent uniform on [-b_c, b_c], resampled at integer
    multiples of tau_c; tau_c = inf gives a single quasi-static segment.
    The draw depends only on (cfg.seed, index), and a longer horizon extends
    a shorter one (same prefix of segments).
    """
    if index >= cfg.realizations:
        raise ValueError(f"realization index {index} >= configured count {cfg.realizations}")
    if T <= 0:
        raise ValueError("total time must be positive")
    rng = stream(cfg.seed, TAG_NOISE, index)
    if math.isinf(cfg.tau_c):
        n_seg = 1
        bounds = [0.0, T]
    else:
        n_seg = max(1, int(math.ceil(T / cfg.tau_c - 1e-12)))
        bounds = [k * cfg.tau_c for k in range(n_seg)] + [T]
    fields = rng.uniform(-cfg.b_c, cfg.b_c, size=(n_seg, 3))
    segments = tuple(
        (bounds[k], bounds[k + 1], fields[k].copy()) for k in range(n_seg)
    )
    for seg in segments:
        seg[2].setflags(write=False)
    return NoiseRealization(segments=segments, realization_id=index)


def empirical_moments(cfg: StrayFieldConfig, n_samples: int) -> dict[str, np.ndarray]:
    """Sample mean and variance per component (sampler self-test)."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    rng = stream(cfg.seed, TAG_MOMENTS, 0)
    draws = rng.uniform(-cfg.b_c, cfg.b_c, size=(n_samples, 3))
    return {"mean": draws.mean(axis=0), "variance": draws.var(axis=0)}


def random_bath_state(seed: int, index: int, dim: int) -> np.ndarray:
    """Random pure state standing in for the fully mixed bath: complex
    Gaussian amplitudes, normalized."""
    rng = stream(seed, TAG_BATH_STATE, index)
    amp = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return amp / np.linalg.norm(amp)
