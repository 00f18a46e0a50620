"""The three system Hamiltonians: collective spin in a bias plus stray field,
central spin with an isotropic hyperfine bath, and a central spin with a
dipolar bath.

Units: hbar = 1, gyromagnetic ratio gamma = 1, stray-field cutoff b_c = 1;
times are in 1/b_c for the collective-spin model and in inverse maximum
coupling for the central-spin models.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import noise
from .spin_algebra import (
    Operator,
    SpinOperators,
    collective_spin_operators,
    single_site_operator,
    spin_half_matrices,
)

MAX_BATH_SPINS = 16


@lru_cache(maxsize=8)
def cached_spin_operators(J: float) -> SpinOperators:
    return collective_spin_operators(J)


@dataclass(frozen=True)
class BecModel:
    """Collective spin J in a longitudinal bias (Larmor frequency omega).

    c2p is the spin-exchange strength; it multiplies J^2, which acts as the
    constant J(J+1) on the maximal multiplet, so no observable here depends
    on it (asserted in tests).
    """

    J: float
    omega: float
    c2p: float = -0.5
    gamma: float = 1.0

    @property
    def dim(self) -> int:
        return int(round(2 * self.J)) + 1

    def spin_ops(self) -> SpinOperators:
        return cached_spin_operators(self.J)


def bec_hamiltonian(model: BecModel, b, bias_sign: int = 1) -> Operator:
    """H = c2' J^2 + sign * omega Jz + gamma b . J (dense Hermitian)."""
    b = np.asarray(b, dtype=float)
    if b.shape != (3,) or not np.all(np.isfinite(b)):
        raise ValueError("stray field must be a finite 3-vector")
    ops = model.spin_ops()
    h = (model.c2p * ops.jsq.dense()
         + bias_sign * model.omega * ops.jz.dense()
         + model.gamma * (b[0] * ops.jx.dense() + b[1] * ops.jy.dense()
                          + b[2] * ops.jz.dense()))
    return Operator(h, hermitian=True)


def hyperfine_couplings(nx: int, ny: int, wx: float, wy: float,
                        x0: float = 0.0, y0: float = 0.0,
                        grid=None, scale: float = 1.0) -> np.ndarray:
    """Contact couplings A_k = scale * exp[-(x-cx)^2/wx^2 - (y-cy)^2/wy^2].

    The default grid is integer sites (1..nx) x (1..ny) in row-major order
    (x fastest), and the Gaussian center is the grid midpoint shifted by the
    offsets (x0, y0). Pass `grid` (sequence of (x, y)) to override geometry.
    """
    if wx <= 0 or wy <= 0:
        raise ValueError("widths must be positive")
    if grid is None:
        grid = [(float(ix), float(iy)) for iy in range(1, ny + 1) for ix in range(1, nx + 1)]
        cx = (nx + 1) / 2.0 + x0
        cy = (ny + 1) / 2.0 + y0
    else:
        grid = [(float(x), float(y)) for x, y in grid]
        cx, cy = x0, y0
    if len(grid) != nx * ny:
        raise ValueError(f"grid has {len(grid)} sites, expected nx*ny = {nx * ny}")
    xs = np.array([g[0] for g in grid])
    ys = np.array([g[1] for g in grid])
    return scale * np.exp(-((xs - cx) / wx) ** 2 - ((ys - cy) / wy) ** 2)


def neighbor_pairs(nx: int, ny: int) -> list[tuple[int, int]]:
    """Nearest-neighbor site pairs (4-neighborhood) of the row-major grid."""
    pairs = []
    for iy in range(ny):
        for ix in range(nx):
            k = iy * nx + ix
            if ix + 1 < nx:
                pairs.append((k, k + 1))
            if iy + 1 < ny:
                pairs.append((k, k + nx))
    return pairs


def sample_dipolar_couplings(nx: int, ny: int, gamma_max: float,
                             seed: int = 0) -> dict[tuple[int, int], float]:
    """Dipolar strengths uniform on [0, gamma_max] for nearest neighbors."""
    rng = noise.stream(seed, noise.TAG_DIPOLAR, 0)
    pairs = neighbor_pairs(nx, ny)
    values = rng.uniform(0.0, gamma_max, size=len(pairs))
    return {pair: float(v) for pair, v in zip(pairs, values)}


def sample_nv_couplings(n_bath: int, seed: int = 0, coupling_max: float = 1.0) -> np.ndarray:
    """Dipolar bond strengths uniform on [0, coupling_max]."""
    rng = noise.stream(seed, noise.TAG_NV_COUPLINGS, 0)
    return rng.uniform(0.0, coupling_max, size=n_bath)


@dataclass(frozen=True)
class QdModel:
    """Central spin with isotropic contact couplings A_k and secular dipolar
    couplings between nearest-neighbor bath spins."""

    N: int
    couplings: tuple[float, ...]
    dipolar: dict[tuple[int, int], float] = field(default_factory=dict)
    omega: float = 0.0

    def __post_init__(self):
        if len(self.couplings) != self.N:
            raise ValueError(f"{len(self.couplings)} couplings for N = {self.N}")
        if any(a <= 0 for a in self.couplings):
            raise ValueError("all contact couplings must be positive")
        for (i, j) in self.dipolar:
            if not (0 <= i < j < self.N):
                raise ValueError(f"dipolar pair {(i, j)} out of range")

    @property
    def dim(self) -> int:
        return 2 ** (self.N + 1)


@dataclass(frozen=True)
class NvModel:
    """Central spin with anisotropic (dipolar-form) bonds to every bath spin.

    omega is the Larmor frequency of the optional longitudinal bias applied
    by the pulse-sequence runner (0 for free evolution).
    """

    N: int
    couplings: tuple[float, ...]
    omega: float = 0.0

    def __post_init__(self):
        if len(self.couplings) != self.N:
            raise ValueError(f"{len(self.couplings)} couplings for N = {self.N}")

    @property
    def dim(self) -> int:
        return 2 ** (self.N + 1)


def _guard_bath(n: int):
    if n > MAX_BATH_SPINS:
        raise ValueError(
            f"N = {n} bath spins exceeds the resource guard ({MAX_BATH_SPINS}); "
            f"the register dimension would be 2^{n + 1}")


def _site_ops(n_bath: int, k: int):
    sx, sy, sz = spin_half_matrices()
    return (single_site_operator(n_bath, k, sx).sparse(),
            single_site_operator(n_bath, k, sy).sparse(),
            single_site_operator(n_bath, k, sz).sparse())


def qd_hamiltonian(model: QdModel, include_bias: bool = True) -> Operator:
    """H = [omega Sz] + S . sum_k A_k I_k + sum_nn Gamma_ij (I_i.I_j - 3 Iiz Ijz)."""
    _guard_bath(model.N)
    n = model.N
    dim = model.dim
    h = sp.csr_matrix((dim, dim), dtype=complex)
    s0 = _site_ops(n, 0)
    bath = [_site_ops(n, k + 1) for k in range(n)]
    for ak, ik in zip(model.couplings, bath):
        h = h + ak * (s0[0] @ ik[0] + s0[1] @ ik[1] + s0[2] @ ik[2])
    for (i, j), gij in model.dipolar.items():
        ii, jj = bath[i], bath[j]
        h = h + gij * (ii[0] @ jj[0] + ii[1] @ jj[1] - 2.0 * (ii[2] @ jj[2]))
    if include_bias:
        h = h + model.omega * s0[2]
    return Operator(h.tocsr(), hermitian=True)


def nv_hamiltonian(model: NvModel) -> Operator:
    """H = sum_k A_k (S0 . Sk - 3 S0z Skz) (secular dipolar bonds, no bias)."""
    _guard_bath(model.N)
    n = model.N
    dim = model.dim
    h = sp.csr_matrix((dim, dim), dtype=complex)
    s0 = _site_ops(n, 0)
    for k in range(n):
        ak = model.couplings[k]
        skx, sky, skz = _site_ops(n, k + 1)
        h = h + ak * (s0[0] @ skx + s0[1] @ sky - 2.0 * (s0[2] @ skz))
    return Operator(h.tocsr(), hermitian=True)


def central_sz(n_bath: int) -> sp.csr_matrix:
    """Sz of the central spin embedded in the full register."""
    _, _, sz = spin_half_matrices()
    return single_site_operator(n_bath, 0, sz).sparse()


def overhauser_operators(model: QdModel):
    """The bath field operators h_a = sum_k A_k I_ka on the full register."""
    n = model.N
    dim = model.dim
    hs = [sp.csr_matrix((dim, dim), dtype=complex) for _ in range(3)]
    for k, ak in enumerate(model.couplings):
        ops = _site_ops(n, k + 1)
        for a in range(3):
            hs[a] = hs[a] + ak * ops[a]
    return tuple(h.tocsr() for h in hs)
