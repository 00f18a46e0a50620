"""Spin operators, rotations, tensor embeddings, and initial states.

Conventions used throughout the package:

* Collective-spin basis |J, m> with m descending from +J (row 0 is m = +J).
* Multi-spin basis for central-spin models: site 0 is the central spin and
  occupies the most significant bit of the basis index, so an operator at
  site k is I(2^k) (x) op (x) I(2^(n_bath - k)).
* Operators on spaces of dimension >= SPARSE_DIM are stored sparse (CSR),
  smaller ones dense.
* Canonical squeezed state: mean spin along +x, minimal variance along y,
  anti-squeezed quadrature along z.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gammaln

HERMITIAN_TOL = 1e-12
UNITARY_TOL = 1e-12
NORM_TOL = 1e-12
SPARSE_DIM = 4096


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Operator:
    """A complex matrix on a finite spin Hilbert space (dense or CSR)."""

    matrix: np.ndarray | sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        m = self.matrix
        if sp.issparse(m):
            if not sp.isspmatrix_csr(m):
                object.__setattr__(self, "matrix", m.tocsr())
        else:
            m = np.asarray(m, dtype=complex)
            object.__setattr__(self, "matrix", _freeze(m))
        m = self.matrix
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"operator must be square, got shape {m.shape}")
        if self.hermitian:
            dev = herm_deviation(m)
            if dev > HERMITIAN_TOL:
                raise ValueError(f"hermitian flag set but max|H - H^dag| = {dev:.3e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else self.matrix

    def sparse(self) -> sp.csr_matrix:
        return self.matrix if self.is_sparse else sp.csr_matrix(self.matrix)

    def __add__(self, other: "Operator") -> "Operator":
        return Operator(self.matrix + other.matrix,
                        hermitian=self.hermitian and other.hermitian)

    def __mul__(self, scalar: complex) -> "Operator":
        h = self.hermitian and abs(complex(scalar).imag) == 0.0
        return Operator(self.matrix * scalar, hermitian=h)

    __rmul__ = __mul__


def herm_deviation(m) -> float:
    """Max-element deviation from Hermiticity."""
    d = m - (m.conj().T if not sp.issparse(m) else m.getH())
    return float(abs(d).max()) if not sp.issparse(d) else float(abs(d).max()) if d.nnz else 0.0


def _store(matrix, hermitian=False) -> Operator:
    """Apply the dense/sparse storage rule by dimension."""
    dim = matrix.shape[0]
    if dim >= SPARSE_DIM and not sp.issparse(matrix):
        matrix = sp.csr_matrix(matrix)
    elif dim < SPARSE_DIM and sp.issparse(matrix):
        matrix = matrix.toarray()
    return Operator(matrix, hermitian=hermitian)


@dataclass(frozen=True)
class StateVector:
    """Normalized complex amplitude vector."""

    amplitudes: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.amplitudes, dtype=complex)
        n = np.linalg.norm(a)
        if abs(n - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {n} deviates from 1 beyond {NORM_TOL}")
        object.__setattr__(self, "amplitudes", _freeze(a))

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]


@dataclass(frozen=True)
class Rotation:
    """Axis-angle rotation generated by the spin along `axis`."""

    axis: tuple[float, float, float]
    angle: float

    def __post_init__(self):
        ax = np.asarray(self.axis, dtype=float)
        if abs(np.linalg.norm(ax) - 1.0) > NORM_TOL:
            raise ValueError(f"rotation axis must be unit length, got |axis| = {np.linalg.norm(ax)}")
        object.__setattr__(self, "axis", tuple(ax))


# Common pulses: hard pi rotations about the labelled axes.
def y_pulse(epsilon: float = 0.0) -> Rotation:
    return Rotation((0.0, 1.0, 0.0), (1.0 - epsilon) * np.pi)


def ybar_pulse(epsilon: float = 0.0) -> Rotation:
    return Rotation((0.0, -1.0, 0.0), (1.0 - epsilon) * np.pi)


def x_pulse(epsilon: float = 0.0) -> Rotation:
    return Rotation((1.0, 0.0, 0.0), (1.0 - epsilon) * np.pi)


def z_pulse(epsilon: float = 0.0) -> Rotation:
    return Rotation((0.0, 0.0, 1.0), (1.0 - epsilon) * np.pi)


@dataclass(frozen=True)
class SpinOperators:
    """Collective spin operators on the (2J+1)-dim multiplet."""

    J: float
    jx: Operator
    jy: Operator
    jz: Operator
    jsq: Operator
    m_values: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.jz.dim


def _check_spin(J: float) -> float:
    twoJ = 2.0 * J
    if abs(twoJ - round(twoJ)) > 1e-12 or J < 0.5:
        raise ValueError(f"spin quantum number must be a half-integer >= 1/2, got {J}")
    return float(J)


def collective_spin_operators(J: float) -> SpinOperators:
    """Angular-momentum matrices in the |J,m> basis, m descending from +J."""
    J = _check_spin(J)
    dim = int(round(2 * J)) + 1
    m = J - np.arange(dim)
    # J+ |J,m> = sqrt(J(J+1) - m(m+1)) |J,m+1>; raising moves one row up.
    w = np.sqrt(J * (J + 1) - m[1:] * (m[1:] + 1))
    jp = sp.diags(w, 1, format="csr").astype(complex)
    jm = sp.diags(w, -1, format="csr").astype(complex)
    jx = (jp + jm) * 0.5
    jy = (jp - jm) * (-0.5j)
    jz = sp.diags(m, 0, format="csr").astype(complex)
    jsq = sp.identity(dim, format="csr", dtype=complex) * (J * (J + 1))
    return SpinOperators(
        J=J,
        jx=_store(jx, hermitian=True),
        jy=_store(jy, hermitian=True),
        jz=_store(jz, hermitian=True),
        jsq=_store(jsq, hermitian=True),
        m_values=_freeze(m),
    )


def spin_half_matrices() -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three spin-1/2 matrices (Pauli matrices over 2)."""
    sx = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
    sy = np.array([[0, -0.5j], [0.5j, 0]], dtype=complex)
    sz = np.array([[0.5, 0], [0, -0.5]], dtype=complex)
    return sx, sy, sz


def single_site_operator(n_bath: int, k: int, local: np.ndarray | Operator) -> Operator:
    """Embed a 2x2 operator at site k of an (n_bath + 1)-site spin-1/2 register.

    Site 0 is the central spin; sites 1..n_bath are bath spins. Site 0 owns the
    most significant bit of the basis index.
    """
    if not 0 <= k <= n_bath:
        raise IndexError(f"site index {k} out of range for {n_bath} bath sites")
    loc = local.dense() if isinstance(local, Operator) else np.asarray(local, dtype=complex)
    if loc.shape != (2, 2):
        raise ValueError("local operator must be 2x2")
    left = sp.identity(2 ** k, format="csr", dtype=complex)
    right = sp.identity(2 ** (n_bath - k), format="csr", dtype=complex)
    emb = sp.kron(sp.kron(left, sp.csr_matrix(loc)), right, format="csr")
    return Operator(emb, hermitian=herm_deviation(loc) <= HERMITIAN_TOL)


def rotation_matrix(rot: Rotation, spin_ops: SpinOperators) -> np.ndarray:
    """exp(-i angle (axis . J)) as a dense unitary."""
    ax = np.asarray(rot.axis)
    if spin_ops.dim == 2:
        # closed form: exp(-i theta n.sigma/2) = cos(theta/2) I - 2i sin(theta/2) n.J
        nj = (ax[0] * spin_ops.jx.dense() + ax[1] * spin_ops.jy.dense()
              + ax[2] * spin_ops.jz.dense())
        half = rot.angle / 2.0
        return np.cos(half) * np.eye(2, dtype=complex) - 2j * np.sin(half) * nj
    gen = (ax[0] * spin_ops.jx.dense() + ax[1] * spin_ops.jy.dense()
           + ax[2] * spin_ops.jz.dense())
    evals, evecs = np.linalg.eigh(gen)
    return (evecs * np.exp(-1j * rot.angle * evals)) @ evecs.conj().T


def rotation_operator(rot: Rotation, spin_ops: SpinOperators) -> Operator:
    u = rotation_matrix(rot, spin_ops)
    dev = float(abs(u.conj().T @ u - np.eye(u.shape[0])).max())
    if dev > UNITARY_TOL:
        raise ValueError(f"rotation lost unitarity: max|U^dag U - I| = {dev:.3e}")
    return _store(u)


def rotate_state(state: StateVector, rot: Rotation, spin_ops: SpinOperators) -> StateVector:
    u = rotation_matrix(rot, spin_ops)
    return StateVector(u @ state.amplitudes)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0:
        raise ValueError("zero-length direction")
    return v / n


def coherent_spin_state(J: float, direction) -> StateVector:
    """CSS with mean spin <J>/J along `direction` (rotated |J, m=J>).

    Amplitudes from the closed form a_m = sqrt(C(2J, J-m)) cos^(J+m)(t/2)
    sin^(J-m)(t/2) e^(i(J-m)p), evaluated in log space so large J is safe.
    """
    J = _check_spin(J)
    d = _unit(direction)
    dim = int(round(2 * J)) + 1
    amp = np.zeros(dim, dtype=complex)
    if d[2] >= 1.0 - 1e-15:
        amp[0] = 1.0
        return StateVector(amp)
    if d[2] <= -1.0 + 1e-15:
        amp[-1] = 1.0
        return StateVector(amp)
    theta = np.arccos(np.clip(d[2], -1.0, 1.0))
    phi = np.arctan2(d[1], d[0])
    m = J - np.arange(dim)
    k = np.arange(dim)  # = J - m
    logc = gammaln(2 * J + 1) - gammaln(k + 1) - gammaln(2 * J - k + 1)
    logmag = (0.5 * logc + (J + m) * np.log(np.cos(theta / 2.0))
              + (J - m) * np.log(np.sin(theta / 2.0)))
    mag = np.exp(logmag - logmag.max())
    amp = mag * np.exp(1j * (J - m) * phi)
    return StateVector(amp / np.linalg.norm(amp))


def _expectations(psi: np.ndarray, ops: SpinOperators):
    """(<Jx>,<Jy>,<Jz>) and (Jx psi, Jy psi, Jz psi)."""
    vecs = [ops.jx.sparse() @ psi, ops.jy.sparse() @ psi, ops.jz.sparse() @ psi]
    means = np.array([np.vdot(psi, v).real for v in vecs])
    return means, vecs


def _plane_covariance(psi, vecs, means, i, j):
    vii = np.vdot(vecs[i], vecs[i]).real - means[i] ** 2
    vjj = np.vdot(vecs[j], vecs[j]).real - means[j] ** 2
    vij = np.vdot(vecs[i], vecs[j]).real - means[i] * means[j]
    return vii, vjj, vij


def transverse_min_variance(psi: np.ndarray, ops: SpinOperators) -> float:
    """Smallest spin variance in the plane orthogonal to the mean spin."""
    means, vecs = _expectations(psi, ops)
    n = _unit(means)
    # orthonormal pair spanning the transverse plane
    a = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = _unit(np.cross(n, a))
    e2 = np.cross(n, e1)
    v1 = e1[0] * vecs[0] + e1[1] * vecs[1] + e1[2] * vecs[2]
    v2 = e2[0] * vecs[0] + e2[1] * vecs[1] + e2[2] * vecs[2]
    m1 = float(e1 @ means)
    m2 = float(e2 @ means)
    v11 = np.vdot(v1, v1).real - m1 ** 2
    v22 = np.vdot(v2, v2).real - m2 ** 2
    v12 = np.vdot(v1, v2).real - m1 * m2
    mid = 0.5 * (v11 + v22)
    rad = np.hypot(0.5 * (v11 - v22), v12)
    return float(mid - rad)


def _oat_plane_xi2(J, ops, css_x_amp, theta) -> float:
    psi = css_x_amp * np.exp(-1j * theta * ops.m_values ** 2)
    return 2.0 * transverse_min_variance(psi, ops) / J


class _TatEvolver:
    """exp(-i theta (JxJy + JyJx)) applied to |J, m=J>, via one eigendecomposition."""

    def __init__(self, ops: SpinOperators):
        gen = (ops.jx.sparse() @ ops.jy.sparse() + ops.jy.sparse() @ ops.jx.sparse()).toarray()
        self.evals, self.evecs = np.linalg.eigh(gen)
        psi0 = np.zeros(ops.dim, dtype=complex)
        psi0[0] = 1.0
        self.coeffs = self.evecs.conj().T @ psi0

    def state(self, theta: float) -> np.ndarray:
        return self.evecs @ (np.exp(-1j * theta * self.evals) * self.coeffs)


def _twist_metric(J: float, method: str):
    """(metric function over the twist angle, scan window upper bound)."""
    ops = collective_spin_operators(J)
    if method == "oat":
        css = coherent_spin_state(J, (1.0, 0.0, 0.0)).amplitudes
        return (lambda th: _oat_plane_xi2(J, ops, css, th)), 3.0 * J ** (-2.0 / 3.0)
    if method == "tat":
        evolver = _TatEvolver(ops)
        return (lambda th: 2.0 * transverse_min_variance(evolver.state(th), ops) / J), \
            4.0 * np.log(2.0 * J) / (2.0 * J)
    raise ValueError(f"unknown squeezing method {method!r}")


def squeezing_floor(J: float, method: str = "oat") -> tuple[float, float]:
    """(minimum achievable transverse-plane xi^2, twist angle attaining it).

    The metric oscillates beyond its first minimum (two-axis case), so the
    global minimum is bracketed by a coarse scan before local refinement.
    """
    f, hi = _twist_metric(J, method)
    grid = np.linspace(hi / 200.0, hi, 200)
    vals = [f(th) for th in grid]
    i = int(np.argmin(vals))
    lo_b = grid[i - 1] if i > 0 else 1e-9
    hi_b = grid[i + 1] if i < len(grid) - 1 else hi
    res = minimize_scalar(f, bounds=(lo_b, hi_b), method="bounded",
                          options={"xatol": hi * 1e-8})
    return float(res.fun), float(res.x)


def squeezed_spin_state(J: float, target_xi2: float, method: str = "oat") -> StateVector:
    """Spin-squeezed state with transverse-plane xi^2 equal to target_xi2 (within 1%).

    method="oat": one-axis twisting exp(-i theta Jz^2) of an equatorial CSS.
    method="tat": two-axis countertwisting exp(-i theta (JxJy+JyJx)) of |J,J>,
    reaching xi^2 ~ 1/J, well below the one-axis floor.

    The twist angle is found by root-finding on the branch left of the
    anti-squeezing blow-up. The returned state is oriented with mean spin
    along +x, minimal variance along y, and the anti-squeezed quadrature
    along z.
    """
    J = _check_spin(J)
    if not 0.0 < target_xi2 <= 1.0:
        raise ValueError(f"target xi^2 must lie in (0, 1], got {target_xi2}")
    ops = collective_spin_operators(J)
    if target_xi2 == 1.0:
        return coherent_spin_state(J, (1.0, 0.0, 0.0))

    floor, theta_opt = squeezing_floor(J, method)
    if target_xi2 < floor:
        raise ValueError(
            f"target xi^2 = {target_xi2} unreachable with method {method!r} at J = {J}: "
            f"minimum achievable xi^2 = {floor:.6g}")

    metric, _hi = _twist_metric(J, method)
    theta = brentq(lambda th: metric(th) - target_xi2, 1e-12, theta_opt,
                   xtol=theta_opt * 1e-10)
    if method == "oat":
        css = coherent_spin_state(J, (1.0, 0.0, 0.0)).amplitudes
        psi = css * np.exp(-1j * theta * ops.m_values ** 2)
    else:
        psi = _TatEvolver(ops).state(theta)
    return _orient_squeezed(psi, ops)


def _orient_squeezed(psi: np.ndarray, ops: SpinOperators) -> StateVector:
    """Rotate mean spin to +x and the minimal transverse variance onto y."""
    means, _ = _expectations(psi, ops)
    n = _unit(means)
    xhat = np.array([1.0, 0.0, 0.0])
    # mean -> +x
    c = float(np.clip(n @ xhat, -1.0, 1.0))
    if c < 1.0 - 1e-14:
        axis = np.cross(n, xhat)
        if np.linalg.norm(axis) < 1e-14:
            axis = np.array([0.0, 0.0, 1.0])  # n = -x: any transverse axis
        u = rotation_matrix(Rotation(tuple(_unit(axis)), np.arccos(c)), ops)
        psi = u @ psi
    # align minimal y-z variance onto y by a rotation about x
    means, vecs = _expectations(psi, ops)
    vyy, vzz, vyz = _plane_covariance(psi, vecs, means, 1, 2)
    alpha = 0.5 * np.arctan2(2.0 * vyz, vyy - vzz)
    # an extremal-variance axis sits at angle alpha from y toward z; rotating
    # the state by -alpha about x brings it onto y, the +pi/2 variant brings
    # the other extremum there; keep whichever minimizes Var Jy
    u = rotation_matrix(Rotation((1.0, 0.0, 0.0), -alpha), ops)
    cand = u @ psi
    u2 = rotation_matrix(Rotation((1.0, 0.0, 0.0), -alpha + np.pi / 2.0), ops)
    cand2 = u2 @ psi

    def var_y(p):
        v = ops.jy.sparse() @ p
        return np.vdot(v, v).real - np.vdot(p, v).real ** 2

    psi = cand if var_y(cand) <= var_y(cand2) else cand2
    return StateVector(psi / np.linalg.norm(psi))
