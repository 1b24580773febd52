"""Dense linear algebra and entropies for one- and two-qubit operators.

Everything here works on plain numpy arrays. Functions that take a single
matrix also accept a stack of shape ``(..., d, d)`` where that is cheap to
support, which is what the trajectory code relies on.

Entropies are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, SX, SY, SZ)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
EIG_ZERO = 1e-12
JACOBI_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100


@dataclass(frozen=True)
class BlochAngle:
    """Direction on the Bloch sphere, polar angle ``theta`` and azimuth ``phi``.

    ``phi`` is wrapped into ``[0, 2*pi)``.
    """

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("Bloch angles must be finite")
        if not -1e-12 <= self.theta <= math.pi + 1e-12:
            raise ValueError(f"theta={self.theta} outside [0, pi]")
        object.__setattr__(self, "theta", min(max(self.theta, 0.0), math.pi))
        object.__setattr__(self, "phi", self.phi % (2 * math.pi))

    @classmethod
    def xz(cls, half_angle: float) -> "BlochAngle":
        """Axis ``sin(2a) e_x + cos(2a) e_z``, the plate-angle parametrisation."""
        theta = 2.0 * half_angle
        phi = 0.0
        theta = math.remainder(theta, 2 * math.pi)
        if theta < 0:
            theta, phi = -theta, math.pi
        return cls(theta, phi)

    @property
    def vector(self) -> np.ndarray:
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi), math.cos(self.theta)])

    def basis(self) -> np.ndarray:
        return basis_from_angle(self)


def kron(a, b) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != (2, 2) or b.shape != (2, 2):
        raise ValueError(f"kron expects two 2x2 matrices, got {a.shape} and {b.shape}")
    return np.kron(a, b)


def ket(*amplitudes) -> np.ndarray:
    v = np.asarray(amplitudes, dtype=complex)
    return v / np.linalg.norm(v)


def pure(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex)
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def is_hermitian(m, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return bool(np.max(np.abs(m - np.swapaxes(m, -1, -2).conj()), initial=0.0) <= tol)


def density_matrix(m, *, tol: float = 1e-12) -> np.ndarray:
    """Validate ``m`` as a one- or two-qubit state and return a clean copy.

    Small negative eigenvalues (down to ``-1e-9``) are clipped to zero and the
    result renormalised; anything worse raises ``ValueError``.
    """
    m = np.array(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise ValueError(f"density matrix must be 2x2 or 4x4, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("density matrix has non-finite entries")
    if not is_hermitian(m, tol):
        raise ValueError("density matrix is not Hermitian")
    m = 0.5 * (m + m.conj().T)
    tr = np.trace(m).real
    if abs(tr - 1.0) > TRACE_TOL:
        raise ValueError(f"density matrix trace {tr!r} != 1")
    vals, vecs = herm_eig(m)
    if vals[-1] < -PSD_TOL:
        raise ValueError(f"density matrix has eigenvalue {vals[-1]:.3e} < 0")
    if vals[-1] < 0:
        vals = np.clip(vals, 0.0, None)
        m = (vecs * vals) @ vecs.conj().T
        m = m / np.trace(m).real
    return m


def partial_trace(rho, keep: str = "A") -> np.ndarray:
    """Reduce a two-qubit operator (or stack) to subsystem ``keep``."""
    rho = np.asarray(rho)
    if rho.shape[-2:] != (4, 4):
        raise ValueError("partial_trace expects 4x4 operators")
    r = rho.reshape(rho.shape[:-2] + (2, 2, 2, 2))
    if keep.upper() == "A":
        return np.einsum("...ajbj->...ab", r)
    if keep.upper() == "B":
        return np.einsum("...iaib->...ab", r)
    raise ValueError(f"keep must be 'A' or 'B', not {keep!r}")


def _eig2(h):
    """Closed-form spectrum of a stack of 2x2 Hermitian matrices."""
    a = h[..., 0, 0].real
    d = h[..., 1, 1].real
    b = h[..., 0, 1]
    mean = 0.5 * (a + d)
    half = 0.5 * (a - d)
    r = np.sqrt(half**2 + np.abs(b) ** 2)
    lp = mean + r
    lm = mean - r

    # (lp - d, conj b) and (b, lp - a) both span the top eigenspace; take the
    # one whose leading entry is largest in magnitude.
    use_first = a >= d
    x = np.where(use_first, lp - d, b)
    y = np.where(use_first, np.conj(b), lp - a)
    norm = np.sqrt(np.abs(x) ** 2 + np.abs(y) ** 2)
    degenerate = norm <= 1e-300
    norm = np.where(degenerate, 1.0, norm)
    x = np.where(degenerate, 1.0, x / norm)
    y = np.where(degenerate, 0.0, y / norm)

    vecs = np.empty(h.shape, dtype=complex)
    vecs[..., 0, 0] = x
    vecs[..., 1, 0] = y
    vecs[..., 0, 1] = -np.conj(y)
    vecs[..., 1, 1] = np.conj(x)
    vals = np.stack([lp, lm], axis=-1)
    return vals, vecs


def _jacobi(h, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS):
    """Cyclic Jacobi diagonalisation of a stack of Hermitian matrices."""
    a = np.array(h, dtype=complex)
    batch = a.shape[:-2]
    n = a.shape[-1]
    a = a.reshape((-1, n, n))
    v = np.broadcast_to(np.eye(n, dtype=complex), a.shape).copy()
    offdiag = ~np.eye(n, dtype=bool)
    scale = np.maximum(1.0, np.sqrt(np.sum(np.abs(a) ** 2, axis=(-1, -2))))
    u = np.empty((a.shape[0], 2, 2), dtype=complex)

    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.abs(a[:, offdiag]) ** 2, axis=-1))
        if np.all(off <= tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p, q]
                mag = np.abs(apq)
                active = mag > 1e-300
                safe = np.where(active, mag, 1.0)
                phase = np.where(active, apq / safe, 1.0)
                tau = (a[:, q, q].real - a[:, p, p].real) / (2.0 * safe)
                t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
                t = np.where(active, t, 0.0)
                c = 1.0 / np.sqrt(1.0 + t**2)
                s = t * c
                # U = diag(1, conj(phase)) @ [[c, s], [-s, c]]
                u[:, 0, 0] = c
                u[:, 0, 1] = s
                u[:, 1, 0] = -s * np.conj(phase)
                u[:, 1, 1] = c * np.conj(phase)
                idx = [p, q]
                a[:, :, idx] = a[:, :, idx] @ u
                a[:, idx, :] = np.swapaxes(u, -1, -2).conj() @ a[:, idx, :]
                v[:, :, idx] = v[:, :, idx] @ u
    vals = np.real(np.diagonal(a, axis1=-2, axis2=-1))
    return vals.reshape(batch + (n,)), v.reshape(batch + (n, n))


def herm_eig(h, *, tol: float = HERMITIAN_TOL):
    """Eigen-decomposition of a Hermitian matrix or stack of them.

    Returns ``(values, vectors)`` with values sorted descending and the
    eigenvectors as the columns of ``vectors``. 2x2 inputs use the closed
    form, larger ones cyclic Jacobi rotations.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim < 2 or h.shape[-1] != h.shape[-2]:
        raise ValueError(f"expected square matrices, got shape {h.shape}")
    if not is_hermitian(h, tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    h = 0.5 * (h + np.swapaxes(h, -1, -2).conj())
    if h.shape[-1] == 1:
        return h[..., 0].real.copy(), np.ones_like(h)
    if h.shape[-1] == 2:
        vals, vecs = _eig2(h)
    else:
        vals, vecs = _jacobi(h)
    order = np.argsort(-vals, axis=-1, kind="stable")
    vals = np.take_along_axis(vals, order, axis=-1)
    vecs = np.take_along_axis(vecs, order[..., None, :], axis=-1)
    return vals, vecs


def eigvalsh(h) -> np.ndarray:
    return herm_eig(h)[0]


def _entropy_from_eigs(vals):
    p = np.where(vals > EIG_ZERO, vals, 1.0)
    return -np.sum(np.where(vals > EIG_ZERO, p * np.log2(p), 0.0), axis=-1)


def binary_entropy(p):
    p = np.asarray(p, dtype=float)
    return _entropy_from_eigs(np.stack([p, 1.0 - p], axis=-1))


def von_neumann_entropy(rho):
    """``-Tr(rho log2 rho)``; eigenvalues below 1e-12 count as zero."""
    s = _entropy_from_eigs(eigvalsh(rho))
    return float(s) if np.ndim(s) == 0 else s


def relative_entropy(rho, chi) -> float:
    """``S(rho || chi)`` in bits, or ``math.inf`` when supp(rho) is not in supp(chi)."""
    rho = np.asarray(rho, dtype=complex)
    chi = np.asarray(chi, dtype=complex)
    if rho.shape != chi.shape:
        raise ValueError("states must have the same dimension")
    mu, w = herm_eig(chi)
    weights = np.real(np.einsum("ji,jk,ki->i", w.conj(), rho, w))
    cross = 0.0
    for m, wt in zip(mu, weights):
        if m <= EIG_ZERO:
            if wt > PSD_TOL:
                return math.inf
            continue
        cross += wt * math.log2(m)
    return max(0.0, -von_neumann_entropy(rho) - cross)


def trace_norm(m):
    """Sum of absolute eigenvalues of a Hermitian operator (stack)."""
    s = np.sum(np.abs(eigvalsh(m)), axis=-1)
    return float(s) if np.ndim(s) == 0 else s


def trace_distance(rho, tau):
    rho = np.asarray(rho)
    tau = np.asarray(tau)
    if rho.shape[-2:] != tau.shape[-2:]:
        raise ValueError("states must have the same dimension")
    d = 0.5 * trace_norm(rho - tau)
    return d


def basis_from_angle(angle: BlochAngle) -> np.ndarray:
    """Eigenbasis of ``sigma . n`` as columns ``(|n+>, |n->)``.

    For ``phi = 0`` and ``theta = 2a`` this is ``cos a|0> + sin a|1>`` and
    ``-sin a|0> + cos a|1>``.
    """
    c = math.cos(angle.theta / 2)
    s = math.sin(angle.theta / 2)
    e = complex(math.cos(angle.phi), math.sin(angle.phi))
    return np.array([[c, -s * e.conjugate()], [s * e, c]], dtype=complex)


def computational_basis(dim: int = 2) -> np.ndarray:
    return np.eye(dim, dtype=complex)


def product_basis(basis_a, basis_b) -> np.ndarray:
    """Columns ``|i>_A |j>_B`` in lexicographic order."""
    return np.kron(np.asarray(basis_a, dtype=complex), np.asarray(basis_b, dtype=complex))


def check_basis(basis, dim: int | None = None, tol: float = 1e-10) -> np.ndarray:
    b = np.asarray(basis, dtype=complex)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("basis must be a square matrix of column vectors")
    if dim is not None and b.shape[0] != dim:
        raise ValueError(f"basis has dimension {b.shape[0]}, expected {dim}")
    if np.max(np.abs(b.conj().T @ b - np.eye(b.shape[0]))) > tol:
        raise ValueError("basis vectors are not orthonormal")
    return b


def as_basis(basis, dim: int) -> np.ndarray:
    """Accept a ``BlochAngle`` (qubit only) or an explicit column basis."""
    if isinstance(basis, BlochAngle):
        if dim != 2:
            raise ValueError("a Bloch angle only defines a qubit basis")
        return basis_from_angle(basis)
    if basis is None:
        return computational_basis(dim)
    return check_basis(basis, dim)


def dephase(rho, basis=None) -> np.ndarray:
    """Remove off-diagonal elements of ``rho`` in ``basis`` (columns)."""
    rho = np.asarray(rho, dtype=complex)
    b = as_basis(basis, rho.shape[-1])
    # sum_i P_i rho P_i with P_i = |b_i><b_i|
    inner = b.conj().T @ rho @ b
    diag = np.diagonal(inner, axis1=-2, axis2=-1)
    return (b * diag[..., None, :]) @ b.conj().T


def dephase_side_b(rho_ab, bob_basis=None) -> np.ndarray:
    """Dephase Bob's qubit of a two-qubit state: ``sum_i (I x P_i) rho (I x P_i)``."""
    rho_ab = np.asarray(rho_ab, dtype=complex)
    if rho_ab.shape[-2:] != (4, 4):
        raise ValueError("dephase_side_b expects 4x4 states")
    b = as_basis(bob_basis, 2)
    out = np.zeros_like(rho_ab)
    for i in range(2):
        proj = np.kron(I2, np.outer(b[:, i], b[:, i].conj()))
        out = out + proj @ rho_ab @ proj
    return out


def bloch_vector(rho) -> np.ndarray:
    rho = np.asarray(rho)
    return np.real(np.stack([np.trace(rho @ p, axis1=-2, axis2=-1) for p in PAULIS[1:]], axis=-1))


def state_from_bloch(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    return 0.5 * (I2 + r[0] * SX + r[1] * SY + r[2] * SZ)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_state(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the Ginibre ensemble (full rank by default)."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_pure(dim: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return pure(v)
