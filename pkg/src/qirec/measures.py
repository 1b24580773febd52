"""Coherence and entanglement quantifiers for one and two qubits.

All coherence quantities are relative-entropy based and measured in bits.
Functions taking a two-qubit state accept stacks ``(..., 4, 4)`` except the
steering-induced coherence, which runs an optimiser per state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .qmat import (
    I2,
    PAULIS,
    SY,
    BlochAngle,
    as_basis,
    basis_from_angle,
    bloch_vector,
    dephase,
    dephase_side_b,
    herm_eig,
    partial_trace,
    von_neumann_entropy,
)

ZERO_PROB = 1e-12
_YY = np.kron(SY, SY)


@dataclass(frozen=True)
class ProjectiveMeasurement:
    """Two-outcome projective measurement along a Bloch direction."""

    angle: BlochAngle

    @property
    def projectors(self) -> tuple[np.ndarray, np.ndarray]:
        b = basis_from_angle(self.angle)
        return (np.outer(b[:, 0], b[:, 0].conj()), np.outer(b[:, 1], b[:, 1].conj()))


@dataclass
class SteeredEnsemble:
    probabilities: np.ndarray
    states: list
    # True where the outcome has probability < 1e-12 and the state is a placeholder
    degenerate: list


@dataclass
class SicResult:
    value: float
    optimal_measurement: ProjectiveMeasurement
    optimizer_trace: list = field(default_factory=list)
    converged: bool = True


@dataclass(frozen=True)
class SicConfig:
    n_phi: int = 36
    n_theta: int = 18
    n_starts: int = 3
    fatol: float = 1e-8
    xatol: float = 1e-6
    max_iter: int = 400


def rec(rho, basis=None):
    """Relative entropy of coherence ``S[dephase(rho)] - S(rho)``."""
    rho = np.asarray(rho, dtype=complex)
    val = von_neumann_entropy(dephase(rho, basis)) - von_neumann_entropy(rho)
    return np.maximum(val, 0.0) if np.ndim(val) else max(val, 0.0)


def qi_rec(rho_ab, bob_basis=None):
    """Quantum-incoherent REC: ``S[dephase_B(rho)] - S(rho)``."""
    rho_ab = np.asarray(rho_ab, dtype=complex)
    val = von_neumann_entropy(dephase_side_b(rho_ab, bob_basis)) - von_neumann_entropy(rho_ab)
    return np.maximum(val, 0.0) if np.ndim(val) else max(val, 0.0)


def extended_rec(rho_ab, basis_ab=None):
    """REC of the joint state in a 4-dim (typically product) basis."""
    return rec(rho_ab, as_basis(basis_ab, 4))


def correlation_form(rho_ab):
    """Local Bloch vectors ``a``, ``b`` and correlation matrix ``T`` of a two-qubit state."""
    rho_ab = np.asarray(rho_ab, dtype=complex)
    a = np.array([np.trace(rho_ab @ np.kron(p, I2)).real for p in PAULIS[1:]])
    b = np.array([np.trace(rho_ab @ np.kron(I2, p)).real for p in PAULIS[1:]])
    t = np.array([[np.trace(rho_ab @ np.kron(p, q)).real for q in PAULIS[1:]] for p in PAULIS[1:]])
    return a, b, t


def steered_ensemble(rho_ab, measurement: ProjectiveMeasurement) -> SteeredEnsemble:
    """Born-rule outcome probabilities and conditional states of Bob."""
    rho_ab = np.asarray(rho_ab, dtype=complex)
    probs, states, degenerate = [], [], []
    for proj in measurement.projectors:
        unnorm = partial_trace(np.kron(proj, I2) @ rho_ab, keep="B")
        p = float(np.trace(unnorm).real)
        if p < ZERO_PROB:
            probs.append(max(p, 0.0))
            states.append(I2 / 2)
            degenerate.append(True)
        else:
            probs.append(p)
            states.append(0.5 * (unnorm + unnorm.conj().T) / p)
            degenerate.append(False)
    return SteeredEnsemble(np.array(probs), states, degenerate)


def _h2(p):
    p = np.clip(p, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    return np.nan_to_num(out, nan=0.0)


def qubit_rec_bloch(r, axis):
    """REC of a qubit with Bloch vector ``r`` in the eigenbasis of ``sigma . axis``."""
    r = np.asarray(r, dtype=float)
    proj = np.clip(r @ axis, -1.0, 1.0)
    length = np.clip(np.linalg.norm(r, axis=-1), 0.0, 1.0)
    return np.maximum(_h2((1 + proj) / 2) - _h2((1 + length) / 2), 0.0)


def _avg_coherence(a, b, t, axis, m):
    """Average Bob coherence for measurement directions ``m`` of shape (k, 3)."""
    am = m @ a
    tm = m @ t
    total = np.zeros(len(m))
    for sign in (1.0, -1.0):
        p = 0.5 * (1 + sign * am)
        ok = p >= ZERO_PROB
        denom = np.where(ok, 1 + sign * am, 1.0)
        r = (b + sign * tm) / denom[:, None]
        total += np.where(ok, p * qubit_rec_bloch(r, axis), 0.0)
    return total


def _axis_of(bob_basis) -> np.ndarray:
    b = as_basis(bob_basis, 2)
    return bloch_vector(np.outer(b[:, 0], b[:, 0].conj()))


def average_coherence(rho_ab, measurement: ProjectiveMeasurement, bob_basis=None) -> float:
    """``sum_m p_m C_r(rho_B|m)`` computed from the explicit steered ensemble."""
    ens = steered_ensemble(rho_ab, measurement)
    total = 0.0
    for p, state, degenerate in zip(ens.probabilities, ens.states, ens.degenerate):
        if not degenerate:
            total += p * rec(state, bob_basis)
    return float(total)


def _h2_scalar(p):
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def _scalar_objective(a, b, t, axis):
    """Negated average coherence as a plain-float closure for the simplex search."""
    a = [float(x) for x in a]
    b = [float(x) for x in b]
    t = [[float(x) for x in row] for row in t]
    n = [float(x) for x in axis]

    def objective(x):
        st = math.sin(x[0])
        m = (st * math.cos(x[1]), st * math.sin(x[1]), math.cos(x[0]))
        am = a[0] * m[0] + a[1] * m[1] + a[2] * m[2]
        tm = [m[0] * t[0][j] + m[1] * t[1][j] + m[2] * t[2][j] for j in range(3)]
        total = 0.0
        for sign in (1.0, -1.0):
            p = 0.5 * (1 + sign * am)
            if p < ZERO_PROB:
                continue
            r = [(b[j] + sign * tm[j]) / (2 * p) for j in range(3)]
            proj = min(1.0, max(-1.0, r[0] * n[0] + r[1] * n[1] + r[2] * n[2]))
            length = min(1.0, math.sqrt(r[0] ** 2 + r[1] ** 2 + r[2] ** 2))
            total += p * max(0.0, _h2_scalar((1 + proj) / 2) - _h2_scalar((1 + length) / 2))
        return -total

    return objective


def _direction(theta, phi):
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def _canonical_angle(theta, phi) -> BlochAngle:
    v = _direction(theta, phi)
    if v[2] < 0:
        v = -v
    return BlochAngle(math.acos(max(-1.0, min(1.0, v[2]))), math.atan2(v[1], v[0]))


def sic(rho_ab, bob_basis=None, cfg: SicConfig | None = None) -> SicResult:
    """Steering-induced coherence: best average Bob coherence over Alice's
    projective measurements.

    A hemisphere grid (antipodal directions give the same measurement) picks
    the starting points, Nelder-Mead refines the best few.
    """
    cfg = cfg or SicConfig()
    rho_ab = np.asarray(rho_ab, dtype=complex)
    a, b, t = correlation_form(rho_ab)
    axis = _axis_of(bob_basis)

    phis = np.arange(cfg.n_phi) * (2 * math.pi / cfg.n_phi)
    thetas = np.linspace(0.0, math.pi / 2, cfg.n_theta)
    pp, tt = np.meshgrid(phis, thetas, indexing="ij")  # phi outer, theta inner
    grid_theta = tt.ravel()
    grid_phi = pp.ravel()
    values = _avg_coherence(a, b, t, axis, _direction(grid_theta, grid_phi))

    # ties go to the first point in scan order
    first = int(np.argmax(values >= values.max() - 1e-12))
    order = np.concatenate([[first], np.argsort(-values, kind="stable")])
    best_val = float(values[first])
    best = (float(grid_theta[first]), float(grid_phi[first]))
    trace = [(_canonical_angle(*best), best_val)]
    converged = True

    objective = _scalar_objective(a, b, t, axis)

    starts = []
    for idx in order:
        cand = (float(grid_theta[idx]), float(grid_phi[idx]))
        if all(abs(cand[0] - s[0]) + abs(cand[1] - s[1]) > 1e-9 for s in starts):
            starts.append(cand)
        if len(starts) == cfg.n_starts:
            break

    for start in starts:
        steps = []
        res = minimize(
            objective,
            np.array(start),
            method="Nelder-Mead",
            callback=lambda xk: steps.append((float(xk[0]), float(xk[1]))),
            options={
                "xatol": cfg.xatol,
                "fatol": cfg.fatol,
                "maxiter": cfg.max_iter,
                "initial_simplex": np.array(
                    [start, (start[0] + 0.05, start[1]), (start[0], start[1] + 0.1)]
                ),
            },
        )
        converged = converged and bool(res.success)
        for xk in steps[-5:]:
            trace.append((_canonical_angle(*xk), -objective(xk)))
        if -res.fun > best_val + 1e-12:
            best_val = float(-res.fun)
            best = (float(res.x[0]), float(res.x[1]))

    angle = _canonical_angle(*best)
    value = float(_avg_coherence(a, b, t, axis, angle.vector[None, :])[0])
    return SicResult(value, ProjectiveMeasurement(angle), trace, converged)


def concurrence(rho_ab):
    """Wootters concurrence ``max(0, l1 - l2 - l3 - l4)``.

    The ``l_i`` are the square roots of the eigenvalues of ``rho @ spin_flip(rho)``.
    With ``rho = B B^dagger`` they equal the singular values of
    ``B^T (Y x Y) B``, which avoids square roots of near-zero eigenvalues.
    """
    rho_ab = np.asarray(rho_ab, dtype=complex)
    vals, vecs = herm_eig(rho_ab)
    b = vecs * np.sqrt(np.clip(vals, 0.0, None))[..., None, :]
    tau = np.swapaxes(b, -1, -2) @ _YY @ b
    lam = np.linalg.svd(tau, compute_uv=False)  # descending
    c = np.maximum(0.0, lam[..., 0] - lam[..., 1] - lam[..., 2] - lam[..., 3])
    return float(c) if np.ndim(c) == 0 else c
