"""Trajectory sampling and non-Markovianity measures.

A trajectory evaluates one quantifier on ``(L_t x I)(rho0)`` (or ``L_t(rho0)``
for single-qubit inputs) along a time grid. The measures integrate the
positive part of the time derivative, discretised as the sum of positive
increments between grid points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from . import measures
from .channels import Family, QubitChannel, intermediate_map
from .errors import SingularMapError
from .qmat import (
    BlochAngle,
    basis_from_angle,
    computational_basis,
    dephase_side_b,
    partial_trace,
    pure,
    random_pure,
    trace_distance,
    trace_norm,
    von_neumann_entropy,
)

QUANTIFIERS = (
    "qi_rec",
    "sic",
    "rec_local_A",
    "rec_local_B",
    "extended_rec",
    "concurrence",
    "trace_distance_pair",
)
BELL = pure([1, 0, 0, 1])
INCREASE_THRESHOLD = 1e-9
WITNESS_THRESHOLD = 1e-7


@dataclass
class QuantifierSeries:
    name: str
    basis: BlochAngle | None
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if self.name not in QUANTIFIERS:
            raise ValueError(f"unknown quantifier {self.name!r}")
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        if not np.all(np.isfinite(self.values)):
            raise ValueError(f"{self.name} series has non-finite values")

    @property
    def samples(self) -> list[tuple[float, float]]:
        return list(zip(self.times.tolist(), self.values.tolist()))


@dataclass
class NonMarkovReport:
    measure: str
    value: float
    argmax: object = None
    violation_intervals: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def flagged(self) -> bool:
        return bool(self.violation_intervals)


def channels_on_grid(family: Family, tgrid) -> list[QubitChannel]:
    return [family.channel(float(t)) for t in tgrid]


def evolve(family: Family, rho0, tgrid) -> np.ndarray:
    """Stack of evolved states, the channel acting on the first qubit."""
    rho0 = np.asarray(rho0, dtype=complex)
    chois = np.stack([ch.choi for ch in channels_on_grid(family, tgrid)]).reshape(-1, 2, 2, 2, 2)
    if rho0.shape == (2, 2):
        return np.einsum("taibj,ij->tab", chois, rho0)
    if rho0.shape == (4, 4):
        r = rho0.reshape(2, 2, 2, 2)
        return np.einsum("taibj,ikjl->takbl", chois, r).reshape(-1, 4, 4)
    raise ValueError("rho0 must be 2x2 or 4x4")


def _bob_basis(basis):
    return computational_basis(2) if basis is None else basis


def evaluate(name: str, states: np.ndarray, basis=None, *, partner_states=None, sic_cfg=None) -> np.ndarray:
    """Evaluate quantifier ``name`` on a stack of (already evolved) states."""
    if name == "qi_rec":
        return np.atleast_1d(measures.qi_rec(states, _bob_basis(basis)))
    if name == "sic":
        return np.array([measures.sic(s, _bob_basis(basis), sic_cfg).value for s in states])
    if name == "rec_local_A":
        local = states if states.shape[-1] == 2 else partial_trace(states, "A")
        return np.atleast_1d(measures.rec(local, _bob_basis(basis)))
    if name == "rec_local_B":
        return np.atleast_1d(measures.rec(partial_trace(states, "B"), _bob_basis(basis)))
    if name == "extended_rec":
        if basis is None or isinstance(basis, BlochAngle):
            bob = computational_basis(2) if basis is None else basis_from_angle(basis)
            basis = np.kron(computational_basis(2), bob)
        return np.atleast_1d(measures.extended_rec(states, basis))
    if name == "concurrence":
        return np.atleast_1d(measures.concurrence(states))
    if name == "trace_distance_pair":
        if partner_states is None:
            raise ValueError("trace_distance_pair needs a partner state")
        return np.atleast_1d(trace_distance(states, partner_states))
    raise ValueError(f"unknown quantifier {name!r}")


def trajectory(family: Family, rho0, tgrid, quantifier: str, basis=None, *, partner=None,
               sic_cfg=None) -> QuantifierSeries:
    """Sample ``quantifier`` along ``tgrid``.

    ``basis`` is Bob's reference basis (``BlochAngle`` or column matrix) for the
    bipartite quantifiers, Alice's for ``rec_local_A``. For
    ``extended_rec`` a ``BlochAngle`` means the product basis
    ``sigma_z (x) basis``. ``trace_distance_pair`` compares ``rho0`` with
    ``partner``.
    """
    tgrid = np.asarray(tgrid, dtype=float)
    states = evolve(family, rho0, tgrid)
    partner_states = evolve(family, partner, tgrid) if partner is not None else None
    values = evaluate(quantifier, states, basis, partner_states=partner_states, sic_cfg=sic_cfg)
    return QuantifierSeries(quantifier, basis if isinstance(basis, BlochAngle) else None, tgrid, values)


def _increase_steps(times, values, threshold):
    dv = np.diff(values)
    steps = np.nonzero(dv > threshold)[0]
    intervals = []
    for k in steps:
        if intervals and intervals[-1][1] == times[k]:
            intervals[-1] = (intervals[-1][0], float(times[k + 1]))
        else:
            intervals.append((float(times[k]), float(times[k + 1])))
    return float(np.sum(dv[steps])), intervals


def positive_increase(series: QuantifierSeries, threshold: float = INCREASE_THRESHOLD):
    """Integral of the positive part of the derivative, with the increasing intervals.

    Increments per grid step at or below ``threshold`` are treated as jitter.
    """
    if len(series.times) < 2:
        raise ValueError("need at least two samples")
    return _increase_steps(series.times, series.values, threshold)


def monotonicity_witness(series: QuantifierSeries, threshold: float = WITNESS_THRESHOLD) -> NonMarkovReport:
    """Flag non-Markovianity when a qi_rec or sic series increases by more than ``threshold``."""
    value, intervals = _increase_steps(series.times, series.values, threshold)
    return NonMarkovReport("monotonicity_witness", value, series.basis, intervals,
                           {"quantifier": series.name})


def hemisphere_grid(n_phi: int = 12, n_theta: int = 6) -> list[BlochAngle]:
    out = [BlochAngle(0.0)]
    for theta in np.linspace(0.0, math.pi / 2, n_theta)[1:]:
        for phi in np.arange(n_phi) * (2 * math.pi / n_phi):
            out.append(BlochAngle(float(theta), float(phi)))
    return out


PLATE_FAMILY = tuple(BlochAngle.xz(k * math.pi / 16) for k in range(5))


def n_qi(family: Family, tgrid, basis_grid=None, *, refine: bool = True) -> NonMarkovReport:
    """Largest integrated increase of qi_rec over Bob's bases, Bell input.

    The maximum is taken over ``basis_grid`` (hemisphere grid plus the
    plate-angle family by default) and then polished with a simplex search,
    so the value is a lower bound on the supremum.
    """
    tgrid = np.asarray(tgrid, dtype=float)
    states = evolve(family, BELL, tgrid)
    joint_entropy = von_neumann_entropy(states)

    def score(angle: BlochAngle):
        values = np.maximum(von_neumann_entropy(dephase_side_b(states, angle)) - joint_entropy, 0.0)
        return _increase_steps(tgrid, values, INCREASE_THRESHOLD)

    grid = list(basis_grid) if basis_grid is not None else hemisphere_grid() + list(PLATE_FAMILY)
    best_val, best_int, best_angle = -1.0, [], None
    for angle in grid:
        val, ints = score(angle)
        if val > best_val:
            best_val, best_int, best_angle = val, ints, angle

    if refine and best_val > 0:
        def objective(x):
            theta = min(max(x[0], 0.0), math.pi)
            return -score(BlochAngle(theta, x[1]))[0]

        res = minimize(objective, np.array([best_angle.theta, best_angle.phi]), method="Nelder-Mead",
                       options={"xatol": 1e-4, "fatol": 1e-10, "maxiter": 200,
                                "initial_simplex": np.array([[best_angle.theta, best_angle.phi],
                                                             [best_angle.theta + 0.05, best_angle.phi],
                                                             [best_angle.theta, best_angle.phi + 0.1]])})
        if -res.fun > best_val:
            angle = BlochAngle(min(max(res.x[0], 0.0), math.pi), res.x[1])
            val, ints = score(angle)
            if val > best_val:
                best_val, best_int, best_angle = val, ints, angle

    return NonMarkovReport("N_QI", max(best_val, 0.0), best_angle, best_int, {"n_bases": len(grid)})


def default_blp_pairs(n_random: int = 50, seed: int = 20190101):
    """Antipodal Pauli eigenstate pairs followed by random pure pairs (fixed seed)."""
    s = 1 / math.sqrt(2)
    pairs = [
        (pure([1, 0]), pure([0, 1])),
        (pure([s, s]), pure([s, -s])),
        (pure([s, 1j * s]), pure([s, -1j * s])),
    ]
    rng = np.random.default_rng(seed)
    pairs += [(random_pure(2, rng), random_pure(2, rng)) for _ in range(n_random)]
    return pairs


def blp(family: Family, tgrid, pairs=None) -> NonMarkovReport:
    """Trace-distance revival measure, maximised over a finite pair set (lower bound)."""
    tgrid = np.asarray(tgrid, dtype=float)
    pairs = default_blp_pairs() if pairs is None else list(pairs)
    if not pairs:
        raise ValueError("blp needs at least one state pair")
    chois = np.stack([ch.choi for ch in channels_on_grid(family, tgrid)]).reshape(-1, 2, 2, 2, 2)
    best_val, best_int, best_idx = -1.0, [], None
    for idx, (rho, tau) in enumerate(pairs):
        diff = np.einsum("taibj,ij->tab", chois, np.asarray(rho) - np.asarray(tau))
        dist = 0.5 * trace_norm(diff)
        val, ints = _increase_steps(tgrid, dist, INCREASE_THRESHOLD)
        if val > best_val:
            best_val, best_int, best_idx = val, ints, idx
    return NonMarkovReport("BLP", max(best_val, 0.0), best_idx, best_int,
                           {"n_pairs": len(pairs), "lower_bound": True})


def rhp(family: Family, tgrid) -> NonMarkovReport:
    """Grid-step version of the Choi-state trace-norm excess of intermediate maps.

    Steps whose starting map cannot be inverted are skipped and listed in
    ``details["skipped"]``.
    """
    tgrid = np.asarray(tgrid, dtype=float)
    if np.any(np.diff(tgrid) <= 0):
        raise ValueError("time grid must be strictly increasing")
    excess = []
    skipped = []
    for k in range(len(tgrid) - 1):
        try:
            m = intermediate_map(family, float(tgrid[k]), float(tgrid[k + 1]))
        except SingularMapError:
            skipped.append(float(tgrid[k]))
            excess.append(0.0)
            continue
        excess.append(trace_norm(m.choi_state()) - 1.0)
    excess = np.array(excess)
    positive = excess > INCREASE_THRESHOLD
    intervals = []
    for k in np.nonzero(positive)[0]:
        if intervals and intervals[-1][1] == tgrid[k]:
            intervals[-1] = (intervals[-1][0], float(tgrid[k + 1]))
        else:
            intervals.append((float(tgrid[k]), float(tgrid[k + 1])))
    return NonMarkovReport("RHP", float(np.sum(excess[positive])), None, intervals,
                           {"skipped": skipped, "excess": excess})


def intervals_overlap(first, second, tol: float = 0.0) -> bool:
    """Every interval of each list meets some interval of the other (within ``tol``)."""
    def covered(a, b):
        return all(any(x0 <= y1 + tol and y0 <= x1 + tol for y0, y1 in b) for x0, x1 in a)

    if not first and not second:
        return True
    return covered(first, second) and covered(second, first)
