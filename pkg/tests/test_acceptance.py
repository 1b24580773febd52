"""Acceptance gate: eight end-to-end criteria at their stated tolerances.

Each test records a PASS/FAIL line that is printed in the pytest summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import record_criterion, rng_from
from qirec import scenarios as sc
from qirec.channels import (
    AmplitudeDampingFamily,
    DephasingFamily,
    RandomUnitaryFamily,
    SpectralProfile,
    apply_local_a,
    integrate_master,
    intermediate_map,
)
from qirec.measures import qi_rec, sic
from qirec.qmat import BlochAngle, binary_entropy, pure, random_state, trace_distance
from qirec.witness import (
    BELL,
    blp,
    evolve,
    evaluate,
    intervals_overlap,
    monotonicity_witness,
    n_qi,
    positive_increase,
    rhp,
    trajectory,
)

GAUSS = SpectralProfile.gaussian(sc.MARKOV_SIGMA_HZ)
BOB_BASES = [BlochAngle(math.radians(d)) for d in (0, 22.5, 45, 67.5, 90)] + [
    BlochAngle(math.pi / 4, math.pi / 2),
    BlochAngle(math.pi / 2, math.pi / 2),
    BlochAngle(math.pi / 3, 5 * math.pi / 4),
]
N_POINTS = 200


def gauss_family(alpha_deg):
    return DephasingFamily(GAUSS, BlochAngle.xz(math.radians(alpha_deg)), 1e-15)


@pytest.fixture(scope="module")
def registry_runs():
    runs = {}
    start = time.perf_counter()
    for sid in sc.REGISTRY_IDS:
        first = sc.run_scenario(sc.get_scenario(sid))
        second = sc.run_scenario(sc.get_scenario(sid))
        runs[sid] = (first, second)
    return runs, time.perf_counter() - start


def test_criterion_1_soundness_on_cp_divisible_families():
    cases = [
        ("dephasing alpha=0", gauss_family(0), 70.0),
        ("dephasing alpha=20", gauss_family(20), 70.0),
        ("dephasing alpha=45", gauss_family(45), 70.0),
        ("amplitude damping 0.2", AmplitudeDampingFamily(0.2, 1.0), 20.0),
        ("random unitary markov", RandomUnitaryFamily(1.0), 3.0),
    ]
    start = time.perf_counter()
    worst = -math.inf
    for _, fam, t_max in cases:
        states = evolve(fam, BELL, np.linspace(0, t_max, N_POINTS))
        for basis in BOB_BASES:
            for name in ("qi_rec", "sic"):
                values = evaluate(name, states, basis)
                worst = max(worst, float(np.max(np.diff(values))))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-7 and elapsed < 120
    record_criterion(1, ok, f"max increment {worst:.2e} (<= 1e-7) over 5 families x 8 bases, {elapsed:.1f} s")
    assert ok


def test_criterion_2_weaker_witnesses_depend_on_basis():
    fam = gauss_family(20)
    grid = np.linspace(0, 70.0, N_POINTS)
    local = trajectory(fam, pure([1, 0]), grid, "rec_local_A", BlochAngle(0.0))
    local_inc = positive_increase(local)[0]
    ext_inc = max(positive_increase(trajectory(fam, BELL, grid, "extended_rec", b))[0] for b in BOB_BASES)
    qi_worst = max(float(np.max(np.diff(trajectory(fam, BELL, grid, "qi_rec", b).values))) for b in BOB_BASES)
    ok = local_inc > 1e-3 and ext_inc > 1e-3 and qi_worst <= 1e-7
    record_criterion(2, ok, f"local increase {local_inc:.4f}, best extended increase {ext_inc:.4f}, "
                            f"qi_rec max increment {qi_worst:.2e}")
    assert ok


def test_criterion_3_closed_form_oracle():
    start = time.perf_counter()
    fam = gauss_family(0)
    grid = np.linspace(0, 70.0, N_POINTS)
    k = np.abs(fam.kappa(grid))
    qi = trajectory(fam, BELL, grid, "qi_rec", BlochAngle(0.0)).values
    conc = trajectory(fam, BELL, grid, "concurrence").values
    err_qi = float(np.max(np.abs(qi - (1 - binary_entropy((1 + k) / 2)))))
    err_c = float(np.max(np.abs(conc - k)))
    elapsed = time.perf_counter() - start
    ok = err_qi <= 1e-8 and err_c <= 1e-8 and elapsed < 5
    record_criterion(3, ok, f"qi_rec error {err_qi:.1e}, concurrence error {err_c:.1e}, {elapsed:.2f} s")
    assert ok


def test_criterion_4_photonic_detection_agreement():
    start = time.perf_counter()
    fam = sc.build_family(sc.get_scenario("photonic-nonmarkov").channel)
    grid = np.linspace(0, 1300.0, N_POINTS)
    qi = monotonicity_witness(trajectory(fam, BELL, grid, "qi_rec")).violation_intervals
    sc_int = monotonicity_witness(trajectory(fam, BELL, grid, "sic")).violation_intervals
    conc = positive_increase(trajectory(fam, BELL, grid, "concurrence"))[1]
    rh = rhp(fam, grid)
    lists = [qi, sc_int, conc, rh.violation_intervals]
    overlap = all(bool(a) and intervals_overlap(a, b) for a in lists for b in lists)
    nq, bl = n_qi(fam, grid), blp(fam, grid)
    elapsed = time.perf_counter() - start
    ok = overlap and nq.value > 0 and rh.value > 0 and bl.value > 0 and elapsed < 120
    record_criterion(4, ok, f"intervals overlap={overlap}, N_QI={nq.value:.4f}, RHP={rh.value:.4f}, "
                            f"BLP>={bl.value:.4f}, {elapsed:.1f} s")
    assert ok


def test_criterion_5_sic_bounded_by_qi_rec(registry_runs):
    start = time.perf_counter()
    rng = rng_from(20240501)
    bases = [BlochAngle(0.0), BlochAngle(math.pi / 2), BlochAngle(math.pi / 2, math.pi / 2),
             BlochAngle(1.1, 2.3)]
    worst = -math.inf
    for i in range(500):
        rho = random_state(4, rng, rank=1 + i % 4)
        for b in bases:
            worst = max(worst, sic(rho, b).value - qi_rec(rho, b))
    runs, _ = registry_runs
    n_traj = 0
    for first, _ in runs.values():
        qi = {(s.basis.theta, s.basis.phi): s.values for s in first.series if s.name == "qi_rec"}
        for s in first.series:
            if s.name == "sic":
                worst = max(worst, float(np.max(s.values - qi[(s.basis.theta, s.basis.phi)])))
                n_traj += 1
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and n_traj > 0 and elapsed < 600
    record_criterion(5, ok, f"max(sic - qi_rec) = {worst:.2e} over 2000 random cases and {n_traj} "
                            f"scenario trajectories, {elapsed:.1f} s")
    assert ok


def _rk4_error(fam, rho0, grid, exclude=()):
    """Max trace distance to the analytic map, integrating piecewise between excluded points."""
    keep = np.ones(len(grid), dtype=bool)
    for tz in exclude:
        k = int(np.searchsorted(grid, tz))
        keep[max(0, k - 3): k + 3] = False
    worst = 0.0
    idx = np.nonzero(keep)[0]
    runs = np.split(idx, np.nonzero(np.diff(idx) > 1)[0] + 1)
    for run in runs:
        seg = grid[run]
        start = apply_local_a(fam.channel(float(seg[0])), rho0) if rho0.shape == (4, 4) else \
            fam.channel(float(seg[0])).apply(rho0)
        numeric = integrate_master(fam.schedule(), start, seg) if len(seg) > 1 else [start]
        for t, r in zip(seg, numeric):
            ch = fam.channel(float(t))
            exact = apply_local_a(ch, rho0) if rho0.shape == (4, 4) else ch.apply(rho0)
            worst = max(worst, trace_distance(r, exact))
    return worst


def test_criterion_6_master_equation_oracle():
    start = time.perf_counter()
    inputs = [sc.builtin_state("psi0_A"), sc.builtin_state("psi0_AB")]
    errors = {}
    ad_nm = AmplitudeDampingFamily(25.0, 1.0)
    cases = [
        ("ru markov", RandomUnitaryFamily(1.0), np.linspace(0, 3.0, N_POINTS), ()),
        ("ru non-markov", RandomUnitaryFamily(1.0, 3.8), np.linspace(0, 4 * math.pi, N_POINTS), ()),
        ("ad markov", AmplitudeDampingFamily(0.2, 1.0), np.linspace(0, 20.0, N_POINTS), ()),
        ("ad non-markov", ad_nm, np.linspace(0, 6.0, N_POINTS), ad_nm.zeros(6.0)),
    ]
    for label, fam, grid, zeros in cases:
        errors[label] = max(_rk4_error(fam, rho, grid, zeros) for rho in inputs)
    elapsed = time.perf_counter() - start
    worst = max(errors.values())
    ok = worst <= 1e-6 and elapsed < 60
    detail = ", ".join(f"{k} {v:.1e}" for k, v in errors.items())
    record_criterion(6, ok, f"max trace distance {detail}; {elapsed:.1f} s")
    assert ok


def test_criterion_7_blp_pair_tracks_kappa():
    plus, minus = pure([1, 1]), pure([1, -1])
    worst = 0.0
    for profile, t_max in ((GAUSS, 70.0), (sc.photonic_profile(), 1300.0)):
        fam = DephasingFamily(profile, BlochAngle(0.0), 1e-15)
        grid = np.linspace(0, t_max, N_POINTS)
        d = trajectory(fam, plus, grid, "trace_distance_pair", partner=minus).values
        worst = max(worst, float(np.max(np.abs(d - np.abs(fam.kappa(grid))))))
        rep = blp(fam, grid, [(plus, minus)])
        expected = float(np.sum(np.clip(np.diff(np.abs(fam.kappa(grid))), 0, None)))
        worst = max(worst, abs(rep.value - (expected if expected > 1e-9 else 0.0)))
    ok = worst <= 1e-9
    record_criterion(7, ok, f"max |D(t) - |kappa(t)|| = {worst:.1e}")
    assert ok


def test_criterion_8_determinism(registry_runs):
    runs, elapsed = registry_runs
    same = {sid: sc.csv_text(a).encode() == sc.csv_text(b).encode() for sid, (a, b) in runs.items()}
    ok = all(same.values())
    bad = [sid for sid, s in same.items() if not s]
    record_criterion(8, ok, f"{len(same)} scenarios run twice, identical CSV bytes"
                            + (f"; differing: {bad}" if bad else "") + f", {elapsed:.1f} s")
    assert ok


def test_registry_scenarios_finish_within_budget():
    # single-threaded, default 200-point grid
    slowest = 0.0
    for sid in sc.REGISTRY_IDS:
        start = time.perf_counter()
        sc.run_scenario(sc.get_scenario(sid))
        slowest = max(slowest, time.perf_counter() - start)
    assert slowest < 60
