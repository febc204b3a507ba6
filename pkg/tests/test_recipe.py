"""Tests for recipe module."""

import math
from fractions import Fraction

import numpy as np
import pytest

from polcoh.errors import PlanMismatchError, RangeError, SingularSystemError
from polcoh.fock import coherence_tensor, noon_state, random_mixed_state
from polcoh.gadget import MeasurementSetting
from polcoh.recipe import (
    GroupSystem,
    MeasurementRecord,
    aggregate,
    build_group_system,
    condition_report,
    reconstruct,
    settings_plan,
    solve_group,
    surviving_betas,
)
from polcoh.sampler import exact_records


@pytest.fixture
def rng():
    """Seeded generator for random states."""
    return np.random.default_rng(3)


def assert_tensor_close(got, expected, tol=1e-8):
    scale = max(1.0, float(np.max(np.abs(expected.values))))
    assert np.max(np.abs(got.values - expected.values)) <= tol * scale


def test_plan_sizes():
    """Every plan has exactly (N+1)^2 distinct settings."""
    for N in range(1, 13):
        plan = settings_plan(N)
        settings = plan.settings
        assert len(settings) == (N + 1) ** 2
        for pos, a in enumerate(settings):
            assert not any(a.close_to(b) for b in settings[pos + 1 :])


def test_plan_angles_even_and_odd():
    """Even and odd orders use their own theta and phi grids."""
    even = settings_plan(2)
    assert even.parity == "even"
    assert even.theta_fractions == [Fraction(1, 8), Fraction(1, 4), Fraction(3, 8)]
    assert even.phi_fractions == [Fraction(2, 3), Fraction(4, 3), Fraction(2)]
    assert even.thetas == pytest.approx([math.pi / 8, math.pi / 4, 3 * math.pi / 8])
    assert even.phis[-1] == pytest.approx(2 * math.pi)
    assert even.extra is None

    odd = settings_plan(3)
    assert odd.parity == "odd"
    assert odd.theta_fractions == [Fraction(1, 8), Fraction(1, 4), Fraction(3, 8)]
    assert len(odd.phis) == 5
    assert odd.extra == MeasurementSetting(0.0, 0.0)
    assert odd.settings[-1] == odd.extra


def test_plan_fractions_match_angles():
    """Exact fractions agree with the float angles."""
    for N in range(1, 13):
        plan = settings_plan(N)
        assert [float(f) * math.pi for f in plan.theta_fractions] == pytest.approx(list(plan.thetas))
        assert [float(f) * math.pi for f in plan.phi_fractions] == pytest.approx(list(plan.phis))


def test_plan_rejects_bad_orders():
    """Orders outside 1..16 raise RangeError."""
    for bad in (0, 17, -1, True):
        with pytest.raises(RangeError):
            settings_plan(bad)


def test_surviving_betas():
    """Each weight keeps beta = -m and K - m when they fit."""
    plan = settings_plan(4)
    assert surviving_betas(plan, 0) == (0,)
    assert surviving_betas(plan, 2) == (-2, 3)
    odd = settings_plan(3)
    assert surviving_betas(odd, 0) == (0,)
    assert surviving_betas(odd, 2) == (-2, 3)


def test_groups_cover_every_coherence():
    """Between them the group systems reach every beta or its conjugate."""
    for N in range(1, 9):
        plan = settings_plan(N)
        zeros = {theta: 0j for theta in plan.thetas}
        extra = MeasurementRecord(plan.extra, 0.0) if plan.extra is not None else None
        found = set()
        for m in plan.weights:
            system = build_group_system(plan, m, zeros, extra)
            assert system.matrix.shape[0] == system.matrix.shape[1]
            found.update(system.unknowns)
        betas = {idx.beta for idx in found}
        for beta in range(-N, N + 1):
            assert beta in betas or -beta in betas


def test_group_systems_are_solvable():
    """Equilibrated group matrices keep sigma_min > 1e-12 sigma_max up to order 12."""
    for N in range(1, 13):
        plan = settings_plan(N)
        zeros = {theta: 0j for theta in plan.thetas}
        extra = MeasurementRecord(plan.extra, 0.0) if plan.extra is not None else None
        for m in plan.weights:
            scaled, _, _ = build_group_system(plan, m, zeros, extra).scaled_matrix()
            sigma = np.linalg.svd(scaled, compute_uv=False)
            assert sigma[-1] > 1e-12 * sigma[0], (N, m)


def test_group_exponents_are_distinct():
    """Columns of every group differ in alpha, and mixed groups split by parity."""
    for N in range(1, 13):
        plan = settings_plan(N)
        zeros = {theta: 0j for theta in plan.thetas}
        extra = MeasurementRecord(plan.extra, 0.0) if plan.extra is not None else None
        for m in plan.weights:
            system = build_group_system(plan, m, zeros, extra)
            exponents = system.exponents
            assert len(set(exponents)) == len(exponents), (N, m)
            parities = {
                beta: {a % 2 for idx, a in zip(system.unknowns, exponents) if idx.beta == beta}
                for beta in system.betas
            }
            assert all(len(p) == 1 for p in parities.values()), (N, m)
            if len(system.betas) == 2:
                assert parities[system.betas[0]] != parities[system.betas[1]], (N, m)


def test_condition_report():
    """Every weight gets a finite condition number."""
    report = condition_report(settings_plan(5))
    assert sorted(report) == list(settings_plan(5).weights)
    assert all(math.isfinite(c) and c >= 1.0 for c in report.values())


def test_build_group_system_errors():
    """Bad weights and a missing extra record are reported."""
    plan = settings_plan(3)
    zeros = {theta: 0j for theta in plan.thetas}
    with pytest.raises(RangeError):
        build_group_system(plan, 7, zeros, MeasurementRecord(plan.extra, 0.0))
    with pytest.raises(PlanMismatchError):
        build_group_system(plan, 0, zeros)
    with pytest.raises(PlanMismatchError):
        build_group_system(settings_plan(2), 0, {})


def test_singular_system_is_rejected():
    """A rank-deficient matrix raises SingularSystemError."""
    system = GroupSystem(
        m=0,
        betas=(0,),
        unknowns=(),
        matrix=np.array([[1.0, 1.0], [1.0, 1.0]]),
        rhs=np.array([1.0, 1.0], dtype=complex),
        condition=float("inf"),
    )
    with pytest.raises(SingularSystemError):
        solve_group(system)


def test_aggregate_filters_phases(rng):
    """Aggregation matches the direct roots-of-unity sum."""
    state = random_mixed_state(2, rng)
    plan = settings_plan(2)
    records = exact_records(state, plan)
    K = len(plan.phis)
    for m in plan.weights:
        sums = aggregate(records, plan, m)
        for j, theta in enumerate(plan.thetas):
            row = records[j * K : (j + 1) * K]
            expected = sum(np.exp(1j * m * phi) * r.value for phi, r in zip(plan.phis, row)) / K
            assert sums[theta] == pytest.approx(expected)


def test_reconstruct_exact_round_trip(rng):
    """Exact records give back the full coherence tensor."""
    for N in range(1, 7):
        plan = settings_plan(N)
        for _ in range(100):
            state = random_mixed_state(N, rng)
            tensor = reconstruct(exact_records(state, plan), N)
            assert_tensor_close(tensor, coherence_tensor(state))


def test_reconstruct_noon():
    """NOON2 has corner coherences 1 and nothing else."""
    tensor = reconstruct(exact_records(noon_state(2), settings_plan(2)), 2)
    expected = np.zeros((3, 3))
    expected[0, 0] = expected[0, 2] = expected[2, 0] = expected[2, 2] = 1.0
    assert np.allclose(tensor.values, expected, atol=1e-10)
    assert len(tensor.diagnostics) == len(settings_plan(2).weights)
    assert tensor.diagnostics[0].residual < 1e-10


def test_reconstruct_is_order_independent(rng):
    """Shuffled records reconstruct to the same tensor."""
    state = random_mixed_state(3, rng)
    plan = settings_plan(3)
    records = exact_records(state, plan)
    shuffled = [records[i] for i in rng.permutation(len(records))]
    assert_tensor_close(reconstruct(shuffled, 3), reconstruct(records, 3), tol=1e-12)


def test_reconstruct_rejects_bad_record_sets(rng):
    """Missing, duplicated and foreign records raise PlanMismatchError."""
    plan = settings_plan(2)
    records = exact_records(noon_state(2), plan)
    with pytest.raises(PlanMismatchError):
        reconstruct(records[:-1], 2)
    with pytest.raises(PlanMismatchError):
        reconstruct(records + [records[0]], 2)
    with pytest.raises(PlanMismatchError):
        reconstruct(records[:-1] + [MeasurementRecord(MeasurementSetting(0.1, 0.1), 0.0)], 2)
    with pytest.raises(PlanMismatchError):
        reconstruct(records, 3)


def test_reconstruct_accepts_two_pi_as_zero():
    """A record written at phi = 2 pi matches the plan setting phi = 0."""
    plan = settings_plan(2)
    records = exact_records(noon_state(2), plan)
    moved = [
        MeasurementRecord(MeasurementSetting(r.setting.theta, r.setting.phi + 2 * math.pi), r.value)
        for r in records
    ]
    assert_tensor_close(reconstruct(moved, 2), reconstruct(records, 2), tol=1e-12)


def test_theta_zero_record_matches_any_phi(rng):
    """For odd N the theta = 0 record is accepted whatever its phi."""
    plan = settings_plan(3)
    records = exact_records(random_mixed_state(3, rng), plan)
    last = records[-1]
    moved = records[:-1] + [MeasurementRecord(MeasurementSetting(0.0, 1.3), last.value)]
    assert_tensor_close(reconstruct(moved, 3), reconstruct(records, 3), tol=1e-12)
    with pytest.raises(PlanMismatchError):
        reconstruct(moved + [MeasurementRecord(MeasurementSetting(0.0, 2.5), last.value)], 3)


def test_stderr_propagation(rng):
    """Propagated errors equal the spread of single-record perturbations."""
    state = random_mixed_state(2, rng)
    plan = settings_plan(2)
    exact = exact_records(state, plan)
    sigma = 0.01
    noisy = [MeasurementRecord(r.setting, r.value, sigma) for r in exact]
    tensor = reconstruct(noisy, 2)
    assert tensor.stderr is not None

    base = reconstruct(exact, 2).values
    variance = np.zeros((3, 3))
    for pos in range(len(exact)):
        bumped = list(exact)
        r = bumped[pos]
        bumped[pos] = MeasurementRecord(r.setting, r.value + sigma)
        variance += np.abs(reconstruct(bumped, 2).values - base) ** 2
    assert np.allclose(tensor.stderr, np.sqrt(variance), rtol=1e-6, atol=1e-12)


def test_no_stderr_without_record_errors(rng):
    """Records without errors give a tensor without stderr."""
    tensor = reconstruct(exact_records(random_mixed_state(2, rng), settings_plan(2)), 2)
    assert tensor.stderr is None


def test_record_dict_round_trip():
    """Records survive to_dict/from_dict."""
    record = MeasurementRecord(MeasurementSetting(0.3, 1.2), 0.75, 0.01)
    assert MeasurementRecord.from_dict(record.to_dict()) == record
