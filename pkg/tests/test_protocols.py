import math

import numpy as np
import pytest

from qswitch import DensityOperator, frobenius_error
from qswitch.bath import thermal_diagonal_propagator
from qswitch.errors import ConfigError, ReachabilityError
from qswitch.liouville import dissipator_superop
from qswitch.models import ising_chain, noise_generator, target_state
from qswitch.protocols import (
    TTransform,
    algorithmic_cooling_state,
    amp_damp_exact_plan,
    amp_damp_pair_map,
    amp_damp_switch_time,
    bit_flip_pair_map,
    cooling_error_at_duration,
    cooling_protocol,
    erasure_error_at_duration,
    erasure_protocol,
    execute_plan,
    finite_T_switch_time,
    greedy_equalize_plan,
    hlp_full_plan,
    hlp_t_transforms,
    majorization_floor,
    majorizes,
    plan_from_json,
    plan_to_json,
    reachability_verdict,
    t_transform_epsilon,
    t_transform_noise_duration,
)
from qswitch.protocols import test2_target as make_test2_target

SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])

Y8 = np.arange(8, 0, -1) / 36.0
X8 = np.full(8, 1 / 8)


def bitflip_chain(n):
    return ising_chain(n, J=1.0, theta=math.pi / 2, gamma_max=5.0)


def mixed_spectrum_pair(rng, N, mixes=6):
    y = np.sort(rng.dirichlet(np.ones(N)))[::-1]
    x = y.copy()
    for _ in range(mixes):
        i, j = rng.choice(N, size=2, replace=False)
        x = TTransform(int(i), int(j), float(rng.uniform(0, 0.5))).apply(x)
    return y, np.sort(x)[::-1]


# ---------------------------------------------------------------------------
# majorization and T-transforms
# ---------------------------------------------------------------------------


def test_majorizes_basics():
    assert majorizes([0.25] * 4, [1, 0, 0, 0])
    assert not majorizes([1, 0, 0, 0], [0.25] * 4)
    assert majorizes([0.5, 0.5], [0.5, 0.5])


def test_majorization_floor_pin():
    assert majorization_floor([1, 0, 0, 0, 0, 0, 0, 0], [0.125] * 8) == 7 / 8
    assert majorization_floor([0.25] * 4, [1, 0, 0, 0]) == 0.0


def test_t_transform_mixes_toward_majorized(rng):
    for _ in range(50):
        N = int(rng.integers(2, 9))
        y, x = mixed_spectrum_pair(rng, N)
        assert majorizes(x, y, tol=1e-12)
        assert majorization_floor(x, y) <= 1e-12


def test_t_transform_validation():
    with pytest.raises(ValueError):
        TTransform(1, 1, 0.3)
    with pytest.raises(ValueError):
        TTransform(0, 1, 1.2)


def test_hlp_two_level_example():
    ts = hlp_t_transforms([0.9, 0.1], [0.6, 0.4])
    assert len(ts) == 1
    assert ts[0].lam == pytest.approx(0.375, abs=1e-14)
    assert (ts[0].i, ts[0].j) == (0, 1)
    np.testing.assert_allclose(ts[0].apply([0.9, 0.1]), [0.6, 0.4], atol=1e-15)


def test_hlp_eight_level_pairs():
    ts = hlp_t_transforms(Y8, X8)
    assert len(ts) == 4
    assert all(t.lam == pytest.approx(0.5, abs=1e-12) for t in ts)
    assert sorted((t.i, t.j) for t in ts) == [(0, 7), (1, 6), (2, 5), (3, 4)]


def test_hlp_random_decompositions(rng):
    for _ in range(60):
        N = int(rng.integers(2, 9))
        y, x = mixed_spectrum_pair(rng, N)
        seq = hlp_t_transforms(y, x)
        assert len(seq) <= N - 1
        cur = y.copy()
        for t in seq:
            nxt = t.apply(cur)
            # sandwich: each step stays between the endpoints
            assert majorizes(x, nxt, tol=1e-10)
            assert majorizes(nxt, cur, tol=1e-10)
            cur = nxt
        np.testing.assert_allclose(cur, x, atol=1e-12)


def test_hlp_rejects_non_majorized():
    with pytest.raises(ReachabilityError):
        hlp_t_transforms([0.6, 0.4], [0.9, 0.1])
    with pytest.raises(ValueError):
        hlp_t_transforms([0.1, 0.9], [0.5, 0.5])  # not descending


# ---------------------------------------------------------------------------
# switch-time formulas
# ---------------------------------------------------------------------------


def test_noise_duration_formula():
    assert t_transform_noise_duration(0.5, 2.0) == math.inf
    assert t_transform_noise_duration(0.375, 1.0) == pytest.approx(-math.log(0.25))
    assert t_transform_noise_duration(0.0, 1.0) == 0.0
    with pytest.raises(ValueError):
        t_transform_noise_duration(0.6, 1.0)
    with pytest.raises(ValueError):
        t_transform_noise_duration(0.3, 0.0)


@pytest.mark.parametrize("ratio", [0.0, 0.3, 1.0, 2.5, 17.0])
def test_amp_damp_switch_neutralizes_pair(ratio):
    gamma, tau = 1.3, 0.9
    t_switch = amp_damp_switch_time(ratio, gamma, tau)
    assert 0 <= t_switch <= tau + 1e-12
    p = np.array([ratio, 1.0]) / (ratio + 1.0)
    around = (
        SWAP
        @ amp_damp_pair_map(math.exp(-gamma * (tau - t_switch)))
        @ SWAP
        @ amp_damp_pair_map(math.exp(-gamma * t_switch))
    )
    np.testing.assert_allclose(around @ p, p, atol=1e-12)


def test_finite_T_switch_boundaries():
    b, gamma, tau = 3.0, 1.3, 0.9
    assert finite_T_switch_time(b, b, gamma, tau) == pytest.approx(tau, abs=1e-12)
    assert finite_T_switch_time(1 / b, b, gamma, tau) == pytest.approx(0.0, abs=1e-12)
    assert finite_T_switch_time(2 * b, b, gamma, tau) is None
    # infinite-b limit reduces to the amplitude-damping formula
    assert finite_T_switch_time(0.7, 1e9, gamma, tau) == pytest.approx(
        amp_damp_switch_time(0.7, gamma, tau), abs=1e-6
    )


@pytest.mark.parametrize("ratio", [1 / 3 + 0.01, 0.5, 1.0, 2.0, 3.0 - 0.01])
def test_finite_T_switch_neutralizes_pair(ratio):
    b, gamma, tau = 3.0, 1.3, 0.9
    t_switch = finite_T_switch_time(ratio, b, gamma, tau)
    p = np.array([ratio, 1.0]) / (ratio + 1.0)
    around = (
        SWAP
        @ thermal_diagonal_propagator(b, gamma, tau - t_switch)
        @ SWAP
        @ thermal_diagonal_propagator(b, gamma, t_switch)
    )
    np.testing.assert_allclose(around @ p, p, atol=1e-12)


@pytest.mark.parametrize("theta", [0.3, 0.8, 1.2])
def test_theta_noise_acts_like_thermal_pair(theta):
    # diagonal pair action of V_theta == thermal channel at b = cot^2(theta/2)
    b = 1.0 / math.tan(theta / 2) ** 2
    D = dissipator_superop(noise_generator(theta))
    G = np.array([[D[0, 0], D[0, 3]], [D[3, 0], D[3, 3]]]).real
    np.testing.assert_allclose(G @ G, G, atol=1e-12)
    gamma, t = 1.3, 0.57
    R = np.eye(2) + (math.exp(-gamma * t) - 1.0) * G
    np.testing.assert_allclose(R, thermal_diagonal_propagator(b, gamma, t), atol=1e-10)
    for ratio in (1 / b + 1e-3, 1.0, b - 1e-3):
        assert finite_T_switch_time(ratio, b, gamma, 0.9) is not None


def test_bit_flip_pair_map_is_unit_b_thermal():
    eps = math.exp(-0.8)
    np.testing.assert_allclose(
        bit_flip_pair_map(eps), thermal_diagonal_propagator(1.0, 1.0, 0.8), atol=1e-14
    )


def test_t_transform_epsilon_realizes_mix(rng):
    for _ in range(60):
        b = float(rng.uniform(1.2, 20))
        lam = float(rng.uniform(0, 0.5))
        pair = np.sort(rng.uniform(0.05, 1.0, size=2))  # favored slot is smaller
        eps = t_transform_epsilon(lam, b, pair[0] / pair[1])
        assert 0 < eps <= 1
        out = thermal_diagonal_propagator(b, 1.0, -math.log(eps)) @ pair
        np.testing.assert_allclose(out, TTransform(0, 1, lam).apply(pair), atol=1e-12)


# ---------------------------------------------------------------------------
# full plans
# ---------------------------------------------------------------------------


def eight_level_instance():
    system = bitflip_chain(3)
    rho0 = DensityOperator.from_diagonal(Y8, (2, 2, 2))
    target = DensityOperator(np.eye(8) / 8.0, (2, 2, 2))
    return system, rho0, target


def test_hlp_plan_eight_level_accounting():
    system, rho0, target = eight_level_instance()
    plan = hlp_full_plan(rho0, target, system, gamma=2.5, gamma_tau_budget=7.5)
    # four lambda=1/2 pairs, each truncated at gamma*tau = 7.5: 4 * 3/J
    assert plan.noise_duration == pytest.approx(12.0, abs=1e-9)
    predicted = math.exp(-7.5) * math.sqrt(42.0) / 36.0
    assert plan.predicted_error == pytest.approx(predicted, abs=1e-12)
    out = execute_plan(system, plan, rho0)
    err = frobenius_error(out, target)
    assert err <= 1.1 * plan.predicted_error
    assert frobenius_error(out, plan.predicted_final) < 1e-7


def test_greedy_plan_eight_level_shares_one_interval():
    system, rho0, target = eight_level_instance()
    plan = greedy_equalize_plan(rho0, target, system, gamma=2.5, gamma_tau_budget=7.5)
    assert plan.noise_duration == pytest.approx(3.0, abs=1e-9)
    predicted = math.exp(-7.5) * math.sqrt(42.0) / 36.0
    assert plan.predicted_error == pytest.approx(predicted, abs=1e-12)
    err = frobenius_error(execute_plan(system, plan, rho0), target)
    assert err <= 1.1 * plan.predicted_error


def test_greedy_never_needs_more_noise_time(rng):
    system = bitflip_chain(2)
    for _ in range(12):
        y, x = mixed_spectrum_pair(rng, 4, mixes=5)
        rho0 = DensityOperator.from_diagonal(y, (2, 2))
        target = DensityOperator.from_diagonal(x, (2, 2))
        hlp = hlp_full_plan(rho0, target, system, gamma=2.5, gamma_tau_budget=7.5)
        greedy = greedy_equalize_plan(rho0, target, system, gamma=2.5, gamma_tau_budget=7.5)
        assert greedy.noise_duration <= hlp.noise_duration + 1e-9
        for plan in (hlp, greedy):
            err = frobenius_error(execute_plan(system, plan, rho0), target)
            # the absolute floor covers the decoupling residual of exact plans
            assert err <= 1.1 * plan.predicted_error + 1e-7


def test_hlp_plan_rejects_unmajorized_target():
    system = bitflip_chain(2)
    mixed = DensityOperator(np.eye(4) / 4, (2, 2))
    sharp = DensityOperator.from_diagonal([0.7, 0.1, 0.1, 0.1], (2, 2))
    with pytest.raises(ReachabilityError):
        hlp_full_plan(mixed, sharp, system, gamma=2.5)


def test_plans_require_matching_terminal_channel():
    amp_system = ising_chain(2, theta=0.0, gamma_max=5.0)
    mixed = DensityOperator(np.eye(4) / 4, (2, 2))
    target = DensityOperator.from_diagonal([0.4, 0.3, 0.2, 0.1], (2, 2))
    with pytest.raises(ConfigError):
        hlp_full_plan(mixed, target, amp_system, gamma=2.5)
    with pytest.raises(ConfigError):
        amp_damp_exact_plan(mixed, target, bitflip_chain(2), gamma=2.5)


def test_amp_damp_exact_plan_random_pairs(rng):
    system = ising_chain(2, J=1.0, theta=0.0, gamma_max=5.0)
    for _ in range(10):
        y = rng.dirichlet(np.ones(4))
        x = rng.dirichlet(np.ones(4)) * 0.9 + 0.025  # interior spectrum
        Q = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        Q2 = np.linalg.qr(rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4)))[0]
        rho0 = DensityOperator(Q @ np.diag(y).astype(complex) @ Q.conj().T, (2, 2))
        target = DensityOperator(Q2 @ np.diag(x).astype(complex) @ Q2.conj().T, (2, 2))
        plan = amp_damp_exact_plan(rho0, target, system, gamma=5.0)
        assert plan.predicted_error == 0.0
        assert frobenius_error(execute_plan(system, plan, rho0), target) < 1e-10


def test_amp_damp_exact_plan_rejects_boundary_target():
    system = ising_chain(2, theta=0.0, gamma_max=5.0)
    mixed = DensityOperator(np.eye(4) / 4, (2, 2))
    pure = target_state("ground", (2, 2)).state
    with pytest.raises(ReachabilityError):
        amp_damp_exact_plan(mixed, pure, system, gamma=5.0)


# ---------------------------------------------------------------------------
# cooling / erasure protocols and bounds
# ---------------------------------------------------------------------------


def test_cooling_protocol_duration_bound():
    plan, bound = cooling_protocol(3, 1.0, 5.0, 1e-4)
    assert bound == pytest.approx(3.0 + 0.6 * math.log(math.sqrt(12.0) / 2e-4), abs=1e-12)
    assert plan.total_duration == pytest.approx(bound, abs=1e-12)
    system = ising_chain(3, J=1.0, theta=0.0, gamma_max=5.0)
    mixed = DensityOperator(np.eye(8) / 8.0, (2, 2, 2))
    out = execute_plan(system, plan, mixed)
    err = frobenius_error(out, target_state("ground", (2, 2, 2)).state)
    assert err <= 1.1e-4
    assert err == pytest.approx(plan.predicted_error, abs=1e-9)


def test_cooling_protocol_single_qubit():
    _, bound = cooling_protocol(1, 1.0, 5.0, 1e-4)
    assert bound == pytest.approx(math.log(math.sqrt(2.0) / 2e-4) / 5.0, abs=1e-12)


def test_cooling_error_at_duration_inverse():
    err = cooling_error_at_duration(3, 1.0, 5.0, 6.0)
    assert err == pytest.approx(math.sqrt(12.0) / 2.0 * math.exp(-5.0), abs=1e-15)
    # the two forms invert each other
    _, bound = cooling_protocol(3, 1.0, 5.0, err)
    assert bound == pytest.approx(6.0, abs=1e-10)


def test_erasure_protocol_exact_variant():
    plan, bound = erasure_protocol(3, 1.0, 5.0, "amp_damp_exact")
    assert bound == pytest.approx(3.0 + 3.0 * math.log(2.0) / 5.0, abs=1e-12)
    system = ising_chain(3, J=1.0, theta=0.0, gamma_max=5.0)
    ground = target_state("ground", (2, 2, 2)).state
    mixed = DensityOperator(np.eye(8) / 8.0, (2, 2, 2))
    assert frobenius_error(execute_plan(system, plan, ground), mixed) < 1e-10


def test_erasure_protocol_bitflip_variant():
    plan, _ = erasure_protocol(3, 1.0, 5.0, "bit_flip_asymptotic", delta_F=1e-3)
    ground = target_state("ground", (2, 2, 2)).state
    mixed = DensityOperator(np.eye(8) / 8.0, (2, 2, 2))
    err = frobenius_error(execute_plan(bitflip_chain(3), plan, ground), mixed)
    assert err == pytest.approx(1e-3, abs=1e-6)


def test_erasure_error_at_duration_inverse():
    assert erasure_error_at_duration(3, 1.0, 5.0, 3.0) == pytest.approx(
        math.sqrt(7.0 / 8.0), abs=1e-15
    )


# ---------------------------------------------------------------------------
# reference states and verdicts
# ---------------------------------------------------------------------------


def test_algorithmic_cooling_state_values():
    alg = algorithmic_cooling_state(2, 2.0)
    np.testing.assert_allclose(np.diag(alg.matrix).real, np.array([4, 2, 2, 1]) / 9.0, atol=1e-15)
    assert algorithmic_cooling_state(3, 2.0).matrix[0, 0].real == pytest.approx(16.0 / 45.0, abs=1e-15)


def test_test2_target_values():
    t2 = make_test2_target(2, 2.0)
    np.testing.assert_allclose(
        np.diag(t2.matrix).real, [1.0 / 9.0] + [8.0 / 27.0] * 3, atol=1e-15
    )
    assert np.trace(t2.matrix).real == pytest.approx(1.0)


def test_amp_damp_verdicts():
    mixed = DensityOperator(np.eye(4) / 4, (2, 2))
    interior = DensityOperator.from_diagonal([0.4, 0.3, 0.2, 0.1], (2, 2))
    pure = target_state("ground", (2, 2)).state
    assert reachability_verdict(mixed, interior, "amp_damp").reachable == "yes_exact"
    assert reachability_verdict(mixed, pure, "amp_damp").reachable == "yes_asymptotic"


def test_bit_flip_verdicts():
    mixed = DensityOperator(np.eye(4) / 4, (2, 2))
    interior = DensityOperator.from_diagonal([0.4, 0.3, 0.2, 0.1], (2, 2))
    swapped = DensityOperator.from_diagonal([0.1, 0.2, 0.3, 0.4], (2, 2))
    refused = reachability_verdict(mixed, interior, "bit_flip")
    assert refused.reachable == "no"
    assert refused.witness.floor == pytest.approx(
        majorization_floor([0.4, 0.3, 0.2, 0.1], [0.25] * 4), abs=1e-15
    )
    allowed = reachability_verdict(interior, mixed, "bit_flip")
    assert allowed.reachable == "yes_asymptotic"
    assert allowed.witness.satisfied
    # same spectrum differently ordered is a unitary move
    assert reachability_verdict(interior, swapped, "bit_flip").reachable == "yes_exact"


def test_finite_T_verdicts():
    mixed = DensityOperator(np.eye(4) / 4, (2, 2))
    assert reachability_verdict(mixed, mixed, "finite_T", b=2.0).reachable == "yes_asymptotic"
    assert (
        reachability_verdict(mixed, algorithmic_cooling_state(2, 2.0), "finite_T", b=2.0).reachable
        == "yes_asymptotic"
    )
    ground = target_state("ground", (2, 2)).state
    assert (
        reachability_verdict(mixed, ground, "finite_T", b=2.0).reachable
        == "conservative_unknown"
    )


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------


def test_plan_json_round_trip(tmp_path):
    system, rho0, target = eight_level_instance()
    plan = greedy_equalize_plan(rho0, target, system, gamma=2.5, gamma_tau_budget=7.5)
    path = tmp_path / "plan.json"
    plan_to_json(plan, path)
    loaded = plan_from_json(path)
    assert loaded.predicted_error == pytest.approx(plan.predicted_error, abs=1e-15)
    out_direct = execute_plan(system, plan, rho0)
    out_loaded = execute_plan(system, loaded, rho0)
    assert frobenius_error(out_loaded, out_direct) < 1e-12
