import math
import numpy as np

from qswitch.bath import thermal_diagonal_propagator
from qswitch.liouville import DensityOperator, dissipator_superop
from qswitch.models import ising_chain, noise_generator, target_state
from qswitch.propagation import frobenius_error
from qswitch.protocols import (
    TTransform, majorizes, majorization_floor, hlp_t_transforms,
    t_transform_noise_duration, amp_damp_switch_time, finite_T_switch_time,
    t_transform_epsilon, amp_damp_pair_map, bit_flip_pair_map,
    hlp_full_plan, greedy_equalize_plan, amp_damp_exact_plan,
    cooling_protocol, cooling_error_at_duration,
    erasure_protocol, erasure_error_at_duration,
    algorithmic_cooling_state, test2_target, reachability_verdict,
    execute_plan, plan_to_json, plan_from_json,
)

rng = np.random.default_rng(7)

# ---- majorization basics
assert majorizes([0.25]*4, [1,0,0,0])
assert not majorizes([1,0,0,0], [0.25]*4)
assert majorization_floor([1,0,0,0,0,0,0,0], [0.125]*8) == 7/8

# ---- HLP N=2 example
ts = hlp_t_transforms([0.9, 0.1], [0.6, 0.4])
assert len(ts) == 1 and abs(ts[0].lam - 0.375) < 1e-14, ts
assert ts[0].i == 0 and ts[0].j == 1
np.testing.assert_allclose(ts[0].apply([0.9, 0.1]), [0.6, 0.4], atol=1e-15)

# ---- HLP 8-level instance: 4 equalizing transforms
y8 = np.arange(8, 0, -1) / 36.0
x8 = np.full(8, 1/8)
ts8 = hlp_t_transforms(y8, x8)
assert len(ts8) == 4, len(ts8)
assert all(abs(t.lam - 0.5) < 1e-12 for t in ts8)
pairs = sorted((t.i, t.j) for t in ts8)
assert pairs == [(0, 7), (1, 6), (2, 5), (3, 4)], pairs

# random instances: <= N-1 transforms, x < x_k < y chain
for _ in range(200):
    N = int(rng.integers(2, 9))
    y = np.sort(rng.dirichlet(np.ones(N)))[::-1]
    # random doubly stochastic mixing of y gives x < y
    x = y.copy()
    for _ in range(6):
        i, j = rng.choice(N, size=2, replace=False)
        lam = rng.uniform(0, 0.5)
        x = TTransform(int(i), int(j), float(lam)).apply(x)
    x = np.sort(x)[::-1]
    seq = hlp_t_transforms(y, x)
    assert len(seq) <= N - 1
    cur = y.copy()
    for t in seq:
        nxt = t.apply(cur)
        assert majorizes(x, nxt, tol=1e-10)
        assert majorizes(nxt, cur, tol=1e-10)
        cur = nxt
    np.testing.assert_allclose(cur, x, atol=1e-12)
print("hlp transforms ok")

# ---- timing formulas
assert t_transform_noise_duration(0.5, 2.0) == math.inf
assert abs(t_transform_noise_duration(0.375, 1.0) + math.log(0.25)) < 1e-14
g, tau = 1.3, 0.9
for r in [0.0, 0.3, 1.0, 2.5, 17.0]:
    tij = amp_damp_switch_time(r, g, tau)
    assert 0 <= tij <= tau + 1e-12
    # neutralization oracle: noise tij, swap, noise tau-tij, swap restores pair
    x0 = np.array([r, 1.0]) / (r + 1.0)
    S = np.array([[0, 1], [1, 0.0]])
    M = S @ amp_damp_pair_map(math.exp(-g * (tau - tij))) @ S @ amp_damp_pair_map(math.exp(-g * tij))
    np.testing.assert_allclose(M @ x0, x0, atol=1e-12)
print("amp damp switching ok")

b = 3.0
assert abs(finite_T_switch_time(b, b, g, tau) - tau) < 1e-12
assert abs(finite_T_switch_time(1/b, b, g, tau)) < 1e-12
assert finite_T_switch_time(2*b, b, g, tau) is None
assert abs(finite_T_switch_time(0.7, 1e9, g, tau) - amp_damp_switch_time(0.7, g, tau)) < 1e-6
S = np.array([[0, 1], [1, 0.0]])
for r in [1/b + 0.01, 0.5, 1.0, 2.0, b - 0.01]:
    tij = finite_T_switch_time(r, b, g, tau)
    x0 = np.array([r, 1.0]) / (r + 1.0)
    M = S @ thermal_diagonal_propagator(b, g, tau - tij) @ S @ thermal_diagonal_propagator(b, g, tij)
    np.testing.assert_allclose(M @ x0, x0, atol=1e-12)
print("finite T switching ok")

# generalized-theta switching: V_theta pair map with tan^2(theta/2) = 1/b
for theta in [0.3, 0.8, 1.2]:
    bb = 1.0 / math.tan(theta / 2) ** 2
    D = dissipator_superop(noise_generator(theta))
    # diagonal pair action of the dissipator (vectorized indices 0 and 3)
    G = np.array([[D[0, 0], D[0, 3]], [D[3, 0], D[3, 3]]]).real
    np.testing.assert_allclose(G @ G, G, atol=1e-12)  # idempotent
    for r in [1/bb + 1e-3, 1.0, bb - 1e-3]:
        assert finite_T_switch_time(r, bb, g, tau) is not None
    t = 0.57
    RT = np.eye(2) + (math.exp(-g * t) - 1.0) * G
    np.testing.assert_allclose(RT, thermal_diagonal_propagator(bb, g, t), atol=1e-10)
print("generalized theta ok")

# ---- t_transform_epsilon realizes the lambda mix exactly
for _ in range(100):
    bb = float(rng.uniform(1.2, 20))
    lam = float(rng.uniform(0, 0.5))
    pair = rng.uniform(0.05, 1.0, size=2)
    pair = np.sort(pair)  # favored slot (index 0) holds smaller population
    r = pair[0] / pair[1]
    eps = t_transform_epsilon(lam, bb, r)
    assert 0 < eps <= 1
    out = thermal_diagonal_propagator(bb, 1.0, -math.log(eps)) @ pair
    want = TTransform(0, 1, lam).apply(pair)
    np.testing.assert_allclose(out, want, atol=1e-12)
print("t_transform_epsilon ok")

# ---- HLP full plan on the 8-level instance (bit-flip chain, gamma=2.5)
sys3 = ising_chain(3, J=1.0, theta=math.pi / 2, gamma_max=5.0)
rho0 = DensityOperator.from_diagonal(y8, (2, 2, 2))
targ = DensityOperator(np.eye(8) / 8.0, (2, 2, 2))
plan = hlp_full_plan(rho0, targ, sys3, gamma=2.5, gamma_tau_budget=7.5)
print("hlp noise duration", plan.noise_duration, "predicted", plan.predicted_error)
assert abs(plan.noise_duration - 12.0) < 1e-9
pred_expected = math.exp(-7.5) * math.sqrt(42.0) / 36.0
assert abs(plan.predicted_error - pred_expected) < 1e-12, (plan.predicted_error, pred_expected)
out = execute_plan(sys3, plan, rho0)
err = frobenius_error(out, targ)
print("hlp executed err", err, "ratio", err / plan.predicted_error)
assert err <= 1.1 * plan.predicted_error
assert frobenius_error(out, plan.predicted_final) < 1e-7

# ---- greedy on the same instance: one shared interval, 3/J
gplan = greedy_equalize_plan(rho0, targ, sys3, gamma=2.5, gamma_tau_budget=7.5)
print("greedy noise duration", gplan.noise_duration, "predicted", gplan.predicted_error)
assert abs(gplan.noise_duration - 3.0) < 1e-9
assert abs(gplan.predicted_error - pred_expected) < 1e-12
gout = execute_plan(sys3, gplan, rho0)
gerr = frobenius_error(gout, targ)
print("greedy executed err", gerr, "ratio", gerr / gplan.predicted_error)
assert gerr <= 1.1 * gplan.predicted_error

# greedy never uses more noise time than sequential on random instances
sys2 = ising_chain(2, J=1.0, theta=math.pi / 2, gamma_max=5.0)
for _ in range(25):
    y = np.sort(rng.dirichlet(np.ones(4)))[::-1]
    x = y.copy()
    for _ in range(5):
        i, j = rng.choice(4, size=2, replace=False)
        x = TTransform(int(i), int(j), float(rng.uniform(0, 0.5))).apply(x)
    x = np.sort(x)[::-1]
    r0 = DensityOperator.from_diagonal(y, (2, 2))
    rt = DensityOperator.from_diagonal(x, (2, 2))
    p_h = hlp_full_plan(r0, rt, sys2, gamma=2.5, gamma_tau_budget=7.5)
    p_g = greedy_equalize_plan(r0, rt, sys2, gamma=2.5, gamma_tau_budget=7.5)
    assert p_g.noise_duration <= p_h.noise_duration + 1e-9
    e_h = frobenius_error(execute_plan(sys2, p_h, r0), rt)
    e_g = frobenius_error(execute_plan(sys2, p_g, r0), rt)
    # absolute floor covers the decoupling residual when the plan is exact
    assert e_h <= 1.1 * p_h.predicted_error + 1e-7, (e_h, p_h.predicted_error)
    assert e_g <= 1.1 * p_g.predicted_error + 1e-7, (e_g, p_g.predicted_error)
print("greedy vs hlp ok")

# ---- amp damp exact plan
sysA = ising_chain(2, J=1.0, theta=0.0, gamma_max=5.0)
for _ in range(20):
    y = rng.dirichlet(np.ones(4))
    x = rng.dirichlet(np.ones(4)) * 0.9 + 0.025  # interior
    A = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    Q = np.linalg.qr(A)[0]
    r0 = DensityOperator(Q @ np.diag(y) @ Q.conj().T, (2, 2))
    A2 = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    Q2 = np.linalg.qr(A2)[0]
    rt = DensityOperator(Q2 @ np.diag(x) @ Q2.conj().T, (2, 2))
    pl = amp_damp_exact_plan(r0, rt, sysA, gamma=5.0)
    assert pl.predicted_error == 0.0
    e = frobenius_error(execute_plan(sysA, pl, r0), rt)
    assert e < 1e-10, e
print("amp damp exact plan ok")

# ---- cooling protocol
plan_c, bound_c = cooling_protocol(3, 1.0, 5.0, 1e-4)
print("cooling bound", bound_c)
assert abs(bound_c - (3.0 + 3.0 / 5.0 * math.log(math.sqrt(12.0) / 2e-4))) < 1e-12
sysC = ising_chain(3, J=1.0, theta=0.0, gamma_max=5.0)
mm = DensityOperator(np.eye(8) / 8.0, (2, 2, 2))
outc = execute_plan(sysC, plan_c, mm)
g8 = target_state("ground", (2, 2, 2)).state
ec = frobenius_error(outc, g8)
print("cooling executed err", ec, "predicted", plan_c.predicted_error)
assert ec <= 1.1e-4
assert abs(ec - plan_c.predicted_error) < 1e-9
assert abs(plan_c.total_duration - bound_c) < 1e-12
# n=1 special case from the stated bound
_, b1 = cooling_protocol(1, 1.0, 5.0, 1e-4)
assert abs(b1 - math.log(math.sqrt(2.0) / 2e-4) / 5.0) < 1e-12
# inverse bound: tau=6 at n=3 gives sqrt(12)/2 e^{-5}
assert abs(cooling_error_at_duration(3, 1.0, 5.0, 6.0) - math.sqrt(12.0) / 2.0 * math.exp(-5.0)) < 1e-15

# ---- erasure protocols
plan_e, bound_e = erasure_protocol(3, 1.0, 5.0, "amp_damp_exact")
assert abs(bound_e - (3.0 + 3.0 * math.log(2.0) / 5.0)) < 1e-12
g0 = target_state("ground", (2, 2, 2)).state
oute = execute_plan(sysC, plan_e, g0)
ee = frobenius_error(oute, mm)
print("erasure exact executed err", ee)
assert ee < 1e-10
plan_b, bound_b = erasure_protocol(3, 1.0, 5.0, "bit_flip_asymptotic", delta_F=1e-3)
outb = execute_plan(sys3, plan_b, g0)
eb = frobenius_error(outb, mm)
print("erasure bitflip executed err", eb, "bound", bound_b)
assert eb <= 1.1 * 1e-3 and abs(eb - 1e-3) < 1e-6
assert abs(erasure_error_at_duration(3, 1.0, 5.0, 3.0) - math.sqrt(7.0 / 8.0)) < 1e-15

# ---- reference states
alg22 = algorithmic_cooling_state(2, 2.0)
np.testing.assert_allclose(np.diag(alg22.matrix).real, np.array([4, 2, 2, 1]) / 9.0, atol=1e-15)
alg32 = algorithmic_cooling_state(3, 2.0)
assert abs(alg32.matrix[0, 0].real - 16.0 / 45.0) < 1e-15
t2 = test2_target(2, 2.0)
np.testing.assert_allclose(np.diag(t2.matrix).real, [1.0 / 9.0] + [8.0 / 27.0] * 3, atol=1e-15)

# ---- verdicts
v = reachability_verdict(mm, g8, "amp_damp")
assert v.reachable == "yes_asymptotic"
inter = DensityOperator.from_diagonal(np.array([0.4, 0.3, 0.2, 0.1]), (2, 2))
v = reachability_verdict(DensityOperator(np.eye(4) / 4, (2, 2)), inter, "amp_damp")
assert v.reachable == "yes_exact"
v = reachability_verdict(DensityOperator(np.eye(4) / 4, (2, 2)), inter, "bit_flip")
assert v.reachable == "no" and v.witness.floor > 0
assert abs(v.witness.floor - majorization_floor([0.4, 0.3, 0.2, 0.1], [0.25] * 4)) < 1e-15
v = reachability_verdict(inter, DensityOperator(np.eye(4) / 4, (2, 2)), "bit_flip")
assert v.reachable == "yes_asymptotic" and v.witness.satisfied
sw = DensityOperator.from_diagonal(np.array([0.1, 0.2, 0.3, 0.4]), (2, 2))
v = reachability_verdict(inter, sw, "bit_flip")
assert v.reachable == "yes_exact"
mm2 = DensityOperator(np.eye(4) / 4, (2, 2))
v = reachability_verdict(mm2, mm2, "finite_T", b=2.0)
assert v.reachable == "yes_asymptotic"
v = reachability_verdict(mm2, alg22, "finite_T", b=2.0)
assert v.reachable == "yes_asymptotic"
v = reachability_verdict(mm2, target_state("ground", (2, 2)).state, "finite_T", b=2.0)
assert v.reachable == "conservative_unknown"
v = reachability_verdict(mm2, test2_target(2, 2.0), "finite_T", b=2.0)
print("test2 verdict", v.reachable)

# ---- plan serialization round trip
plan_to_json(gplan, "/tmp/plan.json")
loaded = plan_from_json("/tmp/plan.json")
assert abs(loaded.predicted_error - gplan.predicted_error) < 1e-15
out2 = execute_plan(sys3, loaded, rho0)
assert frobenius_error(out2, gout) < 1e-12
print("serialization ok")

print("protocols module ok")
