import math
import numpy as np

from qswitch.grape import (
    TransferProblem, OptimizerConfig, error_and_gradient,
    finite_difference_gradient, sequence_error, unital_error_floor,
    optimize, sweep_durations, result_record, save_result_json,
    sequence_to_csv,
)
from qswitch.liouville import DensityOperator, precompute_superops
from qswitch.models import ising_chain, gmon_chain, ion_trap_collective, target_state, default_gmon_bath
from qswitch.numerics import exp_action_with_derivative
from qswitch.propagation import ControlSequence
from qswitch.protocols import majorization_floor

rng = np.random.default_rng(3)

# ---- gradient vs central differences on random small instances
for trial in range(12):
    n = int(rng.integers(1, 3))
    theta = float(rng.uniform(0, math.pi / 2))
    sysm = ising_chain(n, J=1.0, theta=theta, gamma_max=3.0)
    N = 2**n
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    Q = np.linalg.qr(A)[0]
    r0 = DensityOperator(Q @ np.diag(rng.dirichlet(np.ones(N))).astype(complex) @ Q.conj().T, (2,) * n)
    A2 = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    Q2 = np.linalg.qr(A2)[0]
    rt = DensityOperator(Q2 @ np.diag(rng.dirichlet(np.ones(N))).astype(complex) @ Q2.conj().T, (2,) * n)
    M = int(rng.integers(2, 5))
    prob = TransferProblem(sysm, r0, rt, total_time=float(rng.uniform(0.5, 2.0)), slice_count=M)
    coh = rng.normal(0, 1.0, size=(M, sysm.num_controls))
    noi = rng.uniform(0, 3.0, size=(M, sysm.num_switchable))
    err2, gc, gn = error_and_gradient(prob, coh, noi)
    fc, fn = finite_difference_gradient(prob, coh, noi)
    scale = max(np.max(np.abs(fc)), np.max(np.abs(fn)), 1e-3)
    assert np.max(np.abs(gc - fc)) / scale < 1e-5, (trial, np.max(np.abs(gc - fc)) / scale)
    assert np.max(np.abs(gn - fn)) / scale < 1e-5
    # dual route: objective equals the trajectory-propagated error
    seq = ControlSequence.uniform(prob.total_time, coh, noi)
    assert abs(math.sqrt(err2) - sequence_error(prob, seq)) < 1e-12
print("gradient agreement ok")

# ---- single-slice Frechet action cross-check against the block-matrix route
sysm = ising_chain(2, J=1.0, theta=0.3, gamma_max=2.0)
sup = precompute_superops(sysm)
u = rng.normal(size=sysm.num_controls)
g = rng.uniform(0, 2, size=sysm.num_switchable)
L = sup.assemble(u, g)
dt = 0.37
from qswitch.numerics import expm_and_frechet
dirs = list(sup.controls) + list(sup.channels)
X, dXs = expm_and_frechet(-dt * L, [-dt * E for E in dirs])
for E, dX in zip(dirs, dXs):
    Xb, dXb = exp_action_with_derivative(L, E, dt)
    assert np.max(np.abs(X - Xb)) < 1e-11
    assert np.max(np.abs(dX - dXb)) < 1e-10, np.max(np.abs(dX - dXb))
print("block-matrix cross-check ok")

# ---- one-qubit cooling: optimizer drives the noise to its cap
sys1 = ising_chain(1, J=1.0, theta=0.0, gamma_max=5.0)
prob1 = TransferProblem(
    sys1,
    DensityOperator(np.eye(2) / 2, (2,)),
    target_state("ground", (2,)).state,
    total_time=4.0,
    slice_count=8,
    label="cool1",
)
cfg = OptimizerConfig(restarts=2, max_iterations=150, seed=11)
res = optimize(prob1, cfg)
print("cool1 best", res.best_error, "restarts", res.restart_errors)
assert res.best_error < 1e-5
assert res.best_error == min(res.restart_errors)
assert np.all(res.best_sequence.noise >= -1e-15)
assert np.all(res.best_sequence.noise <= 5.0 + 1e-12)
# determinism
res2 = optimize(prob1, cfg)
assert res2.best_error == res.best_error
assert res2.restart_errors == res.restart_errors
np.testing.assert_array_equal(res2.best_sequence.coherent, res.best_sequence.coherent)
print("determinism ok")

# ---- error floor for unital noise
sys2 = ising_chain(2, J=1.0, theta=math.pi / 2, gamma_max=5.0)
prob2 = TransferProblem(
    sys2,
    DensityOperator(np.eye(4) / 4, (2, 2)),
    target_state("ground", (2, 2)).state,
    total_time=2.0,
    slice_count=6,
)
floor = unital_error_floor(prob2)
assert abs(floor - majorization_floor([1, 0, 0, 0], [0.25] * 4)) < 1e-15
cfg2 = OptimizerConfig(restarts=2, max_iterations=60, seed=5)
res_floor = optimize(prob2, cfg2)
print("floor", floor, "best", res_floor.best_error)
assert res_floor.error_floor == floor
assert res_floor.best_error >= floor - 1e-9
# amp-damp systems have no floor
assert unital_error_floor(prob1) == 0.0

# ---- early stop via target_error
cfg3 = OptimizerConfig(restarts=1, max_iterations=150, seed=11, target_error=1e-2)
res3 = optimize(prob1, cfg3)
print("early stop best", res3.best_error, "converged", res3.converged)
assert res3.best_error <= 1e-2
assert res3.converged[0]

# ---- sweep
sweep = sweep_durations(prob1, [0.5, 1.0, 2.0], OptimizerConfig(restarts=1, max_iterations=60, seed=2))
rm = sweep.running_min
assert np.all(np.diff(rm) <= 1e-15)
print("sweep errors", sweep.best_errors)
try:
    sweep_durations(prob1, [], cfg)
    raise SystemExit("empty durations accepted")
except ValueError:
    pass
try:
    OptimizerConfig(restarts=0)
    raise SystemExit("restarts=0 accepted")
except ValueError:
    pass

# ---- workers path merges identically
cfgw = OptimizerConfig(restarts=2, max_iterations=40, seed=11, workers=2)
resw = optimize(prob1, OptimizerConfig(restarts=2, max_iterations=40, seed=11))
resw2 = optimize(prob1, cfgw)
assert resw.restart_errors == resw2.restart_errors
print("workers ok")

# ---- artifacts
rec = result_record(prob1, cfg, res, include_wall_time=False)
save_result_json("/tmp/result.json", rec)
import json
loaded = json.load(open("/tmp/result.json"))
assert loaded["best_error"] == res.best_error
assert "wall_time_s" not in loaded
sequence_to_csv(res.best_sequence, "/tmp/seq.csv",
                labels=[c.label for c in sys1.controls] + [c.label for c in sys1.channels])
head = open("/tmp/seq.csv").readline().strip()
print("csv header:", head)
assert head.startswith("slice,dt,")
data = np.genfromtxt("/tmp/seq.csv", delimiter=",", names=True)
assert data.shape[0] == 8
print("artifacts ok")

# ---- timing probes for acceptance budgeting
import time
def time_eval(prob):
    sup_dirs = None
    coh = np.zeros((prob.slice_count, prob.system.num_controls))
    noi = np.zeros((prob.slice_count, prob.system.num_switchable))
    t0 = time.perf_counter()
    error_and_gradient(prob, coh, noi)
    return time.perf_counter() - t0

sys3 = ising_chain(3, J=1.0, theta=0.0, gamma_max=5.0)
p3 = TransferProblem(sys3, DensityOperator(np.eye(8) / 8, (2,2,2)),
                     target_state("ground", (2,2,2)).state, 6.0, 40)
print("3-qubit M=40 eval: %.3fs" % time_eval(p3))

gm = gmon_chain(2, J=1.0, bath=default_gmon_bath())
pg = TransferProblem(gm, target_state("ground", (3, 3)).state,
                     target_state("max_mixed", (3, 3)).state, 2.0, 64)
print("gmon M=64 eval: %.3fs" % time_eval(pg))

it = ion_trap_collective(4, interaction=1.0, gamma_max=5.0)
pi_ = TransferProblem(it, target_state("ground", (2,)*4).state,
                      target_state("ghz", (2,)*4).state, 6.0, 24)
print("ion trap M=24 eval: %.3fs" % time_eval(pi_))

print("grape module ok")
