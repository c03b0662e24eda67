"""Release acceptance gate.

One test per criterion; each prints a single ``[criterion N] PASS/FAIL``
line with the measured numbers (run ``pytest -s`` to see the lines for
passing tests too).  Criteria 5-10 re-run the bundled experiment settings
with fixed seeds and iteration budgets sized for a single core, so this
file is much slower than the unit-test modules.
"""

import math
import time

import numpy as np
import scipy.linalg
import pytest

from qswitch import (
    ControlSequence,
    DensityOperator,
    OptimizerConfig,
    TransferProblem,
    frobenius_error,
    gmon_chain,
    ion_trap_collective,
    ising_chain,
    load_density_file,
    majorization_floor,
    majorizes,
    noise_generator,
    optimize,
    propagate,
    target_state,
    thermal_ising_chain,
)
from qswitch.bath import (
    BathSpec,
    damping_rate,
    diagonal_restriction,
    thermal_diagonal_propagator,
)
from qswitch.cli import main as cli_main, resolve_config_path
from qswitch.grape import error_and_gradient, finite_difference_gradient
from qswitch.liouville import dissipator_superop
from qswitch.numerics import matrix_exponential
from qswitch.propagation import trotter_decoupled_propagator
from qswitch.protocols import (
    amp_damp_pair_map,
    amp_damp_switch_time,
    bit_flip_pair_map,
    cooling_error_at_duration,
    erasure_error_at_duration,
    execute_plan,
    finite_T_switch_time,
    greedy_equalize_plan,
    hlp_full_plan,
)


def report(n, ok, detail):
    line = f"[criterion {n}] {'PASS' if ok else 'FAIL'} — {detail}"
    print(line)
    assert ok, line


# ---------------------------------------------------------------------------
# 1. golden superoperator values
# ---------------------------------------------------------------------------

def reference_generator(theta):
    """Frozen closed form of the one-qubit noise superoperator."""
    s2, c2 = math.sin(theta / 2) ** 2, math.cos(theta / 2) ** 2
    sn = math.sin(theta)
    return np.array(
        [
            [s2, 0.0, 0.0, -c2],
            [0.0, 0.5, -0.5 * sn, 0.0],
            [0.0, -0.5 * sn, 0.5, 0.0],
            [-s2, 0.0, 0.0, c2],
        ]
    )


def reference_propagator(theta, gt):
    """Frozen closed form of e^{-γt Γ(θ)} with ε = e^{-γt}."""
    eps = math.exp(-gt)
    root = math.sqrt(eps)
    s2, c2 = math.sin(theta / 2) ** 2, math.cos(theta / 2) ** 2
    ch = root * math.cosh(gt * math.sin(theta) / 2)
    sh = root * math.sinh(gt * math.sin(theta) / 2)
    return np.array(
        [
            [1 - (1 - eps) * s2, 0.0, 0.0, (1 - eps) * c2],
            [0.0, ch, sh, 0.0],
            [0.0, sh, ch, 0.0],
            [(1 - eps) * s2, 0.0, 0.0, 1 - (1 - eps) * c2],
        ]
    )


def test_criterion_01_superoperator_golden_values():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    dev = 0.0
    for theta in (0.0, math.pi / 4, math.pi / 2):
        G = dissipator_superop(noise_generator(theta))
        dev = max(dev, np.abs(G - reference_generator(theta)).max())
        for gt in rng.uniform(0.05, 3.0, size=5):
            E = matrix_exponential(-gt * G)
            dev = max(dev, np.abs(E - reference_propagator(theta, gt)).max())
    wall = time.perf_counter() - t0
    report(
        1,
        dev <= 1e-10 and wall < 1.0,
        f"max entrywise deviation {dev:.2e} (tol 1e-10), {wall:.2f}s < 1s",
    )


# ---------------------------------------------------------------------------
# 2. gradient agreement on random problems
# ---------------------------------------------------------------------------

def _random_gradient_problem(rng, idx):
    kind = idx % 5
    if kind == 0:
        system = ising_chain(1, theta=rng.uniform(0, math.pi / 2),
                             gamma_max=rng.uniform(1.0, 5.0))
    elif kind == 1:
        system = ising_chain(2, theta=rng.uniform(0, math.pi / 2),
                             gamma_max=rng.uniform(1.0, 5.0))
    elif kind == 2:
        system = thermal_ising_chain(2, b=rng.uniform(1.5, 4.0),
                                     gamma_max=rng.uniform(1.0, 5.0))
    elif kind == 3:
        system = gmon_chain(1)
    else:
        system = gmon_chain(2)
    N = int(np.prod(system.dims))
    spectra = []
    for _ in range(2):
        G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        M = G @ G.conj().T
        spectra.append(M / np.trace(M).real)
    M = int(rng.integers(2, 5))
    problem = TransferProblem(
        system,
        DensityOperator(spectra[0], system.dims),
        DensityOperator(spectra[1], system.dims),
        float(rng.uniform(0.5, 2.0)),
        M,
    )
    coherent = rng.uniform(-2.0, 2.0, size=(M, system.num_controls))
    noise = np.column_stack(
        [rng.uniform(0.05, 0.95, size=M) * ch.max_rate for ch in system.channels]
    )
    return problem, coherent, noise


def test_criterion_02_gradient_agreement():
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for idx in range(50):
        problem, coherent, noise = _random_gradient_problem(rng, idx)
        _, gc, gn = error_and_gradient(problem, coherent, noise)
        fc, fn = finite_difference_gradient(problem, coherent, noise)
        num = np.linalg.norm(gc - fc) ** 2 + np.linalg.norm(gn - fn) ** 2
        den = np.linalg.norm(fc) ** 2 + np.linalg.norm(fn) ** 2
        worst = max(worst, math.sqrt(num) / max(math.sqrt(den), 1e-12))
    wall = time.perf_counter() - t0
    report(
        2,
        worst <= 1e-5 and wall < 60.0,
        f"50 problems up to two qutrits, worst relative gradient error "
        f"{worst:.2e} (tol 1e-5), {wall:.1f}s < 60s",
    )


# ---------------------------------------------------------------------------
# 3. conservation along random trajectories
# ---------------------------------------------------------------------------

def test_criterion_03_trajectory_conservation():
    rng = np.random.default_rng(3)
    worst_trace = 0.0
    worst_eig = 0.0
    unital_runs = 0
    majorization_ok = True
    for i in range(100):
        theta = (0.0, math.pi / 4, math.pi / 2)[i % 3]
        n = 1 + (i % 2)
        system = ising_chain(n, theta=theta, gamma_max=rng.uniform(1.0, 5.0))
        N = 2**n
        G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
        rho0 = G @ G.conj().T
        rho0 /= np.trace(rho0).real
        M = int(rng.integers(2, 6))
        coherent = rng.uniform(-2, 2, size=(M, system.num_controls))
        noise = np.column_stack(
            [rng.uniform(0, ch.max_rate, size=M) for ch in system.channels]
        )
        seq = ControlSequence.uniform(float(rng.uniform(0.5, 3.0)), coherent, noise)
        traj = propagate(system, seq, DensityOperator(rho0, system.dims))
        for state in traj.states:
            worst_trace = max(worst_trace, abs(np.trace(state.matrix).real - 1.0))
            worst_eig = min(worst_eig, np.linalg.eigvalsh(state.matrix).min())
        if theta == math.pi / 2:
            unital_runs += 1
            flows = traj.eigenflows
            for k in range(1, len(flows)):
                if not majorizes(flows[k], flows[k - 1], tol=1e-8):
                    majorization_ok = False
    ok = worst_trace <= 1e-10 and worst_eig >= -1e-8 and majorization_ok
    report(
        3,
        ok,
        f"100 trajectories: max trace deviation {worst_trace:.2e} (tol 1e-10), "
        f"min eigenvalue {worst_eig:.2e} (floor -1e-8), stepwise majorization "
        f"{'held' if majorization_ok else 'violated'} on {unital_runs} unital runs",
    )


# ---------------------------------------------------------------------------
# 4. eight-level equalization instance
# ---------------------------------------------------------------------------

def test_criterion_04_hlp_equalization_instance():
    t0 = time.perf_counter()
    system = ising_chain(3, theta=math.pi / 2, gamma_max=2.5)
    initial = DensityOperator(np.diag(np.arange(1.0, 9.0)) / 36.0, system.dims)
    target = target_state("max_mixed", system.dims).state

    hlp = hlp_full_plan(initial, target, system, gamma=2.5, gamma_tau_budget=7.5)
    hlp_delta = frobenius_error(execute_plan(system, hlp, initial), target)
    greedy = greedy_equalize_plan(
        initial, target, system, gamma=2.5, gamma_tau_budget=7.5
    )
    greedy_delta = frobenius_error(execute_plan(system, greedy, initial), target)
    wall = time.perf_counter() - t0

    ok = (
        abs(hlp.noise_duration - 12.0) < 1e-12
        and 0.5 * 9.95e-5 <= hlp_delta <= 2.0 * 9.95e-5
        and greedy.noise_duration <= 7.0
        and greedy_delta <= 2.0 * 6.04e-5
        and wall < 30.0
    )
    report(
        4,
        ok,
        f"full plan noise time {hlp.noise_duration:.12g} (exactly 12), "
        f"δ_F {hlp_delta:.3e} in [{0.5 * 9.95e-5:.2e}, {2 * 9.95e-5:.2e}]; "
        f"greedy noise time {greedy.noise_duration:.12g} ≤ 7, "
        f"δ_F {greedy_delta:.3e} ≤ {2 * 6.04e-5:.2e}; {wall:.1f}s < 30s",
    )


# ---------------------------------------------------------------------------
# 5. three-qubit cooling beats the shuttle protocol
# ---------------------------------------------------------------------------

def test_criterion_05_cooling_beats_protocol_bound():
    t0 = time.perf_counter()
    bound = cooling_error_at_duration(3, 1.0, 5.0, 6.0)
    closed_form = math.sqrt(12.0) / 2.0 * math.exp(-5.0)
    assert abs(bound - closed_form) <= 1e-12 * closed_form
    system = ising_chain(3, gamma_max=5.0)
    problem = TransferProblem(
        system,
        target_state("max_mixed", system.dims).state,
        target_state("ground", system.dims).state,
        6.0,
        40,
    )
    config = OptimizerConfig(
        restarts=9, max_iterations=300, seed=105, target_error=0.9 * bound
    )
    result = optimize(problem, config)
    wall = time.perf_counter() - t0
    report(
        5,
        result.best_error < bound and wall <= 1200.0,
        f"best of 9 restarts δ_F {result.best_error:.4e} strictly below "
        f"protocol error {bound:.4e} at τ=6, {wall:.0f}s ≤ 1200s",
    )


# ---------------------------------------------------------------------------
# 6. erasure beats the noise-only estimate
# ---------------------------------------------------------------------------

def test_criterion_06_erasure_beats_noise_only_bound():
    t0 = time.perf_counter()
    bound = erasure_error_at_duration(3, 1.0, 2.5, 3.0)
    assert abs(bound - math.sqrt(7.0 / 8.0)) <= 1e-12
    system = ising_chain(3, theta=math.pi / 2, gamma_max=2.5)
    problem = TransferProblem(
        system,
        target_state("ground", system.dims).state,
        target_state("max_mixed", system.dims).state,
        3.0,
        30,
    )
    config = OptimizerConfig(
        restarts=3, max_iterations=200, seed=106, target_error=0.8 * bound
    )
    result = optimize(problem, config)
    wall = time.perf_counter() - t0
    report(
        6,
        result.best_error < bound and wall <= 1200.0,
        f"best δ_F {result.best_error:.4e} strictly below noise-only "
        f"estimate {bound:.4e} at τ=3, {wall:.0f}s ≤ 1200s",
    )


# ---------------------------------------------------------------------------
# 7. fixed-seed random-pair transfers
# ---------------------------------------------------------------------------

def test_criterion_07_random_pair_transfers():
    system = ising_chain(3, gamma_max=5.0)
    details = []
    ok = True
    for pair in ("a", "b"):
        t0 = time.perf_counter()
        initial = load_density_file(
            resolve_config_path(f"example3_pair_{pair}_initial.json")
        )
        target = load_density_file(
            resolve_config_path(f"example3_pair_{pair}_target.json")
        )
        problem = TransferProblem(system, initial, target, 8.0, 40)
        config = OptimizerConfig(
            restarts=4, max_iterations=500, seed=107, target_error=9e-4
        )
        result = optimize(problem, config)
        wall = time.perf_counter() - t0
        ok = ok and result.best_error <= 1e-3 and wall <= 1800.0
        details.append(f"pair {pair}: δ_F {result.best_error:.2e} ({wall:.0f}s)")
    report(7, ok, "; ".join(details) + " — tol 1e-3, ≤ 1800s each")


# ---------------------------------------------------------------------------
# 8. ground-state population under a thermal bath
# ---------------------------------------------------------------------------

def test_criterion_08_thermal_ground_population():
    t0 = time.perf_counter()
    system = thermal_ising_chain(2, b=2.0, gamma_max=5.0)
    initial = target_state("max_mixed", system.dims).state
    problem = TransferProblem(
        system, initial, target_state("ground", system.dims).state, 10.0, 40
    )
    config = OptimizerConfig(restarts=9, max_iterations=1200, seed=108)
    result = optimize(problem, config)
    traj = propagate(system, result.best_sequence, initial)
    population = float(traj.final.matrix[0, 0].real)
    wall = time.perf_counter() - t0
    report(
        8,
        population >= 0.449 and population > 4.0 / 9.0 and wall <= 1800.0,
        f"ground population {population:.5f} ≥ 0.449 "
        f"(partner-pairing value 4/9 ≈ 0.44444), {wall:.0f}s ≤ 1800s",
    )


# ---------------------------------------------------------------------------
# 9. tunable-coupler qutrit pair: erasure and GHZ
# ---------------------------------------------------------------------------

def test_criterion_09_gmon_erasure_and_ghz(tmp_path):
    t0 = time.perf_counter()
    system = gmon_chain(2)
    erase = optimize(
        TransferProblem(
            system,
            target_state("ground", system.dims).state,
            target_state("max_mixed", system.dims).state,
            2.0,
            64,
        ),
        OptimizerConfig(restarts=2, max_iterations=300, seed=109, target_error=9e-4),
    )
    ghz = optimize(
        TransferProblem(
            system,
            target_state("max_mixed", system.dims).state,
            target_state("ghz", system.dims).state,
            10.0,
            64,
        ),
        OptimizerConfig(restarts=2, max_iterations=300, seed=119, target_error=9e-3),
    )
    # the partial-transpose-target task must refuse to run without its
    # target file rather than silently substituting something
    ppt_exit = cli_main(["run", "--config", "gmon_ppt", "--out", str(tmp_path)])
    wall = time.perf_counter() - t0
    ok = (
        erase.best_error <= 1e-3
        and ghz.best_error <= 1e-2
        and ppt_exit == 2
        and wall <= 3600.0
    )
    report(
        9,
        ok,
        f"erasure δ_F {erase.best_error:.2e} ≤ 1e-3, GHZ δ_F "
        f"{ghz.best_error:.2e} ≤ 1e-2, PPT task without target file exits 2, "
        f"{wall:.0f}s ≤ 3600s",
    )


# ---------------------------------------------------------------------------
# 10. trapped-ion register: GHZ from the maximally mixed state
# ---------------------------------------------------------------------------

def test_criterion_10_ion_trap_ghz():
    t0 = time.perf_counter()
    system = ion_trap_collective(4, gamma_max=5.0)
    problem = TransferProblem(
        system,
        target_state("max_mixed", system.dims).state,
        target_state("ghz", system.dims).state,
        6.0,
        24,
    )
    config = OptimizerConfig(
        restarts=1, max_iterations=200, seed=110, target_error=9e-3
    )
    result = optimize(problem, config)
    wall = time.perf_counter() - t0
    report(
        10,
        result.best_error <= 1e-2 and wall <= 3600.0,
        f"collective-control GHZ₄ δ_F {result.best_error:.2e} ≤ 1e-2, "
        f"{wall:.0f}s ≤ 3600s",
    )


# ---------------------------------------------------------------------------
# 11. randomized property suite
# ---------------------------------------------------------------------------

def _embedded_pair_map(map2, i, j, N):
    D = np.eye(N)
    D[np.ix_([i, j], [i, j])] = map2
    return D


def test_criterion_11_property_suite():
    rng = np.random.default_rng(11)
    t0 = time.perf_counter()
    cases = 120
    failures = []

    # detailed balance of bath rates
    worst = 0.0
    for _ in range(cases):
        spec = BathSpec(
            beta=float(rng.uniform(0.01, 10.0)),
            cutoff=float(rng.uniform(0.5, 50.0)),
            statistics=("boson", "fermion")[int(rng.integers(2))],
        )
        omega = float(rng.uniform(1e-3, 5.0))
        lhs = damping_rate(-omega, spec)
        rhs = math.exp(-spec.beta * omega) * damping_rate(omega, spec)
        worst = max(worst, abs(lhs - rhs) / max(abs(rhs), 1e-300))
    if worst > 1e-10:
        failures.append(f"detailed balance rel {worst:.1e}")

    # idempotency of the population-restricted generator
    worst = 0.0
    for _ in range(cases):
        G = diagonal_restriction(float(rng.uniform(0.0, 50.0)))
        worst = max(worst, np.abs(G @ G - G).max())
    if worst > 1e-12:
        failures.append(f"restriction idempotency {worst:.1e}")

    # stochasticity of the population pair maps
    worst = 0.0
    for _ in range(cases):
        eps = float(rng.uniform(1e-6, 1.0))
        A = amp_damp_pair_map(eps)
        B = bit_flip_pair_map(eps)
        R = thermal_diagonal_propagator(
            float(rng.uniform(0.0, 20.0)),
            float(rng.uniform(0.1, 5.0)),
            float(rng.uniform(0.0, 3.0)),
        )
        for mat in (A, B, R):
            worst = max(worst, -mat.min(), np.abs(mat.sum(axis=0) - 1.0).max())
        worst = max(worst, np.abs(B.sum(axis=1) - 1.0).max())  # doubly stochastic
    if worst > 1e-12:
        failures.append(f"stochasticity {worst:.1e}")

    # mid-interval swap neutralizes a spectator pair exactly
    swap = np.array([[0.0, 1.0], [1.0, 0.0]])
    worst = 0.0
    for _ in range(cases):
        gamma = float(rng.uniform(0.3, 5.0))
        tau = float(rng.uniform(0.1, 3.0))
        p = rng.random(2) + 1e-3
        p /= p.sum()
        t1 = amp_damp_switch_time(p[0] / p[1], gamma, tau)
        assert 0.0 <= t1 <= tau + 1e-12
        out = (
            swap
            @ amp_damp_pair_map(math.exp(-gamma * (tau - t1)))
            @ swap
            @ amp_damp_pair_map(math.exp(-gamma * t1))
            @ p
        )
        worst = max(worst, np.abs(out - p).max())

        b = float(rng.uniform(1.5, 20.0))
        ratio = math.exp(rng.uniform(-math.log(b), math.log(b)))
        q = np.array([ratio, 1.0])
        q /= q.sum()
        t1 = finite_T_switch_time(ratio, b, gamma, tau)
        assert t1 is not None and -1e-12 <= t1 <= tau + 1e-12
        out = (
            swap
            @ thermal_diagonal_propagator(b, gamma, tau - t1)
            @ swap
            @ thermal_diagonal_propagator(b, gamma, t1)
            @ q
        )
        worst = max(worst, np.abs(out - q).max())
    if worst > 1e-10:
        failures.append(f"switch neutralization {worst:.1e}")

    # stopping-condition boundary: the swap time saturates the interval at
    # ratio = b and vanishes at ratio = 1/b
    worst = 0.0
    for _ in range(cases):
        b = float(rng.uniform(1.001, 50.0))
        gamma = float(rng.uniform(0.1, 5.0))
        tau = float(rng.uniform(0.1, 5.0))
        worst = max(worst, abs(finite_T_switch_time(b, b, gamma, tau) - tau) / tau)
        worst = max(worst, abs(finite_T_switch_time(1.0 / b, b, gamma, tau)))
        assert finite_T_switch_time(1.2 * b, b, gamma, tau) is None
    if worst > 1e-10:
        failures.append(f"stopping boundary {worst:.1e}")

    # alternating decoupling converges to the pure-dissipator semigroup
    worst_ratio = 0.0
    for _ in range(cases):
        H = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        H = (H + H.conj().T) / 2
        V = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        V /= np.linalg.norm(V)
        D = float(rng.uniform(0.3, 2.0)) * dissipator_superop(V)
        t = float(rng.uniform(0.5, 2.0))
        ideal = scipy.linalg.expm(-t * D)
        errs = [
            np.linalg.norm(trotter_decoupled_propagator(D, H, t, k) - ideal, 2)
            for k in (8, 32, 128)
        ]
        if not (errs[0] >= errs[1] - 1e-12 and errs[1] >= errs[2] - 1e-12):
            failures.append("decoupling error not monotone in k")
            break
        worst_ratio = max(worst_ratio, errs[2] / max(errs[0], 1e-15))
    if worst_ratio > 0.3:
        failures.append(f"decoupling convergence ratio {worst_ratio:.2f}")

    # no doubly stochastic processing beats the spectral floor
    worst = 0.0
    for _ in range(cases):
        N = (4, 8)[int(rng.integers(2))]
        x = rng.random(N) + 1e-3
        x /= x.sum()
        t_spec = rng.random(N) + 1e-3
        t_spec /= t_spec.sum()
        floor = majorization_floor(t_spec, x)
        z = x.copy()
        for _ in range(6):
            i, j = rng.choice(N, size=2, replace=False)
            D = _embedded_pair_map(
                bit_flip_pair_map(float(rng.uniform(0.0, 1.0))), i, j, N
            )
            z = D @ z
        dist = np.linalg.norm(np.sort(z)[::-1] - np.sort(t_spec)[::-1])
        worst = max(worst, floor - dist)
        mixed = majorization_floor(z, x)  # any processed spectrum is reachable
        worst = max(worst, mixed)
    if worst > 1e-9:
        failures.append(f"majorization floor violated by {worst:.1e}")

    wall = time.perf_counter() - t0
    report(
        11,
        not failures and wall < 300.0,
        f"7 properties × {cases} randomized cases, {wall:.1f}s < 300s"
        + ("" if not failures else "; " + "; ".join(failures)),
    )
