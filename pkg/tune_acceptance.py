"""Scratch: measure wall time + achieved error for the heavy acceptance runs.

Prints one block per candidate configuration so the budgets frozen into
tests/test_acceptance.py are known-good.  Delete before finishing.
"""

import time

import numpy as np

from qswitch import (
    OptimizerConfig,
    TransferProblem,
    ising_chain,
    thermal_ising_chain,
    gmon_chain,
    ion_trap_collective,
    load_density_file,
    optimize,
    propagate,
    target_state,
)
from qswitch.protocols import cooling_error_at_duration, erasure_error_at_duration
from qswitch.cli import resolve_config_path


def run(tag, system, initial, target, tau, slices, **cfg):
    problem = TransferProblem(system, initial, target, tau, slices)
    config = OptimizerConfig(**cfg)
    t0 = time.perf_counter()
    result = optimize(problem, config)
    wall = time.perf_counter() - t0
    iters = [len(t) for t in result.iteration_traces]
    print(f"[{tag}] best={result.best_error:.6e} restart={result.best_restart} "
          f"wall={wall:.1f}s iters={iters}")
    print(f"[{tag}] restart_errors={[f'{e:.3e}' for e in result.restart_errors]}")
    return problem, result


def main(skip_measured=True):
    if skip_measured:
        print('[rerun] skipping c5/c6 (already measured)')

    # --- criterion 5: 3-qubit cooling, tau=6, beat 0.011670 ------------
    # bound5 = cooling_error_at_duration(3, 1.0, 5.0, 6.0)
    # print(f"[c5] bound={bound5:.6e}")
    # sys5 = ising_chain(3, gamma_max=5.0)
    # run("c5", sys5, target_state("max_mixed", sys5.dims).state,
    #     target_state("ground", sys5.dims).state, 6.0, 40,
    #     restarts=9, max_iterations=300, seed=105,
    #     target_error=0.9 * bound5)

    # --- criterion 6: 3-qubit erasure, tau=3, beat 0.93541 -------------
    # bound6 = erasure_error_at_duration(3, 1.0, 2.5, 3.0)
    # print(f"[c6] bound={bound6:.6e}")
    # sys6 = ising_chain(3, theta=np.pi / 2, gamma_max=2.5)
    # run("c6", sys6, target_state("ground", sys6.dims).state,
    #     target_state("max_mixed", sys6.dims).state, 3.0, 30,
    #     restarts=3, max_iterations=200, seed=106,
    #     target_error=0.8 * bound6)

    # --- criterion 8: 2-qubit thermal b=2, ground pop >= 0.449 ---------
    sys8 = thermal_ising_chain(2, b=2.0, gamma_max=5.0)
    prob8, res8 = run("c8", sys8, target_state("max_mixed", sys8.dims).state,
                      target_state("ground", sys8.dims).state, 10.0, 40,
                      restarts=9, max_iterations=1200, seed=108)
    traj = propagate(sys8, res8.best_sequence,
                     target_state("max_mixed", sys8.dims).state)
    pop = float(traj.states[-1].matrix[0, 0].real)
    print(f"[c8] ground population={pop:.5f} (need >= 0.449, paper 0.45336)")

    # --- criterion 7: bundled random pairs, tau=8, delta <= 1e-3 -------
    sys7 = ising_chain(3, gamma_max=5.0)
    for pair in ("a", "b"):
        ini = load_density_file(resolve_config_path(
            f"example3_pair_{pair}_initial.json"))
        tgt = load_density_file(resolve_config_path(
            f"example3_pair_{pair}_target.json"))
        run(f"c7{pair}", sys7, ini, tgt, 8.0, 40,
            restarts=4, max_iterations=500, seed=107,
            target_error=9e-4)

    # --- criterion 9: GMon erase tau=2 and GHZ tau=10, M=64 ------------
    sys9 = gmon_chain(2)
    run("c9erase", sys9, target_state("ground", sys9.dims).state,
        target_state("max_mixed", sys9.dims).state, 2.0, 64,
        restarts=2, max_iterations=300, seed=109, target_error=9e-4)
    run("c9ghz", sys9, target_state("max_mixed", sys9.dims).state,
        target_state("ghz", sys9.dims).state, 10.0, 64,
        restarts=2, max_iterations=300, seed=119, target_error=9e-3)

    # --- criterion 10: ion trap GHZ4, tau=6, M=24 ----------------------
    sys10 = ion_trap_collective(4, gamma_max=5.0)
    run("c10", sys10, target_state("max_mixed", sys10.dims).state,
        target_state("ghz", sys10.dims).state, 6.0, 24,
        restarts=1, max_iterations=200, seed=110, target_error=9e-3)


if __name__ == "__main__":
    main()
