"""Piecewise-constant propagation of vectorized density operators.

A :class:`ControlSequence` holds per-slice durations and amplitude rows; the
propagator for one slice is ``expm(-dt * L)`` with the Liouvillian assembled
at that slice's amplitudes.  Trajectories record the state at every slice
boundary (optionally at ``substeps`` interior points per slice) together with
descending eigenvalue flows for plotting.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionError
from .liouville import (
    ControlSystem,
    DensityOperator,
    SystemSuperops,
    commutator_superop,
    precompute_superops,
    spectrum_descending,
    unvectorize,
    validate_amplitudes,
    vectorize,
)
from .numerics import TOL, matrix_exponential

__all__ = [
    "ControlSequence",
    "Trajectory",
    "slice_propagator",
    "propagate",
    "frobenius_error",
    "trotter_decoupled_propagator",
]


@dataclass(frozen=True)
class ControlSequence:
    """Per-slice durations plus coherent and noise amplitude rows.

    ``coherent`` has shape (M, num controls) and ``noise`` shape
    (M, num switchable channels); rows apply in order.
    """

    durations: np.ndarray
    coherent: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        durations = np.asarray(self.durations, dtype=float).reshape(-1)
        coherent = np.atleast_2d(np.asarray(self.coherent, dtype=float))
        noise = np.asarray(self.noise, dtype=float)
        if noise.size == 0:
            noise = np.zeros((len(durations), 0))
        noise = np.atleast_2d(noise)
        if np.any(durations <= 0):
            raise ValueError("slice durations must be positive")
        if coherent.shape[0] != len(durations) or noise.shape[0] != len(durations):
            raise DimensionError(
                f"amplitude rows ({coherent.shape[0]}, {noise.shape[0]}) "
                f"do not match {len(durations)} slices"
            )
        for name, arr in (("durations", durations), ("coherent", coherent), ("noise", noise)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def uniform(cls, total_duration: float, coherent, noise) -> "ControlSequence":
        """Equal slice durations: Δt = total_duration / M."""
        coherent = np.atleast_2d(np.asarray(coherent, dtype=float))
        M = coherent.shape[0]
        if total_duration <= 0:
            raise ValueError("total duration must be positive")
        return cls(np.full(M, total_duration / M), coherent, noise)

    @property
    def slice_count(self) -> int:
        return len(self.durations)

    @property
    def total_duration(self) -> float:
        return float(self.durations.sum())


@dataclass
class Trajectory:
    """Recorded states at slice boundaries (and optional interior samples)."""

    times: np.ndarray
    states: list[DensityOperator] = field(repr=False)

    @property
    def final(self) -> DensityOperator:
        return self.states[-1]

    @property
    def eigenflows(self) -> np.ndarray:
        """Array of shape (len(times), N): descending spectra over time."""
        return np.array([spectrum_descending(s.matrix) for s in self.states])

    def validate(self, tol: float = TOL.trajectory) -> None:
        """Density-operator invariants for every recorded state.

        The tolerance is looser than for freshly constructed states because
        long products of exponentials accumulate round-off.
        """
        for s in self.states:
            s.validate(tol=tol)

    def to_csv(self, path) -> None:
        """Columns: t, then the N eigenvalues in descending order."""
        flows = self.eigenflows
        table = np.column_stack([self.times, flows])
        header = "t," + ",".join(f"eig{k}" for k in range(flows.shape[1]))
        np.savetxt(path, table, fmt="%.16e", delimiter=",", header=header, comments="")


def slice_propagator(
    system: ControlSystem,
    coherent,
    noise,
    dt: float,
    superops: SystemSuperops | None = None,
) -> np.ndarray:
    """Propagator ``expm(-dt * L)`` for one constant-amplitude slice.

    Pass precomputed ``superops`` to amortize the per-operator superoperator
    construction across many slices.
    """
    if dt < 0:
        raise ValueError("slice duration must be nonnegative")
    if superops is None:
        superops = precompute_superops(system)
    validate_amplitudes(system, coherent, noise)
    L = superops.assemble(coherent, noise)
    return matrix_exponential(-dt * L)


def propagate(
    system: ControlSystem,
    sequence: ControlSequence,
    rho0: DensityOperator,
    substeps: int = 1,
) -> Trajectory:
    """Evolve ρ₀ through every slice, recording boundary states.

    With ``substeps`` > 1 each slice additionally records that many equally
    spaced interior samples (each slice contributes ``substeps`` states after
    its starting point).
    """
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    if rho0.dims != system.dims:
        raise DimensionError(
            f"initial state dims {rho0.dims} do not match system {system.dims}"
        )
    superops = precompute_superops(system)
    v = vectorize(rho0.matrix)
    times = [0.0]
    states = [rho0]
    t = 0.0
    for k in range(sequence.slice_count):
        dt = sequence.durations[k] / substeps
        validate_amplitudes(system, sequence.coherent[k], sequence.noise[k])
        L = superops.assemble(sequence.coherent[k], sequence.noise[k])
        X = matrix_exponential(-dt * L)
        for _ in range(substeps):
            v = X @ v
            t += dt
            times.append(t)
            states.append(unvectorize(v, system.dims))
    return Trajectory(np.array(times), states)


def _as_matrix(state) -> np.ndarray:
    if isinstance(state, DensityOperator):
        return state.matrix
    return np.asarray(state, dtype=complex)


def frobenius_error(rho, sigma) -> float:
    """δ_F = ‖ρ − σ‖_F."""
    a, b = _as_matrix(rho), _as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))


def trotter_decoupled_propagator(
    dissipator: np.ndarray,
    hamiltonian: np.ndarray,
    t: float,
    k: int,
    compensated: bool = False,
) -> np.ndarray:
    """k-fold alternation that suppresses a Hamiltonian around a dissipator.

    ``dissipator`` is a superoperator Γ̂ (rate included); ``hamiltonian`` is
    the Hermitian matrix H′ to decouple.  The symmetric form alternates
    ``expm(-(t/2k)(Γ̂+iĤ′))`` with ``expm(-(t/2k)(Γ̂−iĤ′))``; for large k the
    product converges to ``expm(-tΓ̂)``.  With ``compensated=True`` the sign
    flip is realized by conjugating with the inverse unitary factor
    ``expm(+(t/k)iĤ′)`` instead, the form available when only the physical
    Hamiltonian sign is at hand.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    Hhat = commutator_superop(hamiltonian)
    if compensated:
        step = matrix_exponential(-(t / k) * (dissipator + 1j * Hhat))
        undo = matrix_exponential((t / k) * 1j * Hhat)
        cycle = undo @ step
    else:
        half = t / (2 * k)
        cycle = matrix_exponential(-half * (dissipator - 1j * Hhat)) @ matrix_exponential(
            -half * (dissipator + 1j * Hhat)
        )
    return np.linalg.matrix_power(cycle, k)
