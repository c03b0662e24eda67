"""Constructive transfer schemes and reachability theory.

Everything here works on diagonal level-population vectors in a sorted
eigenframe; plans wrap the frame changes, permutations, protection
conjugations and timed noise intervals into executable step lists.

Conventions
-----------
* Spectra are descending.  ``majorizes(x, y)`` means x ≺ y (x is reachable
  from y by doubly stochastic maps).
* A :class:`TTransform` with parameter λ mixes one level pair:
  (yᵢ, yⱼ) → ((1−λ)yᵢ + λyⱼ, λyᵢ + (1−λ)yⱼ).  λ = ½ equalizes, λ = 1 swaps.
* The switchable channel sits on the last tensor factor, so the level pairs
  it couples are (2m, 2m+1); slot 1 of each pair decays into slot 0 for
  amplitude damping.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError, ReachabilityError
from .liouville import ControlSystem, DensityOperator, embed_local, vectorize, unvectorize
from .models import PAULI_X, noise_generator
from .numerics import TOL, hermitian_eigensystem
from .propagation import slice_propagator

__all__ = [
    "TTransform",
    "UnitaryStep",
    "NoiseStep",
    "TrotterDecoupleStep",
    "ProtocolPlan",
    "ReachabilityVerdict",
    "MajorizationCertificate",
    "DEFAULT_TROTTER_CYCLES",
    "majorizes",
    "majorization_floor",
    "amp_damp_pair_map",
    "bit_flip_pair_map",
    "hlp_t_transforms",
    "t_transform_noise_duration",
    "amp_damp_switch_time",
    "finite_T_switch_time",
    "t_transform_epsilon",
    "hlp_full_plan",
    "greedy_equalize_plan",
    "amp_damp_exact_plan",
    "cooling_protocol",
    "cooling_error_at_duration",
    "erasure_protocol",
    "erasure_error_at_duration",
    "algorithmic_cooling_state",
    "test2_target",
    "reachability_verdict",
    "execute_plan",
    "plan_to_json",
    "plan_from_json",
]

# Cycle count for sign-flip decoupling inside noise steps.  The alternation
# is applied by binary matrix powering, so the cost grows only with log2(k);
# this default keeps the decoupling residual far below every plan's
# predicted error.
DEFAULT_TROTTER_CYCLES = 1 << 22


# ---------------------------------------------------------------------------
# majorization
# ---------------------------------------------------------------------------


def _descending(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).reshape(-1)
    return np.sort(x)[::-1]


def majorizes(x, y, tol: float = TOL.majorization) -> bool:
    """x ≺ y: descending partial sums of x never exceed those of y."""
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch {x.shape} vs {y.shape}")
    for name, v in (("x", x), ("y", y)):
        if abs(v.sum() - 1.0) > 1e-10:
            raise ValueError(f"{name} sums to {v.sum()}, not 1")
    return bool(np.all(np.cumsum(_descending(x)) <= np.cumsum(_descending(y)) + tol))


def majorization_floor(target_spectrum, initial_spectrum) -> float:
    """Lower bound on δ_F to any state reachable by doubly stochastic maps.

    For every k, Ky Fan's inequality caps the top-k sum of the reachable
    spectrum at the initial top-k sum; with ‖λ↓(A)−λ↓(B)‖₂ ≤ ‖A−B‖_F the
    excess v_k forces δ_F ≥ max_k v_k/√k.
    """
    x = _descending(target_spectrum)
    y = _descending(initial_spectrum)
    k = np.arange(1, len(x) + 1, dtype=float)
    excess = np.cumsum(x) - np.cumsum(y)
    return float(max(0.0, np.max(excess / np.sqrt(k))))


# ---------------------------------------------------------------------------
# pair maps and timing formulas
# ---------------------------------------------------------------------------


def amp_damp_pair_map(epsilon: float) -> np.ndarray:
    """Population action of amplitude damping on a coupled pair: slot 1
    decays into slot 0, survival factor ε = e^{−γt}."""
    return np.array([[1.0, 1.0 - epsilon], [0.0, epsilon]])


def bit_flip_pair_map(epsilon: float) -> np.ndarray:
    """Doubly stochastic pair action of bit-flip noise, ε = e^{−γt}."""
    return 0.5 * np.array(
        [[1.0 + epsilon, 1.0 - epsilon], [1.0 - epsilon, 1.0 + epsilon]]
    )


@dataclass(frozen=True)
class TTransform:
    """One pairwise mixing step on level indices (i, j) with weight λ."""

    i: int
    j: int
    lam: float

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError("T-transform needs two distinct levels")
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda = {self.lam} outside [0, 1]")

    def apply(self, y) -> np.ndarray:
        out = np.array(y, dtype=float)
        yi, yj = out[self.i], out[self.j]
        out[self.i] = (1 - self.lam) * yi + self.lam * yj
        out[self.j] = self.lam * yi + (1 - self.lam) * yj
        return out


def hlp_t_transforms(y, x) -> list[TTransform]:
    """Decompose x ≺ y (both descending) into at most N−1 T-transforms.

    Index rule per step: j is the largest index with x_j < y_j, k the
    smallest index above j with x_k > y_k; the transferred amount is
    δ = min(y_j − x_j, x_k − y_k), i.e. λ = δ/(y_j − y_k) ≤ ½.  Every level
    strictly between j and k already matches the target, so the working
    vector stays descending and needs no re-sorting.
    """
    y = np.asarray(y, dtype=float).reshape(-1).copy()
    x = np.asarray(x, dtype=float).reshape(-1)
    if y.shape != x.shape:
        raise ValueError("length mismatch")
    if np.any(np.diff(y) > TOL.majorization_step) or np.any(
        np.diff(x) > TOL.majorization_step
    ):
        raise ValueError("inputs must be in descending order")
    if not majorizes(x, y, tol=TOL.majorization_step):
        raise ReachabilityError("target spectrum is not majorized by the initial one")
    out: list[TTransform] = []
    for _ in range(len(y) - 1):
        below = np.nonzero(x < y - TOL.majorization_step)[0]
        if below.size == 0:
            break
        j = int(below[-1])
        above = np.nonzero(x[j + 1:] > y[j + 1:] + TOL.majorization_step)[0]
        if above.size == 0:
            raise NumericalError("no receiving index despite unfinished levels")
        k = j + 1 + int(above[0])
        delta = min(y[j] - x[j], x[k] - y[k])
        lam = delta / (y[j] - y[k])
        t = TTransform(j, k, lam)
        y = t.apply(y)
        if np.any(np.diff(y) > TOL.majorization_step):
            raise NumericalError("working vector left descending order")
        out.append(t)
    if float(np.max(np.abs(y - x))) > 1e-12:
        raise NumericalError("T-transform decomposition did not converge")
    return out


def t_transform_noise_duration(lam: float, gamma: float) -> float:
    """Bit-flip noise duration realizing a λ ≤ ½ T-transform: τ = −ln(1−2λ)/γ.

    λ = ½ needs the infinite-time limit; that is reported as ``math.inf`` and
    plans truncate it at their γτ budget.  λ > ½ must be normalized first by
    unitarily swapping the pair (λ → 1−λ).
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if not 0.0 <= lam <= 0.5:
        raise ValueError(f"lambda = {lam} outside [0, 1/2]; pre-swap the pair")
    if lam == 0.5:
        return math.inf
    return -math.log(1.0 - 2.0 * lam) / gamma


def amp_damp_switch_time(ratio: float, gamma: float, tau: float) -> float:
    """Mid-interval swap time neutralizing a spectator pair under damping.

    For a pair with population ratio r = (receiving slot)/(decaying slot),
    running the noise for τ_ij, swapping the pair, running the remaining
    τ − τ_ij and swapping back restores the pair exactly;
    τ_ij = (1/γ)·ln((r·e^{γτ}+1)/(r+1)).
    """
    if ratio < 0 or gamma <= 0 or tau < 0:
        raise ValueError("need ratio >= 0, gamma > 0, tau >= 0")
    return math.log((ratio * math.exp(gamma * tau) + 1.0) / (ratio + 1.0)) / gamma


def finite_T_switch_time(ratio: float, b: float, gamma: float, tau: float):
    """Neutralizing swap time under finite-temperature pair noise.

    Exists only while the stopping condition b⁻¹ ≤ r ≤ b holds (r measured
    as favored slot over unfavored slot); outside it the pair cannot be
    restored and ``None`` is returned.  b → ∞ recovers
    :func:`amp_damp_switch_time`.
    """
    if b <= 1:
        raise ValueError("finite-temperature convention requires b > 1")
    if ratio < 0 or gamma <= 0 or tau < 0:
        raise ValueError("need ratio >= 0, gamma > 0, tau >= 0")
    if not (1.0 / b) - 1e-12 <= ratio <= b + 1e-12:
        return None
    num = math.exp(gamma * tau) * (ratio * b - 1.0) + (b - ratio)
    den = (b - 1.0) * (ratio + 1.0)
    return math.log(num / den) / gamma


def t_transform_epsilon(lam: float, b: float, ratio: float) -> float:
    """Survival factor ε realizing a λ T-transform with thermal pair noise.

    The pair must be oriented so the favored slot holds the smaller
    population (ratio ≤ 1); then ε = 1 − λ(1+b)(1−r)/(b−r) lies in (0, 1]
    for all λ ≤ ½ and the noise time is −ln(ε)/γ.
    """
    if b <= 1:
        raise ValueError("finite-temperature convention requires b > 1")
    if not 0.0 <= ratio <= 1.0:
        raise ValueError("orient the pair so ratio <= 1 (pre-swap if needed)")
    if not 0.0 <= lam <= 0.5:
        raise ValueError(f"lambda = {lam} outside [0, 1/2]; pre-swap the pair")
    return 1.0 - lam * (1.0 + b) * (1.0 - ratio) / (b - ratio)


# ---------------------------------------------------------------------------
# plan steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UnitaryStep:
    """Instantaneous unitary conjugation ρ → UρU†.

    ``duration`` is bookkeeping only (e.g. 1/J per nearest-neighbour iSWAP
    in the chain timing model); execution treats the step as instantaneous.
    ``permutation`` records U as a level relabeling when applicable, which
    keeps exported plans compact.
    """

    unitary: np.ndarray
    duration: float = 0.0
    label: str = ""
    permutation: tuple[int, ...] | None = None

    def __post_init__(self):
        U = np.asarray(self.unitary, dtype=complex)
        if float(np.max(np.abs(U @ U.conj().T - np.eye(len(U))))) > 1e-10:
            raise ValueError("step operator is not unitary")
        object.__setattr__(self, "unitary", U)
        if self.duration < 0:
            raise ValueError("durations must be nonnegative")


@dataclass(frozen=True)
class NoiseStep:
    """Switch the channel to ``rate`` for ``duration``; controls stay off."""

    rate: float
    duration: float
    label: str = ""

    def __post_init__(self):
        if self.rate < 0 or self.duration < 0:
            raise ValueError("rate and duration must be nonnegative")


@dataclass(frozen=True)
class TrotterDecoupleStep:
    """Noise interval with the drift sign-flipped by π-pulses on the noise
    qubit, alternated ``cycles`` times (executed via binary matrix powers)."""

    rate: float
    duration: float
    cycles: int = DEFAULT_TROTTER_CYCLES
    label: str = ""

    def __post_init__(self):
        if self.rate < 0 or self.duration < 0:
            raise ValueError("rate and duration must be nonnegative")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")


@dataclass(frozen=True)
class ProtocolPlan:
    steps: tuple
    predicted_error: float
    predicted_final: DensityOperator | None = None
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def noise_duration(self) -> float:
        return sum(
            s.duration for s in self.steps if isinstance(s, (NoiseStep, TrotterDecoupleStep))
        )

    @property
    def unitary_duration(self) -> float:
        return sum(s.duration for s in self.steps if isinstance(s, UnitaryStep))

    @property
    def total_duration(self) -> float:
        return sum(s.duration for s in self.steps)


def execute_plan(
    system: ControlSystem, plan: ProtocolPlan, rho0: DensityOperator
) -> DensityOperator:
    """Run a plan through the full Liouvillian propagation of ``system``."""
    if not system.channels:
        raise ConfigError("plan execution needs a switchable channel")
    from .liouville import precompute_superops

    superops = precompute_superops(system)
    n_noise = system.num_switchable
    zeros_u = np.zeros(system.num_controls)
    pulse = embed_local(PAULI_X, len(system.dims) - 1, system.dims)
    pulse_hat = np.kron(pulse.conj(), pulse)
    v = vectorize(rho0.matrix)
    for step in plan.steps:
        if isinstance(step, UnitaryStep):
            U = step.unitary
            v = np.kron(U.conj(), U) @ v
        elif isinstance(step, NoiseStep):
            rates = np.zeros(n_noise)
            rates[0] = step.rate
            if step.duration > 0:
                v = slice_propagator(system, zeros_u, rates, step.duration, superops) @ v
        elif isinstance(step, TrotterDecoupleStep):
            rates = np.zeros(n_noise)
            rates[0] = step.rate
            if step.duration > 0:
                half = slice_propagator(
                    system, zeros_u, rates, step.duration / (2 * step.cycles), superops
                )
                cycle = pulse_hat @ half @ pulse_hat @ half
                v = np.linalg.matrix_power(cycle, step.cycles) @ v
        else:
            raise ConfigError(f"unknown plan step {step!r}")
    return unvectorize(v, system.dims)


# ---------------------------------------------------------------------------
# plan construction helpers
# ---------------------------------------------------------------------------


def _permutation_unitary(sources: list[int], N: int) -> np.ndarray:
    """U mapping level ``sources[slot]`` to ``slot``."""
    U = np.zeros((N, N), dtype=complex)
    for slot, src in enumerate(sources):
        U[slot, src] = 1.0
    return U


def _permutation_step(sources, N: int, label: str) -> UnitaryStep:
    sources = [int(s) for s in sources]
    return UnitaryStep(
        _permutation_unitary(sources, N),
        label=label,
        permutation=tuple(sources),
    )


_PROTECT_R = np.array([[1.0, -1.0], [1.0, 1.0]], dtype=complex) / math.sqrt(2.0)


def _protection_unitary(N: int, protected_slot_pairs) -> np.ndarray:
    """Block rotation turning diag(a, b) on each protected slot pair into the
    bit-flip-invariant block ½[[a+b, a−b], [a−b, a+b]]."""
    W = np.eye(N, dtype=complex)
    for (i, j) in protected_slot_pairs:
        W[np.ix_([i, j], [i, j])] = _PROTECT_R
    return W


def _check_terminal_channel(system: ControlSystem, theta: float) -> None:
    if not system.channels:
        raise ConfigError("system has no switchable channel")
    N = int(np.prod(system.dims))
    V = system.channels[0].generator
    expected = np.kron(np.eye(N // 2), noise_generator(theta))
    if float(np.max(np.abs(V - expected))) > 1e-10:
        raise ConfigError(
            f"plan needs the theta={theta:g} generator on the terminal qubit"
        )


def _eigenframes(rho0: DensityOperator, target: DensityOperator):
    w0, V0 = hermitian_eigensystem(rho0.matrix)
    wt, Vt = hermitian_eigensystem(target.matrix)
    return np.clip(w0, 0.0, None), V0, np.clip(wt, 0.0, None), Vt


# ---------------------------------------------------------------------------
# bit-flip plans (HLP and greedy)
# ---------------------------------------------------------------------------


def _bit_flip_realization_steps(
    pairs: list[tuple[int, int]],
    tau: float,
    gamma: float,
    cycles: int,
    N: int,
    note: str,
) -> list:
    """Expose ``pairs`` in the coupled slots, protect everything else, and
    run one decoupled bit-flip interval; close with the inverse frames."""
    exposed: list[int] = [lvl for pair in pairs for lvl in pair]
    rest = [lvl for lvl in range(N) if lvl not in exposed]
    sources = exposed + rest
    protected = [(k, k + 1) for k in range(len(exposed), N, 2)]
    perm = _permutation_step(sources, N, f"expose {pairs}")
    W = UnitaryStep(_protection_unitary(N, protected), label="protect spectators")
    inv_W = UnitaryStep(W.unitary.conj().T, label="unprotect")
    inv_perm = _permutation_step(
        list(np.argsort(sources)), N, "restore level order"
    )
    return [
        perm,
        W,
        TrotterDecoupleStep(gamma, tau, cycles, label=note),
        inv_W,
        inv_perm,
    ]


def _closing_steps(Vt: np.ndarray, predicted: np.ndarray, target: DensityOperator):
    final = UnitaryStep(Vt, label="rotate into target eigenbasis")
    rho_pred = DensityOperator(
        Vt @ np.diag(predicted.astype(complex)) @ Vt.conj().T, target.dims
    )
    return final, rho_pred


def hlp_full_plan(
    rho0: DensityOperator,
    target: DensityOperator,
    system: ControlSystem,
    gamma: float | None = None,
    gamma_tau_budget: float = 20.0,
    cycles: int = DEFAULT_TROTTER_CYCLES,
) -> ProtocolPlan:
    """Sequential pairwise-mixing plan reaching any majorized target.

    Frames: diagonalize ρ₀ descending, decompose the spectral move into
    T-transforms, realize each one by permuting its pair into the noise
    qubit, protecting all other pairs, and running timed decoupled bit-flip
    noise; finish by rotating into the target eigenbasis.  λ = ½ steps are
    asymptotic and get truncated at ``gamma_tau_budget``, which sets the
    plan's predicted error.
    """
    _check_terminal_channel(system, math.pi / 2)
    if gamma is None:
        gamma = system.channels[0].max_rate
    w0, V0, wt, Vt = _eigenframes(rho0, target)
    if not majorizes(wt, w0, tol=TOL.majorization_step):
        raise ReachabilityError(
            "bit-flip noise cannot reach a target that is not majorized"
        )
    N = len(w0)
    transforms = hlp_t_transforms(w0, wt)
    steps: list = [UnitaryStep(V0.conj().T, label="diagonalize initial state")]
    predicted = w0.copy()
    for t in transforms:
        if t.lam >= 0.5 - 1e-14:
            tau = gamma_tau_budget / gamma
        else:
            tau = t_transform_noise_duration(t.lam, gamma)
        eps = math.exp(-gamma * tau)
        steps.extend(
            _bit_flip_realization_steps(
                [(t.i, t.j)], tau, gamma, cycles, N,
                note=f"mix levels ({t.i},{t.j}) lambda={t.lam:.6g}",
            )
        )
        m = 0.5 * (predicted[t.i] + predicted[t.j])
        d = 0.5 * (predicted[t.i] - predicted[t.j])
        predicted[t.i] = m + eps * d
        predicted[t.j] = m - eps * d
    final, rho_pred = _closing_steps(Vt, predicted, target)
    steps.append(final)
    return ProtocolPlan(
        steps=tuple(steps),
        predicted_error=float(np.linalg.norm(predicted - wt)),
        predicted_final=rho_pred,
        label="hlp",
    )


def greedy_equalize_plan(
    rho0: DensityOperator,
    target: DensityOperator,
    system: ControlSystem,
    gamma: float | None = None,
    gamma_tau_budget: float = 20.0,
    cycles: int = DEFAULT_TROTTER_CYCLES,
) -> ProtocolPlan:
    """Pairwise-averaging plan folding compatible pairs into shared intervals.

    Each round pairs the sorted working spectrum outside-in (largest with
    smallest and so on), keeps the pairs whose equalization reduces the
    squared distance to the target without breaking majorization
    feasibility, and averages all kept pairs in one noise interval.  The
    remainder is finished by the sequential scheme, and if folding does not
    beat the sequential plan's noise time outright that plan is returned
    unchanged.
    """
    _check_terminal_channel(system, math.pi / 2)
    if gamma is None:
        gamma = system.channels[0].max_rate
    sequential = hlp_full_plan(
        rho0, target, system, gamma=gamma,
        gamma_tau_budget=gamma_tau_budget, cycles=cycles,
    )
    w0, V0, wt, Vt = _eigenframes(rho0, target)
    N = len(w0)
    tau_round = gamma_tau_budget / gamma
    eps = math.exp(-gamma * tau_round)

    steps: list = [UnitaryStep(V0.conj().T, label="diagonalize initial state")]
    y = w0.copy()          # ideal working spectrum (drives the selection)
    predicted = w0.copy()  # truncation-aware spectrum (drives the error)
    for _ in range(N):
        pairs = []
        y_next = y.copy()
        for m in range(N // 2):
            i, j = m, N - 1 - m
            v = 0.5 * (y_next[i] + y_next[j])
            gain = (
                (y_next[i] - wt[i]) ** 2 + (y_next[j] - wt[j]) ** 2
                - (v - wt[i]) ** 2 - (v - wt[j]) ** 2
            )
            if gain <= 1e-14:
                continue
            trial = y_next.copy()
            trial[i] = trial[j] = v
            if not majorizes(wt, np.sort(trial)[::-1], tol=TOL.majorization_step):
                continue
            pairs.append((i, j))
            y_next = trial
        if not pairs:
            break
        steps.extend(
            _bit_flip_realization_steps(
                pairs, tau_round, gamma, cycles, N,
                note=f"equalize pairs {pairs}",
            )
        )
        for (i, j) in pairs:
            m_ = 0.5 * (predicted[i] + predicted[j])
            d_ = 0.5 * (predicted[i] - predicted[j])
            predicted[i], predicted[j] = m_ + eps * d_, m_ - eps * d_
        y = y_next
        resort = np.argsort(-y, kind="stable")
        if not np.array_equal(resort, np.arange(N)):
            steps.append(_permutation_step(list(resort), N, "re-sort levels"))
            y = y[resort]
            predicted = predicted[resort]
        if float(np.max(np.abs(y - wt))) <= 1e-13:
            break

    if float(np.max(np.abs(y - wt))) > 1e-13:
        for t in hlp_t_transforms(y, wt):
            if t.lam >= 0.5 - 1e-14:
                tau = tau_round
            else:
                tau = t_transform_noise_duration(t.lam, gamma)
            e = math.exp(-gamma * tau)
            steps.extend(
                _bit_flip_realization_steps(
                    [(t.i, t.j)], tau, gamma, cycles, N,
                    note=f"mix levels ({t.i},{t.j}) lambda={t.lam:.6g}",
                )
            )
            m_ = 0.5 * (predicted[t.i] + predicted[t.j])
            d_ = 0.5 * (predicted[t.i] - predicted[t.j])
            predicted[t.i] = m_ + e * d_
            predicted[t.j] = m_ - e * d_
            y = t.apply(y)

    final, rho_pred = _closing_steps(Vt, predicted, target)
    steps.append(final)
    greedy = ProtocolPlan(
        steps=tuple(steps),
        predicted_error=float(np.linalg.norm(predicted - wt)),
        predicted_final=rho_pred,
        label="greedy",
    )
    if greedy.noise_duration > sequential.noise_duration + 1e-12:
        return sequential
    return greedy


# ---------------------------------------------------------------------------
# amplitude-damping exact plan
# ---------------------------------------------------------------------------


def _neutralized_interval(
    pops: np.ndarray,
    pair: tuple[int, int],
    epsilon: float,
    gamma: float,
    N: int,
    note: str,
) -> tuple[list, np.ndarray]:
    """One damping interval acting as the exact pair map on ``pair`` while
    every spectator pair is restored by a mid-interval transposition."""
    tau = -math.log(epsilon) / gamma
    a, b = pair
    rest = [lvl for lvl in range(N) if lvl not in (a, b)]
    sources = [a, b] + rest
    steps: list = [_permutation_step(sources, N, f"expose {pair}")]

    # spectator transpositions, ordered by their switch times
    events = []
    for m in range(1, N // 2):
        i, j = 2 * m, 2 * m + 1
        xi, xj = pops[sources[i]], pops[sources[j]]
        if xj <= 1e-15:
            continue  # decaying slot empty: pair is already stationary
        t_swap = amp_damp_switch_time(xi / xj, gamma, tau)
        events.append((min(max(t_swap, 0.0), tau), (i, j)))
    events.sort()

    t_prev = 0.0
    undo = np.eye(N, dtype=complex)
    for t_swap, (i, j) in events:
        if t_swap - t_prev > 1e-15:
            steps.append(NoiseStep(gamma, t_swap - t_prev, label=note))
            t_prev = t_swap
        swap_sources = list(range(N))
        swap_sources[i], swap_sources[j] = j, i
        steps.append(_permutation_step(swap_sources, N, f"neutralize slots ({i},{j})"))
        undo = undo @ _permutation_unitary(swap_sources, N)
    if tau - t_prev > 1e-15:
        steps.append(NoiseStep(gamma, tau - t_prev, label=note))
    if events:
        steps.append(
            UnitaryStep(undo.conj().T, label="undo neutralizing swaps")
        )
    steps.append(_permutation_step(list(np.argsort(sources)), N, "restore level order"))

    new = pops.copy()
    new[a] = pops[a] + (1.0 - epsilon) * pops[b]
    new[b] = epsilon * pops[b]
    return steps, new


def amp_damp_exact_plan(
    rho0: DensityOperator,
    target: DensityOperator,
    system: ControlSystem,
    gamma: float | None = None,
) -> ProtocolPlan:
    """Finite-time exact transfer plan under switchable amplitude damping.

    Works in the sorted eigenframe with level 0 as a population reservoir:
    first every over-populated level is drained into the reservoir (pair
    survival ε = x_j/p_j), then every deficit is topped up from it
    (ε = 1 − (x_j−p_j)/p_reservoir).  Requires a strictly positive target
    spectrum; boundary targets only admit asymptotic transfer.
    """
    _check_terminal_channel(system, 0.0)
    if gamma is None:
        gamma = system.channels[0].max_rate
    w0, V0, wt, Vt = _eigenframes(rho0, target)
    N = len(w0)
    if float(np.min(wt)) <= 1e-12:
        raise ReachabilityError(
            "target spectrum touches the boundary; finite-time exact transfer "
            "needs strictly positive eigenvalues"
        )
    steps: list = [UnitaryStep(V0.conj().T, label="diagonalize initial state")]
    pops = w0.copy()
    for j in range(1, N):  # drain pass
        if pops[j] > wt[j] + 1e-13:
            eps = wt[j] / pops[j]
            extra, pops = _neutralized_interval(
                pops, (0, j), eps, gamma, N, note=f"drain level {j}"
            )
            steps.extend(extra)
    for j in range(1, N):  # top-up pass
        if wt[j] > pops[j] + 1e-13:
            eps = 1.0 - (wt[j] - pops[j]) / pops[0]
            extra, pops = _neutralized_interval(
                pops, (j, 0), eps, gamma, N, note=f"fill level {j}"
            )
            steps.extend(extra)
    if float(np.max(np.abs(pops - wt))) > 1e-10:
        raise NumericalError("reservoir scheme did not close onto the target")
    final, rho_pred = _closing_steps(Vt, wt, target)
    steps.append(final)
    return ProtocolPlan(
        steps=tuple(steps),
        predicted_error=0.0,
        predicted_final=rho_pred,
        label="amp_damp_exact",
    )


# ---------------------------------------------------------------------------
# chain cooling and erasure protocols
# ---------------------------------------------------------------------------


def _swap_unitary(i: int, j: int, n: int) -> np.ndarray:
    dims = (2,) * n
    N = 2**n
    U = np.zeros((N, N), dtype=complex)
    for src in range(N):
        bits = [(src >> (n - 1 - q)) & 1 for q in range(n)]
        bits[i], bits[j] = bits[j], bits[i]
        dst = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        U[dst, src] = 1.0
    return U


def _shuttle_rounds(n: int):
    """Per-round nearest-neighbour swap lists bringing each qubit to the
    terminal slot once; round r costs r swaps, C(n,2) in total."""
    rounds = [[]]
    for r in range(1, n):
        rounds.append([(q, q + 1) for q in range(n - 1 - r, n - 1)])
    return rounds


def cooling_protocol(
    n: int, J: float = 1.0, gamma_max: float = 5.0, delta_F: float = 1e-4
) -> tuple[ProtocolPlan, float]:
    """Qubit-by-qubit ground-state cooling via terminal amplitude damping.

    Each round damps the terminal qubit for τ_q = (1/γ*)·ln(√(n(n+1))/(2δ_F))
    and shuttles the next qubit in by nearest-neighbour swaps (costed 1/J
    each, C(n,2) in total).  Returns the plan and the duration bound
    τ = C(n,2)/J + n·τ_q.  Predicted residual (from the maximally mixed
    state) follows δ_F²(ε) = 1 − 2(1−ε/2)ⁿ + (1−ε+ε²/2)ⁿ with ε = e^{−γ*τ_q}.
    """
    if n < 1 or J <= 0 or gamma_max <= 0 or not 0 < delta_F < 1:
        raise ValueError("invalid protocol parameters")
    eps_target = 2.0 * delta_F / math.sqrt(n * (n + 1.0))
    tau_q = -math.log(eps_target) / gamma_max
    steps: list = []
    for swaps in _shuttle_rounds(n):
        for (i, j) in swaps:
            steps.append(
                UnitaryStep(_swap_unitary(i, j, n), duration=1.0 / J,
                            label=f"swap ({i},{j})")
            )
        steps.append(NoiseStep(gamma_max, tau_q, label="damp terminal qubit"))
    eps = math.exp(-gamma_max * tau_q)
    qubit = np.diag([1.0 - eps / 2.0, eps / 2.0]).astype(complex)
    final = qubit
    for _ in range(n - 1):
        final = np.kron(final, qubit)
    residual2 = 1.0 - 2.0 * (1.0 - eps / 2.0) ** n + (1.0 - eps + eps * eps / 2.0) ** n
    plan = ProtocolPlan(
        steps=tuple(steps),
        predicted_error=math.sqrt(max(residual2, 0.0)),
        predicted_final=DensityOperator(final, (2,) * n),
        label="cooling",
    )
    bound = math.comb(n, 2) / J + n * tau_q
    return plan, bound


def cooling_error_at_duration(
    n: int, J: float, gamma_max: float, tau: float
) -> float:
    """Residual δ_F the cooling protocol guarantees within total time τ."""
    noise_time = tau - math.comb(n, 2) / J
    if noise_time <= 0:
        return math.sqrt(n * (n + 1.0)) / 2.0
    eps = math.exp(-gamma_max * noise_time / n)
    return 0.5 * math.sqrt(n * (n + 1.0)) * eps


def erasure_protocol(
    n: int,
    J: float = 1.0,
    gamma_max: float = 5.0,
    mode: str = "amp_damp_exact",
    delta_F: float = 1e-3,
) -> tuple[ProtocolPlan, float]:
    """Erase |0…0⟩ to the maximally mixed state qubit by qubit.

    ``amp_damp_exact``: flip the terminal qubit and let it decay for
    exactly ln2/γ* (survival ½), which lands on I/2 with no residual;
    total τ = C(n,2)/J + n·ln2/γ*.  ``bit_flip_asymptotic``: average the
    terminal qubit for τ_q chosen from the residual formula
    δ_F²(ε) = (1/2ⁿ)((1+ε²)ⁿ − 1); total
    τ = C(n,2)/J − (n/2γ*)·ln((2ⁿδ_F²+1)^{1/n} − 1).
    """
    if mode not in ("amp_damp_exact", "bit_flip_asymptotic"):
        raise ConfigError(f"unknown erasure mode {mode!r}")
    if n < 1 or J <= 0 or gamma_max <= 0:
        raise ValueError("invalid protocol parameters")
    N = 2**n
    if mode == "amp_damp_exact":
        tau_q = math.log(2.0) / gamma_max
        eps = 0.5
        qubit = np.diag([0.5, 0.5]).astype(complex)
        predicted_error = 0.0
    else:
        if not 0 < delta_F < 1:
            raise ValueError("delta_F must lie in (0, 1)")
        eps = math.sqrt((2.0**n * delta_F**2 + 1.0) ** (1.0 / n) - 1.0)
        tau_q = -math.log(eps) / gamma_max
        qubit = np.diag([(1.0 + eps) / 2.0, (1.0 - eps) / 2.0]).astype(complex)
        predicted_error = delta_F
    steps: list = []
    for swaps in _shuttle_rounds(n):
        for (i, j) in swaps:
            steps.append(
                UnitaryStep(_swap_unitary(i, j, n), duration=1.0 / J,
                            label=f"swap ({i},{j})")
            )
        if mode == "amp_damp_exact":
            steps.append(
                UnitaryStep(embed_local(PAULI_X, n - 1, (2,) * n),
                            label="flip terminal qubit")
            )
        steps.append(NoiseStep(gamma_max, tau_q, label="mix terminal qubit"))
    final = qubit
    for _ in range(n - 1):
        final = np.kron(final, qubit)
    plan = ProtocolPlan(
        steps=tuple(steps),
        predicted_error=predicted_error,
        predicted_final=DensityOperator(final, (2,) * n),
        label=f"erasure:{mode}",
    )
    return plan, math.comb(n, 2) / J + n * tau_q


def erasure_error_at_duration(
    n: int, J: float, gamma_max: float, tau: float
) -> float:
    """Residual δ_F the bit-flip erasure protocol guarantees within time τ."""
    noise_time = tau - math.comb(n, 2) / J
    eps = math.exp(-gamma_max * max(noise_time, 0.0) / n) if noise_time > 0 else 1.0
    return math.sqrt(((1.0 + eps * eps) ** n - 1.0) / 2.0**n)


# ---------------------------------------------------------------------------
# reference states and reachability
# ---------------------------------------------------------------------------


def algorithmic_cooling_state(n: int, b: float) -> DensityOperator:
    """Best diagonal state reachable by pairwise thermal mixing at bias b:
    ρ = diag(b^{N/2}, b^{N/2−1}, b^{N/2−1}, …, b, b, 1)/Z."""
    if n < 1:
        raise ValueError("need at least one qubit")
    if b < 1:
        raise ValueError("bias convention requires b >= 1")
    N = 2**n
    exponents = [N // 2]
    for e in range(N // 2 - 1, 0, -1):
        exponents.extend([e, e])
    exponents.append(0)
    pops = np.array([float(b) ** e for e in exponents])
    return DensityOperator.from_diagonal(pops / pops.sum(), (2,) * n)


def test2_target(n: int, b: float) -> DensityOperator:
    """diag(1, x, …, x)/Z with x = (Z−1)/(N−1) and Z the partition sum of
    :func:`algorithmic_cooling_state`; flattens every level but the top."""
    if b <= 1:
        raise ValueError("requires b > 1")
    N = 2**n
    alg = algorithmic_cooling_state(n, b)
    Z = float(b) ** (N // 2) / float(alg.matrix[0, 0].real)
    x = (Z - 1.0) / (N - 1.0)
    pops = np.full(N, x / Z)
    pops[0] = 1.0 / Z
    return DensityOperator.from_diagonal(pops, (2,) * n)


@dataclass(frozen=True)
class MajorizationCertificate:
    """Partial-sum margins Σᵏ(initial↓) − Σᵏ(target↓); negative entries are
    violations.  ``reference`` names the spectrum compared against."""

    margins: np.ndarray
    reference: str
    floor: float = 0.0

    @property
    def satisfied(self) -> bool:
        return bool(np.all(self.margins >= -TOL.majorization_step))


VERDICTS = frozenset({"yes_exact", "yes_asymptotic", "no", "conservative_unknown"})


@dataclass(frozen=True)
class ReachabilityVerdict:
    reachable: str
    witness: MajorizationCertificate | None = None

    def __post_init__(self):
        if self.reachable not in VERDICTS:
            raise ValueError(f"unknown verdict {self.reachable!r}")


def _certificate(target_spec, reference_spec, name: str) -> MajorizationCertificate:
    x = _descending(target_spec)
    y = _descending(reference_spec)
    return MajorizationCertificate(
        margins=np.cumsum(y) - np.cumsum(x),
        reference=name,
        floor=majorization_floor(x, y),
    )


def reachability_verdict(
    rho0: DensityOperator,
    target: DensityOperator,
    noise_kind: str,
    b: float | None = None,
) -> ReachabilityVerdict:
    """Classify a transfer under one switchable noise resource.

    amp_damp: always reachable in closure; exact in finite time when the
    target spectrum is strictly positive (the reservoir plan construction).
    bit_flip: reachable iff the target spectrum is majorized by the initial
    one; equal spectra need only a unitary.  finite_T: reachable when the
    target is majorized by the pairwise-mixing ceiling
    :func:`algorithmic_cooling_state`; beyond that ceiling the estimate is
    conservative and the verdict stays open.
    """
    if rho0.dims != target.dims:
        raise ValueError("state dimensions differ")
    w0 = np.clip(hermitian_eigensystem(rho0.matrix)[0], 0.0, None)
    wt = np.clip(hermitian_eigensystem(target.matrix)[0], 0.0, None)
    if noise_kind == "amp_damp":
        if float(np.min(wt)) > 1e-12:
            return ReachabilityVerdict("yes_exact")
        return ReachabilityVerdict("yes_asymptotic")
    if noise_kind == "bit_flip":
        cert = _certificate(wt, w0, "initial spectrum")
        if float(np.max(np.abs(wt - w0))) <= 1e-10:
            return ReachabilityVerdict("yes_exact", cert)
        if cert.satisfied:
            return ReachabilityVerdict("yes_asymptotic", cert)
        return ReachabilityVerdict("no", cert)
    if noise_kind == "finite_T":
        if b is None or b <= 1:
            raise ConfigError("finite_T verdict needs a bias b > 1")
        n = int(round(math.log2(len(w0))))
        if 2**n != len(w0):
            raise ConfigError("finite_T verdict is defined for qubit registers")
        alg = np.diag(algorithmic_cooling_state(n, b).matrix).real
        cert = _certificate(wt, alg, "pairwise-mixing ceiling")
        if cert.satisfied:
            return ReachabilityVerdict("yes_asymptotic", cert)
        return ReachabilityVerdict("conservative_unknown", cert)
    raise ConfigError(f"unknown noise kind {noise_kind!r}")


# ---------------------------------------------------------------------------
# plan (de)serialization
# ---------------------------------------------------------------------------


def _matrix_to_pairs(m: np.ndarray) -> list:
    return [[float(z.real), float(z.imag)] for z in m.reshape(-1)]


def _pairs_to_matrix(pairs, N: int) -> np.ndarray:
    flat = np.array([complex(re, im) for re, im in pairs])
    return flat.reshape((N, N))


def plan_to_json(plan: ProtocolPlan, path) -> None:
    steps = []
    for s in plan.steps:
        if isinstance(s, UnitaryStep):
            rec = {"kind": "unitary", "duration": s.duration, "label": s.label}
            if s.permutation is not None:
                rec["permutation"] = list(s.permutation)
            else:
                rec["matrix"] = _matrix_to_pairs(s.unitary)
                rec["dim"] = len(s.unitary)
            steps.append(rec)
        elif isinstance(s, NoiseStep):
            steps.append(
                {"kind": "noise", "rate": s.rate, "duration": s.duration,
                 "label": s.label}
            )
        else:
            steps.append(
                {"kind": "trotter_decouple", "rate": s.rate, "duration": s.duration,
                 "cycles": s.cycles, "label": s.label}
            )
    payload = {"label": plan.label, "predicted_error": plan.predicted_error,
               "steps": steps}
    if plan.predicted_final is not None:
        payload["predicted_final"] = {
            "dims": list(plan.predicted_final.dims),
            "matrix": _matrix_to_pairs(plan.predicted_final.matrix),
        }
    Path(path).write_text(json.dumps(payload, sort_keys=True), encoding="utf-8")


def plan_from_json(path) -> ProtocolPlan:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    steps: list = []
    for rec in raw["steps"]:
        kind = rec["kind"]
        if kind == "unitary":
            if "permutation" in rec:
                perm = [int(i) for i in rec["permutation"]]
                steps.append(
                    _permutation_step(perm, len(perm), rec.get("label", ""))
                )
                if rec.get("duration", 0.0):
                    steps[-1] = UnitaryStep(
                        steps[-1].unitary, duration=rec["duration"],
                        label=rec.get("label", ""), permutation=tuple(perm),
                    )
            else:
                U = _pairs_to_matrix(rec["matrix"], rec["dim"])
                steps.append(
                    UnitaryStep(U, duration=rec.get("duration", 0.0),
                                label=rec.get("label", ""))
                )
        elif kind == "noise":
            steps.append(
                NoiseStep(rec["rate"], rec["duration"], label=rec.get("label", ""))
            )
        elif kind == "trotter_decouple":
            steps.append(
                TrotterDecoupleStep(rec["rate"], rec["duration"],
                                    cycles=rec["cycles"], label=rec.get("label", ""))
            )
        else:
            raise ConfigError(f"unknown step kind {kind!r}")
    final = None
    if "predicted_final" in raw:
        pf = raw["predicted_final"]
        dims = tuple(int(d) for d in pf["dims"])
        N = int(np.prod(dims))
        final = DensityOperator(_pairs_to_matrix(pf["matrix"], N), dims)
    return ProtocolPlan(
        steps=tuple(steps),
        predicted_error=float(raw["predicted_error"]),
        predicted_final=final,
        label=raw.get("label", ""),
    )
