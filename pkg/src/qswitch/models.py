"""Prebuilt control systems and target states.

All builders return immutable :class:`~qswitch.liouville.ControlSystem`
instances.  Time units are geometrized: the Ising chain measures time in 1/J,
the ion-trap system in 1/a.  The switchable noise channel always sits on the
last tensor factor ("terminal" site).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy.constants

from .bath import BathSpec, boltzmann_factor, damping_rate, gmon_lamb_ratio
from .errors import ConfigError, DimensionError
from .liouville import (
    ControlOperator,
    ControlSystem,
    DensityOperator,
    LindbladChannel,
    embed_local,
)

__all__ = [
    "PAULI_X",
    "PAULI_Y",
    "PAULI_Z",
    "QUTRIT_LOWERING",
    "TargetState",
    "noise_generator",
    "ising_chain",
    "thermal_ising_chain",
    "gmon_chain",
    "kappa_to_rate",
    "einstein_coefficients",
    "gmon_bath_temperature",
    "ion_trap_collective",
    "target_state",
    "load_density_file",
    "save_density_file",
]

PAULI_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
PAULI_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
PAULI_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)

# Three-level truncation of the transmon lowering operator.
QUTRIT_LOWERING = np.array(
    [[0.0, 1.0, 0.0], [0.0, 0.0, math.sqrt(2.0)], [0.0, 0.0, 0.0]], dtype=complex
)


@dataclass(frozen=True)
class TargetState:
    """A named target density operator."""

    state: DensityOperator
    label: str

    def __post_init__(self):
        self.state.validate()


def noise_generator(theta: float) -> np.ndarray:
    """Switchable jump operator V_θ = ((0, cos(θ/2)), (sin(θ/2), 0)).

    Interpolates between amplitude damping (θ=0) and bit flip (θ=π/2,
    V = X/√2).
    """
    theta = float(theta)
    if not 0.0 <= theta <= math.pi / 2:
        raise ValueError(f"theta = {theta} outside [0, pi/2]")
    return np.array(
        [[0.0, math.cos(theta / 2)], [math.sin(theta / 2), 0.0]], dtype=complex
    )


def _local_xy_controls(n: int) -> list[ControlOperator]:
    dims = (2,) * n
    out = []
    for k in range(n):
        out.append(ControlOperator(f"x{k}", embed_local(PAULI_X / 2, k, dims)))
        out.append(ControlOperator(f"y{k}", embed_local(PAULI_Y / 2, k, dims)))
    return out


def _ising_drift(n: int, J: float) -> np.ndarray:
    dims = (2,) * n
    H0 = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n - 1):
        zz = embed_local(PAULI_Z, k, dims) @ embed_local(PAULI_Z, k + 1, dims)
        H0 += math.pi * J * zz / 2
    return H0


def ising_chain(
    n: int,
    J: float = 1.0,
    theta: float = 0.0,
    gamma_max: float = 5.0,
    gamma_dephasing: float = 0.0,
) -> ControlSystem:
    """Ising-ZZ chain with local x/y controls and switchable V_θ noise.

    Drift H₀ = πJ Σ ½ Z⁽ᵏ⁾Z⁽ᵏ⁺¹⁾; unbounded piecewise-constant x and y
    controls on every qubit; one switchable channel with generator V_θ on the
    last qubit, rate in [0, gamma_max]; optionally static dephasing Z/√2 on
    all qubits at rate ``gamma_dephasing``.
    """
    if n < 1:
        raise ValueError("need at least one qubit")
    if J <= 0:
        raise ValueError("coupling J must be positive")
    if gamma_max < 0 or gamma_dephasing < 0:
        raise ValueError("noise rates must be nonnegative")
    dims = (2,) * n
    V = embed_local(noise_generator(theta), n - 1, dims)
    channel = LindbladChannel(
        jumps=((V, 1.0),), max_rate=gamma_max, label=f"V(theta={theta:g}) on qubit {n - 1}"
    )
    static = tuple(
        (embed_local(PAULI_Z / math.sqrt(2), k, dims), gamma_dephasing)
        for k in range(n)
        if gamma_dephasing > 0
    )
    return ControlSystem(
        dims=dims,
        drift=_ising_drift(n, J),
        controls=tuple(_local_xy_controls(n)),
        channels=(channel,),
        static_channels=static,
        label=f"ising_chain(n={n}, J={J:g}, theta={theta:g})",
    )


def thermal_ising_chain(
    n: int,
    J: float = 1.0,
    b: float = 2.0,
    gamma_max: float = 5.0,
    lamb_ratio: float = 0.0,
) -> ControlSystem:
    """Ising chain whose terminal qubit couples to a finite-temperature bath.

    The switchable channel bundles lowering and raising jumps with the
    detailed-balance weights 1/(b⁻¹+1) and 1/(b+1) (qubit convention b ≥ 1,
    equilibrium populations diag(b, 1)/(1+b)); an optional Lamb operator ½Z
    on the same qubit is switched alongside in the given rate ratio.
    """
    if b < 1:
        raise ValueError("qubit bath convention requires b >= 1")
    if n < 1:
        raise ValueError("need at least one qubit")
    dims = (2,) * n
    lower = embed_local(np.array([[0, 1], [0, 0]], dtype=complex), n - 1, dims)
    raise_ = embed_local(np.array([[0, 0], [1, 0]], dtype=complex), n - 1, dims)
    channel = LindbladChannel(
        jumps=((lower, b / (b + 1.0)), (raise_, 1.0 / (b + 1.0))),
        max_rate=gamma_max,
        lamb_ratio=lamb_ratio,
        lamb_operator=embed_local(PAULI_Z / 2, n - 1, dims) if lamb_ratio else None,
        label=f"thermal(b={b:g}) on qubit {n - 1}",
    )
    return ControlSystem(
        dims=dims,
        drift=_ising_drift(n, J),
        controls=tuple(_local_xy_controls(n)),
        channels=(channel,),
        label=f"thermal_ising_chain(n={n}, J={J:g}, b={b:g})",
    )


# ---------------------------------------------------------------------------
# GMon qutrits
# ---------------------------------------------------------------------------


def default_gmon_bath(b: float = 1e-3) -> BathSpec:
    """Ohmic bath at the default drive/cutoff frequencies ω_d/2π = 5 GHz,
    ω_c/2π = 40 GHz, with inverse temperature chosen so e^{−βω_d} = b."""
    if not 0 < b < 1:
        raise ConfigError("GMon convention requires 0 < b < 1")
    omega_d = 2 * math.pi * 5.0  # GHz angular
    omega_c = 2 * math.pi * 40.0
    return BathSpec(
        beta=-math.log(b) / omega_d,
        cutoff=omega_c,
        statistics="boson",
        transition=omega_d,
    )


def kappa_to_rate(kappa: float, bath: BathSpec) -> float:
    """Channel rate γ = 2κ²·γ(ω_d)·(b+1) for a coupling coefficient κ."""
    b = boltzmann_factor(bath)
    return 2.0 * kappa * kappa * damping_rate(bath.transition, bath) * (1.0 + b)


def gmon_bath_temperature(b: float, drive_frequency_hz: float = 5e9) -> float:
    """Physical bath temperature in kelvin for Boltzmann factor b at the drive."""
    if not 0 < b < 1:
        raise ValueError("requires 0 < b < 1")
    return scipy.constants.hbar * 2 * math.pi * drive_frequency_hz / (
        scipy.constants.k * (-math.log(b))
    )


def gmon_chain(
    n: int = 2,
    J: float = 1.0,
    anharmonicity: float | None = None,
    bath: BathSpec | None = None,
    gamma_max: float = 5.0,
) -> ControlSystem:
    """Chain of three-level GMons in the frame rotating at one shared carrier.

    Drift: πJ Σ ½(a†⁽ᵏ⁾a⁽ᵏ⁺¹⁾ + h.c.) − Σ Δ_k |2⟩⟨2|.  Controls: one
    detuning a†a per GMon plus joint x/y drive quadratures shared by all
    GMons.  The last GMon carries a switchable thermal channel with jump
    operators a and a† in the fixed detailed-balance proportion and Lamb
    operator a†a at the bath's closed-form Lamb ratio.

    Defaults are geometrized to the 160 MHz device: time unit 1/J ≈ 6.25 ns
    and anharmonicity Δ/(2π) = 400 MHz, i.e. Δ = 2π·2.5·J.
    """
    if n < 1:
        raise ValueError("need at least one GMon")
    if bath is None:
        bath = default_gmon_bath()
    if bath.statistics != "boson" or bath.transition <= 0:
        raise ConfigError(
            "GMon bath must be bosonic with a positive drive frequency"
        )
    if anharmonicity is None:
        anharmonicity = 2 * math.pi * 2.5 * J  # 400 MHz over 160 MHz
    b = boltzmann_factor(bath)
    dims = (3,) * n
    N = 3**n
    a = QUTRIT_LOWERING
    number = a.conj().T @ a
    ket2 = np.zeros((3, 3), dtype=complex)
    ket2[2, 2] = 1.0

    H0 = np.zeros((N, N), dtype=complex)
    for k in range(n - 1):
        hop = embed_local(a.conj().T, k, dims) @ embed_local(a, k + 1, dims)
        H0 += math.pi * J * (hop + hop.conj().T) / 2
    for k in range(n):
        H0 -= anharmonicity * embed_local(ket2, k, dims)

    controls = [
        ControlOperator(f"detuning{k}", embed_local(number, k, dims))
        for k in range(n)
    ]
    x_quad = sum(embed_local((a + a.conj().T) / 2, k, dims) for k in range(n))
    y_quad = sum(embed_local(1j * (a - a.conj().T) / 2, k, dims) for k in range(n))
    controls.append(ControlOperator("drive_x", x_quad))
    controls.append(ControlOperator("drive_y", y_quad))

    site = n - 1
    channel = LindbladChannel(
        jumps=(
            (embed_local(a, site, dims), 1.0 / (2.0 * (b + 1.0))),
            (embed_local(a.conj().T, site, dims), 1.0 / (2.0 * (1.0 / b + 1.0))),
        ),
        max_rate=gamma_max,
        lamb_ratio=gmon_lamb_ratio(bath),
        lamb_operator=embed_local(number, site, dims),
        label=f"thermal line (b={b:g}) on GMon {site}",
    )
    return ControlSystem(
        dims=dims,
        drift=H0,
        controls=tuple(controls),
        channels=(channel,),
        label=f"gmon_chain(n={n}, J={J:g}, b={b:g})",
    )


def einstein_coefficients(bath: BathSpec, kappa: float) -> dict[str, float]:
    """Transition rates of a single undriven GMon at coupling κ."""
    down = kappa * kappa * damping_rate(bath.transition, bath)
    up = kappa * kappa * damping_rate(-bath.transition, bath)
    return {
        "1->0": down,
        "0->1": up,
        "2->1": 2.0 * down,
        "1->2": 2.0 * up,
    }


# ---------------------------------------------------------------------------
# ion trap
# ---------------------------------------------------------------------------


def ion_trap_collective(
    n: int = 4, interaction: float = 1.0, gamma_max: float = 5.0
) -> ControlSystem:
    """Ion chain with collective x/y controls, their squares, and local z.

    Controls (amplitudes in multiples of the interaction unit a): F_x and F_y
    with F_ν = ½ Σ_j σ_ν⁽ʲ⁾, the quadratic F_x² and F_y², and one z control
    per qubit; switchable amplitude damping acts on the last qubit.  No
    drift.
    """
    if n != 4:
        raise ValueError("the collective-control model is defined for 4 qubits")
    if interaction <= 0:
        raise ValueError("interaction unit must be positive")
    dims = (2,) * n
    N = 2**n
    fx = sum(embed_local(PAULI_X / 2, j, dims) for j in range(n))
    fy = sum(embed_local(PAULI_Y / 2, j, dims) for j in range(n))
    controls = [
        ControlOperator("Fx", interaction * fx),
        ControlOperator("Fy", interaction * fy),
        ControlOperator("Fx^2", interaction * (fx @ fx)),
        ControlOperator("Fy^2", interaction * (fy @ fy)),
    ]
    for j in range(n):
        controls.append(
            ControlOperator(f"z{j}", interaction * embed_local(PAULI_Z / 2, j, dims))
        )
    V = embed_local(noise_generator(0.0), n - 1, dims)
    channel = LindbladChannel(
        jumps=((V, 1.0),), max_rate=gamma_max, label=f"amp damp on qubit {n - 1}"
    )
    return ControlSystem(
        dims=dims,
        drift=np.zeros((N, N), dtype=complex),
        controls=tuple(controls),
        channels=(channel,),
        label=f"ion_trap_collective(n={n})",
    )


# ---------------------------------------------------------------------------
# target states
# ---------------------------------------------------------------------------


def _ghz_state(dims: tuple[int, ...]) -> np.ndarray:
    d = dims[0]
    if any(dk != d for dk in dims):
        raise DimensionError("GHZ generalization needs equal local dimensions")
    N = int(np.prod(dims))
    psi = np.zeros(N, dtype=complex)
    stride = sum(d**k for k in range(len(dims)))  # index of |j,j,…,j⟩ is j·stride
    for j in range(d):
        psi[j * stride] = 1.0
    return psi / math.sqrt(d)


def target_state(label: str, dims) -> TargetState:
    """Build a named target: ground, max_mixed, ghz, or file:PATH."""
    dims = tuple(int(d) for d in dims)
    N = int(np.prod(dims))
    if label == "ground":
        m = np.zeros((N, N), dtype=complex)
        m[0, 0] = 1.0
        return TargetState(DensityOperator(m, dims), label)
    if label == "max_mixed":
        return TargetState(DensityOperator(np.eye(N, dtype=complex) / N, dims), label)
    if label == "ghz":
        psi = _ghz_state(dims)
        return TargetState(DensityOperator(np.outer(psi, psi.conj()), dims), label)
    if label.startswith("file:"):
        path = label[len("file:"):]
        if not path:
            raise ConfigError("file target requires a path after 'file:'")
        rho = load_density_file(path)
        if rho.dims != dims:
            raise ConfigError(
                f"target file dims {rho.dims} do not match requested {dims}"
            )
        return TargetState(rho, label)
    raise ConfigError(f"unknown target label {label!r}")


def load_density_file(path) -> DensityOperator:
    """Load a density operator from JSON: dims plus row-major (re, im) pairs."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    try:
        dims = tuple(int(d) for d in raw["dims"])
        pairs = raw["matrix"]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed density file {path}: {exc}") from exc
    N = int(np.prod(dims))
    if len(pairs) != N * N:
        raise ConfigError(
            f"density file {path} has {len(pairs)} entries, expected {N * N}"
        )
    flat = np.array([complex(re, im) for re, im in pairs])
    rho = DensityOperator(flat.reshape((N, N)), dims)
    rho.validate(tol=1e-8)
    return rho


def save_density_file(path, rho: DensityOperator) -> None:
    """Inverse of :func:`load_density_file`."""
    m = rho.matrix.reshape(-1)  # row-major
    payload = {
        "dims": list(rho.dims),
        "matrix": [[float(z.real), float(z.imag)] for z in m],
    }
    Path(path).write_text(
        json.dumps(payload, sort_keys=True, ensure_ascii=False), encoding="utf-8"
    )
