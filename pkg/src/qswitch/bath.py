"""Finite-temperature ohmic bath physics.

Rates follow the weak-coupling (Born-Markov) treatment: occupation numbers,
damping rates obeying the KMS condition, Lamb-shift rates from a
principal-value transform of the damping rate, and the thermal single-qubit
dissipator with its diagonal restriction.

Conventions: energies are angular frequencies (ℏ = 1); ``beta`` is the
inverse temperature 1/(k_B T).  The Boltzmann factor of a transition at
frequency ω is ``b = exp(-beta·ω)``; the qubit bath convention has ω < 0 and
hence b ≥ 1, the GMon convention has ω > 0 and b < 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.integrate

from .errors import NumericalError
from .liouville import dissipator_superop
from .numerics import TOL

__all__ = [
    "BathSpec",
    "ThermalChannel",
    "occupation",
    "damping_rate",
    "lamb_shift_rate",
    "thermal_dissipator",
    "diagonal_restriction",
    "thermal_diagonal_propagator",
    "boltzmann_factor",
    "gmon_lamb_ratio",
    "qubit_lamb_ratio",
    "Timescales",
    "TimescaleReport",
    "validate_timescales",
    "INTEGRATION_CEILING_FACTOR",
]

# Principal-value integrals for the Lamb shift run over |ω| ≤ 50·ω_c; beyond
# that the Lorentz-Drude tail contributes below the quadrature tolerance.
INTEGRATION_CEILING_FACTOR = 50.0

SIGMA_MINUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class BathSpec:
    """An ohmic bath with Lorentz-Drude cutoff coupled to one transition.

    ``transition`` is the signed angular frequency ω of the system transition
    the bath couples to; ``beta = 0`` encodes infinite temperature,
    ``beta = math.inf`` zero temperature.
    """

    beta: float
    cutoff: float
    statistics: str = "boson"
    transition: float = 0.0

    def __post_init__(self):
        if self.cutoff <= 0:
            raise ValueError("cutoff frequency must be positive")
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")
        if self.statistics not in ("boson", "fermion"):
            raise ValueError(f"unknown bath statistics {self.statistics!r}")


@dataclass(frozen=True)
class ThermalChannel:
    """Summary parameters of a thermal channel: Boltzmann factor, rate, Lamb ratio."""

    boltzmann: float
    rate: float
    lamb_ratio: float = 0.0

    def __post_init__(self):
        if self.boltzmann < 0:
            raise ValueError("Boltzmann factor must be nonnegative")
        if self.rate < 0:
            raise ValueError("rate must be nonnegative")


def _cutoff_function(x: float) -> float:
    """Lorentz-Drude cutoff f(x) = 1/(1+x²)."""
    return 1.0 / (1.0 + x * x)


def occupation(omega: float, spec: BathSpec) -> float:
    """Planck (Fermi) occupation n(ω) = 1/(e^{βω} ∓ 1)."""
    omega = float(omega)
    if spec.statistics == "boson":
        if math.isinf(spec.beta):
            if omega == 0:
                raise NumericalError("bosonic occupation diverges at ω = 0")
            return 0.0 if omega > 0 else -1.0
        x = spec.beta * omega
        if x == 0.0:
            raise NumericalError(
                "bosonic occupation diverges at βω = 0 "
                f"(beta={spec.beta}, omega={omega})"
            )
        return 1.0 / math.expm1(x)
    # fermion
    if math.isinf(spec.beta):
        if omega == 0:
            return 0.5
        return 0.0 if omega > 0 else 1.0
    return 1.0 / (math.exp(spec.beta * omega) + 1.0)


def damping_rate(omega: float, spec: BathSpec) -> float:
    """Ohmic damping rate γ(ω) with Lorentz-Drude cutoff.

    Bosons: γ(ω) = 2π·ω·(1+n(ω))·f(|ω|/ω_c), continuously extended to
    γ(0) = 2π/β·f(0); fermions: γ(ω) = 2π·|ω|·(1−n(ω))·f(|ω|/ω_c).
    Both satisfy the KMS condition γ(−ω) = e^{−βω} γ(ω).
    """
    omega = float(omega)
    f = _cutoff_function(abs(omega) / spec.cutoff)
    if spec.statistics == "boson":
        # ω(1+n(ω)) = ω/(1−e^{−βω}); the ω→0 limit is 1/β.
        if math.isinf(spec.beta):
            return 2.0 * math.pi * omega * f if omega > 0 else 0.0
        if spec.beta == 0.0:
            return math.inf
        x = spec.beta * omega
        if abs(x) < 1e-12:
            envelope = (1.0 + x / 2.0) / spec.beta
        elif x > 0:
            envelope = omega / -math.expm1(-x)
        else:
            envelope = omega * math.exp(x) / math.expm1(x)
        return 2.0 * math.pi * envelope * f
    # fermion: |ω|(1−n(ω)) = |ω|/(1+e^{−βω})
    if math.isinf(spec.beta):
        if omega == 0:
            return 0.0
        return 2.0 * math.pi * abs(omega) * f if omega > 0 else 0.0
    x = spec.beta * omega
    if x >= 0:
        weight = 1.0 / (1.0 + math.exp(-x))
    else:
        weight = math.exp(x) / (math.exp(x) + 1.0)
    return 2.0 * math.pi * abs(omega) * f * weight


def _lorentz_tail(omega: float, cutoff: float, ceiling: float) -> float:
    """Analytic part of S(ω) from ω′ > ceiling.

    There the rate is occupation-free to within e^{−β·ceiling} and both
    statistics share γ(ω′) ≈ 2π·ω′·ω_c²/(ω_c²+ω′²), whose Cauchy transform
    integrates in closed form; the negative-frequency tail is exponentially
    suppressed and dropped.
    """
    wc2 = cutoff * cutoff
    denom = omega * omega + wc2
    a = omega / denom          # coefficient of both log terms (they cancel at ∞)
    b = -wc2 / denom
    log_term = -a * 0.5 * math.log((wc2 + ceiling * ceiling) / (ceiling - omega) ** 2)
    atan_term = (b / cutoff) * (math.pi / 2.0 - math.atan(ceiling / cutoff))
    return wc2 * (log_term + atan_term)


def lamb_shift_rate(omega: float, spec: BathSpec) -> float:
    """Lamb-shift rate S(ω) = (1/2π)·P.V.∫ γ(ω′)/(ω−ω′) dω′.

    The principal value is evaluated by adaptive Cauchy-weight quadrature
    (which subtracts the pole internally) over |ω′| ≤ 50·ω_c, splitting at
    ω′ = 0 so the integrand kink of zero-temperature spectra sits on a
    segment boundary, plus the closed-form Lorentz tail beyond the ceiling.
    Absolute quadrature tolerance 1e-8.
    """
    omega = float(omega)
    ceiling = INTEGRATION_CEILING_FACTOR * spec.cutoff
    if abs(omega) >= ceiling:
        raise ValueError(
            f"|ω| = {abs(omega)} exceeds the integration ceiling {ceiling}"
        )

    def gamma(x: float) -> float:
        return damping_rate(x, spec)

    tol = TOL.quadrature_abs
    total = 0.0
    total_err = 0.0
    if omega > 0:
        singular = (0.0, ceiling)
        regular = (-ceiling, 0.0)
    elif omega < 0:
        singular = (-ceiling, 0.0)
        regular = (0.0, ceiling)
    else:
        singular = (-ceiling, ceiling)
        regular = None
    # scipy's cauchy weight integrates γ(x)/(x−ω); our kernel is 1/(ω−x).
    val, err = scipy.integrate.quad(
        gamma, singular[0], singular[1], weight="cauchy", wvar=omega,
        epsabs=tol, epsrel=tol, limit=400,
    )
    total -= val
    total_err += err
    if regular is not None:
        val, err = scipy.integrate.quad(
            lambda x: gamma(x) / (omega - x), regular[0], regular[1],
            epsabs=tol, epsrel=tol, limit=400,
        )
        total += val
        total_err += err
    if not math.isfinite(total) or total_err > 1e4 * tol:
        raise NumericalError(
            f"Lamb-shift quadrature did not converge at ω={omega}: "
            f"value={total}, error estimate={total_err}"
        )
    return total / (2.0 * math.pi) + _lorentz_tail(omega, spec.cutoff, ceiling)


def boltzmann_factor(spec: BathSpec) -> float:
    """b = e^{−β·ω} for the spec's transition frequency."""
    x = spec.beta * spec.transition
    if math.isinf(spec.beta) and spec.transition == 0:
        raise ValueError("Boltzmann factor undefined at beta=inf, ω=0")
    return math.exp(-x)


def thermal_dissipator(b: float) -> np.ndarray:
    """The 4×4 thermal qubit dissipator Γ′(b).

    Convex mix of the raising and lowering dissipators with weights
    1/(b+1) and 1/(b⁻¹+1); its fixed point is diag(b, 1)/(1+b).
    """
    b = float(b)
    if b < 0:
        raise ValueError("Boltzmann factor must be nonnegative")
    w_up = 1.0 / (b + 1.0)
    w_down = b / (b + 1.0)  # = 1/(b⁻¹+1)
    return w_up * dissipator_superop(SIGMA_PLUS) + w_down * dissipator_superop(
        SIGMA_MINUS
    )


def diagonal_restriction(b: float) -> np.ndarray:
    """Idempotent 2×2 generator Γ″ of the population action of Γ′(b)."""
    b = float(b)
    if b < 0:
        raise ValueError("Boltzmann factor must be nonnegative")
    a = 1.0 / (b + 1.0)
    return np.array([[a, -(1.0 - a)], [-a, 1.0 - a]])


def thermal_diagonal_propagator(b: float, gamma: float, t: float) -> np.ndarray:
    """Population propagator R_T(t) = I + (e^{−γt} − 1)·Γ″.

    Because Γ″ is idempotent this is the exact exponential; R_T decomposes
    into an amplitude-damping part with weight (b−1)/(b+1) and a bit-flip
    part with weight 2/(b+1).
    """
    if t < 0:
        raise ValueError("duration must be nonnegative")
    eps = math.exp(-float(gamma) * float(t))
    return np.eye(2) + (eps - 1.0) * diagonal_restriction(b)


def gmon_lamb_ratio(spec: BathSpec, quadrature: bool = False) -> float:
    """Lamb-to-damping ratio (S(ω_d)+S(−ω_d))/(2γ(ω_d)(b+1)) for ω_d > 0.

    The closed form −(1/4)·((1−b)/(1+b))·(ω_c/ω_d) holds for the ohmic
    Lorentz-Drude bath; pass ``quadrature=True`` to evaluate the defining
    principal-value integrals instead.
    """
    omega_d = spec.transition
    if omega_d <= 0:
        raise ValueError("GMon convention requires a positive drive frequency")
    b = boltzmann_factor(spec)
    if not quadrature:
        return -0.25 * ((1.0 - b) / (1.0 + b)) * (spec.cutoff / omega_d)
    s_sum = lamb_shift_rate(omega_d, spec) + lamb_shift_rate(-omega_d, spec)
    return s_sum / (2.0 * damping_rate(omega_d, spec) * (b + 1.0))


def qubit_lamb_ratio(spec: BathSpec) -> float:
    """Lamb-to-damping ratio (S(ω_n)−S(−ω_n))/(2γ(ω_n)(b+1)) for ω_n < 0.

    Depends only on the Boltzmann factor b and on |ω_n|/ω_c; evaluated by
    principal-value quadrature.
    """
    omega_n = spec.transition
    if omega_n >= 0:
        raise ValueError("qubit bath convention requires a negative transition")
    b = boltzmann_factor(spec)
    s_diff = lamb_shift_rate(omega_n, spec) - lamb_shift_rate(-omega_n, spec)
    return s_diff / (2.0 * damping_rate(omega_n, spec) * (b + 1.0))


# ---------------------------------------------------------------------------
# timescale validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Timescales:
    """Inverse timescales (rates, e.g. in GHz) of an open-system model.

    ``bath_correlation`` = 1/τ_B, ``system`` = 1/τ_S (fastest system
    frequency), ``relaxation`` = 1/τ_R (strongest decay rate), ``control`` =
    1/τ_C (control bandwidth, optional).
    """

    bath_correlation: float
    system: float
    relaxation: float
    control: float | None = None

    def __post_init__(self):
        for name in ("bath_correlation", "system", "relaxation"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} rate must be positive")
        if self.control is not None and self.control <= 0:
            raise ValueError("control rate must be positive")


@dataclass(frozen=True)
class TimescaleReport:
    """Outcome of the Born-Markov / secular separation checks."""

    factor: float
    checks: tuple[tuple[str, float, bool], ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return all(ok for _, _, ok in self.checks)

    def lines(self) -> list[str]:
        out = []
        for name, ratio, ok in self.checks:
            verdict = "pass" if ok else "FAIL"
            out.append(f"{name}: separation {ratio:.3g}x (need >= {self.factor:g}x) {verdict}")
        return out


def validate_timescales(scales: Timescales, factor: float = 10.0) -> TimescaleReport:
    """Check τ_R ≫ τ_B (Born-Markov) and τ_R, τ_C ≫ τ_S (secular).

    A separation of exactly ``factor`` counts as a pass.  Failures are
    reported, never raised.
    """
    if factor <= 1:
        raise ValueError("separation factor must exceed 1")
    checks = []
    ratio = scales.bath_correlation / scales.relaxation  # τ_R/τ_B
    checks.append(("born_markov (tau_R vs tau_B)", ratio, ratio >= factor))
    ratio = scales.system / scales.relaxation  # τ_R/τ_S
    checks.append(("secular (tau_R vs tau_S)", ratio, ratio >= factor))
    if scales.control is not None:
        ratio = scales.system / scales.control  # τ_C/τ_S
        checks.append(("secular control (tau_C vs tau_S)", ratio, ratio >= factor))
    return TimescaleReport(factor=float(factor), checks=tuple(checks))
