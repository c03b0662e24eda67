"""Liouville-space machinery and the core system description types.

Superoperators are plain ``(N², N²)`` complex arrays acting on column-stacked
vectorizations of ``N×N`` matrices: ``vec(A rho B) = (B^T ⊗ A) vec(rho)``.
For a single qubit this puts the state components in the order
``(rho_00, rho_10, rho_01, rho_11)``.

Sign convention: generators are "positive decay", the state evolves as
``vec(rho(t)) = exp(-t L) vec(rho(0))`` with ``L = i Ĥ + Σ γ_ℓ Γ_ℓ``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BoundViolationError, DimensionError
from .numerics import TOL, hermitian_eigensystem, kronecker

__all__ = [
    "DensityOperator",
    "LindbladChannel",
    "ControlOperator",
    "ControlSystem",
    "SystemSuperops",
    "vectorize",
    "unvectorize",
    "commutator_superop",
    "dissipator_superop",
    "channel_dissipator",
    "liouvillian",
    "precompute_superops",
    "embed_local",
    "spectrum_descending",
    "hamiltonian_controllability",
]


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DensityOperator:
    """A density matrix together with its tensor-factor structure."""

    matrix: np.ndarray
    dims: tuple[int, ...]

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        n = int(np.prod(self.dims))
        if m.shape != (n, n):
            raise DimensionError(
                f"state shape {m.shape} does not match dims {self.dims}"
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self, tol: float = TOL.trace) -> "DensityOperator":
        """Raise if the state is not Hermitian, unit-trace and positive."""
        m = self.matrix
        if float(np.max(np.abs(m - m.conj().T))) > max(tol, TOL.hermiticity):
            raise ValueError("density operator is not Hermitian within tolerance")
        if abs(np.trace(m).real - 1.0) > tol or abs(np.trace(m).imag) > tol:
            raise ValueError("density operator trace differs from 1")
        if float(np.linalg.eigvalsh((m + m.conj().T) / 2).min()) < -max(tol, 1e-10):
            raise ValueError("density operator has a negative eigenvalue")
        return self

    @staticmethod
    def from_diagonal(populations, dims) -> "DensityOperator":
        p = np.asarray(populations, dtype=float)
        return DensityOperator(np.diag(p.astype(complex)), tuple(dims))


@dataclass(frozen=True)
class LindbladChannel:
    """A (possibly compound) Lindblad noise channel under one rate control.

    ``jumps`` holds full-space jump operators with fixed convex-like weights;
    the dissipator is ``Σ_w w · Γ_V`` and the whole bundle is scaled by a
    single rate amplitude in ``[0, max_rate]`` when ``switchable``.  The Lamb
    contribution ``rate · lamb_ratio · lamb_operator`` is switched alongside.
    """

    jumps: tuple[tuple[np.ndarray, float], ...]
    max_rate: float
    switchable: bool = True
    lamb_ratio: float = 0.0
    lamb_operator: np.ndarray | None = None
    label: str = ""

    def __post_init__(self):
        if self.max_rate < 0:
            raise ValueError("max_rate must be nonnegative")
        jumps = tuple(
            (np.asarray(V, dtype=complex), float(w)) for V, w in self.jumps
        )
        object.__setattr__(self, "jumps", jumps)
        if self.lamb_operator is not None:
            H = np.asarray(self.lamb_operator, dtype=complex)
            if float(np.max(np.abs(H - H.conj().T))) > TOL.hermiticity:
                raise ValueError("lamb_operator must be Hermitian")
            object.__setattr__(self, "lamb_operator", H)

    @property
    def generator(self) -> np.ndarray:
        """The jump operator of a single-generator channel."""
        if len(self.jumps) != 1:
            raise ValueError("channel has multiple weighted jump operators")
        return self.jumps[0][0]


@dataclass(frozen=True)
class ControlOperator:
    """A coherent control Hamiltonian with (possibly infinite) amplitude bounds."""

    label: str
    operator: np.ndarray
    bounds: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self):
        H = np.asarray(self.operator, dtype=complex)
        if float(np.max(np.abs(H - H.conj().T))) > TOL.hermiticity * max(
            1.0, float(np.max(np.abs(H))) if H.size else 0.0
        ):
            raise ValueError(f"control operator {self.label!r} is not Hermitian")
        object.__setattr__(self, "operator", H)


@dataclass(frozen=True)
class ControlSystem:
    """Drift + coherent controls + switchable/static noise channels."""

    dims: tuple[int, ...]
    drift: np.ndarray
    controls: tuple[ControlOperator, ...]
    channels: tuple[LindbladChannel, ...] = ()
    static_channels: tuple[tuple[np.ndarray, float], ...] = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        H0 = np.asarray(self.drift, dtype=complex)
        n = self.dim
        if H0.shape != (n, n):
            raise DimensionError(f"drift shape {H0.shape} != ({n}, {n})")
        scale = max(1.0, float(np.max(np.abs(H0))) if H0.size else 0.0)
        if float(np.max(np.abs(H0 - H0.conj().T))) > TOL.hermiticity * scale:
            raise ValueError("drift Hamiltonian is not Hermitian")
        object.__setattr__(self, "drift", H0)
        object.__setattr__(self, "controls", tuple(self.controls))
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(
            self,
            "static_channels",
            tuple(
                (np.asarray(V, dtype=complex), float(r))
                for V, r in self.static_channels
            ),
        )

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def num_controls(self) -> int:
        return len(self.controls)

    @property
    def num_switchable(self) -> int:
        return len(self.channels)


# ---------------------------------------------------------------------------
# vectorization
# ---------------------------------------------------------------------------


def vectorize(rho) -> np.ndarray:
    """Column-stacking vectorization of a matrix or DensityOperator."""
    m = rho.matrix if isinstance(rho, DensityOperator) else np.asarray(rho)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"cannot vectorize shape {m.shape}")
    return np.asarray(m, dtype=complex).reshape(-1, order="F")


def unvectorize(v: np.ndarray, dims=None):
    """Inverse of :func:`vectorize`; wraps in a DensityOperator when dims given."""
    v = np.asarray(v, dtype=complex).ravel()
    n = math.isqrt(v.size)
    if n * n != v.size:
        raise DimensionError(f"vector length {v.size} is not a perfect square")
    m = v.reshape((n, n), order="F")
    if dims is None:
        return m
    return DensityOperator(m, tuple(dims))


# ---------------------------------------------------------------------------
# superoperators
# ---------------------------------------------------------------------------


def commutator_superop(H: np.ndarray) -> np.ndarray:
    """Ĥ with Ĥ·vec(rho) = vec([H, rho]) for Hermitian H."""
    H = np.asarray(H, dtype=complex)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"Hamiltonian must be square, got {H.shape}")
    scale = max(1.0, float(np.max(np.abs(H))) if H.size else 0.0)
    if float(np.max(np.abs(H - H.conj().T))) > TOL.hermiticity * scale:
        raise ValueError("Hamiltonian is not Hermitian within tolerance")
    n = H.shape[0]
    ident = np.eye(n, dtype=complex)
    return kronecker(ident, H) - kronecker(H.T, ident)


def dissipator_superop(V: np.ndarray) -> np.ndarray:
    """Positive-decay dissipator Γ_V: Γ_V·vec(rho) = -vec(D[V]rho).

    With D[V]rho = V rho V† - ½(V†V rho + rho V†V); the state evolves as
    exp(-t γ Γ_V), so spectra of Γ_V have nonnegative real part.
    """
    V = np.asarray(V, dtype=complex)
    if V.ndim != 2 or V.shape[0] != V.shape[1]:
        raise DimensionError(f"jump operator must be square, got {V.shape}")
    n = V.shape[0]
    ident = np.eye(n, dtype=complex)
    VdV = V.conj().T @ V
    return 0.5 * (kronecker(ident, VdV) + kronecker(VdV.T, ident)) - kronecker(
        V.conj(), V
    )


def channel_dissipator(channel: LindbladChannel) -> np.ndarray:
    """Weighted dissipator of a (possibly compound) channel, rate factored out."""
    return sum(w * dissipator_superop(V) for V, w in channel.jumps)


@dataclass
class SystemSuperops:
    """Precomputed superoperator pieces of a control system.

    ``L(u, γ) = drift + Σ_j u_j · control[j] + Σ_ℓ γ_ℓ · channel[ℓ]`` where
    ``drift`` already contains the static channels and ``channel[ℓ]`` bundles
    the dissipator with the switched Lamb-shift commutator.
    """

    drift: np.ndarray
    controls: list[np.ndarray] = field(default_factory=list)
    channels: list[np.ndarray] = field(default_factory=list)

    def assemble(self, coherent, noise) -> np.ndarray:
        L = self.drift.copy()
        for u, C in zip(coherent, self.controls, strict=True):
            if u:
                L += u * C
        for g, G in zip(noise, self.channels, strict=True):
            if g:
                L += g * G
        return L


def precompute_superops(system: ControlSystem) -> SystemSuperops:
    drift = 1j * commutator_superop(system.drift)
    for V, rate in system.static_channels:
        drift = drift + rate * dissipator_superop(V)
    ops = SystemSuperops(drift=drift)
    for ctrl in system.controls:
        ops.controls.append(1j * commutator_superop(ctrl.operator))
    for ch in system.channels:
        G = channel_dissipator(ch)
        if ch.lamb_ratio and ch.lamb_operator is not None:
            G = G + 1j * ch.lamb_ratio * commutator_superop(ch.lamb_operator)
        ops.channels.append(G)
    return ops


def validate_amplitudes(system: ControlSystem, coherent, noise) -> None:
    """Check amplitude-row lengths and bounds; raise on violation."""
    coherent = [float(u) for u in coherent]
    noise = [float(g) for g in noise]
    if len(coherent) != system.num_controls:
        raise DimensionError(
            f"{len(coherent)} coherent amplitudes for {system.num_controls} controls"
        )
    if len(noise) != system.num_switchable:
        raise DimensionError(
            f"{len(noise)} noise amplitudes for {system.num_switchable} channels"
        )
    for u, ctrl in zip(coherent, system.controls):
        lo, hi = ctrl.bounds
        if not (lo <= u <= hi):
            raise BoundViolationError(
                f"amplitude {u} outside bounds {ctrl.bounds} for {ctrl.label!r}"
            )
    for g, ch in zip(noise, system.channels):
        if ch.switchable and not (0.0 <= g <= ch.max_rate + 1e-12):
            raise BoundViolationError(
                f"noise rate {g} outside [0, {ch.max_rate}] for {ch.label!r}"
            )


def liouvillian(system: ControlSystem, coherent, noise) -> np.ndarray:
    """Assemble L = i·Ĥ(H₀ + Σ u_j H_j + Σ γ_ℓ r_ℓ H_LS,ℓ) + Σ γ_ℓ Γ_ℓ + static."""
    validate_amplitudes(system, coherent, noise)
    return precompute_superops(system).assemble(coherent, noise)


# ---------------------------------------------------------------------------
# embeddings and spectra
# ---------------------------------------------------------------------------


def embed_local(op: np.ndarray, site: int, dims) -> np.ndarray:
    """Embed a local operator at ``site`` (0 = leftmost tensor factor)."""
    dims = tuple(int(d) for d in dims)
    op = np.asarray(op, dtype=complex)
    if not 0 <= site < len(dims):
        raise DimensionError(f"site {site} outside 0..{len(dims) - 1}")
    if op.shape != (dims[site], dims[site]):
        raise DimensionError(
            f"operator shape {op.shape} does not match local dimension {dims[site]}"
        )
    out = np.eye(1, dtype=complex)
    for k, d in enumerate(dims):
        out = kronecker(out, op if k == site else np.eye(d, dtype=complex))
    return out


def spectrum_descending(rho) -> np.ndarray:
    """Eigenvalues of a density operator, sorted descending."""
    if isinstance(rho, DensityOperator):
        rho.validate(tol=1e-8)
        m = rho.matrix
    else:
        m = np.asarray(rho, dtype=complex)
    vals, _ = hermitian_eigensystem((m + m.conj().T) / 2)
    return vals


# ---------------------------------------------------------------------------
# controllability
# ---------------------------------------------------------------------------


def _traceless(M: np.ndarray) -> np.ndarray:
    n = M.shape[0]
    return M - (np.trace(M) / n) * np.eye(n, dtype=complex)


def hamiltonian_controllability(system: ControlSystem) -> bool:
    """Rank test for full Hamiltonian controllability.

    Generates the real Lie algebra spanned by {iH₀, iH_j} under iterated
    commutators, orthogonalizing each candidate against the accumulated basis
    (as real vectors); returns True iff the closure reaches dimension N²-1.
    """
    n = system.dim
    target = n * n - 1
    gens = []
    for H in [system.drift] + [c.operator for c in system.controls]:
        G = _traceless(1j * np.asarray(H, dtype=complex))
        if float(np.linalg.norm(G)) > 1e-14:
            gens.append(G)
    if not gens:
        return target == 0

    basis_vecs: list[np.ndarray] = []   # orthonormal real vectors
    basis_mats: list[np.ndarray] = []

    def try_add(M: np.ndarray) -> bool:
        nrm = float(np.linalg.norm(M))
        if nrm < 1e-13:
            return False
        v = np.concatenate([M.real.ravel(), M.imag.ravel()]) / nrm
        for b in basis_vecs:
            v = v - (b @ v) * b
        res = float(np.linalg.norm(v))
        if res <= TOL.lie_rank:
            return False
        v /= res
        basis_vecs.append(v)
        basis_mats.append(M / nrm)
        return True

    frontier = [G for G in gens if try_add(G)]
    rounds = 0
    while frontier and len(basis_mats) < target and rounds < 2 * n * n:
        rounds += 1
        new: list[np.ndarray] = []
        for A in frontier:
            for B in list(basis_mats):
                C = A @ B - B @ A
                if try_add(C):
                    new.append(basis_mats[-1])
                if len(basis_mats) >= target:
                    break
            if len(basis_mats) >= target:
                break
        frontier = new
    return len(basis_mats) >= target
