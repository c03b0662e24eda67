"""Regenerate the bundled random-state files used by the example3/example4
experiment configs.

Each state is a fixed-seed Ginibre density matrix rho = G G^dagger / tr(...).
The example4 target is built to be strictly majorized by its initial state
(the feasibility condition under bit-flip noise): the initial spectrum is
flattened by a few random pair mixings, then rotated into a random
eigenbasis.

Run from the repository root:

    python3 scripts/make_example_targets.py

The files are written with a stable float encoding, so rerunning must be a
no-op (checked by the test suite).
"""

from pathlib import Path

import numpy as np

from qswitch.liouville import DensityOperator
from qswitch.models import save_density_file
from qswitch.protocols import majorizes

OUTDIR = Path(__file__).resolve().parent.parent / "src" / "qswitch" / "experiments"

SEEDS = {
    "example3_pair_a_initial": 2023,
    "example3_pair_a_target": 2024,
    "example3_pair_b_initial": 2025,
    "example3_pair_b_target": 2026,
    "example4_initial": 2027,
}
EXAMPLE4_MIXING_SEED = 2028
DIMS = (2, 2, 2)


def ginibre_density(seed: int, N: int = 8) -> np.ndarray:
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def haar_unitary(rng: np.random.Generator, N: int) -> np.ndarray:
    G = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    Q, R = np.linalg.qr(G)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def majorized_partner(rho: np.ndarray, seed: int, mixings: int = 6) -> np.ndarray:
    """A state strictly below ``rho`` in the majorization order."""
    rng = np.random.default_rng(seed)
    spectrum = np.sort(np.linalg.eigvalsh(rho))[::-1].copy()
    N = len(spectrum)
    for _ in range(mixings):
        i, j = sorted(rng.choice(N, size=2, replace=False))
        lam = rng.uniform(0.05, 0.5)  # partial pair mixing keeps the order strict
        si, sj = spectrum[i], spectrum[j]
        spectrum[i] = (1 - lam) * si + lam * sj
        spectrum[j] = lam * si + (1 - lam) * sj
        spectrum.sort()
        spectrum = spectrum[::-1].copy()
    U = haar_unitary(rng, N)
    return U @ np.diag(spectrum) @ U.conj().T


def main() -> None:
    states = {name: ginibre_density(seed) for name, seed in SEEDS.items()}
    states["example4_target"] = majorized_partner(
        states["example4_initial"], EXAMPLE4_MIXING_SEED
    )
    assert majorizes(
        np.sort(np.linalg.eigvalsh(states["example4_target"]))[::-1],
        np.sort(np.linalg.eigvalsh(states["example4_initial"]))[::-1],
    ), "example4 target must stay majorized by its initial state"
    for name, rho in sorted(states.items()):
        path = OUTDIR / f"{name}.json"
        save_density_file(path, DensityOperator(rho, DIMS))
        print(f"wrote {path}")


if __name__ == "__main__":
    main()
