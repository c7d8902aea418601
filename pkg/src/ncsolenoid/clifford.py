"""Anticommuting Hermitian unitaries gamma_1..gamma_{d+1} (Pauli-chain representation)."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce as _fold

import numpy as np

from .errors import ConfigError, ResourceError

MAX_DIM_E = 1024

PAULI_I = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _kron(*factors):
    return _fold(np.kron, factors)


@dataclass(frozen=True)
class GammaSet:
    d: int
    gammas: tuple[np.ndarray, ...]

    @property
    def dim_E(self) -> int:
        return self.gammas[0].shape[0]

    def __len__(self):
        return len(self.gammas)

    def __getitem__(self, i):
        return self.gammas[i]

    def combination(self, v) -> np.ndarray:
        """sum_i v_i gamma_i for a real vector v of length d+1."""
        return np.tensordot(np.asarray(v, dtype=float), np.array(self.gammas), axes=1)

    def to_json(self) -> dict:
        return {
            "d": self.d,
            "dim_E": self.dim_E,
            "gammas": [[[[float(z.real), float(z.imag)] for z in row] for row in g]
                       for g in self.gammas],
        }


def build_gammas(d: int, max_dim: int = MAX_DIM_E) -> GammaSet:
    """Irreducible representation of the complex Clifford algebra on d+1 generators.

    With k = floor((d+1)/2) qubits, generators 2i and 2i+1 are
    Z^{(x)i} (x) X (x) I... and Z^{(x)i} (x) Y (x) I...; an odd leftover
    generator is Z^{(x)k}.  d=1 gives (X, Y), d=2 gives (X, Y, Z).
    """
    if d < 1:
        raise ConfigError("d must be >= 1")
    ngen = d + 1
    k = ngen // 2
    if 2 ** k > max_dim:
        raise ResourceError(f"dim_E = 2^{k} exceeds cap {max_dim}")
    gammas = []
    for i in range(k):
        pre = [PAULI_Z] * i
        post = [PAULI_I] * (k - i - 1)
        gammas.append(_kron(*pre, PAULI_X, *post))
        gammas.append(_kron(*pre, PAULI_Y, *post))
    if ngen % 2 == 1:
        gammas.append(_kron(*([PAULI_Z] * k)))
    return GammaSet(d, tuple(gammas))


@dataclass
class CliffordReport:
    anticommutation: float
    hermiticity: float
    unitarity: float
    tol: float

    @property
    def passed(self) -> bool:
        return max(self.anticommutation, self.hermiticity, self.unitarity) < self.tol

    def to_json(self) -> dict:
        return {"anticommutation": self.anticommutation, "hermiticity": self.hermiticity,
                "unitarity": self.unitarity, "tol": self.tol, "pass": self.passed}


def verify_clifford(G: GammaSet, tol: float = 1e-12) -> CliffordReport:
    """Max entrywise deviations of {g_i, g_j} = 0 (i != j), g_i = g_i^*, g_i^2 = I."""
    if tol <= 0:
        raise ConfigError("tol must be positive")
    gs = [np.asarray(g) for g in G.gammas]
    eye = np.eye(gs[0].shape[0])
    anti = 0.0
    for i in range(len(gs)):
        for j in range(i + 1, len(gs)):
            anti = max(anti, float(np.max(np.abs(gs[i] @ gs[j] + gs[j] @ gs[i]))))
    herm = max(float(np.max(np.abs(g - g.conj().T))) for g in gs)
    unit = max(float(np.max(np.abs(g @ g - eye))) for g in gs)
    return CliffordReport(anti, herm, unit, tol)
