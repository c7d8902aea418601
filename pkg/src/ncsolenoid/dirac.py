"""Truncated Dirac operators D = sum_j X_j (x) gamma_j + M_F (x) gamma_{d+1} and their commutators."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from ._linalg import block_norm, spectral_norm
from .errors import ConfigError, LevelError
from .padic import GroupElement, coset_labels, fdiff_sup
from .twisted import FourierPolynomial, TruncationSpec, lambda_entries

SCHEMA_VERSION = 1


@dataclass
class DiracMatrix:
    """Block-diagonal D on l^2(ball) (x) E; ``blocks[i]`` acts on the fibre over ball element i."""

    truncation: TruncationSpec
    blocks: np.ndarray  # (N, dim_E, dim_E)

    @property
    def shape(self):
        n = self.blocks.shape[0] * self.blocks.shape[1]
        return (n, n)

    def sparse(self) -> sp.csr_matrix:
        return sp.block_diag(list(self.blocks), format="csr")

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()


def dirac_block(x: np.ndarray, fweight: float, gammas) -> np.ndarray:
    """sum_j x_j gamma_j + F gamma_{d+1}."""
    return gammas.combination(np.append(np.asarray(x, dtype=float), float(fweight)))


def dirac_matrix(T: TruncationSpec) -> DiracMatrix:
    table = T.ball
    coef = np.column_stack([table.points, table.f_weights().astype(float)])
    blocks = np.tensordot(coef, np.array(T.gammas.gammas), axes=1)
    return DiracMatrix(T, blocks)


def dirac_spectrum(T: TruncationSpec) -> np.ndarray:
    """Sorted eigenvalues of the assembled (dense) Dirac matrix."""
    D = dirac_matrix(T).dense()
    return np.linalg.eigvalsh(D)


def expected_spectrum(T: TruncationSpec) -> np.ndarray:
    """{+-length(g)} over the ball, each with multiplicity dim_E / 2."""
    L = T.ball.lengths
    half = T.dim_E // 2
    return np.sort(np.concatenate([np.repeat(L, half), np.repeat(-L, half)]))


def spectrum_table(values: np.ndarray, decimals: int = 9) -> list[tuple[float, int]]:
    """(value, multiplicity) after rounding, sorted by value."""
    vals, counts = np.unique(np.round(values, decimals), return_counts=True)
    return [(float(v), int(c)) for v, c in zip(vals, counts)]


@dataclass
class CommutatorMatrix:
    truncation: TruncationSpec
    matrix: sp.csr_matrix
    support_radius: float

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def commutator_matrix(f: FourierPolynomial, T: TruncationSpec) -> CommutatorMatrix:
    """Compressed [D, lambda(f)].

    Entry (h,e),(h',e') = f(g) sigma(g, h') <e|(sum_j x_j(g) gamma_j + (F(h) - F(h')) gamma_{d+1})|e'>
    with g = h - h'.
    """
    if f.p != T.p or f.d != T.d:
        raise ConfigError("polynomial and truncation disagree on (p, d)")
    if f.level > T.level:
        raise LevelError(f"polynomial has level {f.level} > truncation level {T.level}")
    rows, cols, vals, which = lambda_entries(f, T)
    table = T.ball
    dE = T.dim_E
    N = len(table)
    if len(rows) == 0:
        return CommutatorMatrix(T, sp.csr_matrix((N * dE, N * dE), dtype=complex), f.support_radius)
    lat_f, _ = f.lattice(T.level)
    xg = lat_f / float(T.p) ** T.level
    fw = table.f_weights().astype(float)
    coef = np.column_stack([xg[which], fw[rows] - fw[cols]])
    G = np.array(T.gammas.gammas)
    blocks = vals[:, None, None] * np.tensordot(coef, G, axes=1)
    ee = np.arange(dE)
    R = (rows[:, None, None] * dE + ee[None, :, None]) + np.zeros((1, 1, dE), dtype=np.int64)
    C = (cols[:, None, None] * dE + ee[None, None, :]) + np.zeros((1, dE, 1), dtype=np.int64)
    M = sp.coo_matrix((blocks.ravel(), (R.ravel(), C.ravel())), shape=(N * dE, N * dE)).tocsr()
    M.eliminate_zeros()
    return CommutatorMatrix(T, M, f.support_radius)


def lip(f: FourierPolynomial, T: TruncationSpec) -> float:
    """Norm of the compressed commutator; a lower bound for Lip(f) that increases with the radius."""
    return spectral_norm(commutator_matrix(f, T).matrix)


def lip_exact_generator(g: GroupElement, n: int | None = None) -> float:
    """Lip(delta_g) = sqrt(|x(g)|^2 + sup_h |F(h) - F(h - g)|^2), independent of the cocycle."""
    s = fdiff_sup(g, n)
    xsq = sum(float(c.to_fraction() ** 2) for c in g.coords)
    return math.sqrt(xsq + s * s)


def lip_upper_bound(f: FourierPolynomial) -> float:
    """sum_g |f(g)| Lip(delta_g)."""
    return float(sum(abs(c) * lip_exact_generator(g) for g, c in f.items()))


@dataclass
class LipEqualityReport:
    n: int
    m: int
    radius: float
    k0_norm: float
    max_coset_norm: float
    full_norm: float
    coset_norms: list
    tol: float
    nested: bool = False

    @property
    def passed(self) -> bool:
        return (self.max_coset_norm <= self.k0_norm + self.tol
                and abs(self.full_norm - self.k0_norm) <= self.tol)

    def to_json(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "n": self.n, "m": self.m, "radius": self.radius,
            "k0_norm": self.k0_norm, "max_coset_norm": self.max_coset_norm,
            "full_norm": self.full_norm, "tol": self.tol, "pass": self.passed,
            "nested": self.nested,
        }


def lip_equality_check(f: FourierPolynomial, n: int, m: int, R: float,
                       T: TruncationSpec | None = None, tol: float = 1e-9) -> LipEqualityReport:
    """Compare the commutator norm on each coset block (k + G_n) of ball(m, R).

    Since f lives on G_n, the compressed commutator on ball(m, R) splits into
    one block per coset of G_n; the k = 0 block is the level-n truncation.
    """
    if not m > n >= 0:
        raise ConfigError(f"need m > n >= 0, got m={m}, n={n}")
    if f.level > n:
        raise LevelError(f"polynomial has level {f.level} > {n}")
    if T is None:
        T = TruncationSpec(f.p, f.d, m, R)
    else:
        T = TruncationSpec(T.p, T.d, m, R, T.gammas)
    C = commutator_matrix(f, T).matrix
    labels = coset_labels(T.ball.lattice, m, n, T.p)
    dE = T.dim_E
    norms = []
    for k in range(T.p ** (T.d * (m - n))):
        pts = np.nonzero(labels == k)[0]
        idx = (pts[:, None] * dE + np.arange(dE)[None, :]).ravel()
        norms.append(block_norm(C, idx))
    full = spectral_norm(C)
    k0 = norms[0]
    others = max(norms[1:], default=0.0)
    nested = all(t is not None for t in coset_window_embeddings(T, n))
    return LipEqualityReport(n, m, float(R), k0, others, full, norms, tol, nested)


def coset_window_embeddings(T: TruncationSpec, n: int, search: int = 2) -> list:
    """For each coset k + G_n, a translation s in G_n (scale-m lattice) moving the
    window {h in G_n : k + h in ball} inside the k = 0 window, or None.

    Found translations certify that the coset block is a compression of the
    same operator as the k = 0 block to a smaller set (up to a diagonal
    unitary), so its norm cannot exceed the k = 0 norm when F is constant
    on G_n (n = 0).
    """
    m = T.level
    q = T.p ** (m - n)
    lat = T.ball.lattice
    labels = coset_labels(lat, m, n, T.p)
    base = {tuple(row) for row in lat[labels == 0].tolist()}
    shifts = [np.array(s) * q for s in np.ndindex(*([2 * search + 1] * T.d))]
    shifts = sorted((s - search * q for s in shifts), key=lambda v: int(np.abs(v).sum()))
    out = []
    for k in range(q ** T.d):
        pts = lat[labels == k]
        if len(pts) == 0:
            out.append(np.zeros(T.d, dtype=np.int64))
            continue
        # G_n-part of each point: subtract the fundamental-domain representative
        h = pts - np.mod(pts, q)
        found = None
        for s in shifts:
            if all(tuple(row) in base for row in (h + s).tolist()):
                found = s
                break
        out.append(found)
    return out


def dual_unitary(T: TruncationSpec, t) -> sp.csr_matrix:
    """Diagonal unitary xi(g) -> conj(z(g)) xi(g) for the character z(g) = exp(2 pi i t . p^n x(g)) of G_n."""
    t = np.asarray(t, dtype=float)
    phases = np.exp(-2j * np.pi * (T.ball.lattice @ t))
    return sp.diags(np.repeat(phases, T.dim_E), format="csr")
