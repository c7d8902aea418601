"""Twisted group algebra C*(G_n, sigma): cocycles, Fourier polynomials, compressions.

The cocycle family is the antisymmetric bicharacter
``sigma(g, h) = exp(i pi <g, Theta h>)``, defined on all of R^d and hence on
every G_n at once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable

import numpy as np
import scipy.sparse as sp

from .clifford import GammaSet, build_gammas
from .errors import ConfigError, LevelError
from .padic import BallTable, GroupElement, ball, length, length_squared

ANTISYMMETRY_TOL = 1e-12


def _is_exact(x) -> bool:
    return isinstance(x, (int, Fraction)) and not isinstance(x, bool)


@dataclass(frozen=True)
class CocycleSpec:
    """sigma(g, h) = exp(i pi <g, Theta h>) for an antisymmetric real Theta.

    If every entry of ``theta`` is an int or Fraction the phases are reduced
    modulo 2 pi exactly before conversion to floating point.
    """

    p: int
    d: int
    theta: tuple[tuple, ...]

    def __post_init__(self):
        if len(self.theta) != self.d or any(len(row) != self.d for row in self.theta):
            raise ConfigError(f"theta must be {self.d}x{self.d}")
        arr = self.theta_array
        if np.max(np.abs(arr + arr.T), initial=0.0) > ANTISYMMETRY_TOL:
            raise ConfigError("theta must be antisymmetric")

    @classmethod
    def from_matrix(cls, p: int, theta, exact: bool = False) -> CocycleSpec:
        rows = [list(r) for r in theta]
        d = len(rows)
        if exact:
            rows = [[Fraction(x) for x in r] for r in rows]
        else:
            rows = [[x if _is_exact(x) else float(x) for x in r] for r in rows]
        return cls(p, d, tuple(tuple(r) for r in rows))

    @classmethod
    def rotation(cls, p: int, theta, exact: bool = False) -> CocycleSpec:
        """d = 2 with Theta = [[0, theta], [-theta, 0]]."""
        t = Fraction(theta) if exact else theta
        return cls.from_matrix(p, [[0, t], [-t, 0]], exact=exact)

    @classmethod
    def trivial(cls, p: int, d: int) -> CocycleSpec:
        return cls(p, d, tuple(tuple(0 for _ in range(d)) for _ in range(d)))

    @property
    def exact(self) -> bool:
        return all(_is_exact(x) for row in self.theta for x in row)

    @property
    def theta_array(self) -> np.ndarray:
        return np.array([[float(x) for x in row] for row in self.theta], dtype=float)

    def phase(self, g: GroupElement, h: GroupElement) -> float:
        """Angle of sigma(g, h) in [0, 2 pi) (exact mode) or unreduced (float mode)."""
        if self.exact:
            xs, ys = g.fractions(), h.fractions()
            q = sum((xs[j] * Fraction(self.theta[j][k]) * ys[k]
                     for j in range(self.d) for k in range(self.d)), Fraction(0))
            return math.pi * float(q % 2)
        return math.pi * float(g.floats() @ self.theta_array @ h.floats())

    def __call__(self, g: GroupElement, h: GroupElement) -> complex:
        return complex(np.exp(1j * self.phase(g, h)))

    def lattice_sigma(self, ga: np.ndarray, ha: np.ndarray, n: int) -> np.ndarray:
        """sigma(ga / p^n, ha / p^n) rowwise for integer arrays of shape (K, d)."""
        ga = np.atleast_2d(ga)
        ha = np.atleast_2d(ha)
        if self.exact:
            den = 1
            for row in self.theta:
                for x in row:
                    den = den * Fraction(x).denominator // math.gcd(den, Fraction(x).denominator)
            T = np.array([[int(Fraction(x) * den) for x in row] for row in self.theta], dtype=object)
            num = np.sum((ga.astype(object) @ T) * ha.astype(object), axis=1)
            full = den * self.p ** (2 * n)
            red = np.array([int(v) % (2 * full) for v in num], dtype=float)
            angle = math.pi * red / full
        else:
            s = float(self.p) ** n
            angle = math.pi * np.sum(((ga / s) @ self.theta_array) * (ha / s), axis=1)
        return np.exp(1j * angle)


def sigma(spec: CocycleSpec, g: GroupElement, h: GroupElement) -> complex:
    return spec(g, h)


def _element_key(g: GroupElement):
    return (length_squared(g), g.fractions())


@dataclass
class FourierPolynomial:
    """Finitely supported coefficient function g -> f(g), i.e. lambda(f) = sum f(g) lambda(g)."""

    cocycle: CocycleSpec
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for g, c in self.coeffs.items():
            if g.p != self.cocycle.p or g.d != self.cocycle.d:
                raise ConfigError(f"{g} does not live in the ambient group")
            c = complex(c)
            if c != 0:
                clean[g] = c
        self.coeffs = clean

    @property
    def p(self) -> int:
        return self.cocycle.p

    @property
    def d(self) -> int:
        return self.cocycle.d

    @classmethod
    def delta(cls, cocycle: CocycleSpec, g: GroupElement, c: complex = 1.0) -> FourierPolynomial:
        return cls(cocycle, {g: c})

    @classmethod
    def zero(cls, cocycle: CocycleSpec) -> FourierPolynomial:
        return cls(cocycle, {})

    def __call__(self, g: GroupElement) -> complex:
        return self.coeffs.get(g, 0j)

    def __len__(self):
        return len(self.coeffs)

    @property
    def support(self) -> list[GroupElement]:
        return sorted(self.coeffs, key=_element_key)

    def items(self):
        return [(g, self.coeffs[g]) for g in self.support]

    @property
    def level(self) -> int:
        return max((g.level for g in self.coeffs), default=0)

    @property
    def support_radius(self) -> float:
        return max((length(g) for g in self.coeffs), default=0.0)

    def _combine(self, other: FourierPolynomial, sign: float) -> FourierPolynomial:
        if other.cocycle != self.cocycle:
            raise ConfigError("polynomials over different cocycles")
        out = dict(self.coeffs)
        for g, c in other.coeffs.items():
            out[g] = out.get(g, 0j) + sign * c
        return FourierPolynomial(self.cocycle, out)

    def __add__(self, other):
        return self._combine(other, 1.0)

    def __sub__(self, other):
        return self._combine(other, -1.0)

    def __mul__(self, scalar):
        return FourierPolynomial(self.cocycle, {g: scalar * c for g, c in self.coeffs.items()})

    __rmul__ = __mul__

    def map_coefficients(self, fn) -> FourierPolynomial:
        """New polynomial g -> fn(g, f(g))."""
        return FourierPolynomial(self.cocycle, {g: fn(g, c) for g, c in self.coeffs.items()})

    def is_self_adjoint(self, tol: float = 0.0) -> bool:
        for g, c in self.coeffs.items():
            if abs(self(-g) - np.conj(c)) > tol:
                return False
        return True

    def coefficient_norm(self) -> float:
        """Max modulus of the coefficients."""
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def lattice(self, n: int) -> tuple[np.ndarray, np.ndarray]:
        """Support as integer coordinates at scale p^n plus coefficient vector."""
        items = self.items()
        for g, _ in items:
            if g.level > n:
                raise LevelError(f"support element {g} is not in G_{n}")
        lat = np.array([g.lattice(n) for g, _ in items], dtype=np.int64).reshape(len(items), self.d)
        vals = np.array([c for _, c in items], dtype=complex)
        return lat, vals

    def to_json(self) -> dict:
        return {"support": [{"g": g.to_pairs(), "re": c.real, "im": c.imag} for g, c in self.items()]}

    @classmethod
    def from_json(cls, data: dict, cocycle: CocycleSpec) -> FourierPolynomial:
        coeffs = {}
        for term in data["support"]:
            g = GroupElement.from_pairs(cocycle.p, term["g"])
            coeffs[g] = coeffs.get(g, 0j) + complex(term.get("re", 0.0), term.get("im", 0.0))
        return cls(cocycle, coeffs)


def twisted_convolve(f1: FourierPolynomial, f2: FourierPolynomial) -> FourierPolynomial:
    """(f1 * f2)(h) = sum_g f1(g) f2(h - g) sigma(g, h - g)."""
    if f1.cocycle != f2.cocycle:
        raise ConfigError("polynomials over different cocycles")
    out: dict = {}
    for g1, c1 in f1.items():
        for g2, c2 in f2.items():
            h = g1 + g2
            out[h] = out.get(h, 0j) + c1 * c2 * f1.cocycle(g1, g2)
    return FourierPolynomial(f1.cocycle, out)


def adjoint(f: FourierPolynomial) -> FourierPolynomial:
    """f*(g) = conj(f(-g)); valid because sigma(g, -g) = 1."""
    return FourierPolynomial(f.cocycle, {-g: np.conj(c) for g, c in f.coeffs.items()})


def trace(f: FourierPolynomial) -> complex:
    """Canonical trace: the coefficient at the identity."""
    return f(GroupElement.zero(f.p, f.d))


@dataclass(frozen=True)
class TruncationSpec:
    """Compression of l^2(G_level) (x) E to l^2(ball(level, radius)) (x) E."""

    p: int
    d: int
    level: int
    radius: float
    gammas: GammaSet | None = None

    def __post_init__(self):
        if self.level < 0:
            raise ConfigError("level must be >= 0")
        if self.radius < 1:
            raise ConfigError("radius must be >= 1")
        if self.gammas is None:
            object.__setattr__(self, "gammas", build_gammas(self.d))
        elif self.gammas.d != self.d:
            raise ConfigError("gamma set built for a different dimension")

    @property
    def ball(self) -> BallTable:
        return ball(self.p, self.d, self.level, self.radius)

    @property
    def dim_E(self) -> int:
        return self.gammas.dim_E

    @property
    def dim(self) -> int:
        return len(self.ball) * self.dim_E

    def with_radius(self, radius: float) -> TruncationSpec:
        return TruncationSpec(self.p, self.d, self.level, radius, self.gammas)

    def with_level(self, level: int) -> TruncationSpec:
        return TruncationSpec(self.p, self.d, level, self.radius, self.gammas)


def shift_pairs(table: BallTable, g_lat) -> tuple[np.ndarray, np.ndarray]:
    """Index pairs (i, j) with lattice[i] = lattice[j] + g_lat, both inside the ball."""
    lat = table.lattice
    g_lat = np.asarray(g_lat, dtype=np.int64)
    span = int(np.max(np.abs(lat), initial=0)) + int(np.max(np.abs(g_lat), initial=0)) + 1
    width = 2 * span + 1
    weights = width ** np.arange(table.d, dtype=np.int64)[::-1]
    keys = (lat + span) @ weights
    order = np.argsort(keys)
    sorted_keys = keys[order]
    target = (lat + g_lat + span) @ weights
    pos = np.searchsorted(sorted_keys, target)
    pos_c = np.minimum(pos, len(sorted_keys) - 1)
    hit = sorted_keys[pos_c] == target
    cols = np.nonzero(hit)[0]
    rows = order[pos_c[hit]]
    return rows, cols


def lambda_entries(f: FourierPolynomial, T: TruncationSpec):
    """Triples (row, col, value, g_index) of the compressed lambda(f) on the group basis."""
    lat_f, vals = f.lattice(T.level)
    table = T.ball
    rows, cols, data, which = [], [], [], []
    for k in range(len(vals)):
        r, c = shift_pairs(table, lat_f[k])
        if len(r) == 0:
            continue
        sig = f.cocycle.lattice_sigma(np.broadcast_to(lat_f[k], (len(c), f.d)), table.lattice[c], T.level)
        rows.append(r)
        cols.append(c)
        data.append(vals[k] * sig)
        which.append(np.full(len(r), k))
    if not rows:
        e = np.zeros(0, dtype=np.int64)
        return e, e, np.zeros(0, dtype=complex), e
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(data), np.concatenate(which)


def lambda_matrix(f: FourierPolynomial, T: TruncationSpec, sparse: bool = False):
    """P lambda(f) P on l^2(ball) (x) E; entry (h,e),(h',e') = f(h-h') sigma(h-h', h') delta_ee'."""
    if f.p != T.p or f.d != T.d:
        raise ConfigError("polynomial and truncation disagree on (p, d)")
    rows, cols, data, _ = lambda_entries(f, T)
    N = len(T.ball)
    base = sp.coo_matrix((data, (rows, cols)), shape=(N, N)).tocsr()
    M = sp.kron(base, sp.identity(T.dim_E, dtype=complex, format="csr"), format="csr")
    return M if sparse else M.toarray()


def random_self_adjoint(cocycle: CocycleSpec, support: Iterable[GroupElement],
                        rng: np.random.Generator, include_zero: bool = True) -> FourierPolynomial:
    """Seeded random f with f(-g) = conj(f(g)) on the given symmetric support.

    One representative per pair {g, -g} receives a complex normal coefficient;
    the identity receives a real one.
    """
    coeffs = {}
    for g in sorted(set(support), key=_element_key):
        if g in coeffs:
            continue
        if g.is_zero():
            if include_zero:
                coeffs[g] = complex(rng.standard_normal())
            continue
        c = complex(rng.standard_normal(), rng.standard_normal())
        coeffs[g] = c
        coeffs[-g] = np.conj(c)
    return FourierPolynomial(cocycle, coeffs)


def matrix_to_csv_rows(M) -> list[tuple[int, int, float, float]]:
    """Nonzero entries as (row, col, re, im) in row-major order."""
    S = sp.coo_matrix(M)
    order = np.lexsort((S.col, S.row))
    return [(int(S.row[i]), int(S.col[i]), float(S.data[i].real), float(S.data[i].imag)) for i in order]
