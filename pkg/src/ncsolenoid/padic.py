"""Exact arithmetic on G_n = (p^-n Z)^d inside G_inf = Z[1/p]^d.

Elements are stored coordinatewise as reduced fractions ``m / p^k``.  All
group arithmetic is integer arithmetic; floating point appears only when a
length is evaluated.  Balls are enumerated on the lattice ``p^n G_n = Z^d``
and carry integer coordinates alongside the ``GroupElement`` objects so that
downstream matrix assembly can stay vectorised.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, LevelError, ResourceError

# Lattice box points scanned by ``ball`` before giving up.
MAX_BOX_POINTS = 4_000_000


def _check_p(p: int) -> None:
    if not isinstance(p, (int, np.integer)) or p < 2:
        raise ConfigError(f"p must be an integer >= 2, got {p!r}")


def _vp(m: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    v = 0
    while m % p == 0:
        m //= p
        v += 1
    return v


@dataclass(frozen=True, order=True)
class PadicRational:
    """The number ``numerator / p**exponent`` in canonical form."""

    numerator: int
    exponent: int
    p: int = field(default=2, compare=False)

    def __post_init__(self):
        if self.exponent < 0:
            raise ConfigError("exponent must be non-negative")
        if self.numerator == 0 and self.exponent != 0:
            raise ConfigError("zero must be stored as (0, 0)")
        if self.exponent > 0 and self.numerator % self.p == 0:
            raise ConfigError(f"({self.numerator}, {self.exponent}) is not reduced for p={self.p}")

    def __hash__(self):
        return hash((self.numerator, self.exponent, self.p))

    def __eq__(self, other):
        if not isinstance(other, PadicRational):
            return NotImplemented
        return (self.numerator, self.exponent, self.p) == (other.numerator, other.exponent, other.p)

    def __add__(self, other: PadicRational) -> PadicRational:
        k = max(self.exponent, other.exponent)
        m = (self.numerator * self.p ** (k - self.exponent)
             + other.numerator * other.p ** (k - other.exponent))
        return reduce(m, k, self.p)

    def __neg__(self) -> PadicRational:
        return PadicRational(-self.numerator, self.exponent, self.p)

    def __sub__(self, other: PadicRational) -> PadicRational:
        return self + (-other)

    def to_fraction(self) -> Fraction:
        return Fraction(self.numerator, self.p ** self.exponent)

    def __float__(self) -> float:
        return self.numerator / self.p ** self.exponent

    def __str__(self):
        if self.exponent == 0:
            return str(self.numerator)
        return f"{self.numerator}/{self.p}^{self.exponent}"


def reduce(m: int, k: int, p: int = 2) -> PadicRational:
    """Canonical form of ``m / p**k``."""
    _check_p(p)
    if k < 0:
        raise ConfigError("k must be non-negative")
    m, k = int(m), int(k)
    if m == 0:
        return PadicRational(0, 0, p)
    while k > 0 and m % p == 0:
        m //= p
        k -= 1
    return PadicRational(m, k, p)


def rational_from_fraction(x: Fraction, p: int) -> PadicRational:
    """Convert a Fraction whose denominator is a power of ``p``; reject anything else."""
    x = Fraction(x)
    den, k = x.denominator, 0
    while den % p == 0:
        den //= p
        k += 1
    if den != 1:
        raise ConfigError(f"{x} is not in Z[1/{p}]")
    return reduce(x.numerator, k, p)


@dataclass(frozen=True)
class GroupElement:
    """An element of Z[1/p]^d."""

    p: int
    coords: tuple[PadicRational, ...]

    def __post_init__(self):
        _check_p(self.p)
        if len(self.coords) < 1:
            raise ConfigError("dimension must be >= 1")
        for c in self.coords:
            if c.p != self.p:
                raise ConfigError("coordinate prime does not match element prime")

    @property
    def d(self) -> int:
        return len(self.coords)

    @classmethod
    def zero(cls, p: int, d: int) -> GroupElement:
        return cls(p, tuple(PadicRational(0, 0, p) for _ in range(d)))

    @classmethod
    def from_fractions(cls, p: int, values: Iterable) -> GroupElement:
        return cls(p, tuple(rational_from_fraction(Fraction(v), p) for v in values))

    @classmethod
    def from_lattice(cls, p: int, n: int, ints: Sequence[int]) -> GroupElement:
        """The element ``ints / p**n``."""
        return cls(p, tuple(reduce(int(a), n, p) for a in ints))

    @classmethod
    def from_pairs(cls, p: int, pairs: Sequence[Sequence[int]]) -> GroupElement:
        """Inverse of :meth:`to_pairs`; pairs need not be reduced."""
        return cls(p, tuple(reduce(int(m), int(k), p) for m, k in pairs))

    def to_pairs(self) -> list[list[int]]:
        return [[c.numerator, c.exponent] for c in self.coords]

    def __add__(self, other: GroupElement) -> GroupElement:
        if other.p != self.p or other.d != self.d:
            raise ConfigError("elements live in different groups")
        return GroupElement(self.p, tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> GroupElement:
        return GroupElement(self.p, tuple(-a for a in self.coords))

    def __sub__(self, other: GroupElement) -> GroupElement:
        return self + (-other)

    def is_zero(self) -> bool:
        return all(c.numerator == 0 for c in self.coords)

    @property
    def level(self) -> int:
        return max(c.exponent for c in self.coords)

    def fractions(self) -> tuple[Fraction, ...]:
        return tuple(c.to_fraction() for c in self.coords)

    def floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords])

    def lattice(self, n: int) -> tuple[int, ...]:
        """Integer coordinates of ``p**n * self``; requires ``self`` in G_n."""
        if self.level > n:
            raise LevelError(f"{self} has level {self.level} > {n}")
        return tuple(c.numerator * self.p ** (n - c.exponent) for c in self.coords)

    def __str__(self):
        return "(" + ", ".join(str(c) for c in self.coords) + ")"


def parse_element(text: str, p: int) -> GroupElement:
    """Parse ``"1/2,0"``, ``"3/2^2,1"`` or exactly representable decimals like ``"0.25,1"``.

    Values outside Z[1/p] are rejected rather than rounded.
    """
    _check_p(p)
    coords = []
    for raw in text.split(","):
        tok = raw.strip()
        if not tok:
            raise ConfigError(f"empty coordinate in {text!r}")
        try:
            if "/" in tok:
                num, den = tok.split("/", 1)
                if "^" in den:
                    base, exp = den.split("^", 1)
                    if int(base) != p:
                        raise ConfigError(f"denominator base {base} != p={p}")
                    value = Fraction(int(num), p ** int(exp))
                else:
                    value = Fraction(int(num), int(den))
            else:
                value = Fraction(tok)
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"cannot parse coordinate {tok!r}") from exc
        coords.append(rational_from_fraction(value, p))
    return GroupElement(p, tuple(coords))


def level(g: GroupElement) -> int:
    """Smallest n with p^n g integral."""
    return g.level


def f_weight(g: GroupElement) -> int:
    """The level weight p**level(g); equals 1 at the identity."""
    return g.p ** g.level


def length(g: GroupElement) -> float:
    """sqrt(sum_j x_j(g)^2 + F(g)^2)."""
    sq = sum(c.to_fraction() ** 2 for c in g.coords) + f_weight(g) ** 2
    return math.sqrt(sq)


def length_squared(g: GroupElement) -> Fraction:
    return sum((c.to_fraction() ** 2 for c in g.coords), Fraction(0)) + f_weight(g) ** 2


def fdiff_sup(g: GroupElement, n: int | None = None) -> int:
    """sup over h in G_n of |F(h) - F(h - g)|.

    Closed form: 0 for integral g, F(g) - 1 otherwise.  The supremum is
    attained at h = 0 and does not depend on n (``None`` means G_inf).
    """
    if n is not None and g.level > n:
        raise LevelError(f"{g} is not in G_{n}")
    if g.level == 0:
        return 0
    return f_weight(g) - 1


def lattice_levels(a: np.ndarray, n: int, p: int) -> np.ndarray:
    """Levels of the points ``a / p**n`` for an integer array of shape (N, d)."""
    a = np.asarray(a)
    t = np.zeros(a.shape[0], dtype=np.int64)
    pk = 1
    for k in range(1, n + 1):
        pk *= p
        t[np.all(a % pk == 0, axis=1)] = k
    return n - t


@dataclass
class BallTable:
    """All g in G_n with length(g) <= r, in deterministic order.

    ``lattice`` holds the integer coordinates ``p**n * g`` row by row, in the
    same order as ``elements``.  Ordering is by exact squared length, then
    lexicographically by coordinates.
    """

    p: int
    d: int
    n: int
    r: float
    lattice: np.ndarray
    levels: np.ndarray
    length_sq_scaled: np.ndarray  # p^(2n) * length^2, exact integers
    _elements: list | None = field(default=None, repr=False)
    _index: dict | None = field(default=None, repr=False)

    def __len__(self):
        return self.lattice.shape[0]

    @property
    def elements(self) -> list[GroupElement]:
        if self._elements is None:
            self._elements = [GroupElement.from_lattice(self.p, self.n, row) for row in self.lattice]
        return self._elements

    @property
    def index(self) -> dict[tuple[int, ...], int]:
        """Map from lattice tuple to position."""
        if self._index is None:
            self._index = {tuple(int(v) for v in row): i for i, row in enumerate(self.lattice)}
        return self._index

    def index_of(self, g: GroupElement) -> int | None:
        if g.level > self.n:
            return None
        return self.index.get(g.lattice(self.n))

    @property
    def lengths(self) -> np.ndarray:
        return np.sqrt(self.length_sq_scaled.astype(float)) / float(self.p) ** self.n

    @property
    def points(self) -> np.ndarray:
        """Float coordinates, shape (N, d)."""
        return self.lattice / float(self.p) ** self.n

    def f_weights(self) -> np.ndarray:
        return self.p ** self.levels.astype(np.int64)

    def to_json(self) -> dict:
        return {
            "p": self.p, "d": self.d, "n": self.n, "r": self.r,
            "elements": [g.to_pairs() for g in self.elements],
        }

    @classmethod
    def from_json(cls, data: dict) -> BallTable:
        p, n = int(data["p"]), int(data["n"])
        elems = [GroupElement.from_pairs(p, pairs) for pairs in data["elements"]]
        lat = np.array([g.lattice(n) for g in elems], dtype=np.int64).reshape(len(elems), int(data["d"]))
        lev = lattice_levels(lat, n, p)
        lsq = np.sum(lat.astype(object) ** 2, axis=1) + np.array(
            [p ** (2 * (int(v) + n)) for v in lev], dtype=object)
        return cls(p, int(data["d"]), n, float(data["r"]), lat, lev, lsq.astype(np.int64), elems, None)


def _length_threshold(r, n: int, p: int) -> int:
    """floor(r^2 p^(2n)), computed exactly from the binary value of r."""
    return math.floor(Fraction(r) ** 2 * p ** (2 * n))


def ball(p: int, d: int, n: int, r: float, max_points: int = MAX_BOX_POINTS) -> BallTable:
    """Enumerate {g in G_n : length(g) <= r} by scanning the box |x_j| <= r."""
    _check_p(p)
    if d < 1:
        raise ConfigError("d must be >= 1")
    if n < 0:
        raise ConfigError("n must be >= 0")
    if r < 1:
        raise ConfigError("radius must be >= 1")
    return _ball_cached(int(p), int(d), int(n), float(r), int(max_points))


@lru_cache(maxsize=64)
def _ball_cached(p: int, d: int, n: int, r: float, max_points: int) -> BallTable:
    scale = p ** n
    bound = math.floor(Fraction(r) * scale)
    side = 2 * bound + 1
    if side ** d > max_points:
        raise ResourceError(f"box of {side}^{d} points exceeds cap {max_points}")
    thresh = _length_threshold(r, n, p)
    if thresh >= 2 ** 62:
        raise ResourceError("radius/level too large for 64-bit exact lengths")
    axis = np.arange(-bound, bound + 1, dtype=np.int64)
    grid = np.stack(np.meshgrid(*([axis] * d), indexing="ij"), axis=-1).reshape(-1, d)
    lev = lattice_levels(grid, n, p)
    # F(g)^2 * p^(2n) = p^(2(level+n)); levels beyond the threshold are dropped first
    fsq = np.array([p ** (2 * (k + n)) if p ** (2 * (k + n)) <= thresh else thresh + 1
                    for k in range(n + 1)], dtype=np.int64)
    lsq = np.sum(grid * grid, axis=1) + fsq[lev]
    keep = lsq <= thresh
    grid, lev, lsq = grid[keep], lev[keep], lsq[keep]
    order = np.lexsort(tuple(grid[:, j] for j in range(d - 1, -1, -1)) + (lsq,))
    return BallTable(p, d, n, float(r), grid[order], lev[order], lsq[order])


def doubling_ratio(p: int, d: int, n: int, r: float, max_points: int = MAX_BOX_POINTS) -> float:
    """|ball(n, 2r)| / |ball(n, r)|."""
    return len(ball(p, d, n, 2 * r, max_points)) / len(ball(p, d, n, r, max_points))


def coset_representatives(p: int, d: int, m: int, n: int) -> list[GroupElement]:
    """Transversal of G_n in G_m with coordinates in [0, p^-n); zero comes first."""
    if not m > n >= 0:
        raise ConfigError(f"need m > n >= 0, got m={m}, n={n}")
    q = p ** (m - n)
    reps = []
    for ints in np.ndindex(*([q] * d)):
        reps.append(GroupElement.from_lattice(p, m, ints))
    return reps


def coset_labels(lattice: np.ndarray, m: int, n: int, p: int) -> np.ndarray:
    """Index of the coset of G_n containing each lattice point of G_m.

    Labels follow the order of :func:`coset_representatives`; label 0 is G_n.
    """
    q = p ** (m - n)
    res = np.mod(lattice, q)
    labels = np.zeros(lattice.shape[0], dtype=np.int64)
    for j in range(lattice.shape[1]):
        labels = labels * q + res[:, j]
    return labels
