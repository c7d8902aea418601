import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncsolenoid.errors import ConfigError, LevelError, ResourceError
from ncsolenoid.padic import (BallTable, GroupElement, PadicRational, ball, coset_labels,
                              coset_representatives, doubling_ratio, f_weight, fdiff_sup, length,
                              length_squared, level, parse_element, reduce)


def E(p, *vals):
    return GroupElement.from_fractions(p, vals)


@pytest.mark.parametrize("m,k,p,want", [(4, 2, 2, (1, 0)), (0, 5, 2, (0, 0)), (6, 2, 3, (2, 1)),
                                        (-12, 3, 2, (-3, 1))])
def test_reduce(m, k, p, want):
    r = reduce(m, k, p)
    assert (r.numerator, r.exponent) == want
    assert r.to_fraction() == Fraction(m, p ** k)


def test_reduce_rejects_bad_input():
    with pytest.raises(ConfigError):
        reduce(1, 0, p=1)
    with pytest.raises(ConfigError):
        reduce(1, -1)


def test_padic_rational_must_be_canonical():
    with pytest.raises((ConfigError, ValueError)):
        PadicRational(2, 1, 2)


def test_level_and_weight_examples():
    assert level(E(2, Fraction(1, 2), 0)) == 1
    assert level(E(2, 0, 0)) == 0
    assert level(E(2, Fraction(1, 4), Fraction(1, 2))) == 2
    assert f_weight(E(2, Fraction(1, 2), 0)) == 2
    assert f_weight(E(2, 0, 0)) == 1
    assert f_weight(E(3, Fraction(1, 9), Fraction(1, 3))) == 9


def test_length_examples():
    assert length(E(2, 0, 0)) == 1.0
    assert length(E(2, 1, 0)) == pytest.approx(math.sqrt(2), abs=1e-12)
    assert length(E(2, Fraction(1, 2), 0)) == pytest.approx(math.sqrt(4.25), abs=1e-12)
    assert length_squared(E(2, Fraction(1, 2), 0)) == Fraction(17, 4)


def test_parse_element():
    assert parse_element("1/2,0", 2) == E(2, Fraction(1, 2), 0)
    assert parse_element("3/2^2, -1", 2) == E(2, Fraction(3, 4), -1)
    assert parse_element("0.25,1", 2) == E(2, Fraction(1, 4), 1)
    for bad in ("1/3,0", "0.1,0", "a,b", "1,,2", "1/3^2,0"):
        with pytest.raises(ConfigError):
            parse_element(bad, 2)


def test_lattice_requires_level():
    g = E(2, Fraction(1, 4), 0)
    assert g.lattice(2) == (1, 0)
    assert g.lattice(3) == (2, 0)
    with pytest.raises(LevelError):
        g.lattice(1)


def brute_fdiff(g, n, R=8.0):
    hs = ball(g.p, g.d, n, R).elements
    return max(abs(f_weight(h) - f_weight(h - g)) for h in hs)


@pytest.mark.parametrize("p,vals,want", [(2, (1, 0), 0), (2, (Fraction(1, 2), 0), 1),
                                         (3, (Fraction(1, 9), 0), 8)])
def test_fdiff_sup_examples(p, vals, want):
    g = E(p, *vals)
    assert fdiff_sup(g) == want
    assert brute_fdiff(g, g.level, R=4.0 if p == 2 else 10.0) == want


def test_fdiff_sup_closed_form_matches_brute_force_on_ball():
    table = ball(2, 2, 2, 4.5)
    for g in table.elements:
        assert fdiff_sup(g, 2) == brute_fdiff(g, 2, R=4.5)


def test_fdiff_sup_level_error():
    with pytest.raises(LevelError):
        fdiff_sup(E(2, Fraction(1, 4), 0), 1)


def brute_ball(p, d, n, r):
    q = p ** n
    bound = math.floor(r * q)
    out = set()
    for ints in itertools.product(range(-bound, bound + 1), repeat=d):
        g = GroupElement.from_lattice(p, n, ints)
        if length_squared(g) <= Fraction(r) ** 2:
            out.add(g)
    return out


@pytest.mark.parametrize("p,d,n,r", [(2, 2, 0, 2), (2, 2, 1, 2), (2, 2, 1, 3.5), (3, 2, 1, 4),
                                     (2, 1, 3, 6), (5, 2, 1, 6), (2, 3, 1, 2.5)])
def test_ball_matches_enumeration_oracle(p, d, n, r):
    table = ball(p, d, n, r)
    assert set(table.elements) == brute_ball(p, d, n, r)
    assert len(set(table.elements)) == len(table)
    L = table.lengths
    assert np.all(np.diff(L) >= -1e-12)


def test_ball_examples():
    t = ball(2, 2, 0, 2)
    want = {E(2, a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)}
    assert set(t.elements) == want
    assert t.elements[0].is_zero()
    for n in range(3):
        assert [g.is_zero() for g in ball(2, 2, n, 1).elements] == [True]


def test_ball_errors():
    with pytest.raises(ResourceError):
        ball(2, 3, 4, 20, max_points=10_000)
    with pytest.raises(ConfigError):
        ball(2, 2, 0, 0.5)


def test_ball_index_and_json_roundtrip():
    t = ball(2, 2, 1, 3)
    for i, g in enumerate(t.elements):
        assert t.index_of(g) == i
    assert t.index_of(E(2, 7, 7)) is None
    back = BallTable.from_json(t.to_json())
    assert back.elements == t.elements


@pytest.mark.parametrize("n", [1, 2])
def test_ball_restricts_to_lower_level(n):
    for r in (2, 3.5, 5):
        upper = set(ball(2, 2, n, r).elements)
        lower = set(ball(2, 2, n - 1, r).elements)
        assert {g for g in upper if g.level <= n - 1} == lower


def test_ball_monotone_in_radius():
    prev = set()
    for r in (1, 1.5, 2, 3, 4, 6):
        cur = set(ball(3, 2, 1, r).elements)
        assert prev <= cur
        prev = cur


def test_sqrt_length_ball_identity():
    # G_sqrtL[r] = G_L[r^2]
    for r in (1.0, 1.5, 2.0, 2.5):
        inner = ball(2, 2, 1, r * r)
        assert {g for g in inner.elements if math.sqrt(length(g)) <= r + 1e-12} == set(inner.elements)


def test_doubling_ratio():
    assert doubling_ratio(2, 2, 0, 2) == len(ball(2, 2, 0, 4)) / 9
    ratios = [doubling_ratio(2, 2, 1, r) for r in (1, 2, 4, 8)]
    assert max(ratios) < 20


def test_coset_representatives():
    reps = coset_representatives(2, 2, 1, 0)
    assert set(reps) == {E(2, a, b) for a in (0, Fraction(1, 2)) for b in (0, Fraction(1, 2))}
    assert reps[0].is_zero()
    assert len(coset_representatives(3, 2, 1, 0)) == 9
    with pytest.raises(ConfigError):
        coset_representatives(2, 2, 1, 1)


def test_coset_labels_follow_representatives():
    reps = coset_representatives(2, 2, 2, 0)
    t = ball(2, 2, 2, 3)
    labels = coset_labels(t.lattice, 2, 0, 2)
    for g, k in zip(t.elements, labels):
        assert (g - reps[k]).level == 0


# ---------------------------------------------------------------- properties

@st.composite
def elements(draw, p=None, d=None):
    p = p or draw(st.sampled_from([2, 3, 5]))
    d = d or draw(st.integers(1, 3))
    vals = [Fraction(draw(st.integers(-60, 60)), p ** draw(st.integers(0, 3))) for _ in range(d)]
    return GroupElement.from_fractions(p, vals)


@st.composite
def pairs(draw):
    p = draw(st.sampled_from([2, 3, 5]))
    d = draw(st.integers(1, 3))
    return draw(elements(p, d)), draw(elements(p, d))


@given(pairs())
def test_length_symmetric_and_subadditive(gh):
    g, h = gh
    assert length_squared(-g) == length_squared(g)
    assert length(g + h) <= length(g) + length(h) + 1e-12
    assert math.sqrt(length(g + h)) <= math.sqrt(length(g)) + math.sqrt(length(h)) + 1e-12


@given(pairs())
def test_level_weight_ultrametric(gh):
    g, h = gh
    assert f_weight(g + h) <= max(f_weight(g), f_weight(h))
    assert abs(f_weight(h) - f_weight(h - g)) <= f_weight(g)


@given(elements())
def test_group_arithmetic_exact(g):
    assert (g - g).is_zero()
    assert (g + (-g)).fractions() == tuple(Fraction(0) for _ in range(g.d))
    assert GroupElement.from_pairs(g.p, g.to_pairs()) == g
