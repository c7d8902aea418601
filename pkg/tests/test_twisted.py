import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ncsolenoid.errors import ConfigError, LevelError
from ncsolenoid.padic import GroupElement, length
from ncsolenoid.twisted import (CocycleSpec, FourierPolynomial, TruncationSpec, adjoint,
                                lambda_matrix, matrix_to_csv_rows, random_self_adjoint, sigma,
                                trace, twisted_convolve)

P = 2
e1 = GroupElement.from_fractions(P, (1, 0))
e2 = GroupElement.from_fractions(P, (0, 1))
zero = GroupElement.zero(P, 2)


def E(*vals):
    return GroupElement.from_fractions(P, vals)


def test_sigma_examples():
    th = 0.3
    cs = CocycleSpec.rotation(P, th)
    assert sigma(cs, e1, e2) == pytest.approx(cmath.exp(1j * math.pi * th), abs=1e-14)
    g = E(Fraction(3, 4), -2)
    assert sigma(cs, g, g) == pytest.approx(1, abs=1e-14)
    assert sigma(cs, g, -g) == pytest.approx(1, abs=1e-14)


def test_cocycle_validation():
    with pytest.raises(ConfigError):
        CocycleSpec.from_matrix(P, [[0, 1], [1, 0]])
    with pytest.raises(ConfigError):
        CocycleSpec.from_matrix(P, [[0, 1, 0], [-1, 0, 0]])


def test_exact_mode_reduces_large_phases():
    cs = CocycleSpec.rotation(P, Fraction(1, 3), exact=True)
    g, h = E(3 * 10 ** 9, 0), E(0, 1)
    assert cs(g, h) == pytest.approx(cmath.exp(1j * math.pi * ((10 ** 9) % 2)), abs=1e-14)


coords = st.builds(lambda a, k: Fraction(a, 2 ** k), st.integers(-40, 40), st.integers(0, 3))
elems = st.builds(lambda a, b: GroupElement.from_fractions(P, (a, b)), coords, coords)


@given(elems, elems, elems, st.sampled_from([Fraction(0), Fraction(3, 10), Fraction(7, 11)]))
def test_cocycle_identity(g, h, k, th):
    cs = CocycleSpec.rotation(P, th, exact=True)
    lhs = cs(g, h) * cs(g + h, k)
    rhs = cs(h, k) * cs(g, h + k)
    assert abs(lhs - rhs) < 1e-12


def test_convolution_examples():
    cs = CocycleSpec.rotation(P, 0.3)
    d1, d2 = FourierPolynomial.delta(cs, e1), FourierPolynomial.delta(cs, e2)
    prod = twisted_convolve(d1, d2)
    assert prod.support == [e1 + e2]
    assert prod(e1 + e2) == pytest.approx(cs(e1, e2))
    rng = np.random.default_rng(0)
    f = random_self_adjoint(cs, [e1, -e1, e2, zero], rng)
    f0 = twisted_convolve(f, FourierPolynomial.delta(cs, zero))
    assert all(f0(g) == pytest.approx(c) for g, c in f.items())
    rev = twisted_convolve(d2, d1)
    assert prod(e1 + e2) / rev(e1 + e2) == pytest.approx(cmath.exp(2j * math.pi * 0.3))


def test_adjoint_and_trace():
    cs = CocycleSpec.rotation(P, 0.7)
    d0 = FourierPolynomial.delta(cs, zero)
    assert adjoint(d0).items() == d0.items()
    g = E(Fraction(1, 2), 1)
    a = adjoint(FourierPolynomial.delta(cs, g, 2 + 3j))
    assert a.items() == [(-g, 2 - 3j)]
    assert trace(d0) == 1
    assert trace(FourierPolynomial.delta(cs, g)) == 0
    rng = np.random.default_rng(3)
    coeffs = {E(a, b): complex(*rng.standard_normal(2)) for a in (-1, 0, 2) for b in (0, Fraction(1, 2))}
    f = FourierPolynomial(cs, coeffs)
    assert trace(twisted_convolve(f, adjoint(f))) == pytest.approx(sum(abs(c) ** 2 for c in coeffs.values()))


def test_polynomial_algebra_and_json():
    cs = CocycleSpec.rotation(P, 0.25)
    f = FourierPolynomial(cs, {e1: 1 + 1j, -e1: 1 - 1j, zero: 0.0})
    assert len(f) == 2
    assert f.is_self_adjoint()
    assert not (f * 1j).is_self_adjoint()
    assert (f - f).support == []
    assert FourierPolynomial.from_json(f.to_json(), cs).items() == f.items()
    assert f.level == 0 and f.support_radius == pytest.approx(math.sqrt(2))


def test_lambda_identity_and_shift():
    T = TruncationSpec(P, 2, 1, 3)
    cs = CocycleSpec.rotation(P, 0.4)
    I = lambda_matrix(FourierPolynomial.delta(cs, zero), T)
    assert np.array_equal(I, np.eye(T.dim))
    g = E(Fraction(1, 2), 0)
    S = lambda_matrix(FourierPolynomial.delta(CocycleSpec.trivial(P, 2), g), T)
    assert set(np.unique(S)) <= {0, 1}
    els = T.ball.elements
    dE = T.dim_E
    for i, h in enumerate(els):
        for j, k in enumerate(els):
            assert S[i * dE, j * dE] == (1 if h - k == g else 0)


def brute_lambda(f, T):
    els = T.ball.elements
    N = len(els)
    M = np.zeros((N, N), dtype=complex)
    for i, h in enumerate(els):
        for j, k in enumerate(els):
            g = h - k
            c = f(g)
            if c:
                M[i, j] = c * f.cocycle(g, k)
    return np.kron(M, np.eye(T.dim_E))


@pytest.mark.parametrize("exact", [False, True])
def test_lambda_matches_definition(exact):
    cs = CocycleSpec.rotation(P, Fraction(3, 7) if exact else 0.37, exact=exact)
    T = TruncationSpec(P, 2, 1, 2.5)
    rng = np.random.default_rng(5)
    f = random_self_adjoint(cs, T.with_radius(2.1).ball.elements, rng)
    assert np.allclose(lambda_matrix(f, T), brute_lambda(f, T), atol=1e-13)
    assert np.allclose(lambda_matrix(f, T), lambda_matrix(f, T).conj().T, atol=1e-13)


def test_lambda_product_on_interior_block():
    cs = CocycleSpec.rotation(P, 0.3)
    T = TruncationSpec(P, 2, 1, 5)
    rng = np.random.default_rng(7)
    sup = T.with_radius(2.1).ball.elements
    f1 = random_self_adjoint(cs, sup, rng)
    f2 = random_self_adjoint(cs, sup, rng)
    prod = lambda_matrix(f1, T) @ lambda_matrix(f2, T)
    direct = lambda_matrix(twisted_convolve(f1, f2), T)
    # columns h'' whose f2-neighbourhood stays in the ball (subadditivity of length)
    reach = max(length(g) for g in f2.support)
    dE = T.dim_E
    cols = [i * dE + e for i, h in enumerate(T.ball.elements) if length(h) + reach <= T.radius
            for e in range(dE)]
    assert len(cols) > 0
    assert np.allclose(prod[:, cols], direct[:, cols], atol=1e-12)


def test_lambda_level_error():
    cs = CocycleSpec.trivial(P, 2)
    with pytest.raises(LevelError):
        lambda_matrix(FourierPolynomial.delta(cs, E(Fraction(1, 4), 0)), TruncationSpec(P, 2, 1, 3))


def test_csv_rows_sorted():
    cs = CocycleSpec.rotation(P, 0.3)
    T = TruncationSpec(P, 2, 0, 2)
    rows = matrix_to_csv_rows(lambda_matrix(FourierPolynomial.delta(cs, e1, 1j), T))
    assert rows == sorted(rows)
    assert all(abs(complex(re, im)) == pytest.approx(1) for _, _, re, im in rows)
