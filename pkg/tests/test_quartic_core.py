import math

import numpy as np
import pytest

from cuspidal_atlas.errors import DegeneratePolynomialError
from cuspidal_atlas.quartic_core import (Quartic, count_real_roots, derivative_values, real_roots,
                                         triple_root_refine)


def expand(roots, lead=1.0):
    return Quartic.from_coefficients(lead * np.poly(roots))


@pytest.mark.parametrize("coeffs, expected", [
    ((1, -1, -7, 13, -6), [(-3.0, 1), (1.0, 2), (2.0, 1)]),
    ((1, 0, 5, 0, 4), []),
    ((1, -5, 6, 4, -8), [(-1.0, 1), (2.0, 3)]),
    ((1, -8, 24, -32, 16), [(2.0, 4)]),
])
def test_real_roots_examples(coeffs, expected):
    roots = real_roots(Quartic.from_coefficients(coeffs))
    assert roots.multiplicities == [m for _, m in expected]
    np.testing.assert_allclose(roots.values, [v for v, _ in expected], atol=1e-8)
    assert roots.degree_at_infinity == 0


def test_all_zero_polynomial_is_degenerate():
    with pytest.raises(DegeneratePolynomialError, match="degenerate: all-zero coefficients"):
        real_roots(Quartic(0.0, 0.0, 0.0, 0.0, 0.0))


def test_vanishing_leading_coefficients_go_to_infinity():
    # (t - 1)(t - 2) with a = b = 0
    roots = real_roots(Quartic(0.0, 0.0, 1.0, -3.0, 2.0))
    np.testing.assert_allclose(roots.values, [1.0, 2.0], atol=1e-12)
    assert roots.degree_at_infinity == 2
    assert roots.distinct_count == 3
    assert roots.total_multiplicity == 4


def test_non_finite_coefficients_rejected():
    with pytest.raises(ValueError):
        Quartic(1.0, math.nan, 0.0, 0.0, 0.0)


@pytest.mark.parametrize("p, t, expected", [
    ((1, -5, 6, 4, -8), 2.0, (0.0, 0.0, 0.0, 18.0)),
    ((1, 0, 0, 0, 0), 1.0, (1.0, 4.0, 12.0, 24.0)),
])
def test_derivative_values_examples(p, t, expected):
    np.testing.assert_allclose(derivative_values(Quartic.from_coefficients(p), t), expected, atol=1e-12)


def test_double_root_is_not_triple():
    p0, p1, p2, _ = derivative_values(Quartic(1, -1, -7, 13, -6), 1.0)
    assert p0 == pytest.approx(0.0, abs=1e-12)
    assert p1 == pytest.approx(0.0, abs=1e-12)
    assert abs(p2) > 1.0


def test_derivative_values_match_finite_differences(rng):
    for _ in range(200):
        p = Quartic.from_coefficients(rng.uniform(-3, 3, 5))
        t = rng.uniform(-2, 2)
        h = 1e-5
        values = derivative_values(p, t)
        for k in range(3):
            fd = (derivative_values(p, t + h)[k] - derivative_values(p, t - h)[k]) / (2 * h)
            assert fd == pytest.approx(values[k + 1], rel=1e-6, abs=1e-6)


def _planted(rng, pattern):
    """Distinct root values at least 0.3 apart, repeated per the multiplicity pattern."""
    while True:
        values = np.sort(rng.uniform(-3, 3, len(pattern)))
        if len(values) < 2 or np.min(np.diff(values)) > 0.3:
            break
    roots = [v for v, m in zip(values, pattern) for _ in range(m)]
    return values, roots


@pytest.mark.parametrize("pattern", [(1, 1, 1, 1), (2, 1, 1), (2, 2), (3, 1), (4,), (1, 1)])
def test_planted_root_patterns(rng, pattern):
    for _ in range(300):
        values, roots = _planted(rng, pattern)
        if len(roots) == 4:
            p = expand(roots, lead=rng.uniform(0.5, 2.0))
        else:
            # two real roots plus a complex pair
            poly = np.polymul(np.poly(roots), [1.0, 0.0, rng.uniform(0.5, 2.0)])
            p = Quartic.from_coefficients(poly)
        result = real_roots(p)
        assert result.multiplicities == list(pattern)
        np.testing.assert_allclose(result.values, values, atol=1e-8)


@pytest.mark.slow
def test_planted_simple_roots_bulk(rng):
    for _ in range(10000):
        values, roots = _planted(rng, (1, 1, 1, 1))
        result = real_roots(expand(roots))
        assert result.multiplicities == [1, 1, 1, 1]
        np.testing.assert_allclose(result.values, values, atol=1e-8)


def test_real_root_count_parity(rng):
    for _ in range(500):
        p = Quartic.from_coefficients(rng.normal(size=5))
        assert real_roots(p).total_multiplicity % 2 == 0


def test_count_real_roots_batched_matches_scalar(rng):
    coeffs = rng.normal(size=(400, 5))
    coeffs[0] = [1, 0, 5, 0, 4]
    coeffs[1] = [0.0, 1.0, -6.0, 11.0, -6.0]
    counts = count_real_roots(coeffs)
    expected = [real_roots(Quartic.from_coefficients(c)).distinct_count for c in coeffs]
    assert list(counts) == expected
    assert counts[0] == 0
    assert counts[1] == 4


@pytest.mark.parametrize("seed", [(2.05, 1.97), (1.9, 2.1), (2.0, 2.0), (0.5, 0.52)])
def test_triple_root_refine_finds_constructed_triple(seed):
    def family(x):
        return expand([x[0], x[0], x[0], -1.0])

    result = triple_root_refine(family, seed)
    assert result is not None
    assert result.t == pytest.approx(result.params[0], abs=1e-8)
    assert result.params[0] == pytest.approx(seed[1], abs=0.1)
    assert max(result.residuals) < 1e-8
    assert result.theta == pytest.approx(2 * math.atan(result.t), abs=1e-9)


def test_triple_root_refine_rejects_double_root_slice():
    def family(x):
        return expand([1.0, 1.0, x[0], -3.0])

    assert triple_root_refine(family, (1.0, 2.0)) is None


def test_triple_root_refine_two_parameter_family():
    # (t + 2)(t³ + a·t + b) has a triple root only at a = b = 0, t = 0
    def family(x):
        return Quartic.from_coefficients(np.polymul([1.0, 2.0], [1.0, 0.0, x[0], x[1]]))

    result = triple_root_refine(family, (0.05, (0.02, -0.01)))
    assert result is not None
    np.testing.assert_allclose(result.params, [0.0, 0.0], atol=1e-8)
    assert result.t == pytest.approx(0.0, abs=1e-6)
    assert abs(result.p3) > 1.0
