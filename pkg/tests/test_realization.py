import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volterra_imc.carleman import simulate_bilinear
from volterra_imc.errors import NotSeparableError
from volterra_imc.rational import RationalFunction, poly_from_roots
from volterra_imc.realization import (
    BivariatePolynomial,
    build_cascade,
    expand_kernel,
    factor_separable,
    factorization_report,
    partial_fractions,
    simulate_volterra,
)
from volterra_imc.trace import step
from volterra_imc.volterra_freq import dc_gain

# worked example: numerator and denominator polynomials in (s1, s2)
P2 = BivariatePolynomial({(2, 1): 1, (2, 0): 4, (1, 1): 12, (1, 2): 1, (0, 2): 2, (1, 0): 12, (0, 0): 48})
Q2 = BivariatePolynomial({(2, 1): 1, (2, 0): 4, (1, 1): 12, (1, 2): 1, (0, 2): 2, (1, 0): 32, (0, 1): 20, (0, 0): 48})


def test_worked_example_slices():
    np.testing.assert_allclose(Q2.slice_s1_zero(), [48, 20, 2])
    np.testing.assert_allclose(Q2.slice_s2_zero(), [48, 32, 4])
    np.testing.assert_allclose(Q2.slice_antidiagonal(), [48, 12, -6])


def test_worked_example_factorization():
    fact = factor_separable(Q2)
    roots = fact.roots()
    np.testing.assert_allclose(roots["Fa"], [-2.0], atol=1e-8)
    np.testing.assert_allclose(roots["Fb"], [-4.0], atol=1e-8)
    np.testing.assert_allclose(roots["Fc"], [-6.0], atol=1e-8)
    assert fact.scale == pytest.approx(1.0, abs=1e-12)


def test_worked_example_expansion():
    exp = expand_kernel(P2, Q2)
    assert exp.constant == pytest.approx(1.0, abs=1e-9)
    r = exp.sum_coefficients()
    np.testing.assert_allclose(r, [0.0, -20.0], atol=1e-9)
    for s1, s2 in ((0.3, 0.7), (1j, -2.0), (5.0, 1.0 + 1j)):
        assert exp(s1, s2) == pytest.approx(P2(s1, s2) / Q2(s1, s2), rel=1e-12)


def test_report_lists_factors():
    text = factorization_report(factor_separable(Q2))
    assert "Fc(s1+s2)" in text and "power 1" in text


def test_not_separable():
    with pytest.raises(NotSeparableError):
        factor_separable(BivariatePolynomial({(1, 1): 1.0, (0, 0): 1.0, (2, 0): 1.0, (0, 2): 3.0}))
    with pytest.raises(NotSeparableError):
        factor_separable(BivariatePolynomial({}))


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(1, 6), min_size=1, max_size=2, unique=True),
    st.lists(st.integers(7, 12), min_size=1, max_size=2, unique=True),
    st.lists(st.integers(13, 18), min_size=1, max_size=2, unique=True),
    st.floats(0.2, 5.0),
    st.floats(-0.4, 0.4),
)
def test_separable_round_trip(ra, rb, rc, scale, jitter):
    ra, rb, rc = (np.array(r, float) + jitter for r in (ra, rb, rc))
    Q = BivariatePolynomial.from_factors(poly_from_roots(-ra), poly_from_roots(-rb), poly_from_roots(-rc), scale)
    fact = factor_separable(Q)
    for key, expected in (("Fa", ra), ("Fb", rb), ("Fc", rc)):
        np.testing.assert_allclose(np.sort(fact.roots()[key].real), np.sort(-expected), atol=1e-6)
    assert fact.scale == pytest.approx(scale, rel=1e-8)


def _check_reconstruction(r, rng, n=50, tol=1e-9):
    pf = partial_fractions(r)
    pts = rng.normal(size=n) * 5 + 1j * rng.normal(size=n) * 5
    ref = r(pts)
    np.testing.assert_allclose(pf(pts), ref, rtol=tol, atol=0)
    return pf


@pytest.mark.parametrize("num,poles", [
    ([1.0], [-1.0, -2.0, -3.0]),
    ([2.0, 1.0], [-1.0, -1.0, -4.0]),
    ([1.0, 0.0, 1.0], [-2.0, -2.0, -2.0]),
    ([1.0, 3.0, 0.5, 2.0], [-1.0 + 2j, -1.0 - 2j, -3.0]),
    ([1.0, 2.0, 3.0], [-0.5, -6.0]),
])
def test_partial_fraction_reconstruction(rng, num, poles):
    r = RationalFunction(num, np.real(poly_from_roots(poles)), cancel_tol=0)
    _check_reconstruction(r, rng)


def test_partial_fraction_repeated_pole_structure(rng):
    # 1 / (s + 1)^2 has a single term of power 2
    pf = _check_reconstruction(RationalFunction([1.0], [1.0, 2.0, 1.0]), rng)
    assert [(round(p.real, 6), round(abs(r), 6), k) for p, r, k in pf.terms if abs(r) > 1e-9] == [(-1.0, 1.0, 2)]


def test_partial_fractions_random(rng):
    for _ in range(20):
        poles = -rng.uniform(0.5, 10, size=rng.integers(1, 5))
        num = rng.normal(size=rng.integers(1, poles.size + 1))
        _check_reconstruction(RationalFunction(num, poly_from_roots(poles), cancel_tol=0), rng)


def _wave(t):
    return np.sin(37 * t) + 0.5 * np.cos(91 * t) + (1.0 if t > 0.01 else 0.0)


@pytest.mark.parametrize("alpha", [0.5, 2.0, -1.0])
def test_cascade_homogeneity(vdv_bilinear, alpha):
    casc = build_cascade(vdv_bilinear, 3)
    ref = simulate_volterra(casc, _wave, 0.05, 1e-4)
    scaled = simulate_volterra(casc, lambda t: alpha * _wave(t), 0.05, 1e-4)
    for k in (1, 2, 3):
        np.testing.assert_allclose(scaled[f"y{k}"], alpha**k * ref[f"y{k}"], rtol=1e-12, atol=0)


def test_cascade_dc_gains(vdv_bilinear):
    tr = simulate_volterra(build_cascade(vdv_bilinear, 3), step(1.0), 0.5, 1e-4)
    for k in (1, 2, 3):
        g = dc_gain(vdv_bilinear, k)
        assert abs(tr[f"y{k}"][-1] - g) <= 1e-4 * abs(g)


def test_cascade_converges_to_bilinear_for_small_inputs(vdv_bilinear):
    a = 0.5
    bil = simulate_bilinear(vdv_bilinear, step(a), 0.05, 1e-4)["y"]
    errs = []
    for K in (1, 2, 3):
        y = simulate_volterra(build_cascade(vdv_bilinear, K), step(a), 0.05, 1e-4)["y"]
        errs.append(np.max(np.abs(y - bil)))
    assert errs[0] > errs[1] > errs[2]


def test_restricted_output(vdv_bilinear):
    casc = build_cascade(vdv_bilinear, 3).restricted((2, 3))
    tr = simulate_volterra(casc, step(5.0), 0.02, 1e-4)
    np.testing.assert_allclose(tr["y"], tr["y2"] + tr["y3"])
