import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from volterra_imc.rational import RationalFunction, poly_from_roots, poly_roots

coef = st.floats(-10, 10, allow_nan=False).filter(lambda v: abs(v) > 1e-3)
polys = st.lists(coef, min_size=1, max_size=4)
points = st.complex_numbers(max_magnitude=20, allow_nan=False, allow_infinity=False)


def direct(num, den, s):
    return np.polyval(num[::-1], s) / np.polyval(den[::-1], s)


@settings(max_examples=60, deadline=None)
@given(polys, polys, polys, polys, points)
def test_arithmetic_matches_pointwise(n1, d1, n2, d2, s):
    a = RationalFunction(n1, d1, cancel_tol=0)
    b = RationalFunction(n2, d2, cancel_tol=0)
    va, vb = direct(n1, d1, s), direct(n2, d2, s)
    if not (np.isfinite(va) and np.isfinite(vb)) or abs(va) > 1e6 or abs(vb) > 1e6:
        return
    scale = max(1.0, abs(va), abs(vb)) ** 2
    assert abs((a * b)(s) - va * vb) <= 1e-8 * scale
    assert abs((a + b)(s) - (va + vb)) <= 1e-8 * scale
    assert abs((a - b)(s) - (va - vb)) <= 1e-8 * scale


def test_constructor_normalizes_and_cancels():
    # (s + 1)(s + 2) / (2 (s + 1)(s + 3))
    r = RationalFunction(poly_from_roots([-1, -2]), 2 * poly_from_roots([-1, -3]))
    np.testing.assert_allclose(r.den, [3.0, 1.0])
    np.testing.assert_allclose(r.num, [1.0, 0.5])


def test_inverse_and_degrees():
    r = RationalFunction.from_descending([1.0, 2.0], [1.0, 3.0, 5.0])
    assert r.relative_degree == 1 and r.is_proper()
    inv = r.inverse()
    assert inv.relative_degree == -1 and not inv.is_proper()
    assert inv(0.7) * r(0.7) == pytest.approx(1.0)


def test_divmod_reconstructs():
    r = RationalFunction.from_descending([2.0, 1.0, 4.0, -3.0], [1.0, 3.0])
    q, rem = r.divmod()
    assert rem.relative_degree >= 1
    for s in (0.3, -2.0 + 1j, 7.0):
        assert np.polyval(q[::-1], s) + rem(s) == pytest.approx(r(s))


@pytest.mark.parametrize("num,den", [([3.0], [1.0, 2.0]), ([1.0, 2.0], [1.0, 3.0, 2.0]),
                                     ([2.0, 0.5, 1.0], [1.0, 4.0, 5.0]), ([4.0], [1.0])])
def test_state_space_realization(num, den):
    r = RationalFunction.from_descending(num, den)
    A, B, C, D = r.to_state_space()
    for s in (0.5j, 1.0 + 2j, 3.0):
        if A.size:
            val = C @ np.linalg.solve(s * np.eye(A.shape[0]) - A, B) + D
        else:
            val = D
        assert val == pytest.approx(r(s), rel=1e-12)


def test_improper_has_no_realization():
    with pytest.raises(ValueError):
        RationalFunction.from_descending([1.0, 0.0, 1.0], [1.0, 1.0]).to_state_space()


def test_roots_round_trip():
    roots = np.array([-1.0, -2.5, 3.0 + 1j, 3.0 - 1j])
    found = np.sort_complex(poly_roots(poly_from_roots(roots)))
    np.testing.assert_allclose(found, np.sort_complex(roots), atol=1e-10)


def test_zero_denominator_rejected():
    with pytest.raises(ZeroDivisionError):
        RationalFunction([1.0], [0.0])
