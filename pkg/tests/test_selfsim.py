"""The (coef, power, monomial, derivative) bookkeeping against finite differences.

The base function is the Gaussian f = exp(-xi^2/4), whose first three
derivatives are known in closed form, so the term algebra can be checked
against direct differencing of the evaluated expression.
"""

import numpy as np
import numpy.testing as npt
import pytest

from dampwave.selfsim import (ProfileFn, expr_derive, expr_dt, expr_dx,
                              expr_eval, term)


def gaussian_profile():
    xi = np.linspace(-12.0, 12.0, 4801)
    f = np.exp(-0.25 * xi**2)
    d1 = -0.5 * xi * f
    d2 = (0.25 * xi**2 - 0.5) * f
    d3 = (0.75 * xi - 0.125 * xi**3) * f
    return ProfileFn(xi, [f, d1, d2, d3], outside=(0.0, 0.0))


def fd5(g, z, h):
    # 4th-order central first difference
    return (8.0 * (g(z + h) - g(z - h)) - (g(z + 2 * h) - g(z - 2 * h))) / (12.0 * h)


def test_profilefn_nodes_and_outside():
    fn = gaussian_profile()
    npt.assert_allclose(fn(1.5), np.exp(-0.5625), rtol=1e-12)
    assert fn(20.0) == 0.0
    assert fn(-20.0) == 0.0
    assert fn(20.0, order=2) == 0.0
    with pytest.raises(ValueError):
        fn(0.0, order=4)


def test_expr_dx_matches_difference():
    bases = {"f": gaussian_profile()}
    expr = term("f", coef=2.0, p=1, m=2)
    d_expr = expr_dx(expr)
    for x, t in ((0.7, 0.0), (-2.3, 3.0), (4.1, 19.0)):
        direct = fd5(lambda z: expr_eval(expr, bases, z, t), x, 0.01)
        npt.assert_allclose(expr_eval(d_expr, bases, x, t), direct,
                            rtol=1e-7, atol=1e-10)


def test_expr_dt_matches_difference():
    bases = {"f": gaussian_profile()}
    expr = term("f", coef=-1.5, p=2, m=1, j=1)
    d_expr = expr_dt(expr)
    for x, t in ((0.7, 1.0), (-2.3, 3.0), (4.1, 19.0)):
        h = 0.01 * (1.0 + t)
        direct = fd5(lambda s: expr_eval(expr, bases, x, s), t, h)
        npt.assert_allclose(expr_eval(d_expr, bases, x, t), direct,
                            rtol=1e-6, atol=1e-10)


def test_mixed_partials_commute():
    expr = term("f", coef=0.7, p=1, m=2, j=1)
    a = expr_dx(expr_dt(expr))
    b = expr_dt(expr_dx(expr))
    assert set(a) == set(b)
    for key in a:
        npt.assert_allclose(a[key], b[key], rtol=1e-15)


def test_expr_derive_composes():
    bases = {"f": gaussian_profile()}
    expr = term("f")
    two_x = expr_derive(expr, dx_order=2)
    # d^2/dx^2 of f(x/sqrt(1+t)) = f''(xi)/(1+t)
    x, t = 1.3, 3.0
    xi = x / 2.0
    expected = (0.25 * xi**2 - 0.5) * np.exp(-0.25 * xi**2) / 4.0
    npt.assert_allclose(expr_eval(two_x, bases, x, t), expected, rtol=1e-9)


def test_expr_eval_broadcasts():
    bases = {"f": gaussian_profile()}
    expr = term("f", p=1)
    x = np.linspace(-3.0, 3.0, 7)
    out = expr_eval(expr, bases, x, 8.0)
    assert out.shape == x.shape
    npt.assert_allclose(out, np.exp(-x**2 / 36.0) / 3.0, rtol=1e-9)
