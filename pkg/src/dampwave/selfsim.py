"""Derivative calculus for self-similar fields.

Every asymptotic field in this package is a finite sum of terms

    c * (1+t)**(-p/2) * xi**m * f_j(xi),      xi = x / sqrt(1+t),

where f_j is the j-th derivative of some profile function (the wave profile,
its flux, or the correction potential).  The term set is closed under d/dx and
d/dt, so arbitrary mixed derivatives reduce to bookkeeping:

    d/dx : (c, p, m, j) -> (c*m, p+1, m-1, j) + (c, p+1, m, j+1)
    d/dt : (c, p, m, j) -> (-c*(p+m)/2, p+2, m, j) + (-c/2, p+2, m+1, j+1)

with p counted in half powers of (1+t).  Expressions are dicts keyed by
(base_name, p, m, j); profile functions carry their own spline data and
far-field constants.
"""

import numpy as np
from scipy.interpolate import CubicSpline

__all__ = ["ProfileFn", "term", "expr_dx", "expr_dt", "expr_derive", "expr_eval"]


class ProfileFn:
    """A profile f(xi) with stored derivatives, spline inside the grid.

    Outside [xi[0], xi[-1]] the function takes its far-field constants
    (order 0) and zero (all higher orders); the stored profiles reach their
    limits to far better than spline accuracy there, so clamping is exact
    for practical purposes.
    """

    def __init__(self, xi, values_by_order, outside=(0.0, 0.0)):
        self.xi_min = float(xi[0])
        self.xi_max = float(xi[-1])
        self.max_order = len(values_by_order) - 1
        self.outside = outside
        self._splines = [CubicSpline(xi, vals) for vals in values_by_order]

    def __call__(self, xi, order=0):
        if order > self.max_order:
            raise ValueError(
                f"derivative order {order} beyond stored data (max {self.max_order})")
        xi = np.asarray(xi, dtype=float)
        clipped = np.clip(xi, self.xi_min, self.xi_max)
        out = self._splines[order](clipped)
        if order == 0:
            left, right = self.outside
        else:
            left = right = 0.0
        out = np.where(xi < self.xi_min, left, out)
        out = np.where(xi > self.xi_max, right, out)
        return out if out.ndim else float(out)


def term(base, coef=1.0, p=0, m=0, j=0):
    """Single-term expression c * (1+t)**(-p/2) * xi**m * base^(j)."""
    return {(base, p, m, j): coef}


def _accum(expr, key, coef):
    expr[key] = expr.get(key, 0.0) + coef


def expr_dx(expr):
    out = {}
    for (base, p, m, j), c in expr.items():
        if m != 0:
            _accum(out, (base, p + 1, m - 1, j), c * m)
        _accum(out, (base, p + 1, m, j + 1), c)
    return out


def expr_dt(expr):
    out = {}
    for (base, p, m, j), c in expr.items():
        if p + m != 0:
            _accum(out, (base, p + 2, m, j), -0.5 * c * (p + m))
        _accum(out, (base, p + 2, m + 1, j + 1), -0.5 * c)
    return out


def expr_derive(expr, dx_order=0, dt_order=0):
    for _ in range(dt_order):
        expr = expr_dt(expr)
    for _ in range(dx_order):
        expr = expr_dx(expr)
    return expr


def expr_add(*exprs):
    out = {}
    for e in exprs:
        for k, c in e.items():
            _accum(out, k, c)
    return out


def expr_max_order(expr, base=None):
    orders = [j for (b, _, _, j) in expr if base is None or b == base]
    return max(orders) if orders else 0


def expr_eval(expr, bases, x, t):
    """Evaluate an expression at (x, t); x and t broadcast together."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    s = 1.0 + t
    xi = x / np.sqrt(s)
    out = np.zeros(np.broadcast(x, t).shape)
    cache = {}
    for (base, p, m, j), c in sorted(expr.items()):
        key = (base, j)
        if key not in cache:
            cache[key] = bases[base](xi, j)
        piece = c * cache[key]
        if m:
            piece = piece * xi**m
        if p:
            piece = piece * s ** (-0.5 * p)
        out = out + piece
    return out if out.ndim else float(out)
