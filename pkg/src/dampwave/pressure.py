"""Gamma-law pressure and far-field states for the damped p-system.

The model is the 1-d isentropic Euler system in Lagrangian coordinates with
linear momentum damping,

    v_t - u_x = 0,
    u_t + P(v)_x = -u,

with P(v) = v**(-gamma).  Everything downstream (diffusion-wave profiles,
first-order correction, kernels) only touches the pressure through P and its
first three derivatives, so those are the whole interface.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["PressureLaw", "FarField"]


@dataclass(frozen=True)
class PressureLaw:
    """P(v) = v**(-gamma) on v > 0, with derivatives up to third order."""

    gamma: float = 1.4

    def __post_init__(self):
        if not (self.gamma >= 1.0):
            raise ValueError(f"gamma must be >= 1, got {self.gamma}")

    def __call__(self, v, order=0):
        """Evaluate P**(order) at v (scalar or array).

        Parameters
        ----------
        v : array_like
            Specific volume, must be strictly positive.
        order : int
            Derivative order, 0..3.

        Returns
        -------
        ndarray or float
            (-1)**order * gamma*(gamma+1)*...*(gamma+order-1) * v**(-gamma-order).
        """
        v = np.asarray(v, dtype=float)
        if np.any(v <= 0.0):
            raise ValueError("pressure law needs v > 0")
        if order not in (0, 1, 2, 3):
            raise ValueError(f"unsupported derivative order {order}")
        g = self.gamma
        coef = 1.0
        for k in range(order):
            coef *= -(g + k)
        out = coef * v ** (-g - order)
        return out if out.ndim else float(out)

    def sound_speed(self, v):
        """Lagrangian sound speed sqrt(-P'(v)); -P' > 0 makes the system hyperbolic."""
        return np.sqrt(-self(v, order=1))


@dataclass(frozen=True)
class FarField:
    """End states (v_minus, v_plus) at x = -inf / +inf; u vanishes on both sides."""

    v_minus: float
    v_plus: float

    def __post_init__(self):
        if not (self.v_minus > 0.0 and self.v_plus > 0.0):
            raise ValueError("far-field volumes must be positive")

    @property
    def delta(self):
        """Wave strength |v_plus - v_minus|."""
        return abs(self.v_plus - self.v_minus)

    @property
    def v_mid(self):
        return 0.5 * (self.v_minus + self.v_plus)

    def bracket(self):
        """(v_lo, v_hi) hull of the two end states."""
        return min(self.v_minus, self.v_plus), max(self.v_minus, self.v_plus)
