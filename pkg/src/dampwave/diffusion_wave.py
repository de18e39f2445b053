"""Self-similar diffusion-wave profiles of the damped p-system.

Time-asymptotically the damped system relaxes to Darcy flow, where v solves
the nonlinear diffusion equation v_t = -P(v)_xx.  Its self-similar front
vbar(xi), xi = x/sqrt(1+t), connects the far-field volumes and satisfies

    (1/2) xi vbar' - (P(vbar))'' = 0,    vbar(-inf) = v-,  vbar(+inf) = v+,

and the matching velocity is ubar = -(1+t)**(-1/2) (P(vbar))'.  This module
solves the profile equation by damped-Newton collocation on a truncated
symmetric grid with continuation in the wave strength, carries analytic
derivative data up to third order, and certifies the Gaussian tails.

Truncation note: any decaying solution of the profile equation satisfies the
equal-area centering int(vbar - step at 0) dxi = 0, so vbar(0) equals the
arithmetic midpoint only up to O(delta^2); the midpoint is a convenient label
for the centering, not an extra constraint (the Dirichlet problem is already
well posed, and imposing the midpoint exactly would break the residual).
"""

import io
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import cumulative_simpson
from scipy.linalg import solve_banded
from scipy.special import erf

from .pressure import FarField, PressureLaw
from .selfsim import ProfileFn, expr_derive, expr_eval, term

__all__ = [
    "DiffusionWaveProfile",
    "SolverFailure",
    "TailFit",
    "solve_diffusion_wave",
    "eval_vbar",
    "eval_ubar",
    "certify_tails",
    "write_profile_csv",
]


class SolverFailure(RuntimeError):
    """Newton iteration failed to reach the requested residual."""


@dataclass
class TailFit:
    """Gaussian tail model |vbar - v_inf| ~ C * exp(-c * xi^2) on one side."""

    side: str
    c_tail: float
    log_prefactor: float
    r_squared: float
    xi_window: tuple

    @property
    def prefactor(self):
        return float(np.exp(self.log_prefactor))


@dataclass
class DiffusionWaveProfile:
    """Solved wave profile with derivative data on a uniform xi-grid.

    Stores vbar and the flux derivative w = (P(vbar))' at the nodes together
    with their first three xi-derivatives, all obtained from the profile
    equation itself rather than from numerical differencing, plus cubic-spline
    interpolants for off-node evaluation.  Outside the grid the profile is the
    far-field constant and all derivatives vanish.
    """

    law: PressureLaw
    far_field: FarField
    L_xi: float
    spacing: float
    tol: float
    xi: np.ndarray
    vbar: np.ndarray
    w: np.ndarray
    residual_max: float
    newton_iters: int
    derivs_v: list = field(repr=False, default=None)
    derivs_w: list = field(repr=False, default=None)
    fn_v: ProfileFn = field(repr=False, default=None)
    fn_w: ProfileFn = field(repr=False, default=None)
    tails: dict = None

    def __post_init__(self):
        if self.derivs_v is None:
            self._build_derivative_data()
        if self.tails is None:
            # a flat profile (zero jump) has no tails to certify
            if self.far_field.delta > 0.0:
                self.tails = {f.side: f for f in certify_tails(self)}
            else:
                self.tails = {}

    def _build_derivative_data(self):
        # All higher derivatives follow from the first-order form of the
        # profile equation: vbar' = w/P', w' = xi*vbar'/2.
        law, xi, v, w = self.law, self.xi, self.vbar, self.w
        p1 = law(v, 1)
        p2 = law(v, 2)
        p3 = law(v, 3)
        v1 = w / p1
        v2 = (0.5 * xi * v1 - p2 * v1**2) / p1
        v3 = (0.5 * v1 + 0.5 * xi * v2 - p3 * v1**3 - 3.0 * p2 * v1 * v2) / p1
        w1 = 0.5 * xi * v1
        w2 = 0.5 * v1 + 0.5 * xi * v2
        w3 = v2 + 0.5 * xi * v3
        self.derivs_v = [v, v1, v2, v3]
        self.derivs_w = [w, w1, w2, w3]
        ff = self.far_field
        self.fn_v = ProfileFn(xi, self.derivs_v, outside=(ff.v_minus, ff.v_plus))
        self.fn_w = ProfileFn(xi, self.derivs_w, outside=(0.0, 0.0))

    # -- xi-space evaluation -------------------------------------------------

    def eval(self, xi, order=0):
        """vbar and xi-derivatives at arbitrary xi (far-field beyond the grid)."""
        return self.fn_v(xi, order)

    def eval_w(self, xi, order=0):
        """(P(vbar))' and xi-derivatives at arbitrary xi."""
        return self.fn_w(xi, order)

    @property
    def delta(self):
        return self.far_field.delta

    def bases(self):
        return {"vb": self.fn_v, "w": self.fn_w}


def _difference_ops(n, h):
    """Jacobian sparsity data: 4th-order interior rows, 2nd next to the edge.

    Returns (rows, cols, c1, c2) in COO-style lists where c1/c2 are the
    first/second derivative weights for each (row, col) entry; the residual
    itself is assembled separately in difference form.
    """
    rows, cols, c1, c2 = [], [], [], []
    for i in range(1, n - 1):
        if 2 <= i <= n - 3:
            off = (-2, -1, 1, 2, 0)
            w1 = (1 / 12, -8 / 12, 8 / 12, -1 / 12, 0.0)
            w2 = (-1 / 12, 16 / 12, 16 / 12, -1 / 12, -30 / 12)
        else:
            off = (-1, 1, 0)
            w1 = (-0.5, 0.5, 0.0)
            w2 = (1.0, 1.0, -2.0)
        for o, a, b in zip(off, w1, w2):
            rows.append(i)
            cols.append(i + o)
            c1.append(a / h)
            c2.append(b / h**2)
    return (np.array(rows), np.array(cols), np.array(c1), np.array(c2))


def _assemble_residual(xi, v, law, vm, vp):
    # stencils combine adjacent differences, so a constant state (which
    # solves the equation) produces an exactly zero residual
    n = v.size
    h = (xi[-1] - xi[0]) / (n - 1)
    P = law(v, 0)
    F = np.empty(n)
    d1 = (8.0 * (v[3:n - 1] - v[1:n - 3]) - (v[4:n] - v[:n - 4])) / (12.0 * h)
    Pc = P[2:n - 2]
    d2 = (16.0 * ((P[3:n - 1] - Pc) + (P[1:n - 3] - Pc))
          - ((P[4:n] - Pc) + (P[:n - 4] - Pc))) / (12.0 * h * h)
    F[2:-2] = 0.5 * xi[2:-2] * d1 - d2
    for i in (1, n - 2):
        d1 = (v[i + 1] - v[i - 1]) / (2.0 * h)
        d2 = ((P[i + 1] - P[i]) + (P[i - 1] - P[i])) / (h * h)
        F[i] = 0.5 * xi[i] * d1 - d2
    F[0] = v[0] - vm
    F[-1] = v[-1] - vp
    return F


def _assemble_jacobian(xi, v, law, ops):
    rows, cols, c1, c2 = ops
    n = v.size
    dP = law(v, 1)
    # banded storage for solve_banded with (l, u) = (2, 2): ab[u + i - j, j]
    ab = np.zeros((5, n))
    entries = 0.5 * xi[rows] * c1 - c2 * dP[cols]
    np.add.at(ab, (2 + rows - cols, cols), entries)
    ab[2, 0] = 1.0
    ab[2, -1] = 1.0
    # clear spurious couplings from the boundary rows
    ab[1, 1] = ab[0, 2] = 0.0
    ab[3, -2] = ab[4, -3] = 0.0
    return ab


def _newton(xi, v0, law, vm, vp, ops, tol, max_iter=40):
    v = v0.copy()
    F = _assemble_residual(xi, v, law, vm, vp)
    norm = np.max(np.abs(F))
    for it in range(max_iter):
        if norm <= tol:
            return v, norm, it
        ab = _assemble_jacobian(xi, v, law, ops)
        dv = solve_banded((2, 2), ab, -F)
        lam = 1.0
        while True:
            v_new = v + lam * dv
            if np.all(v_new > 0.0):
                F_new = _assemble_residual(xi, v_new, law, vm, vp)
                norm_new = np.max(np.abs(F_new))
                if norm_new < (1.0 - 1e-4 * lam) * norm or norm_new <= tol:
                    break
            lam *= 0.5
            if lam < 1e-8:
                raise SolverFailure(
                    f"line search stalled at Newton iter {it}, residual {norm:.3e}")
        v, F, norm = v_new, F_new, norm_new
    if norm <= tol:
        return v, norm, max_iter
    raise SolverFailure(f"no convergence after {max_iter} iters, residual {norm:.3e}")


def solve_diffusion_wave(law, far_field, L_xi=12.0, spacing=0.0078125, tol=1e-10):
    """Solve the profile two-point problem on [-L_xi, L_xi].

    Damped Newton on a collocation discretization (4th-order central interior
    stencils), with continuation in the wave strength from the constant state.
    The flux derivative w = (P(vbar))' is recovered from the once-integrated
    profile equation, w(xi) = (xi (vbar - v-) - int_{-L}^{xi} (vbar - v-)) / 2,
    which is exact up to the Gaussian-small truncation flux at -L.

    Parameters
    ----------
    law : PressureLaw
    far_field : FarField
    L_xi : float
        Half-width of the xi-grid; tails must have decayed below tol there.
    spacing : float
        Grid spacing, must be <= 0.01.
    tol : float
        Target for the collocation residual (max norm over interior nodes).

    Returns
    -------
    DiffusionWaveProfile
    """
    if spacing > 0.01:
        raise ValueError(f"grid spacing {spacing} too coarse, need <= 0.01")
    if L_xi < 6.0:
        raise ValueError("L_xi < 6 cannot hold the Gaussian tails")
    n = int(round(2.0 * L_xi / spacing)) + 1
    xi = np.linspace(-L_xi, L_xi, n)
    h = xi[1] - xi[0]
    ops = _difference_ops(n, h)
    vm, vp = far_field.v_minus, far_field.v_plus
    delta = far_field.delta

    # continuation in the jump, erf seed at the first step
    n_cont = max(1, int(np.ceil(delta / 0.15)))
    D0 = -law(far_field.v_mid, 1)
    ramp = 0.5 * (1.0 + erf(xi / (2.0 * np.sqrt(D0))))
    v = None
    iters = 0
    for k in range(1, n_cont + 1):
        vp_k = vm + (k / n_cont) * (vp - vm)
        if v is None:
            v = vm + (vp_k - vm) * ramp
        else:
            v = vm + (v - vm) * ((vp_k - vm) / (vp_prev - vm))
        v, norm, it = _newton(xi, v, law, vm, vp_k, ops, tol)
        vp_prev = vp_k
        iters += it

    # flux derivative from the first integral; truncation flux at -L is
    # Gaussian-small and dropped
    integral = cumulative_simpson(v - vm, dx=h, initial=0.0)
    w = 0.5 * (xi * (v - vm) - integral)

    return DiffusionWaveProfile(
        law=law, far_field=far_field, L_xi=float(L_xi), spacing=float(h),
        tol=float(tol), xi=xi, vbar=v, w=w, residual_max=float(norm),
        newton_iters=iters)


def discrete_residual(profile):
    """Collocation residual of the profile equation at the interior nodes."""
    F = _assemble_residual(profile.xi, profile.vbar, profile.law,
                           profile.far_field.v_minus, profile.far_field.v_plus)
    return F[1:-1]


# -- physical-space evaluation ----------------------------------------------

_VBAR_EXPR = term("vb")
_UBAR_EXPR = term("w", coef=-1.0, p=1)


def eval_vbar(profile, x, t, dx_order=0, dt_order=0):
    """d^k/dx^k d^l/dt^l of vbar(x/sqrt(1+t)); orders limited by stored data.

    Each t-derivative consumes one xi-derivative through the chain rule, so
    dx_order + dt_order <= 3 is supported.
    """
    if dx_order + dt_order > 3 or dx_order < 0 or dt_order < 0:
        raise ValueError("derivative order beyond stored data")
    expr = expr_derive(_VBAR_EXPR, dx_order, dt_order)
    return expr_eval(expr, profile.bases(), x, t)


def eval_ubar(profile, x, t, dx_order=0, dt_order=0):
    """Darcy velocity ubar = -(1+t)**(-1/2) (P(vbar))' and its derivatives."""
    if dx_order + dt_order > 3 or dx_order < 0 or dt_order < 0:
        raise ValueError("derivative order beyond stored data")
    expr = expr_derive(_UBAR_EXPR, dx_order, dt_order)
    return expr_eval(expr, profile.bases(), x, t)


def certify_tails(profile, xi_from=2.0, floor=1e-11):
    """Fit log|vbar - v_inf| against -c*xi^2 on each side.

    Returns a list of TailFit; c_tail must come out positive for a genuine
    Gaussian tail, and r^2 close to one certifies the decay model.  The
    magnitude floor sits above the collocation noise (residuals land around
    1e-11), so the fit window self-truncates where the data is still clean.
    """
    fits = []
    for side, v_inf, sign in (("plus", profile.far_field.v_plus, 1.0),
                              ("minus", profile.far_field.v_minus, -1.0)):
        xi = sign * profile.xi
        diff = np.abs(profile.vbar - v_inf)
        mask = (xi >= xi_from) & (xi <= profile.L_xi - 1.0) & (diff > floor)
        if mask.sum() < 10:
            raise SolverFailure(f"too few tail samples on side {side}")
        q = xi[mask] ** 2
        y = np.log(diff[mask])
        A = np.vstack([np.ones_like(q), -q]).T
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        pred = A @ coef
        ss_res = np.sum((y - pred) ** 2)
        ss_tot = np.sum((y - np.mean(y)) ** 2)
        r2 = 1.0 - ss_res / ss_tot
        fits.append(TailFit(side=side, c_tail=float(coef[1]),
                            log_prefactor=float(coef[0]), r_squared=float(r2),
                            xi_window=(float(np.min(xi[mask])), float(np.max(xi[mask])))))
    return fits


def write_profile_csv(profile, path):
    """Profile table: xi, vbar, dvbar, d2vbar, d3vbar with a parameter header."""
    ff, tails = profile.far_field, profile.tails
    buf = io.StringIO()
    buf.write("# gamma=%.17g v_minus=%.17g v_plus=%.17g L_xi=%.17g tol=%.17g"
              % (profile.law.gamma, ff.v_minus, ff.v_plus, profile.L_xi, profile.tol))
    c_minus = tails["minus"].c_tail if "minus" in tails else 0.0
    c_plus = tails["plus"].c_tail if "plus" in tails else 0.0
    buf.write(" c_tail_minus=%.17g c_tail_plus=%.17g\n" % (c_minus, c_plus))
    buf.write("xi,vbar,dvbar,d2vbar,d3vbar\n")
    cols = [profile.xi] + profile.derivs_v
    for row in zip(*cols):
        buf.write(",".join("%.17g" % val for val in row) + "\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())
