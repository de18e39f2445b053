"""Norm series, decay-rate fits, and the weighted energy functional.

The object of interest is the perturbation potential

    V(x,t) = int_{-inf}^x (v - v*)(y,t) dy,      V_t = u - u*,

whose space derivatives come straight from the state (V_x = v - v*) and
whose mixed derivative is differenced from u - u*.  Decay rates are measured
by least squares of log(norm) against log(1+t) over a stated window, and the
weighted functional sums (1+t)**(l + k/2 + 3/4) ||d_t^l d_x^k V||_L2 over
l + k <= 2, l <= 1.
"""

import io
import warnings
from dataclasses import dataclass

import numpy as np

from .correction import eval_expansion, eval_source

__all__ = [
    "DecayFit",
    "NormSeries",
    "WeightedNorm",
    "compute_V",
    "compute_norms",
    "fit_decay_exponent",
    "compute_weighted_norm",
    "write_norms_csv",
]

# (l, k) -> column label of the L2 norm of d_t^l d_x^k V
V_DERIVATIVE_FIELDS = {(0, 0): "L2_V", (0, 1): "L2_Vx", (0, 2): "L2_Vxx",
                       (1, 0): "L2_Vt", (1, 1): "L2_Vtx"}


def _d4(f, h):
    """4th-order first derivative on a uniform grid, one-sided at the edges.

    Stencils combine neighbor differences so constant input differentiates
    to exact zero.
    """
    out = np.empty_like(f)
    out[2:-2] = (8.0 * (f[3:-1] - f[1:-3]) - (f[4:] - f[:-4])) / (12.0 * h)
    # (-25,48,-36,16,-3)/12h telescoped onto adjacent differences
    edge = np.array([25.0, -23.0, 13.0, -3.0]) / (12.0 * h)

    def one_sided(g):
        return edge @ np.diff(g)

    out[0] = one_sided(f[:5])
    out[1] = one_sided(f[1:6])
    out[-1] = -one_sided(f[:-6:-1])
    out[-2] = -one_sided(f[-2:-7:-1])
    return out


def compute_V(x, v, u, t, expansion):
    """Perturbation potential and its time derivative on the grid.

    V by cumulative trapezoid of v - v*(.,t) from the left boundary (where
    both sides sit in the far field, so the potential genuinely starts at
    zero); V_t = u - u* needs no differencing at all.
    """
    dv = v - eval_expansion(expansion, x, t, "v")
    du = u - eval_expansion(expansion, x, t, "u")
    h = x[1] - x[0]
    V = np.concatenate(([0.0], np.cumsum(0.5 * h * (dv[1:] + dv[:-1]))))
    return V, du


@dataclass
class NormSeries:
    """Per-snapshot norms; columns match the CSV layout."""

    t: np.ndarray
    data: dict  # label -> ndarray
    excluded: list  # snapshot times dropped as boundary-contaminated

    def __getitem__(self, label):
        return self.data[label]

    @property
    def labels(self):
        return list(self.data)


def compute_norms(traj, expansion, safe_radius=None):
    """Norm series over the trajectory snapshots.

    safe_radius(t) bounds the support of the perturbation (initial support
    plus the characteristic cone); snapshots whose cone has reached the
    boundary stencil are excluded with a warning.
    """
    x = traj.grid.x
    h = traj.grid.h
    labels = ["L2_V", "L2_Vx", "L2_Vxx", "L2_Vt", "L2_Vtx",
              "Linf_v_vbar", "Linf_v_vstar", "Linf_u_ubar", "Linf_u_ustar",
              "Linf_S", "mass_V"]
    cols = {lab: [] for lab in labels}
    kept_t, excluded = [], []
    wave_only = type(expansion)(wave=expansion.wave)
    x_edge = min(abs(traj.grid.x_min), abs(traj.grid.x_max)) - 3.0 * h
    for t, v, u in zip(traj.times, traj.vs, traj.us):
        if safe_radius is not None and safe_radius(t) > x_edge:
            excluded.append(t)
            warnings.warn(f"snapshot t={t} boundary-contaminated, excluded")
            continue
        V, Vt = compute_V(x, v, u, t, expansion)
        Vx = v - eval_expansion(expansion, x, t, "v")
        Vxx = _d4(Vx, h)
        Vtx = _d4(Vt, h)
        l2 = lambda f: float(np.sqrt(np.trapezoid(f * f, dx=h)))
        sup = lambda f: float(np.max(np.abs(f)))
        cols["L2_V"].append(l2(V))
        cols["L2_Vx"].append(l2(Vx))
        cols["L2_Vxx"].append(l2(Vxx))
        cols["L2_Vt"].append(l2(Vt))
        cols["L2_Vtx"].append(l2(Vtx))
        cols["Linf_v_vbar"].append(sup(v - eval_expansion(wave_only, x, t, "v")))
        cols["Linf_v_vstar"].append(sup(Vx))
        cols["Linf_u_ubar"].append(sup(u - eval_expansion(wave_only, x, t, "u")))
        cols["Linf_u_ustar"].append(sup(Vt))
        cols["Linf_S"].append(sup(eval_source(expansion, x, t)))
        cols["mass_V"].append(float(V[-1]))
        kept_t.append(t)
    return NormSeries(t=np.array(kept_t),
                      data={lab: np.array(vals) for lab, vals in cols.items()},
                      excluded=excluded)


@dataclass
class DecayFit:
    exponent: float
    prefactor: float
    r_squared: float
    window: tuple
    n_samples: int


def fit_decay_exponent(t, values, window):
    """Least-squares power law values ~ prefactor * (1+t)**exponent on the window."""
    t = np.asarray(t, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = (t >= window[0]) & (t <= window[1])
    if np.any(values[mask] <= 0.0):
        raise ValueError("nonpositive values in fit window")
    if mask.sum() < 10:
        raise ValueError(f"need >= 10 samples in window, have {int(mask.sum())}")
    z = np.log(1.0 + t[mask])
    y = np.log(values[mask])
    A = np.vstack([z, np.ones_like(z)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    pred = A @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
    return DecayFit(exponent=float(coef[0]), prefactor=float(np.exp(coef[1])),
                    r_squared=r2, window=(float(window[0]), float(window[1])),
                    n_samples=int(mask.sum()))


@dataclass
class WeightedNorm:
    T: float
    value: float
    terms: dict  # label -> weighted sup contribution at the arg-max time


def compute_weighted_norm(norms, T):
    """sup over t <= T of sum_(l+k<=2, l<=1) (1+t)**(l+k/2+3/4) ||d_t^l d_x^k V||_L2."""
    mask = norms.t <= T + 1e-12
    if not np.any(mask):
        raise ValueError("no snapshots at or before T")
    t = norms.t[mask]
    total = np.zeros_like(t)
    for (l, k), lab in V_DERIVATIVE_FIELDS.items():
        total += (1.0 + t) ** (l + 0.5 * k + 0.75) * norms[lab][mask]
    i = int(np.argmax(total))
    terms = {lab: float((1.0 + t[i]) ** (l + 0.5 * k + 0.75) * norms[lab][mask][i])
             for (l, k), lab in V_DERIVATIVE_FIELDS.items()}
    return WeightedNorm(T=float(T), value=float(total[i]), terms=terms)


def write_norms_csv(norms, path):
    cols = ["L2_V", "L2_Vx", "L2_Vt", "Linf_v_vbar", "Linf_v_vstar",
            "Linf_u_ubar", "Linf_u_ustar", "Linf_S", "L2_Vxx", "L2_Vtx", "mass_V"]
    buf = io.StringIO()
    buf.write("t," + ",".join(cols) + "\n")
    for i, t in enumerate(norms.t):
        buf.write("%.17g" % t)
        for lab in cols:
            buf.write(",%.17g" % norms[lab][i])
        buf.write("\n")
    with open(path, "w") as fh:
        fh.write(buf.getvalue())
