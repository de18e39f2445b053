"""Desk-scale simulation: perturb the ansatz, watch the perturbation decay.

A compact curvature-shaped bump (no excess volume) rides on the corrected
ansatz; the solver marches it to t = 150 and the norm series of the
perturbation potential V are fitted against their predicted rates.  Smaller
domain and horizon than the full pipeline, so it finishes in seconds; the
fitted exponents land near the targets but keep a visible finite-time tilt.
"""

import numpy as np

from dampwave.analysis import (V_DERIVATIVE_FIELDS, compute_norms,
                               compute_weighted_norm, fit_decay_exponent)
from dampwave.correction import ExpansionProfile, solve_correction
from dampwave.diffusion_wave import solve_diffusion_wave
from dampwave.euler import Grid1D, InitialDataSpec, integrate, make_initial_data
from dampwave.pressure import FarField, PressureLaw


def main():
    law = PressureLaw(gamma=1.4)
    wave = solve_diffusion_wave(law, FarField(1.0, 1.1))
    expansion = ExpansionProfile(wave=wave, correction=solve_correction(wave))

    grid = Grid1D(-300.0, 300.0, 6000)
    ic = InitialDataSpec(eps=0.01)
    v, u = make_initial_data(expansion, grid, ic)
    times = np.unique(np.round(np.concatenate(
        [[0.0], np.geomspace(1.0, 150.0, 31)]), 9))
    print(f"integrating {grid.n_cells} cells to t = {times[-1]:g} "
          f"({len(times)} snapshots) ...")
    traj = integrate(law, grid, (1.0, 1.1), v, u, 0.0, times)

    c_max = float(law.sound_speed(1.0))
    safe = lambda t: ic.support_radius() + c_max * t
    norms = compute_norms(traj, expansion, safe_radius=safe)

    print("\n      t      L2 V        L2 Vx       L2 Vt       sup|v-v*|")
    for i in range(0, len(norms.t), 6):
        print(f"  {norms.t[i]:7.1f}  {norms['L2_V'][i]:.3e}  "
              f"{norms['L2_Vx'][i]:.3e}  {norms['L2_Vt'][i]:.3e}  "
              f"{norms['Linf_v_vstar'][i]:.3e}")

    window = (30.0, 150.0)
    print(f"\nfitted exponents on t in {list(window)} (target in parens):")
    for (l, k), label in sorted(V_DERIVATIVE_FIELDS.items()):
        fit = fit_decay_exponent(norms.t, norms[label], window)
        target = -(l + 0.5 * k + 0.75)
        print(f"  {label:7s}: {fit.exponent:+.3f}  ({target:+.2f}, "
              f"r^2 = {fit.r_squared:.4f})")
    for label, target in (("Linf_v_vstar", -1.5), ("Linf_v_vbar", -1.0),
                          ("Linf_u_ustar", -2.0)):
        fit = fit_decay_exponent(norms.t, norms[label], window)
        print(f"  {label:12s}: {fit.exponent:+.3f}  (target {target:+.1f})")

    w = compute_weighted_norm(norms, norms.t[-1])
    print(f"\nweighted functional sup_t sum (1+t)^(l+k/2+3/4) |d^l,k V|: "
          f"{w.value:.4e}")
    print("stays O(initial size): the expansion absorbs the secular growth")


if __name__ == "__main__":
    main()
