import numpy as np
import numpy.testing as npt
import pytest

from dampwave.diffusion_wave import (discrete_residual, eval_ubar, eval_vbar,
                                     solve_diffusion_wave, write_profile_csv)
from dampwave.pressure import FarField

from _oracles import VBAR0


def test_matches_independent_collocation_oracle(wave):
    # frozen value from scipy's adaptive two-point solver (see _oracles.py)
    n_mid = int(np.argmin(np.abs(wave.xi)))
    assert abs(wave.vbar[n_mid] - VBAR0) < 1e-9


def test_residual_boundaries_monotone(wave):
    assert np.max(np.abs(discrete_residual(wave))) <= 1e-10
    assert wave.vbar[0] == wave.far_field.v_minus
    assert wave.vbar[-1] == wave.far_field.v_plus
    dv = np.diff(wave.vbar)
    assert np.all(dv >= -1e-14)
    core = np.abs(wave.xi[:-1]) <= 4.0
    assert np.all(dv[core] > 0.0)


def test_midpoint_offset_is_second_order_in_strength(law, wave):
    # the equal-area centering pins vbar(0) to midpoint + O(delta^2)
    n_mid = int(np.argmin(np.abs(wave.xi)))
    off = wave.vbar[n_mid] - wave.far_field.v_mid
    assert 1e-4 < abs(off) < 0.25 * wave.delta**2
    weak = solve_diffusion_wave(law, FarField(1.0, 1.05), spacing=0.01)
    off_w = weak.vbar[int(np.argmin(np.abs(weak.xi)))] - 1.025
    ratio = off / off_w
    assert 3.0 < ratio < 5.3


def test_truncation_window_stability(law, far_field, wave):
    n_mid = int(np.argmin(np.abs(wave.xi)))
    base = wave.vbar[n_mid]
    for L in (10.0, 14.0):
        other = solve_diffusion_wave(law, far_field, L_xi=L)
        assert abs(other.vbar[int(np.argmin(np.abs(other.xi)))] - base) < 1e-10
        for side in ("plus", "minus"):
            c0 = wave.tails[side].c_tail
            assert abs(other.tails[side].c_tail - c0) < 0.2 * c0


def test_tail_constants_near_linearized_rate(law, wave):
    # the tails decay like exp(-xi^2 / (4*(-P'(v_inf)))) to leading order
    for side, v_inf in (("plus", 1.1), ("minus", 1.0)):
        fit = wave.tails[side]
        assert fit.r_squared > 0.99
        c_lin = 1.0 / (4.0 * (-law(v_inf, 1)))
        assert abs(fit.c_tail - c_lin) < 0.15 * c_lin


def test_spacing_refinement(law, far_field):
    a = solve_diffusion_wave(law, far_field, spacing=0.01)
    b = solve_diffusion_wave(law, far_field, spacing=0.005)
    ia = int(np.argmin(np.abs(a.xi)))
    ib = int(np.argmin(np.abs(b.xi)))
    assert abs(a.vbar[ia] - b.vbar[ib]) < 1e-8


def test_constant_state_is_exact(flat_wave):
    assert np.all(flat_wave.vbar == 1.05)
    assert np.all(discrete_residual(flat_wave) == 0.0)
    assert flat_wave.newton_iters == 0
    assert flat_wave.tails == {}
    assert np.all(flat_wave.w == 0.0)


def test_time_derivative_chain(wave):
    # d/dt consumes one xi-derivative; check against direct differencing
    x, t = 3.0, 7.0
    for f in (eval_vbar, eval_ubar):
        dt = 0.01 * (1.0 + t)
        direct = (8.0 * (f(wave, x, t + dt) - f(wave, x, t - dt))
                  - (f(wave, x, t + 2 * dt) - f(wave, x, t - 2 * dt))) / (12.0 * dt)
        npt.assert_allclose(f(wave, x, t, dt_order=1), direct,
                            rtol=1e-6, atol=1e-12)


def test_far_field_beyond_grid(wave):
    t = 3.0
    L = wave.L_xi * np.sqrt(1.0 + t)
    assert eval_vbar(wave, -2.0 * L, t) == wave.far_field.v_minus
    assert eval_vbar(wave, 2.0 * L, t) == wave.far_field.v_plus
    assert eval_ubar(wave, 2.0 * L, t) == 0.0
    assert eval_vbar(wave, 2.0 * L, t, dx_order=1) == 0.0


def test_derivative_order_limits(wave):
    with pytest.raises(ValueError):
        eval_vbar(wave, 0.0, 1.0, dx_order=4)
    with pytest.raises(ValueError):
        eval_vbar(wave, 0.0, 1.0, dx_order=2, dt_order=2)


def test_profile_csv_layout(tmp_path, wave):
    path = tmp_path / "profile.csv"
    write_profile_csv(wave, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# gamma=1.3999999999999999")
    assert "c_tail_minus=" in lines[0]
    assert lines[1] == "xi,vbar,dvbar,d2vbar,d3vbar"
    first = [float(tok) for tok in lines[2].split(",")]
    assert first[0] == wave.xi[0]
    assert first[1] == wave.vbar[0]


def test_domain_validation(law, far_field):
    with pytest.raises(ValueError):
        solve_diffusion_wave(law, far_field, spacing=0.02)
    with pytest.raises(ValueError):
        solve_diffusion_wave(law, far_field, L_xi=4.0)
