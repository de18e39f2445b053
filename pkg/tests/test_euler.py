import numpy as np
import numpy.testing as npt
import pytest

from dampwave.correction import eval_expansion
from dampwave.euler import (Grid1D, InitialDataSpec, NumericalFailure,
                            SolverConfig, constant_state_drift,
                            convergence_orders, integrate, load_snapshots,
                            make_initial_data, save_snapshots, step)


def test_constant_state_drift_is_exactly_zero(law):
    assert constant_state_drift(law, n_steps=2000) == 0.0


def test_pure_damping_matches_exponential(law):
    # uniform fields kill every spatial term, leaving u' = -u; the center
    # node stays outside the boundary's stencil reach for this many steps
    grid = Grid1D(-40.0, 40.0, 800)
    u_c, t_end = 0.3, 1.0
    errs = []
    for dt in (0.025, 0.0125):
        v = np.full(grid.n_cells + 1, 1.05)
        u = np.full(grid.n_cells + 1, u_c)
        for _ in range(int(round(t_end / dt))):
            v, u = step(law, grid, (1.05, 1.05), v, u, dt, 0.02)
        mid = grid.n_cells // 2
        assert v[mid] == 1.05
        errs.append(abs(u[mid] - u_c * np.exp(-t_end)))
    assert errs[0] < 1e-5
    ratio = errs[0] / errs[1]
    assert 6.5 < ratio < 9.5


def test_self_convergence_orders(law):
    orders = convergence_orders(law)
    assert orders["order_time"] >= 3.0
    assert orders["order_space"] >= 4.0
    assert 2.5 < orders["order_time_fine"] < 3.5
    assert orders["errors_space"][1] < orders["errors_space"][0]
    assert orders["errors_time"][2] < orders["errors_time"][1]


def test_snapshot_roundtrip_and_resume(tmp_path, law, expansion):
    grid = Grid1D(-20.0, 20.0, 400)
    v0, u0 = make_initial_data(expansion, grid, InitialDataSpec(eps=0.005,
                                                               phi_width=2.0,
                                                               psi_width=2.0))
    bc = (1.0, 1.1)
    traj = integrate(law, grid, bc, v0, u0, 0.0, [0.0, 0.5, 1.0])
    save_snapshots(traj, tmp_path / "snaps", config_dict={"tag": 7})
    loaded, manifest = load_snapshots(tmp_path / "snaps")
    assert manifest["config"] == {"tag": 7}
    assert loaded.times == traj.times
    for a, b in zip(loaded.vs, traj.vs):
        npt.assert_array_equal(a, b)

    # restarting from the stored middle state reproduces the end state bitwise
    v_mid, u_mid = loaded.state_at(0.5)
    resumed = integrate(law, grid, bc, v_mid, u_mid, 0.5, [1.0])
    v_end, u_end = traj.state_at(1.0)
    npt.assert_array_equal(resumed.vs[-1], v_end)
    npt.assert_array_equal(resumed.us[-1], u_end)


def test_rerun_is_bitwise_deterministic(law, expansion):
    grid = Grid1D(-15.0, 15.0, 300)
    v0, u0 = make_initial_data(expansion, grid, InitialDataSpec(eps=0.004,
                                                               phi_width=2.0,
                                                               psi_width=2.0))
    runs = []
    for _ in range(2):
        traj = integrate(law, grid, (1.0, 1.1), v0.copy(), u0.copy(),
                         0.0, [0.7])
        runs.append(traj.state_at(0.7))
    npt.assert_array_equal(runs[0][0], runs[1][0])
    npt.assert_array_equal(runs[0][1], runs[1][1])


def test_excess_volume_is_conserved(law, expansion):
    # the curvature-shaped bump carries no excess volume and both difference
    # operators telescope, so the integral only moves by the boundary flux
    grid = Grid1D(-60.0, 60.0, 1200)
    v0, u0 = make_initial_data(expansion, grid, InitialDataSpec())
    traj = integrate(law, grid, (1.0, 1.1), v0, u0, 0.0, [0.0, 1.0, 2.0])
    masses = []
    for t in traj.times:
        v_t, _ = traj.state_at(t)
        dv = v_t - eval_expansion(expansion, grid.x, t, "v")
        masses.append(np.trapezoid(dv, dx=grid.h))
    assert abs(masses[1] - masses[0]) < 1e-10
    assert abs(masses[2] - masses[0]) < 1e-10


def test_nonfinite_state_raises(law):
    grid = Grid1D(-10.0, 10.0, 200)
    v = np.full(grid.n_cells + 1, 1.05)
    u = np.zeros_like(v)
    u[100] = np.nan
    with pytest.raises(NumericalFailure):
        integrate(law, grid, (1.05, 1.05), v, u, 0.0, [0.1])


def test_initial_volume_validation(expansion):
    grid = Grid1D(-20.0, 20.0, 400)
    with pytest.raises(ValueError):
        make_initial_data(expansion, grid, InitialDataSpec(eps=30.0,
                                                           phi_width=2.0))


def test_parameter_validation():
    with pytest.raises(ValueError):
        Grid1D(0.0, 1.0, 4)
    with pytest.raises(ValueError):
        Grid1D(1.0, 0.0, 100)
    with pytest.raises(ValueError):
        SolverConfig(cfl=1.5)
    with pytest.raises(ValueError):
        SolverConfig(dissipation=-0.1)


def test_snapshot_schedule_enforced(law):
    grid = Grid1D(-10.0, 10.0, 200)
    v = np.full(grid.n_cells + 1, 1.05)
    u = np.zeros_like(v)
    traj = integrate(law, grid, (1.05, 1.05), v, u, 0.0, [0.0, 0.3, 0.9])
    assert traj.times == [0.0, 0.3, 0.9]
    with pytest.raises(ValueError):
        integrate(law, grid, (1.05, 1.05), v, u, 1.0, [0.5])
    with pytest.raises(KeyError):
        traj.state_at(0.5)
