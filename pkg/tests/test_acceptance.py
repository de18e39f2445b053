"""Acceptance gate: one test per headline claim, at the stated tolerance.

The module fixture runs the full default pipeline once and the criteria read
its artifacts; stage runtimes with explicit budgets are re-timed in-process.
The determinism criterion repeats the whole pipeline and compares the two
artifact trees byte for byte.
"""

import json
import os
import time

import pytest

from dampwave import cli
from dampwave.correction import (ExpansionProfile, closed_form_correction,
                                 solve_correction, source_decay_scan)
from dampwave.diffusion_wave import solve_diffusion_wave
from dampwave.pressure import FarField, PressureLaw


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance") / "run"
    t0 = time.perf_counter()
    code = cli.main(["all", "--out", str(out)])
    return {"out": out, "code": code, "duration": time.perf_counter() - t0}


def _report(artifacts, name):
    return json.loads((artifacts["out"] / name).read_text())


def test_pipeline_exit_code(artifacts):
    assert artifacts["code"] == 0


def test_criterion_1_profile(artifacts):
    rep = _report(artifacts, "profile_report.json")
    assert rep["residual_max"] <= 1e-8
    assert rep["reflection_error"] <= 1e-7
    assert set(rep["tails"]) == {"minus", "plus"}
    for fit in rep["tails"].values():
        assert fit["r_squared"] > 0.99
        assert fit["c_tail"] > 0.0
    t0 = time.perf_counter()
    solve_diffusion_wave(PressureLaw(), FarField(1.0, 1.1))
    assert time.perf_counter() - t0 < 10.0


def test_criterion_2_correction(artifacts):
    rep = _report(artifacts, "correction_report.json")
    assert rep["ode_residual_max"] <= 1e-8
    assert rep["closed_form_rel_error"] < 1e-6
    assert rep["u1_identity_error"] <= 1e-12
    wave = solve_diffusion_wave(PressureLaw(), FarField(1.0, 1.1))
    t0 = time.perf_counter()
    solve_correction(wave)
    closed_form_correction(wave)
    assert time.perf_counter() - t0 < 10.0


def test_criterion_3_residual_decay_rates(artifacts):
    fits = _report(artifacts, "residual_rates.json")["fits"]
    for key, target, tol in (("sup_S", -2.5, 0.1),
                             ("sup_S_bare", -1.5, 0.1),
                             ("L1_g2", -1.5, 0.1),
                             ("L1_g3", -1.0, 0.1)):
        assert abs(fits[key]["exponent"] - target) <= tol, key
        assert fits[key]["r_squared"] > 0.98, key
    wave = solve_diffusion_wave(PressureLaw(), FarField(1.0, 1.1))
    expansion = ExpansionProfile(wave=wave, correction=solve_correction(wave))
    t0 = time.perf_counter()
    source_decay_scan(expansion)
    assert time.perf_counter() - t0 < 60.0


def test_criterion_4_l2_decay_rates(artifacts):
    l2 = _report(artifacts, "decay_report.json")["l2"]
    assert set(l2) == {"L2_V", "L2_Vx", "L2_Vxx", "L2_Vt", "L2_Vtx"}
    for label, fit in l2.items():
        l, k = fit["orders"]
        assert fit["exponent"] <= -(l + 0.5 * k + 0.75) + 0.15, label
        assert fit["r_squared"] > 0.98, label
    assert artifacts["duration"] <= 900.0


def test_criterion_5_linf_decay_rates(artifacts):
    rep = _report(artifacts, "decay_report.json")
    linf = rep["linf"]
    assert abs(linf["Linf_v_vstar"]["exponent"] + 1.5) <= 0.15
    assert abs(linf["Linf_u_ustar"]["exponent"] + 2.0) <= 0.2
    assert abs(linf["Linf_v_vbar"]["exponent"] + 1.0) <= 0.1
    # the corrected ansatz must beat the bare wave by a clear margin
    assert rep["hierarchy"]["gap"] < -0.3


def test_criterion_6_duhamel_identity(artifacts):
    rep = _report(artifacts, "duhamel_report.json")
    assert [p["t"] for p in rep["probes"]] == [25.0, 50.0, 100.0]
    for probe in rep["probes"]:
        errs = [row["rel_error"] for row in probe["levels"]]
        assert len(errs) == 3
        assert errs[0] < 0.05
        assert errs[2] < errs[1] < errs[0]
    assert rep["trivial"]["reconstructed"] == 0.0
    assert rep["trivial"]["reference"] == 0.0


def test_criterion_7_kernel_bound(artifacts):
    rep = _report(artifacts, "kernel_report.json")
    assert rep["holdout"]["n_samples"] >= 10**4
    assert rep["holdout"]["violations"] == 0
    assert rep["holdout"]["seed"] != rep["bound_fit"]["seed"]
    rows = rep["gd_norms"]["rows"]
    assert {row["p"] for row in rows} == {1, 2}
    for row in rows:
        assert row["rel_error"] < 0.01
    assert rep["delta0"]["max_RG"] < 1e-6
    assert rep["delta0"]["max_G_dev"] < 1e-13


def test_criterion_8_solver_verification(artifacts):
    rep = _report(artifacts, "solver_report.json")
    # 1e5-step constant-state march; the scheme preserves it bitwise
    assert rep["constant_state_drift"] <= 1e-13
    assert rep["convergence"]["order_time"] >= 3.0
    assert rep["convergence"]["order_space"] >= 4.0
    assert rep["mass_drift"] <= 1e-8


def test_criterion_9_determinism(artifacts, tmp_path_factory):
    out2 = tmp_path_factory.mktemp("acceptance") / "rerun"
    assert cli.main(["all", "--out", str(out2)]) == artifacts["code"]

    def tree(root):
        files = {}
        for dirpath, _, names in os.walk(root):
            for name in names:
                path = os.path.join(dirpath, name)
                files[os.path.relpath(path, root)] = path
        return files

    a, b = tree(artifacts["out"]), tree(out2)
    assert set(a) == set(b)
    for rel in sorted(a):
        if rel == "report.json":
            continue
        with open(a[rel], "rb") as fa, open(b[rel], "rb") as fb:
            assert fa.read() == fb.read(), rel
    def digest_of(path):
        with open(path) as fh:
            return json.load(fh)["criteria"]["9_determinism"]["artifact_digest"]

    assert digest_of(a["report.json"]) == digest_of(b["report.json"])
