"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line."""

import filecmp
import math
import os
import time

import numpy as np
import pytest

from _acceptance_log import record
from savartsim import analysis as an
from savartsim import birefringence as bf
from savartsim import config as cf
from savartsim import detection as dt
from savartsim import polcalc as pc
from savartsim.scenarios import RUNNERS, REFERENCE

N_O, N_E = bf.CALCITE_N_O, bf.CALCITE_N_E
TSIRELSON = 2 * math.sqrt(2)


def cfg_for(config_dir, name):
    return cf.load_config(os.path.join(config_dir, f"{name}.ini"), name)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_01_walkoff_uv():
    with Timer() as t:
        plate = bf.BirefringentPlate(N_O, N_E, np.pi / 4, 8.73, measured_shear=1.010)
        dz = bf.bd_walkoff(plate)
    ok = 0.531 <= dz <= 0.553 and t.elapsed < 1.0
    assert record(1, "walkoff UV BD in [0.531, 0.553] mm", ok, f"dz={dz:.5f} mm", t.elapsed)


def test_02_walkoff_nir():
    with Timer() as t:
        plate = bf.BirefringentPlate(N_O, N_E, np.pi / 4, 11.26)
        dz = bf.bd_walkoff(plate)
    ok = 0.715 <= dz <= 0.745 and t.elapsed < 1.0
    assert record(2, "walkoff NIR BD in [0.715, 0.745] mm", ok,
                  f"dz={dz:.5f} mm, geometric shear={plate.shear:.4f} mm", t.elapsed)


def test_03_savart_symmetry():
    rng = np.random.default_rng(2024)
    with Timer() as t:
        worst = 0.0
        for _ in range(100):
            n_o, n_e = rng.uniform(1.4, 2.3, size=2)
            plate = bf.BirefringentPlate(n_o, n_e, rng.uniform(0.1, 1.4), rng.uniform(0.5, 30.0),
                                         measured_shear=rng.choice([None, rng.uniform(0, 3)]))
            worst = max(worst, abs(bf.sp_walkoff(bf.SavartPlate.symmetric(plate))))
    ok = worst <= 1e-12 and t.elapsed < 1.0
    assert record(3, "symmetric SP walkoff = 0 over 100 plates", ok,
                  f"max |dz|={worst:.1e} mm; measured residue {REFERENCE['dz_sp_measured_mm'][0]} mm "
                  "reported, not matched", t.elapsed)


def test_04_walkoff_experiment(tmp_path, config_dir):
    with Timer() as t:
        s = RUNNERS["walkoff"](cfg_for(config_dir, "walkoff"), str(tmp_path)).summary
    ref, ref_err = REFERENCE["dz_bd_measured_mm"]
    bd, bd_err = s["bd_uv_fitted_dz_mm"], s["bd_uv_fitted_dz_err_mm"]
    sp, sp_err = s["sp_uv_fitted_dz_mm"], s["sp_uv_fitted_dz_err_mm"]
    bd_ok = abs(bd - ref) <= 2 * math.hypot(bd_err, ref_err)
    sp_ok = abs(sp) <= 2 * sp_err
    ok = bd_ok and sp_ok and t.elapsed < 10.0
    assert record(4, "waist-scan BD within 2 sigma of 0.52 mm, SP consistent with 0", ok,
                  f"BD {bd:.3f}+/-{bd_err:.3f} mm, SP {sp:.3f}+/-{sp_err:.3f} mm", t.elapsed)


def _exact_E(state, da, db):
    p = {(a, b): dt.setting_probability(state, dt.MeasurementSetting(da, db, a, b))
         for a in (1, 2) for b in (1, 2)}
    return an.correlation_E(p[1, 1], p[1, 2], p[2, 1], p[2, 2])[0], 0.0


def test_05_chsh_analytic():
    with Timer() as t:
        a, ap, b, bp = np.pi / 4, -np.pi / 4, 0.0, np.pi / 2
        s = pc.PHI_PLUS
        r = an.chsh_s(_exact_E(s, a, b), _exact_E(s, a, bp), _exact_E(s, ap, b), _exact_E(s, ap, bp))
        rng = np.random.default_rng(5)
        worst = 0.0
        for _ in range(1000):
            v = rng.normal(size=4) + 1j * rng.normal(size=4)
            st = v / np.linalg.norm(v)
            a, ap, b, bp = rng.uniform(0, 2 * np.pi, 4)
            rs = an.chsh_s(_exact_E(st, a, b), _exact_E(st, a, bp), _exact_E(st, ap, b), _exact_E(st, ap, bp))
            worst = max(worst, rs.S)
    ok = abs(r.S - TSIRELSON) <= 1e-9 and worst <= TSIRELSON + 1e-9 and t.elapsed < 10.0
    assert record(5, "CHSH analytic S = 2 sqrt2, Tsirelson sweep", ok,
                  f"S={r.S:.12f}, sweep max={worst:.6f}", t.elapsed)


def test_06_chsh_monte_carlo(tmp_path, config_dir):
    cfg = cfg_for(config_dir, "chsh")
    base = cfg.seed
    s_values, sig_ok = [], 0
    with Timer() as t:
        for i in range(20):
            cfg.scenario.seed = base + i
            s = RUNNERS["chsh"](cfg, str(tmp_path / str(i))).summary
            s_values.append(s["S"])
            sig_ok += s["sigma_violation"] >= 15
    in_window = all(2.74 <= x <= 2.90 for x in s_values)
    ok = in_window and sig_ok >= 18 and t.elapsed < 60.0
    assert record(6, "CHSH Monte Carlo S in [2.74, 2.90], >=15 sigma in >=90% of 20 runs", ok,
                  f"S range [{min(s_values):.4f}, {max(s_values):.4f}], {sig_ok}/20 runs >= 15 sigma",
                  t.elapsed)


def test_07_interference_visibility(tmp_path, config_dir):
    with Timer() as t:
        s = RUNNERS["interference"](cfg_for(config_dir, "interference"), str(tmp_path)).summary
    ok = s["visibility_corrected"] >= 0.99 and abs(s["visibility_raw"] - 0.84) <= 0.03 and t.elapsed < 30.0
    assert record(7, "interference V_corrected >= 0.99, V_raw within 0.84 +/- 0.03", ok,
                  f"V_corr={s['visibility_corrected']:.4f}, V_raw={s['visibility_raw']:.4f}", t.elapsed)


def test_08_fidelity_formula(tmp_path, config_dir):
    with Timer() as t:
        ends = pc.fidelity_bound(1.0), pc.fidelity_bound(0.0)
        grid = pc.fidelity_bound(np.linspace(0.0, 1.0, 1000))
        monotone = bool(np.all(np.diff(grid) > 0))
        text = RUNNERS["chsh"](cfg_for(config_dir, "chsh"), str(tmp_path)).text()
    surfaced = "fidelity discrepancy" in text and "0.992" in text
    ok = (abs(ends[0] - 1.0) <= 1e-15 and abs(ends[1] - 0.25) <= 1e-15 and monotone and surfaced)
    assert record(8, "fidelity bound endpoints, monotone, discrepancy surfaced", ok,
                  f"F(1)={ends[0]:.15f}, F(0)={ends[1]:.15f}, monotone={monotone}, "
                  f"discrepancy line present={surfaced}", t.elapsed)


def test_09_rates(tmp_path, config_dir):
    with Timer() as t:
        s = RUNNERS["rates"](cfg_for(config_dir, "rates"), str(tmp_path)).summary
    b, eta, em = s["detected_brightness"], s["heralding_eta"], s["emitted_brightness"]
    ok = abs(b / 9.5e4 - 1) <= 0.01 and abs(eta - 0.12) <= 0.01 and 6.6e6 <= em <= 7.3e6 and t.elapsed < 5.0
    assert record(9, "rates: brightness 9.5e4 +/- 1%, eta 12% +/- 1 pt, emitted 6.6-7.3e6", ok,
                  f"brightness={b:.4g}, eta={eta:.4f}, emitted={em:.4g}", t.elapsed)


def test_10_sensitivity_ordering(tmp_path, config_dir):
    with Timer() as t:
        s = RUNNERS["sensitivity"](cfg_for(config_dir, "sensitivity"), str(tmp_path)).summary
    diff = s["omega_bd"] - s["omega_sp"]
    combined = math.hypot(s["omega_sp_err"], s["omega_bd_err"])
    ok = (s["omega_sp"] < s["omega_bd"] and diff > combined
          and abs(s["thickness_ratio"] - math.sqrt(2)) < 1e-9 and t.elapsed < 10.0)
    assert record(10, "sensitivity omega_SP < omega_BD beyond combined fit error", ok,
                  f"omega_SP={s['omega_sp']:.5f}, omega_BD={s['omega_bd']:.5f} rad/um, "
                  f"diff={diff / combined:.1f} sigma", t.elapsed)


def test_11_determinism(tmp_path, config_dir):
    mismatched = []
    with Timer() as t:
        for name in cf.SCENARIOS:
            cfg = cfg_for(config_dir, name)
            a, b = tmp_path / f"{name}_a", tmp_path / f"{name}_b"
            RUNNERS[name](cfg, str(a), svg=True)
            RUNNERS[name](cfg, str(b), svg=True)
            for f in sorted(os.listdir(a)):
                if f.endswith((".csv", ".svg")) and not filecmp.cmp(a / f, b / f, shallow=False):
                    mismatched.append(f)
    ok = not mismatched and t.elapsed < 60.0
    assert record(11, "byte-identical CSV (and SVG) outputs on re-run", ok,
                  f"mismatches={mismatched or 'none'}", t.elapsed)
