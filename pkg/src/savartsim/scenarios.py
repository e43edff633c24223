"""Reproducible experiments: each scenario writes CSV files plus a text summary.

Every runner takes a validated ``ScenarioConfig`` and an output directory
and returns a ``ScenarioOutput``.  Randomness flows only from the config
seed, split into per-setting substreams, so repeated runs are byte-identical.
"""

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import analysis as an
from . import beamprop as bp
from . import birefringence as bf
from . import detection as dt
from . import pipeline as pl
from . import plotting
from . import polcalc as pc
from .config import dump_config

# measured reference values, reported next to model output
REFERENCE = {
    "dz_bd_uv_predicted_mm": 0.542,
    "dz_bd_nir_predicted_mm": 0.73,
    "dz_bd_measured_mm": (0.52, 0.03),
    "dz_sp_measured_mm": (0.06, 0.03),
    "visibility_corrected": (1.000, 0.010),
    "visibility_raw": (0.840, 0.008),
    "chsh_s": (2.82, 0.04),
    "chsh_sigma": 20.0,
    "fidelity": (0.992, 0.001),
    "cc_total_cps": 2.470e5,
    "singles_summed_cps": 2.058e6,
    "brightness": 9.50e4,
    "heralding": 0.12,
    "emitted_estimate": 7e6,
    "emitted_conclusion": 105e6,
    "car": 14.0,
    "omega_sp": (0.1004, 0.0008),
    "omega_bd": (0.1036, 0.0004),
}


@dataclass
class ScenarioOutput:
    summary: dict
    files: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def text(self):
        lines = list(self.notes)
        lines += [f"{k} = {_fmt(v)}" for k, v in self.summary.items()]
        return "\n".join(lines) + "\n"


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.9g}"
    return str(v)


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def _prepare(out_dir, cfg):
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "effective_config.ini")
    with open(path, "w") as fh:
        fh.write(dump_config(cfg))
    return path


def _finish(out_dir, name, output):
    path = os.path.join(out_dir, f"{name}_summary.txt")
    with open(path, "w") as fh:
        fh.write(output.text())
    output.files.append(path)
    return output


def substream_seed(seed, index):
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------- interference


def interference_rates(report, accidental_scale):
    """Rates behind the H polarizer and 50/50 fiber splitter.

    The fringe peak carries CC/4 (half of pairs pass H/H at phi = 0, half of
    those split to different outputs); each output sees half of one arm's
    singles (both photons, polarizer 1/2, splitter 1/2).
    """
    return dt.CountRates(report.coincidences / 4.0, report.singles_a / 2.0, report.singles_b / 2.0,
                         accidental_scale)


def calibrate_accidental_scale(target_raw_visibility, peak_rate, singles_a, singles_b, window_tau,
                               intrinsic_visibility=1.0):
    """Accidental scale making an unsubtracted fringe show ``target_raw_visibility``.

    Raw counts C (1 + V cos phi)/2 + A have visibility C V / (C + 2A), so
    A = C (V / target - 1) / 2 and scale = A / (S_A S_B tau).
    """
    a_rate = peak_rate * (intrinsic_visibility / target_raw_visibility - 1.0) / 2.0
    return a_rate / (singles_a * singles_b * window_tau)


def _phase_slope(cfg, h=1e-7):
    return (pl.sp2_phase(cfg, h) - pl.sp2_phase(cfg, -h)) / (2 * h)


def run_interference_scan(cfg, out_dir, svg=False):
    _prepare(out_dir, cfg)
    src = cfg.section("source").to_source_config()
    det = cfg.section("detection")
    scan = cfg.section("scan")
    tau = det.window_ns * 1e-9
    report = pl.rate_report(src)
    rates = interference_rates(report, det.accidental_scale)
    rates = dt.CountRates(rates.pair_rate, rates.singles_a_rate, rates.singles_b_rate,
                          rates.accidental_scale, det.dark_rate_cps, det.dead_time_ns * 1e-9)
    theta = np.linspace(scan.theta_start_mrad, scan.theta_stop_mrad, scan.points) * 1e-3
    probs = pl.interference_scan(src, theta)

    rows, raw, corr, corr_err = [], [], [], []
    for i, (t, p) in enumerate(probs):
        rec = dt.simulate_counts(p, rates, det.duration_s, tau, cfg.seed, setting_index=i)
        c, e = dt.subtract_accidentals(rec)
        raw.append(rec.coincidences)
        corr.append(c)
        corr_err.append(e)
        rows.append([t, pl.sp2_phase(src, t), rec.coincidences, c])
    out = ScenarioOutput({})
    out.files.append(_write_csv(os.path.join(out_dir, "interference.csv"),
                                ["theta", "phi_rad", "cc_raw", "cc_corrected"], rows))

    x = theta * 1e3
    omega = abs(_phase_slope(src)) * 1e-3
    raw = np.asarray(raw, dtype=float)
    fit_raw = an.fit_cosine(x, raw, np.sqrt(np.maximum(raw, 1.0)), omega_guess=omega)
    fit_corr = an.fit_cosine(x, corr, corr_err, omega_guess=omega)
    v_raw, dv_raw = an.visibility(fit_raw)
    v_corr, dv_corr = an.visibility(fit_corr)
    phis = [r[1] for r in rows]
    calibrated = calibrate_accidental_scale(REFERENCE["visibility_raw"][0], rates.pair_rate,
                                            rates.singles_a_rate, rates.singles_b_rate, tau,
                                            src.intrinsic_visibility if src.intrinsic_visibility > 0 else 1.0)
    out.summary.update({
        "visibility_corrected": v_corr,
        "visibility_corrected_err": dv_corr,
        "visibility_raw": v_raw,
        "visibility_raw_err": dv_raw,
        "fringe_omega_rad_per_mrad": fit_corr.omega,
        "phase_sweep_rad": max(phis) - min(phis),
        "peak_cc_rate_cps": rates.pair_rate,
        "singles_per_output_cps": rates.singles_a_rate,
        "accidental_scale": rates.accidental_scale,
        "accidental_scale_for_reference_raw_visibility": calibrated,
        "accidental_rate_naive_cps": dt.accidental_mean(rates.singles_a_rate, rates.singles_b_rate, tau, 1.0),
        "reference_visibility_corrected": REFERENCE["visibility_corrected"][0],
        "reference_visibility_raw": REFERENCE["visibility_raw"][0],
    })
    out.notes.append("# accidentals injected at accidental_scale x S_A S_B tau; the scale is calibrated so "
                     "the unsubtracted fringe matches the reference raw visibility")
    if svg:
        out.files.append(plotting.interference_figure(os.path.join(out_dir, "interference.svg"),
                                                      x, raw, corr, fit_raw, fit_corr))
    return _finish(out_dir, "interference", out)


# ------------------------------------------------------------------------ CHSH


def car_scale(target_car, cc_rate, singles_a, singles_b, window_tau):
    """Accidental scale for which CC / (scale S_A S_B tau) equals ``target_car``."""
    return cc_rate / (target_car * singles_a * singles_b * window_tau)


def _correlations_from_probs(probs):
    e = probs[(1, 1)] + probs[(2, 2)] - probs[(1, 2)] - probs[(2, 1)]
    return e, 0.0


def run_chsh(cfg, out_dir, svg=False):
    _prepare(out_dir, cfg)
    src = cfg.section("source").to_source_config()
    det = cfg.section("detection")
    opts = cfg.section("chsh")
    tau = det.window_ns * 1e-9
    state = pl.evolve_state(src)
    v = src.intrinsic_visibility
    deltas_b = (0.0, np.pi / 2)
    deltas_a = [2 * np.pi * k / opts.delta_a_points for k in range(opts.delta_a_points)]
    channels = [(1, 1), (1, 2), (2, 1), (2, 2)]
    out = ScenarioOutput({})

    if opts.mode == "analytic":
        curves, rows = {}, []
        for ib, db in enumerate(deltas_b):
            for ia, da in enumerate(deltas_a):
                probs = {}
                for ca, cb in channels:
                    s = dt.MeasurementSetting(da, db, ca, cb)
                    probs[(ca, cb)] = dt.setting_probability(state, s, v)
                    rows.append([da, db, ca, cb, probs[(ca, cb)]])
                curves[(ib, ia)] = _correlations_from_probs(probs)
        out.files.append(_write_csv(os.path.join(out_dir, "chsh_probabilities.csv"),
                                    ["setting_delta_a_rad", "setting_delta_b_rad", "ch_a", "ch_b",
                                     "probability"], rows))
        a, ap, result = an.best_alice_pair(curves, deltas_a)
        raw_result = result
        bell = None
    else:
        report = pl.rate_report(src)
        records, bell = [], {}
        curves, curves_raw = {}, {}
        idx = 0
        for ib, db in enumerate(deltas_b):
            for ia, da in enumerate(deltas_a):
                corr, err, raw = {}, {}, {}
                for ca, cb in channels:
                    s = dt.MeasurementSetting(da, db, ca, cb)
                    p = dt.setting_probability(state, s, v)
                    pa, pb = dt.marginal_probabilities(state, s, v)
                    rates = dt.CountRates(report.coincidences, report.singles_a * pa, report.singles_b * pb,
                                          det.accidental_scale, det.dark_rate_cps, det.dead_time_ns * 1e-9)
                    rec = dt.simulate_counts(p, rates, det.duration_s, tau, cfg.seed, setting_index=idx)
                    idx += 1
                    records.append((s, rec))
                    corr[(ca, cb)], err[(ca, cb)] = dt.subtract_accidentals(rec)
                    raw[(ca, cb)] = rec.coincidences
                    bell.setdefault((f"{db:.4g}", ca, cb), []).append(corr[(ca, cb)])
                order = [(1, 1), (1, 2), (2, 1), (2, 2)]
                curves[(ib, ia)] = an.correlation_E(*[corr[k] for k in order], errors=[err[k] for k in order])
                curves_raw[(ib, ia)] = an.correlation_E(*[raw[k] for k in order])
        path = os.path.join(out_dir, "chsh_counts.csv")
        dt.write_records(path, records)
        out.files.append(path)
        a, ap, result = an.best_alice_pair(curves, deltas_a)
        _, _, raw_result = an.best_alice_pair(curves_raw, deltas_a)

    path = os.path.join(out_dir, "chsh_result.csv")
    an.write_chsh_csv(path, [result])
    out.files.append(path)
    out.summary.update({
        "mode": opts.mode,
        "S": result.S,
        "S_error": result.S_error,
        "sigma_violation": result.sigma_violation,
        "violation": result.S > 2.0,
        "visibility_vs": result.visibility_vs,
        "fidelity_bound_formula": result.fidelity_lower_bound,
        "fidelity_werner_overlap": result.fidelity_werner_overlap,
        "sign_pattern": result.sign_pattern,
        "alice_delta_a": a,
        "alice_delta_a_prime": ap,
        "S_raw": raw_result.S,
        "accidental_scale": det.accidental_scale,
        "reference_S": REFERENCE["chsh_s"][0],
        "reference_S_error": REFERENCE["chsh_s"][1],
        "reference_fidelity": REFERENCE["fidelity"][0],
    })
    out.notes.extend("# " + line for line in result.report_lines()[-2:])
    out.notes.append(
        f"# fidelity discrepancy: reference F={REFERENCE['fidelity'][0]} vs bound formula "
        f"{pc.fidelity_bound(REFERENCE['chsh_s'][0] / an.TSIRELSON):.5f} at the reference S={REFERENCE['chsh_s'][0]}")
    if svg and bell is not None:
        curves_out = {k: np.asarray(vals) for k, vals in bell.items()}
        out.files.append(plotting.bell_curves_figure(os.path.join(out_dir, "chsh_bell_curves.svg"),
                                                     deltas_a, curves_out))
    return _finish(out_dir, "chsh", out)


# --------------------------------------------------------------------- walkoff


def walkoff_elements(wo):
    beta = math.radians(wo.cut_angle_deg)
    bd_uv = bf.BirefringentPlate(wo.n_o, wo.n_e, beta, wo.bd_uv_thickness_mm, measured_shear=wo.bd_uv_shear_mm)
    sp_uv = bf.SavartPlate.from_shear(wo.sp_uv_shear_mm, wo.n_o, wo.n_e, beta)
    bd_nir = bf.BirefringentPlate(wo.n_o, wo.n_e, beta, wo.bd_nir_thickness_mm)
    return [
        ("bd_uv", bd_uv, wo.uv_wavelength_nm, REFERENCE["dz_bd_uv_predicted_mm"], REFERENCE["dz_bd_measured_mm"]),
        ("sp_uv", sp_uv, wo.uv_wavelength_nm, 0.0, REFERENCE["dz_sp_measured_mm"]),
        ("bd_nir", bd_nir, wo.nir_wavelength_nm, REFERENCE["dz_bd_nir_predicted_mm"], (math.nan, math.nan)),
    ]


def run_walkoff(cfg, out_dir, svg=False):
    _prepare(out_dir, cfg)
    wo = cfg.section("walkoff")
    out = ScenarioOutput({})
    rows, panels = [], []
    for i, (label, element, lam, predicted, measured) in enumerate(walkoff_elements(wo)):
        setup = bp.WalkoffSetup(wo.collimated_diameter_mm, wo.focal_length_mm, lam, wo.waist_radius_um,
                                wo.scan_half_range_zr, wo.scan_points)
        scans = bp.walkoff_experiment(element, setup, wo.radius_noise_um, substream_seed(cfg.seed, i))
        fits = [bp.fit_waist(s, lam) for s in scans]
        series = []
        for branch, scan, fit in zip(("ordinary", "extraordinary"), scans, fits):
            path = os.path.join(out_dir, f"walkoff_{label}_{branch}.csv")
            scan.to_csv(path)
            out.files.append(path)
            zf = np.linspace(scan.z_positions.min(), scan.z_positions.max(), 400)
            series.append((branch, scan.z_positions, scan.beam_radii,
                           (zf, bp.beam_radius(fit.beam, zf), fit.beam.waist_position_z0)))
        panels.append((label, series))
        model = bp.element_walkoff(element)
        fitted = fits[1].beam.waist_position_z0 - fits[0].beam.waist_position_z0
        err = math.hypot(fits[0].z0_error, fits[1].z0_error)
        ref, ref_err = measured
        combined = math.hypot(err, ref_err) if math.isfinite(ref_err) else err
        rows.append([label, lam, model, fitted, err, predicted, ref, ref_err,
                     abs(fitted - model) <= 2 * err,
                     abs(fitted - ref) <= 2 * combined if math.isfinite(ref) else ""])
        out.summary[f"{label}_model_dz_mm"] = model
        out.summary[f"{label}_fitted_dz_mm"] = fitted
        out.summary[f"{label}_fitted_dz_err_mm"] = err
        if math.isfinite(ref):
            out.summary[f"{label}_reference_measured_dz_mm"] = ref
    out.files.append(_write_csv(
        os.path.join(out_dir, "walkoff_summary.csv"),
        ["element", "wavelength_nm", "model_dz_mm", "fitted_dz_mm", "fitted_dz_err_mm",
         "reference_predicted_dz_mm", "reference_measured_dz_mm", "reference_measured_err_mm",
         "fit_within_2sigma_of_model", "fit_within_2sigma_of_reference"], rows))
    lens_w0 = bp.focused_waist(wo.uv_wavelength_nm, wo.focal_length_mm, wo.collimated_diameter_mm / 2)
    out.summary["thin_lens_waist_um"] = lens_w0
    out.summary["configured_waist_um"] = wo.waist_radius_um
    out.notes.append("# the SP model walkoff is exactly zero; the reference 0.06 +/- 0.03 mm is an "
                     "experimental residue reported for comparison")
    out.notes.append(f"# thin-lens focus for D={wo.collimated_diameter_mm} mm, f={wo.focal_length_mm} mm "
                     f"gives w0={lens_w0:.1f} um; the scan uses the configured w0={wo.waist_radius_um} um")
    if svg:
        out.files.append(plotting.waist_figure(os.path.join(out_dir, "walkoff.svg"), panels))
    return _finish(out_dir, "walkoff", out)


# ----------------------------------------------------------------- sensitivity


def sensitivity_elements(se):
    bd = bf.plate_from_shear(se.shear_mm, se.n_o, se.n_e)
    if se.test_element == "savart":
        test = bf.SavartPlate.from_shear(se.shear_mm, se.n_o, se.n_e)
    else:
        test = bd
    return test, bd


def run_sensitivity(cfg, out_dir, svg=False):
    _prepare(out_dir, cfg)
    se = cfg.section("sensitivity")
    test, bd = sensitivity_elements(se)
    x = np.linspace(se.motor_start_um, se.motor_stop_um, se.points)
    theta = np.arctan(x * 1e-3 / se.pivot_distance_mm)
    k0 = 2 * np.pi / (se.wavelength_nm * 1e-6)
    omega_guess = k0 * se.shear_mm / (se.pivot_distance_mm * 1e3)

    results = {}
    for i, (label, element) in enumerate((("sp", test), ("bd", bd))):
        phi = np.array([bf.tilt_phase(bf.TiltedElement(element, t, se.wavelength_nm)) for t in theta])
        rng = np.random.default_rng(substream_seed(cfg.seed, i))
        y = 0.5 * (1 + se.fringe_visibility * np.cos(phi)) + rng.normal(0.0, se.intensity_noise, x.shape)
        err = np.full_like(y, se.intensity_noise) if se.intensity_noise > 0 else None
        results[label] = (y, an.fit_cosine(x, y, err, omega_guess=omega_guess))

    y_sp, f_sp = results["sp"]
    y_bd, f_bd = results["bd"]
    out = ScenarioOutput({})
    out.files.append(_write_csv(os.path.join(out_dir, "sensitivity.csv"),
                                ["x_motor_um", "theta_rad", "intensity_sp", "intensity_bd"],
                                zip(x, theta, y_sp, y_bd)))
    diff = f_bd.omega - f_sp.omega
    combined = math.hypot(f_sp.errors["omega"], f_bd.errors["omega"])
    thickness_sp = test.thickness if isinstance(test, bf.SavartPlate) else test.thickness_d_o
    out.notes.append(f"# motor-to-angle mapping: theta = arctan(x / x_p), x_p = {se.pivot_distance_mm} mm; "
                     "omega in rad per um of motor travel")
    out.summary.update({
        "test_element": se.test_element,
        "omega_sp": f_sp.omega,
        "omega_sp_err": f_sp.errors["omega"],
        "omega_bd": f_bd.omega,
        "omega_bd_err": f_bd.errors["omega"],
        "omega_ratio_sp_over_bd": f_sp.omega / f_bd.omega,
        "omega_difference_sigma": diff / combined if combined > 0 else math.inf,
        "sp_less_sensitive": bool(f_sp.omega < f_bd.omega and diff > combined),
        "thickness_sp_mm": thickness_sp,
        "thickness_bd_mm": bd.thickness_d_o,
        "thickness_ratio": thickness_sp / bd.thickness_d_o,
        "reference_omega_sp": REFERENCE["omega_sp"][0],
        "reference_omega_bd": REFERENCE["omega_bd"][0],
        "reference_omega_ratio": REFERENCE["omega_sp"][0] / REFERENCE["omega_bd"][0],
    })
    if svg:
        out.files.append(plotting.sensitivity_figure(
            os.path.join(out_dir, "sensitivity.svg"), x,
            [(f"{se.test_element}", y_sp, f_sp), ("beam displacer", y_bd, f_bd)]))
    return _finish(out_dir, "sensitivity", out)


# ----------------------------------------------------------------------- rates


def run_rates(cfg, out_dir, svg=False):
    _prepare(out_dir, cfg)
    src = cfg.section("source").to_source_config()
    det = cfg.section("detection")
    tau = det.window_ns * 1e-9
    r = pl.rate_report(src)
    acc_naive = dt.accidental_mean(r.singles_a, r.singles_b, tau, 1.0)
    acc = det.accidental_scale * acc_naive
    summary = {
        "pump_power_mw": r.pump_power,
        "coincidences_cps": r.coincidences,
        "singles_a_cps": r.singles_a,
        "singles_b_cps": r.singles_b,
        "singles_summed_cps": r.summed_singles,
        "heralding_eta": r.heralding_eta,
        "heralding_eta_per_arm": r.heralding_eta_geometric,
        "detected_brightness": r.detected_brightness,
        "emitted_brightness": r.emitted_brightness,
        "emitted_times_eta_sq_over_detected": (r.emitted_brightness * r.heralding_eta**2 / r.detected_brightness
                                               if r.detected_brightness else 0.0),
        "spectral_filter_factor": r.spectral_factor,
        "arm_transmission": src.loss_budget.arm_transmission(),
        "knife_edge_pair_survival": pl.pair_survival(src.loss_budget.knife_edge_loss),
        "accidental_scale": det.accidental_scale,
        "accidentals_cps": acc,
        "car": r.coincidences / acc if acc > 0 else math.inf,
        "car_naive": r.coincidences / acc_naive if acc_naive > 0 else math.inf,
        "accidental_scale_for_reference_car": (car_scale(REFERENCE["car"], r.coincidences, r.singles_a, r.singles_b, tau)
                                           if acc_naive > 0 else math.nan),
        "reference_brightness": REFERENCE["brightness"],
        "reference_heralding": REFERENCE["heralding"],
        "reference_emitted_estimate": REFERENCE["emitted_estimate"],
        "reference_emitted_conclusion": REFERENCE["emitted_conclusion"],
        "reference_car": REFERENCE["car"],
    }
    out = ScenarioOutput(summary)
    out.notes += [
        "# heralding eta = CC / (S_A + S_B) (summed singles); CC / sqrt(S_A S_B) reported as eta_per_arm",
        "# emitted brightness = detected / eta^2; the conclusion's 105e6 pairs/(s mW) does not follow "
        "from this identity, which gives the ~7e6 estimate",
        "# CAR from S_A S_B tau accidentals greatly exceeds the reference CAR of 14; "
        "accidental_scale_for_reference_car is the factor needed to reproduce it",
    ]
    out.files.append(_write_csv(os.path.join(out_dir, "rates.csv"), ["quantity", "value"],
                                list(summary.items())))
    if svg:
        lb = src.loss_budget
        stages, t = [], 1.0
        for label, f in (("components", lb.component_transmission), ("sHWP seam", 1 - lb.shwp_interface_loss),
                         ("knife edge", 1 - lb.knife_edge_loss), ("fiber", lb.fiber_coupling),
                         ("detector", lb.detector_efficiency)):
            t *= f
            stages.append((label, t))
        out.files.append(plotting.loss_budget_figure(os.path.join(out_dir, "rates_loss_budget.svg"), stages))
    return _finish(out_dir, "rates", out)


RUNNERS = {
    "interference": run_interference_scan,
    "chsh": run_chsh,
    "walkoff": run_walkoff,
    "sensitivity": run_sensitivity,
    "rates": run_rates,
}
