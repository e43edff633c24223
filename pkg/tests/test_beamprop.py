import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from savartsim import beamprop as bp
from savartsim import birefringence as bf
from savartsim.errors import FitFailure, InvalidArgument


def scan_for(beam, n=41, half_zr=5.0, noise=0.0, seed=0):
    zr = beam.rayleigh_range
    z = np.linspace(beam.waist_position_z0 - half_zr * zr, beam.waist_position_z0 + half_zr * zr, n)
    w = bp.beam_radius(beam, z)
    if noise:
        w = np.abs(w + np.random.default_rng(seed).normal(0, noise, n))
    return bp.WaistScan(z, w, noise)


def test_beam_radius_trivial_points():
    beam = bp.GaussianBeam(405.0, 10.0, 3.0)
    assert bp.beam_radius(beam, 3.0) == pytest.approx(10.0)
    assert bp.beam_radius(beam, 3.0 + beam.rayleigh_range) == pytest.approx(10.0 * math.sqrt(2))


def test_beam_radius_direct_evaluation():
    # z_R = pi (10 um)^2 / 405 nm = 0.7757 mm; w(1 mm) = 10 sqrt(1 + (1/0.7757)^2)
    beam = bp.GaussianBeam(405.0, 10.0)
    assert beam.rayleigh_range == pytest.approx(0.775702, abs=1e-6)
    assert bp.beam_radius(beam, 1.0) == pytest.approx(16.3154, abs=1e-4)


def test_focused_waist_thin_lens():
    # 405 nm, f = 150 mm, 1.4 mm collimated diameter
    assert bp.focused_waist(405.0, 150.0, 0.7) == pytest.approx(27.62, abs=0.01)


def test_gaussian_beam_validation():
    with pytest.raises(InvalidArgument):
        bp.GaussianBeam(405.0, 0.0)
    with pytest.raises(InvalidArgument):
        bp.WaistScan(np.arange(4.0), np.ones(4))
    with pytest.raises(InvalidArgument):
        bp.WaistScan(np.arange(5.0), np.array([1, 1, 0, 1, 1.0]))


@given(st.floats(3.0, 60.0), st.floats(-20.0, 20.0), st.floats(350.0, 1600.0))
def test_fit_roundtrip(w0, z0, lam):
    beam = bp.GaussianBeam(lam, w0, z0)
    fit = bp.fit_waist(scan_for(beam), lam)
    assert fit.beam.waist_radius_w0 == pytest.approx(w0, abs=1e-9)
    assert fit.beam.waist_position_z0 == pytest.approx(z0, abs=1e-9)


@given(st.floats(-100.0, 100.0))
def test_fit_translation_invariance(c):
    scan = scan_for(bp.GaussianBeam(405.0, 10.0, 0.3), noise=1.0, seed=4)
    shifted = bp.WaistScan(scan.z_positions + c, scan.beam_radii, scan.radius_noise_sigma)
    a, b = bp.fit_waist(scan, 405.0), bp.fit_waist(shifted, 405.0)
    assert b.beam.waist_position_z0 - a.beam.waist_position_z0 == pytest.approx(c, abs=1e-9)
    assert b.beam.waist_radius_w0 == pytest.approx(a.beam.waist_radius_w0, abs=1e-10)


def test_fit_coverage_monte_carlo():
    beam = bp.GaussianBeam(405.0, 10.0, 150.0)
    hits = 0
    for seed in range(1000):
        fit = bp.fit_waist(scan_for(beam, noise=2.0, seed=seed), 405.0)
        if abs(fit.beam.waist_position_z0 - 150.0) <= 3 * fit.z0_error:
            hits += 1
    assert hits >= 950


def test_one_sided_scan_warns():
    beam = bp.GaussianBeam(405.0, 10.0, 0.0)
    z = np.linspace(1.0, 5.0, 11)
    scan = bp.WaistScan(z, bp.beam_radius(beam, z))
    with pytest.warns(RuntimeWarning):
        fit = bp.fit_waist(scan, 405.0)
    assert fit.warnings and "ill-conditioned" in fit.warnings[0]


def test_fit_failure_carries_residual():
    z = np.linspace(-1, 1, 9)
    scan = bp.WaistScan(z, np.array([5, 40, 3, 60, 2, 70, 1, 80, 3.0]), 0.1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            bp.fit_waist(scan, 405.0)
        except FitFailure as exc:
            assert exc.residual_norm is None or exc.residual_norm >= 0


def test_csv_roundtrip(tmp_path):
    scan = scan_for(bp.GaussianBeam(810.0, 12.0, 1.0), noise=0.5, seed=1)
    path = tmp_path / "scan.csv"
    scan.to_csv(path)
    assert path.read_text().splitlines()[0] == "z_mm,w_um"
    back = bp.WaistScan.from_csv(path)
    assert np.allclose(back.z_positions, scan.z_positions, rtol=1e-8)
    assert np.allclose(back.beam_radii, scan.beam_radii, rtol=1e-8)


def uv_bd():
    return bf.BirefringentPlate(bf.CALCITE_N_O, bf.CALCITE_N_E, np.pi / 4, 8.73, measured_shear=1.010)


def test_walkoff_experiment_noiseless_recovers_model():
    plate = uv_bd()
    o, e = bp.walkoff_experiment(plate, bp.WalkoffSetup(), 0.0, seed=1)
    fo, fe = bp.fit_waist(o, 405.0), bp.fit_waist(e, 405.0)
    sep = fe.beam.waist_position_z0 - fo.beam.waist_position_z0
    assert sep == pytest.approx(bf.bd_walkoff(plate), abs=1e-9)


def test_walkoff_experiment_savart_noiseless_zero():
    sp = bf.SavartPlate.from_shear(0.972)
    o, e = bp.walkoff_experiment(sp, bp.WalkoffSetup(), 0.0, seed=1)
    sep = bp.fit_waist(e, 405.0).beam.waist_position_z0 - bp.fit_waist(o, 405.0).beam.waist_position_z0
    assert abs(sep) < 1e-9


def test_walkoff_experiment_reproducible():
    a = bp.walkoff_experiment(uv_bd(), bp.WalkoffSetup(), 1.5, seed=42)
    b = bp.walkoff_experiment(uv_bd(), bp.WalkoffSetup(), 1.5, seed=42)
    for x, y in zip(a, b):
        assert np.array_equal(x.beam_radii, y.beam_radii)
        assert np.array_equal(x.z_positions, y.z_positions)


def test_walkoff_experiment_within_two_sigma_of_model():
    plate = uv_bd()
    o, e = bp.walkoff_experiment(plate, bp.WalkoffSetup(), 1.5, seed=7)
    fo, fe = bp.fit_waist(o, 405.0), bp.fit_waist(e, 405.0)
    sep = fe.beam.waist_position_z0 - fo.beam.waist_position_z0
    assert abs(sep - bf.bd_walkoff(plate)) <= 2 * math.hypot(fo.z0_error, fe.z0_error)


def test_walkoff_experiment_element_must_fit():
    with pytest.raises(InvalidArgument):
        bp.walkoff_experiment(uv_bd(), bp.WalkoffSetup(focal_length=5.0), 0.0, seed=1)
