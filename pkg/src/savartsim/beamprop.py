"""Gaussian beam propagation and waist-scan fitting.

Units: z in mm, beam radii (1/e^2) in micrometers, wavelength in nm.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import birefringence as bf
from .errors import FitFailure, InvalidArgument
from .fitting import levenberg_marquardt


@dataclass(frozen=True)
class GaussianBeam:
    wavelength: float
    waist_radius_w0: float
    waist_position_z0: float = 0.0

    def __post_init__(self):
        if not (self.wavelength > 0 and self.waist_radius_w0 > 0):
            raise InvalidArgument("wavelength and waist radius must be positive")
        if not np.isfinite(self.waist_position_z0):
            raise InvalidArgument("waist position must be finite")

    @property
    def rayleigh_range(self):
        return rayleigh_range(self.waist_radius_w0, self.wavelength)


def rayleigh_range(w0_um, wavelength_nm):
    """z_R = pi w0^2 / lambda, in mm."""
    return np.pi * (w0_um * 1e-3) ** 2 / (wavelength_nm * 1e-6)


def beam_radius(beam, z):
    zr = beam.rayleigh_range
    return beam.waist_radius_w0 * np.sqrt(1.0 + ((np.asarray(z) - beam.waist_position_z0) / zr) ** 2)


def focused_waist(wavelength_nm, focal_length_mm, input_radius_mm):
    """Thin-lens focus w0 = lambda f / (pi w_in), returned in micrometers."""
    return wavelength_nm * 1e-6 * focal_length_mm / (np.pi * input_radius_mm) * 1e3


@dataclass(frozen=True)
class WaistScan:
    z_positions: np.ndarray
    beam_radii: np.ndarray
    radius_noise_sigma: float = 0.0

    def __post_init__(self):
        z = np.asarray(self.z_positions, dtype=float)
        w = np.asarray(self.beam_radii, dtype=float)
        if z.shape != w.shape or z.ndim != 1 or len(z) < 5:
            raise InvalidArgument("a waist scan needs >= 5 paired (z, w) samples")
        if np.any(w <= 0):
            raise InvalidArgument("beam radii must be positive")
        object.__setattr__(self, "z_positions", z)
        object.__setattr__(self, "beam_radii", w)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["z_mm", "w_um"])
            for z, w in zip(self.z_positions, self.beam_radii):
                writer.writerow([f"{z:.9g}", f"{w:.9g}"])

    @classmethod
    def from_csv(cls, path, radius_noise_sigma=0.0):
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls(np.array([float(r["z_mm"]) for r in rows]),
                   np.array([float(r["w_um"]) for r in rows]), radius_noise_sigma)


@dataclass
class WaistFit:
    beam: GaussianBeam
    w0_error: float
    z0_error: float
    residual_norm: float
    iterations: int
    warnings: list = field(default_factory=list)


def fit_waist(scan, wavelength):
    """Least-squares fit of (w0, z0) to a waist scan at a known wavelength."""
    # fit in centered coordinates so the result is translation invariant
    z_ref = 0.5 * (scan.z_positions.min() + scan.z_positions.max())
    z, w = scan.z_positions - z_ref, scan.beam_radii
    sigma = scan.radius_noise_sigma if scan.radius_noise_sigma > 0 else 1.0
    lam_mm = wavelength * 1e-6

    def model(p):
        w0, z0 = p
        zr = np.pi * (w0 * 1e-3) ** 2 / lam_mm
        return w0 * np.sqrt(1.0 + ((z - z0) / zr) ** 2), zr

    def residuals(p):
        return (model(p)[0] - w) / sigma

    def jacobian(p):
        w0, z0 = p
        wz, zr = model(p)
        u = (z - z0) / zr
        # dzr/dw0 = 2 zr / w0
        dw_dw0 = (1.0 + u**2 - 2.0 * u**2) / np.sqrt(1.0 + u**2)
        dw_dz0 = -w0 * u / (zr * np.sqrt(1.0 + u**2))
        return np.column_stack([dw_dw0, dw_dz0]) / sigma

    notes = []
    i_min = int(np.argmin(w))
    if i_min == 0 or i_min == len(w) - 1:
        notes.append("ill-conditioned: scan does not span both sides of the waist")
        warnings.warn(notes[-1], RuntimeWarning, stacklevel=2)
    p0 = np.array([w[i_min], z[i_min]])
    # noisy hyperbolas converge only linearly, so a tight step tolerance keeps
    # the result reproducible to ~1e-12 under z translation
    res = levenberg_marquardt(residuals, jacobian, p0, step_tol=1e-13,
                              scale_covariance=scan.radius_noise_sigma <= 0)
    w0, z0 = res.params
    if w0 <= 0:
        raise FitFailure("fit converged to a non-physical waist", residual_norm=res.residual_norm)
    err = np.sqrt(np.abs(np.diag(res.covariance)))
    return WaistFit(GaussianBeam(wavelength, float(w0), float(z0 + z_ref)), float(err[0]), float(err[1]),
                    res.residual_norm, res.iterations, notes)


@dataclass(frozen=True)
class WalkoffSetup:
    collimated_diameter: float = 1.4
    focal_length: float = 150.0
    wavelength: float = 405.0
    # focused 1/e^2 radius; configured directly rather than derived from the lens
    waist_radius: float = 10.0
    scan_half_range_zr: float = 5.0
    scan_points: int = 41


def element_walkoff(element):
    if isinstance(element, bf.SavartPlate):
        return bf.sp_walkoff(element)
    return bf.bd_walkoff(element)


def element_thickness(element):
    if isinstance(element, bf.SavartPlate):
        return element.thickness
    return element.thickness_d_o


def walkoff_experiment(element, setup, noise, seed):
    """Synthetic waist scans of the ordinary and extraordinary beams behind ``element``.

    The element sits midway between the lens and the focus; the
    extraordinary focus is displaced by the model walkoff. Returns
    ``(ordinary_scan, extraordinary_scan)``.
    """
    if element_thickness(element) >= setup.focal_length:
        raise InvalidArgument(
            f"element ({element_thickness(element):.3g} mm) does not fit between lens and "
            f"waist ({setup.focal_length:.3g} mm)")
    if noise < 0:
        raise InvalidArgument("noise must be non-negative")
    dz = element_walkoff(element)
    zr = rayleigh_range(setup.waist_radius, setup.wavelength)
    half = setup.scan_half_range_zr * zr
    z_focus = setup.focal_length
    z = np.linspace(z_focus - half, z_focus + half + dz, setup.scan_points)
    rng = np.random.default_rng(seed)
    scans = []
    for z0 in (z_focus, z_focus + dz):
        beam = GaussianBeam(setup.wavelength, setup.waist_radius, z0)
        w = beam_radius(beam, z)
        if noise > 0:
            w = np.abs(w + rng.normal(0.0, noise, size=w.shape))
        scans.append(WaistScan(z, w, noise))
    return tuple(scans)
