"""Uniaxial displacing elements: beam displacers and Savart plates.

Lengths are in millimeters, angles in radians and wavelengths in nanometers.
A beam displacer (BD) is a single calcite plate whose optic axis lies in the
plane spanned by the surface normal (z) and its transverse displacement axis;
the extraordinary ray walks off along that axis.  A Savart plate (SP) is two
such plates cemented together with displacement axes at +45 and 135 degrees.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional

import numpy as np

from . import polcalc
from .errors import InvalidArgument

logger = logging.getLogger(__name__)

CALCITE_N_O = 1.66
CALCITE_N_E = 1.49

# the +45 / 135 degree displacement directions of the two Savart half-plates
SP_AXIS_1 = (1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0))
SP_AXIS_2 = (-1.0 / np.sqrt(2.0), 1.0 / np.sqrt(2.0))

TILT_LIMIT = np.pi / 4


def _finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidArgument(f"non-finite argument: {v!r}")


def effective_index(alpha, beta, n_o, n_e):
    """Index seen by the extraordinary wave at angle ``alpha - beta`` from the optic axis."""
    _finite(alpha, beta, n_o, n_e)
    if n_o <= 1.0 or n_e <= 1.0:
        raise InvalidArgument("refractive indices must exceed 1")
    x = alpha - beta
    return 1.0 / np.sqrt(np.cos(x) ** 2 / n_o**2 + np.sin(x) ** 2 / n_e**2)


def walkoff_angle(n_o, n_e, beta):
    """Poynting-vector walkoff angle for a wave normal at ``beta`` from the optic axis."""
    _finite(n_o, n_e, beta)
    if n_o <= 1.0 or n_e <= 1.0:
        raise InvalidArgument("refractive indices must exceed 1")
    t = np.tan(beta)
    return float(np.arctan((n_o**2 - n_e**2) * t / (n_e**2 + n_o**2 * t**2)))


@dataclass(frozen=True)
class BirefringentPlate:
    n_o: float
    n_e: float
    cut_angle_beta: float
    thickness_d_o: float
    displacement_axis: tuple = (1.0, 0.0)
    measured_shear: Optional[float] = None

    def __post_init__(self):
        _finite(self.n_o, self.n_e, self.cut_angle_beta, self.thickness_d_o)
        if self.n_o <= 1.0 or self.n_e <= 1.0:
            raise InvalidArgument("refractive indices must exceed 1")
        if self.thickness_d_o <= 0.0:
            raise InvalidArgument("plate thickness must be positive")
        axis = np.asarray(self.displacement_axis, dtype=float)
        if axis.shape != (2,) or abs(np.hypot(*axis) - 1.0) > 1e-9:
            raise InvalidArgument("displacement_axis must be a transverse unit vector")
        object.__setattr__(self, "displacement_axis", (float(axis[0]), float(axis[1])))
        if self.measured_shear is not None:
            if not np.isfinite(self.measured_shear) or self.measured_shear < 0.0:
                raise InvalidArgument("measured shear must be finite and non-negative")
            derived = self.derived_shear
            if derived > 0 and abs(self.measured_shear - derived) > 0.01 * derived:
                logger.info(
                    "measured shear %.4f mm overrides geometric %.4f mm (d_o=%.3f mm)",
                    self.measured_shear, derived, self.thickness_d_o,
                )

    @property
    def derived_shear(self):
        return self.thickness_d_o * abs(np.tan(walkoff_angle(self.n_o, self.n_e, self.cut_angle_beta)))

    @property
    def shear(self):
        if self.measured_shear is not None:
            return self.measured_shear
        return self.derived_shear

    @property
    def deviation_angle(self):
        return float(np.arctan(self.shear / self.thickness_d_o))

    @property
    def extraordinary_path(self):
        return float(np.hypot(self.thickness_d_o, self.shear))

    def optic_axis(self):
        # tilt the axis so the e-ray walks toward +displacement_axis
        sign = -1.0 if self.n_o > self.n_e else 1.0
        ux, uy = self.displacement_axis
        s, c = np.sin(self.cut_angle_beta), np.cos(self.cut_angle_beta)
        return np.array([sign * s * ux, sign * s * uy, c])


def plate_from_shear(shear, n_o=CALCITE_N_O, n_e=CALCITE_N_E, beta=np.pi / 4,
                     displacement_axis=(1.0, 0.0)):
    """Plate whose geometric shear equals ``shear`` (thickness = shear / tan(rho))."""
    rho = walkoff_angle(n_o, n_e, beta)
    if rho == 0.0:
        raise InvalidArgument("an isotropic plate cannot produce a shear")
    return BirefringentPlate(n_o, n_e, beta, shear / abs(np.tan(rho)), displacement_axis)


@dataclass(frozen=True)
class SavartPlate:
    plate_1: BirefringentPlate
    plate_2: BirefringentPlate

    @classmethod
    def symmetric(cls, plate):
        return cls(replace(plate, displacement_axis=SP_AXIS_1),
                   replace(plate, displacement_axis=SP_AXIS_2))

    @classmethod
    def from_shear(cls, shear, n_o=CALCITE_N_O, n_e=CALCITE_N_E, beta=np.pi / 4):
        """Symmetric SP whose two output beams are separated by ``shear`` along x."""
        return cls.symmetric(plate_from_shear(shear / np.sqrt(2.0), n_o, n_e, beta))

    @property
    def thickness(self):
        return self.plate_1.thickness_d_o + self.plate_2.thickness_d_o

    @property
    def half_shear_delta(self):
        """Per-axis displacement delta: beams exit at (x +/- delta, y + delta)."""
        return 0.5 * self.shear

    @property
    def shear(self):
        u1 = np.asarray(self.plate_1.displacement_axis) * self.plate_1.shear
        u2 = np.asarray(self.plate_2.displacement_axis) * self.plate_2.shear
        return float(np.hypot(*(u1 - u2)))


@dataclass(frozen=True)
class TiltedElement:
    element: object
    yaw_tilt_theta: float
    wavelength: float
    # 2 for a photon pair sharing the path (biphoton phase)
    photon_number: int = field(default=1)

    def __post_init__(self):
        _finite(self.yaw_tilt_theta, self.wavelength)
        if abs(self.yaw_tilt_theta) >= TILT_LIMIT:
            raise InvalidArgument(f"tilt {self.yaw_tilt_theta} rad outside |theta| < pi/4")
        if self.wavelength <= 0.0:
            raise InvalidArgument("wavelength must be positive")


def bd_walkoff(plate):
    """Longitudinal walkoff d_o*n_o - d_e*n_eff(alpha, beta) of a beam displacer, in mm."""
    alpha = plate.deviation_angle
    n_eff = effective_index(alpha, plate.cut_angle_beta, plate.n_o, plate.n_e)
    return plate.thickness_d_o * plate.n_o - plate.extraordinary_path * n_eff


def sp_walkoff(sp):
    """Optical path difference between the two Savart-plate outputs, in mm.

    The + beam is extraordinary in plate 1 and ordinary in plate 2; the - beam
    the reverse, so the result is the difference of the two plate walkoffs.
    """
    return bd_walkoff(sp.plate_1) - bd_walkoff(sp.plate_2)


def _kz_ordinary(plate, nt):
    return np.sqrt(plate.n_o**2 - nt[0] ** 2 - nt[1] ** 2)


def _kz_extraordinary(plate, nt):
    # uniaxial index surface: (N.c)^2 (1/n_o^2 - 1/n_e^2) + |N|^2 / n_e^2 = 1
    c = plate.optic_axis()
    a_ = 1.0 / plate.n_o**2 - 1.0 / plate.n_e**2
    p = nt[0] * c[0] + nt[1] * c[1]
    qa = a_ * c[2] ** 2 + 1.0 / plate.n_e**2
    qb = 2.0 * a_ * p * c[2]
    qc = a_ * p * p + (nt[0] ** 2 + nt[1] ** 2) / plate.n_e**2 - 1.0
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        raise InvalidArgument("extraordinary wave is evanescent at this tilt")
    return (-qb + np.sqrt(disc)) / (2.0 * qa)


def extraordinary_wave_vector(plate, nt):
    """Internal normalized wave vector (N_x, N_y, N_z) of the e-wave for transverse index ``nt``."""
    return np.array([nt[0], nt[1], _kz_extraordinary(plate, nt)])


def ray_walkoff(plate, nt=(0.0, 0.0)):
    """Transverse e-ray displacement per unit thickness, from the group-velocity direction."""
    n = extraordinary_wave_vector(plate, nt)
    c = plate.optic_axis()
    a_ = 1.0 / plate.n_o**2 - 1.0 / plate.n_e**2
    grad = a_ * (n @ c) * c + n / plate.n_e**2
    return grad[:2] / grad[2]


def _segments(element):
    if isinstance(element, BirefringentPlate):
        return [(element, "e")], [(element, "o")]
    if isinstance(element, SavartPlate):
        return ([(element.plate_1, "e"), (element.plate_2, "o")],
                [(element.plate_1, "o"), (element.plate_2, "e")])
    raise InvalidArgument(f"unsupported element type {type(element).__name__}")


def reduced_optical_path(segments, theta):
    """Sum of t * N_z over the segments for a yaw tilt ``theta`` (mm).

    Snell refraction at the parallel faces conserves the transverse index
    sin(theta); N_z follows from the polarization-resolved index surface, so
    the sum is the optical path between common input and output wavefronts.
    """
    nt = (np.sin(theta), 0.0)
    total = 0.0
    for plate, pol in segments:
        kz = _kz_extraordinary(plate, nt) if pol == "e" else _kz_ordinary(plate, nt)
        total += plate.thickness_d_o * kz
    return total


def tilt_phase(te):
    """Relative phase between the + and - output beams of a yawed element, in radians."""
    plus, minus = _segments(te.element)
    k0 = 2.0 * np.pi / (te.wavelength * 1e-6)
    theta = te.yaw_tilt_theta
    return te.photon_number * k0 * (reduced_optical_path(plus, theta)
                                    - reduced_optical_path(minus, theta))


class Branch(NamedTuple):
    amplitude: complex
    polarization: np.ndarray
    position: tuple


def sp_split(input_polarization, position, delta, theta_phase=0.0):
    """Split a beam on a Savart plate into its |+> and |-> output branches.

    |+> leaves at (x + delta, y + delta), |-> at (x - delta, y + delta) with
    the extra phase ``theta_phase``.
    """
    pol = np.asarray(input_polarization, dtype=complex)
    if abs(polcalc.norm2(pol) - 1.0) > polcalc.NORM_TOL:
        raise InvalidArgument("input polarization must be normalized")
    x, y = position
    amp_p = complex(np.vdot(polcalc.PLUS, pol))
    amp_m = complex(np.vdot(polcalc.MINUS, pol)) * np.exp(1j * theta_phase)
    return [
        Branch(amp_p, polcalc.PLUS, (x + delta, y + delta)),
        Branch(amp_m, polcalc.MINUS, (x - delta, y + delta)),
    ]
