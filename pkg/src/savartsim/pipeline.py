"""Source model: pump -> SP1 -> sHWP1 -> type-0 SPDC -> sHWP2 -> SP2(theta).

Path-resolved states are dicts mapping the spatial mode ("L" or "R") to a
Jones vector (pump) or two-photon amplitude vector (pairs).  SP2 merges the
two modes, so the final state is an ordinary two-photon polarization state.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

import numpy as np

from . import birefringence as bf
from . import polcalc as pc
from .errors import InvalidArgument

SIGNAL_WAVELENGTH_NM = 810.0
PUMP_WAVELENGTH_NM = 405.0


@dataclass(frozen=True)
class LossBudget:
    component_transmission: float = 0.78
    shwp_interface_loss: float = 0.10
    knife_edge_loss: float = 0.15
    fiber_coupling: float = 0.67
    detector_efficiency: float = 0.60

    def __post_init__(self):
        for name, value in vars(self).items():
            if not 0.0 <= value <= 1.0:
                raise InvalidArgument(f"{name} must lie in [0, 1], got {value}")

    def arm_transmission(self):
        return (self.component_transmission * (1.0 - self.shwp_interface_loss)
                * (1.0 - self.knife_edge_loss) * self.fiber_coupling * self.detector_efficiency)


@dataclass(frozen=True)
class SpectralFilter:
    spdc_fwhm: float = 22.0
    filter_fwhm: float = 10.0


@dataclass(frozen=True)
class SourceConfig:
    pump_power: float = 2.6
    # pairs/(s mW) generated inside the crystal, before filtering and losses
    pair_generation_rate_per_mw: float = 4.06e6
    tilt_theta: float = 0.0
    intrinsic_visibility: float = 0.99
    loss_budget: LossBudget = field(default_factory=LossBudget)
    spectral: SpectralFilter = field(default_factory=SpectralFilter)
    sp2_shear: float = 1.0
    n_o: float = bf.CALCITE_N_O
    n_e: float = bf.CALCITE_N_E
    signal_wavelength: float = SIGNAL_WAVELENGTH_NM

    def __post_init__(self):
        if self.pump_power < 0 or self.pair_generation_rate_per_mw < 0:
            raise InvalidArgument("rates and pump power must be non-negative")
        if not 0.0 <= self.intrinsic_visibility <= 1.0:
            raise InvalidArgument("intrinsic visibility must lie in [0, 1]")
        if abs(self.tilt_theta) >= bf.TILT_LIMIT:
            raise InvalidArgument("SP2 tilt outside |theta| < pi/4")

    def sp2(self):
        return bf.SavartPlate.from_shear(self.sp2_shear, self.n_o, self.n_e)

    def tilted_sp2(self, theta=None):
        theta = self.tilt_theta if theta is None else theta
        return bf.TiltedElement(self.sp2(), theta, self.signal_wavelength, photon_number=2)


def sp2_phase(cfg, theta=None):
    """Biphoton phase between the |++> and |--> paths for SP2 tilted by ``theta``."""
    return bf.tilt_phase(cfg.tilted_sp2(theta))


class TraceStep(NamedTuple):
    label: str
    modes: dict


def _sp_split_modes(pol):
    # L carries |+>, R carries |->; SP1 is untilted
    branches = bf.sp_split(pol, (0.0, 0.0), 0.5)
    return {"L": branches[0].amplitude * branches[0].polarization,
            "R": branches[1].amplitude * branches[1].polarization}


def evolve_state(cfg, trace=None):
    """Two-photon output state; labeled intermediate states are appended to ``trace``."""
    if trace is None:
        trace = []
    pump = pc.V
    trace.append(TraceStep("pump", {"C": pump}))

    modes = _sp_split_modes(pump)
    trace.append(TraceStep("SP1", modes))

    # segmented HWP: L half at -22.5 deg rotates |+> to V, R half at +22.5 deg rotates |-> to V
    shwp1 = {"L": pc.hwp(-np.pi / 8), "R": pc.hwp(np.pi / 8)}
    modes = {k: shwp1[k] @ v for k, v in modes.items()}
    trace.append(TraceStep("sHWP1", modes))

    # type-0 SPDC: only the V pump component is phase-matched; V -> VV
    pairs = {k: v[1] * pc.ket(pc.V, pc.V) for k, v in modes.items()}
    norm = math.sqrt(sum(pc.norm2(v) for v in pairs.values()))
    pairs = {k: v / norm for k, v in pairs.items()}
    trace.append(TraceStep("SPDC", pairs))

    shwp2 = {"L": pc.hwp(-np.pi / 8), "R": pc.hwp(np.pi / 8)}
    pairs = {k: pc.tensor_apply(shwp2[k], shwp2[k], v) for k, v in pairs.items()}
    trace.append(TraceStep("sHWP2", pairs))

    phi = sp2_phase(cfg)
    out = pairs["L"] + np.exp(1j * phi) * pairs["R"]
    trace.append(TraceStep("SP2", {"C": out}))
    return out


def interference_probability(cfg, theta):
    """Normalized two-photon H/H coincidence probability (1 + V cos phi)/2.

    The pure-state H/H projection of Phi(phi) peaks at 1/2; renormalizing by
    that peak and degrading with the intrinsic visibility gives the fringe.
    """
    state = pc.bell_phi(sp2_phase(cfg, theta))
    v = cfg.intrinsic_visibility
    p_pure = 2.0 * pc.project(state, pc.H, pc.H)
    return v * p_pure + (1.0 - v) * 0.5


def interference_scan(cfg, theta_grid):
    theta_grid = list(theta_grid)
    if not theta_grid:
        raise InvalidArgument("theta grid must be non-empty")
    return [(float(t), float(interference_probability(cfg, t))) for t in theta_grid]


def spectral_filter_factor(spdc_fwhm, filter_fwhm):
    """Fraction of a Gaussian spectrum passing a centered flat-top filter."""
    if spdc_fwhm <= 0 or filter_fwhm <= 0:
        raise InvalidArgument("bandwidths must be positive")
    return math.erf(math.sqrt(math.log(2.0)) * filter_fwhm / spdc_fwhm)


@dataclass(frozen=True)
class RateReport:
    singles_a: float
    singles_b: float
    coincidences: float
    heralding_eta: float
    detected_brightness: float
    emitted_brightness: float
    pump_power: float
    spectral_factor: float

    @property
    def summed_singles(self):
        return self.singles_a + self.singles_b

    @property
    def heralding_eta_geometric(self):
        """CC / sqrt(S_A S_B), the per-arm heralding convention."""
        denom = math.sqrt(self.singles_a * self.singles_b)
        return self.coincidences / denom if denom > 0 else 0.0


def rate_report(cfg):
    """Detected rates and brightness.

    Pairs carry the spectral filter factor once (degenerate pairs pass or
    fail the symmetric filter together); each arm then applies the loss
    budget.  Heralding is eta = CC / (S_A + S_B), the summed-singles
    convention under which the reported 12 % is reproduced.
    """
    lb = cfg.loss_budget
    f_spec = spectral_filter_factor(cfg.spectral.spdc_fwhm, cfg.spectral.filter_fwhm)
    generated = cfg.pair_generation_rate_per_mw * cfg.pump_power * f_spec
    t_arm = lb.arm_transmission()
    singles = generated * t_arm
    cc = generated * t_arm * t_arm
    if cfg.pump_power == 0 or cc == 0:
        return RateReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, cfg.pump_power, f_spec)
    eta = cc / (2.0 * singles)
    detected = cc / cfg.pump_power
    return RateReport(singles, singles, cc, eta, detected, detected / eta**2, cfg.pump_power, f_spec)


class Route(str, Enum):
    ALICE = "to_alice"
    BOB = "to_bob"
    LOST = "lost"


def knife_edge_split(pair_momentum_sign, edge_loss, rng=None):
    """Route a (signal, idler) pair at the knife-edge mirror.

    The signal photon with +x momentum goes to Alice and its anticorrelated
    partner to Bob (reversed for -x); each photon is independently lost with
    probability ``edge_loss``.  On-edge pairs (sign 0) are lost.
    """
    if not 0.0 <= edge_loss <= 1.0:
        raise InvalidArgument("edge_loss must lie in [0, 1]")
    if pair_momentum_sign == 0:
        return Route.LOST, Route.LOST
    routes = (Route.ALICE, Route.BOB) if pair_momentum_sign > 0 else (Route.BOB, Route.ALICE)
    if edge_loss == 0.0:
        return routes
    rng = np.random.default_rng() if rng is None else rng
    lost = rng.random(2) < edge_loss
    return tuple(Route.LOST if l else r for r, l in zip(routes, lost))


def pair_survival(edge_loss):
    return (1.0 - edge_loss) ** 2
