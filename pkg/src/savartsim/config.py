"""Scenario configuration: sectioned key-value text with units in the key names.

Example::

    [scenario]
    name = rates
    seed = 1
    output_directory = out/rates

    [source]
    pump_power_mw = 2.6

Every key is optional except ``scenario.name``; unknown sections or keys
are rejected, and physical parameters are validated on load.
"""

import configparser
import dataclasses
import math
from dataclasses import dataclass, field

from . import birefringence as bf
from . import pipeline as pl
from .errors import ConfigError, InvalidArgument

SCENARIOS = ("interference", "chsh", "walkoff", "sensitivity", "rates")


@dataclass
class ScenarioSection:
    name: str = ""
    seed: int = 20240101
    output_directory: str = "out"


@dataclass
class SourceSection:
    pump_power_mw: float = 2.6
    pair_generation_rate_per_mw: float = 4.06e6
    tilt_theta_rad: float = 0.0
    intrinsic_visibility: float = 0.99
    component_transmission: float = 0.78
    shwp_interface_loss: float = 0.10
    knife_edge_loss: float = 0.15
    fiber_coupling: float = 0.67
    detector_efficiency: float = 0.60
    spdc_fwhm_nm: float = 22.0
    filter_fwhm_nm: float = 10.0
    signal_wavelength_nm: float = 810.0
    sp2_shear_mm: float = 1.0
    n_o: float = bf.CALCITE_N_O
    n_e: float = bf.CALCITE_N_E

    def to_source_config(self):
        return pl.SourceConfig(
            pump_power=self.pump_power_mw,
            pair_generation_rate_per_mw=self.pair_generation_rate_per_mw,
            tilt_theta=self.tilt_theta_rad,
            intrinsic_visibility=self.intrinsic_visibility,
            loss_budget=pl.LossBudget(self.component_transmission, self.shwp_interface_loss,
                                      self.knife_edge_loss, self.fiber_coupling,
                                      self.detector_efficiency),
            spectral=pl.SpectralFilter(self.spdc_fwhm_nm, self.filter_fwhm_nm),
            sp2_shear=self.sp2_shear_mm,
            n_o=self.n_o,
            n_e=self.n_e,
            signal_wavelength=self.signal_wavelength_nm,
        )


@dataclass
class DetectionSection:
    window_ns: float = 1.0
    duration_s: float = 1.0
    accidental_scale: float = 1.0
    dark_rate_cps: float = 0.0
    dead_time_ns: float = 0.0


@dataclass
class ScanSection:
    theta_start_mrad: float = -1.0
    theta_stop_mrad: float = 1.0
    points: int = 81


@dataclass
class ChshSection:
    mode: str = "monte_carlo"
    delta_a_points: int = 32


@dataclass
class WalkoffSection:
    n_o: float = bf.CALCITE_N_O
    n_e: float = bf.CALCITE_N_E
    cut_angle_deg: float = 45.0
    uv_wavelength_nm: float = 405.0
    nir_wavelength_nm: float = 810.0
    bd_uv_thickness_mm: float = 8.73
    bd_uv_shear_mm: float = 1.010
    sp_uv_shear_mm: float = 0.972
    bd_nir_thickness_mm: float = 11.26
    collimated_diameter_mm: float = 1.4
    focal_length_mm: float = 150.0
    waist_radius_um: float = 10.0
    scan_half_range_zr: float = 5.0
    scan_points: int = 41
    radius_noise_um: float = 1.5


@dataclass
class SensitivitySection:
    n_o: float = bf.CALCITE_N_O
    n_e: float = bf.CALCITE_N_E
    wavelength_nm: float = 775.0
    shear_mm: float = 1.2
    pivot_distance_mm: float = 80.0
    motor_start_um: float = 0.0
    motor_stop_um: float = 3000.0
    points: int = 401
    fringe_visibility: float = 0.9
    intensity_noise: float = 0.01
    # "savart" compares an SP against the BD; "beam_displacer" compares the BD with itself
    test_element: str = "savart"


SECTION_TYPES = {
    "scenario": ScenarioSection,
    "source": SourceSection,
    "detection": DetectionSection,
    "scan": ScanSection,
    "chsh": ChshSection,
    "walkoff": WalkoffSection,
    "sensitivity": SensitivitySection,
}

ALLOWED_SECTIONS = {
    "interference": ("scenario", "source", "detection", "scan"),
    "chsh": ("scenario", "source", "detection", "chsh"),
    "walkoff": ("scenario", "walkoff"),
    "sensitivity": ("scenario", "sensitivity"),
    "rates": ("scenario", "source", "detection"),
}


@dataclass
class ScenarioConfig:
    scenario: ScenarioSection
    sections: dict = field(default_factory=dict)

    @property
    def name(self):
        return self.scenario.name

    @property
    def seed(self):
        return self.scenario.seed

    def section(self, key):
        return self.sections[key]


def _convert(raw, typ, where):
    try:
        if typ is int:
            return int(raw, 0)
        if typ is float:
            value = float(raw)
            if not math.isfinite(value):
                raise ValueError("non-finite")
            return value
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {typ.__name__}") from exc


def _build_section(name, items):
    cls = SECTION_TYPES[name]
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, raw in items:
        if key not in known:
            raise ConfigError(f"unknown key [{name}] {key}")
        typ = known[key].type
        typ = {"float": float, "int": int, "str": str}.get(typ, typ)
        kwargs[key] = _convert(raw, typ, f"[{name}] {key}")
    return cls(**kwargs)


def _validate(cfg):
    sc = cfg.scenario
    if sc.name not in SCENARIOS:
        raise ConfigError(f"unknown scenario {sc.name!r}; expected one of {', '.join(SCENARIOS)}")
    if not 0 <= sc.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    try:
        if "source" in cfg.sections:
            cfg.sections["source"].to_source_config()
        det = cfg.sections.get("detection")
        if det is not None:
            for k, v in dataclasses.asdict(det).items():
                if v < 0:
                    raise InvalidArgument(f"[detection] {k} must be non-negative")
        scan = cfg.sections.get("scan")
        if scan is not None and scan.points < 5:
            raise InvalidArgument("[scan] points must be >= 5")
        chsh = cfg.sections.get("chsh")
        if chsh is not None:
            if chsh.mode not in ("monte_carlo", "analytic"):
                raise InvalidArgument("[chsh] mode must be monte_carlo or analytic")
            if chsh.delta_a_points < 4:
                raise InvalidArgument("[chsh] delta_a_points must be >= 4")
        wo = cfg.sections.get("walkoff")
        if wo is not None:
            if min(wo.n_o, wo.n_e) <= 1 or wo.radius_noise_um < 0 or wo.scan_points < 5:
                raise InvalidArgument("[walkoff] invalid indices, noise or scan size")
            for k in ("bd_uv_thickness_mm", "bd_nir_thickness_mm", "bd_uv_shear_mm", "sp_uv_shear_mm",
                      "waist_radius_um", "focal_length_mm", "uv_wavelength_nm", "nir_wavelength_nm"):
                if getattr(wo, k) <= 0:
                    raise InvalidArgument(f"[walkoff] {k} must be positive")
        se = cfg.sections.get("sensitivity")
        if se is not None:
            if se.test_element not in ("savart", "beam_displacer"):
                raise InvalidArgument("[sensitivity] test_element must be savart or beam_displacer")
            if se.points < 5 or se.motor_stop_um <= se.motor_start_um or se.pivot_distance_mm <= 0:
                raise InvalidArgument("[sensitivity] invalid motor scan")
            if not 0 <= se.fringe_visibility <= 1 or se.intensity_noise < 0 or se.shear_mm <= 0:
                raise InvalidArgument("[sensitivity] invalid fringe parameters")
    except InvalidArgument as exc:
        raise ConfigError(str(exc)) from exc


def parse_config(text, scenario=None):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    if "scenario" not in parser:
        raise ConfigError("missing [scenario] section")
    scen = _build_section("scenario", parser.items("scenario"))
    name = scen.name or (scenario or "")
    if scenario is not None and name != scenario:
        raise ConfigError(f"config is for scenario {name!r}, not {scenario!r}")
    scen.name = name
    if name not in ALLOWED_SECTIONS:
        raise ConfigError(f"unknown scenario {name!r}")
    allowed = ALLOWED_SECTIONS[name]
    sections = {}
    for sec in parser.sections():
        if sec == "scenario":
            continue
        if sec not in allowed:
            raise ConfigError(f"section [{sec}] not valid for scenario {name!r}")
        sections[sec] = _build_section(sec, parser.items(sec))
    for sec in allowed:
        if sec != "scenario" and sec not in sections:
            sections[sec] = SECTION_TYPES[sec]()
    cfg = ScenarioConfig(scen, sections)
    _validate(cfg)
    return cfg


def load_config(path, scenario=None):
    with open(path) as fh:
        return parse_config(fh.read(), scenario)


def dump_config(cfg):
    """Effective (post-default) configuration as text; reloading reproduces ``cfg``."""
    lines = []
    for name, sec in [("scenario", cfg.scenario)] + list(cfg.sections.items()):
        lines.append(f"[{name}]")
        for f in dataclasses.fields(sec):
            v = getattr(sec, f.name)
            lines.append(f"{f.name} = {repr(v) if isinstance(v, float) else v}")
        lines.append("")
    return "\n".join(lines)
