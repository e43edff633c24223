"""Photon-counting statistics: setting probabilities, Poisson counts, accidentals."""

import csv
import math
from dataclasses import dataclass, fields

import numpy as np

from . import polcalc as pc
from .errors import InvalidArgument

CHANNEL_POL = {1: pc.H, 2: pc.V}
LC_AXIS = np.pi / 4

RECORD_COLUMNS = ["setting_delta_a_rad", "setting_delta_b_rad", "ch_a", "ch_b",
                  "duration_s", "singles_a", "singles_b", "cc", "acc"]


@dataclass(frozen=True)
class MeasurementSetting:
    alice_lc_phase: float
    bob_lc_phase: float
    alice_channel: int = 1
    bob_channel: int = 1

    def __post_init__(self):
        if self.alice_channel not in (1, 2) or self.bob_channel not in (1, 2):
            raise InvalidArgument("channels must be 1 (H) or 2 (V)")


@dataclass(frozen=True)
class CountRecord:
    duration: float
    singles_a: int
    singles_b: int
    coincidences: int
    accidental_estimate: float

    def __post_init__(self):
        for f in fields(self):
            if getattr(self, f.name) < 0:
                raise InvalidArgument(f"{f.name} must be non-negative")
        if self.coincidences > min(self.singles_a, self.singles_b):
            raise InvalidArgument("coincidences cannot exceed either singles count")


@dataclass(frozen=True)
class CountRates:
    pair_rate: float
    singles_a_rate: float
    singles_b_rate: float
    accidental_scale: float = 1.0
    dark_rate: float = 0.0
    dead_time: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if not np.isfinite(v) or v < 0:
                raise InvalidArgument(f"{f.name} must be finite and non-negative")


def lc_chain(delta):
    """Liquid-crystal retarder at 45 deg with retardance ``delta``."""
    return pc.waveplate(delta, LC_AXIS)


def ideal_setting_probability(state, setting):
    evolved = pc.tensor_apply(lc_chain(setting.alice_lc_phase), lc_chain(setting.bob_lc_phase), state)
    return pc.project(evolved, CHANNEL_POL[setting.alice_channel], CHANNEL_POL[setting.bob_channel])


def setting_probability(state, setting, visibility=1.0):
    """Coincidence probability for one setting, mixed with white noise at 1 - visibility."""
    if not 0.0 <= visibility <= 1.0:
        raise InvalidArgument("visibility must lie in [0, 1]")
    p_ideal = ideal_setting_probability(state, setting)
    # any local unitary maps I/4 to itself, so each product projection is 1/4
    return visibility * p_ideal + (1.0 - visibility) * 0.25


def marginal_probabilities(state, setting, visibility=1.0):
    """(P_A, P_B) for the single-arm projections selected by ``setting``."""
    pa = sum(setting_probability(state, MeasurementSetting(setting.alice_lc_phase, setting.bob_lc_phase,
                                                           setting.alice_channel, cb), visibility)
             for cb in (1, 2))
    pb = sum(setting_probability(state, MeasurementSetting(setting.alice_lc_phase, setting.bob_lc_phase,
                                                           ca, setting.bob_channel), visibility)
             for ca in (1, 2))
    return pa, pb


def accidental_mean(singles_a_rate, singles_b_rate, window_tau, duration, scale=1.0):
    """Expected accidentals scale * S_A * S_B * tau * T (single-sided window)."""
    return scale * singles_a_rate * singles_b_rate * window_tau * duration


def _dead_time_factor(rate, dead_time):
    # non-paralyzable detector
    return 1.0 / (1.0 + rate * dead_time)


def simulate_counts(prob, rates, duration, window_tau, seed, setting_index=None):
    """Draw one CountRecord.

    True coincidences ~ Poisson(pair_rate * prob * T); accidentals ~
    Poisson(scale * S_A * S_B * tau * T).  Singles are the recorded
    coincidences plus independent Poisson background up to the requested
    singles means, so coincidences never exceed either singles count.  The
    accidental estimate is computed from the measured singles, as an
    experimenter would.  ``setting_index`` derives an order-independent
    substream from ``seed``.
    """
    if duration < 0:
        raise InvalidArgument("duration must be non-negative")
    if not 0.0 <= prob <= 1.0:
        raise InvalidArgument("probability must lie in [0, 1]")
    if window_tau < 0:
        raise InvalidArgument("coincidence window must be non-negative")
    if duration == 0:
        return CountRecord(0.0, 0, 0, 0, 0.0)
    entropy = [int(seed)] if setting_index is None else [int(seed), int(setting_index)]
    rng = np.random.default_rng(np.random.SeedSequence(entropy))

    sa = rates.singles_a_rate + rates.dark_rate
    sb = rates.singles_b_rate + rates.dark_rate
    fa = _dead_time_factor(sa, rates.dead_time)
    fb = _dead_time_factor(sb, rates.dead_time)
    sa, sb = sa * fa, sb * fb
    true_mean = rates.pair_rate * prob * duration * fa * fb
    acc_mean = accidental_mean(sa, sb, window_tau, duration, rates.accidental_scale)

    cc = int(rng.poisson(true_mean)) + int(rng.poisson(acc_mean))
    extra_a = max(sa * duration - true_mean - acc_mean, 0.0)
    extra_b = max(sb * duration - true_mean - acc_mean, 0.0)
    singles_a = cc + int(rng.poisson(extra_a))
    singles_b = cc + int(rng.poisson(extra_b))
    acc_est = accidental_mean(singles_a / duration, singles_b / duration, window_tau, duration,
                              rates.accidental_scale)
    return CountRecord(float(duration), singles_a, singles_b, cc, float(acc_est))


def subtract_accidentals(rec):
    """(coincidences - accidentals, sqrt(coincidences + accidentals)); negatives are kept."""
    corrected = rec.coincidences - rec.accidental_estimate
    return corrected, math.sqrt(rec.coincidences + rec.accidental_estimate)


def car(rec):
    """Coincidence-to-accidental ratio; ``math.inf`` when no accidentals are expected."""
    if rec.accidental_estimate <= 0:
        return math.inf
    return rec.coincidences / rec.accidental_estimate


def record_row(setting, rec):
    return [setting.alice_lc_phase, setting.bob_lc_phase, setting.alice_channel, setting.bob_channel,
            rec.duration, rec.singles_a, rec.singles_b, rec.coincidences, rec.accidental_estimate]


def write_records(path, rows):
    """Write (setting, record) pairs with the standard count-record columns."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RECORD_COLUMNS)
        for setting, rec in rows:
            writer.writerow([_fmt(v) for v in record_row(setting, rec)])


def read_records(path):
    out = []
    with open(path, newline="") as fh:
        for r in csv.DictReader(fh):
            setting = MeasurementSetting(float(r["setting_delta_a_rad"]), float(r["setting_delta_b_rad"]),
                                         int(r["ch_a"]), int(r["ch_b"]))
            rec = CountRecord(float(r["duration_s"]), int(r["singles_a"]), int(r["singles_b"]),
                              int(r["cc"]), float(r["acc"]))
            out.append((setting, rec))
    return out


def _fmt(v):
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{v:.9g}"
