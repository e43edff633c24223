import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from savartsim import polcalc as pc
from savartsim.errors import ContractViolation, InvalidArgument

angles = st.floats(-2 * np.pi, 2 * np.pi, allow_nan=False)
unit = st.floats(0.0, 1.0)


def random_state(rng, dim):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def test_hwp_at_zero_keeps_h_and_v():
    assert pc.same_ray(pc.hwp(0.0) @ pc.H, pc.H)
    assert pc.same_ray(pc.hwp(0.0) @ pc.V, pc.V)


def test_hwp_at_22_5_maps_h_to_diagonal():
    assert pc.same_ray(pc.hwp(np.pi / 8) @ pc.H, pc.D)
    assert pc.same_ray(pc.hwp(-np.pi / 8) @ pc.H, pc.A)


def test_hwp_at_45_swaps_h_and_v():
    assert pc.same_ray(pc.hwp(np.pi / 4) @ pc.H, pc.V)


def test_quarter_wave_makes_circular():
    out = pc.waveplate(np.pi / 2, np.pi / 4) @ pc.H
    assert abs(abs(out[0]) - abs(out[1])) < 1e-12
    assert abs(abs(np.angle(out[1] / out[0])) - np.pi / 2) < 1e-12


@given(angles, angles)
def test_waveplate_unitary(gamma, a):
    m = pc.waveplate(gamma, a)
    assert np.allclose(m.conj().T @ m, np.eye(2), atol=1e-12)


@given(angles, angles, st.integers(0, 2**32 - 1))
def test_local_unitaries_preserve_norm(g, a, seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, 4)
    out = pc.tensor_apply(pc.waveplate(g, a), pc.hwp(a), s)
    assert abs(pc.norm2(out) - 1.0) < 1e-12


def test_tensor_apply_matches_explicit_product():
    rng = np.random.default_rng(3)
    a, b = random_state(rng, 2), random_state(rng, 2)
    ma, mb = pc.waveplate(0.3, 0.2), pc.waveplate(1.1, -0.4)
    assert np.allclose(pc.tensor_apply(ma, mb, pc.ket(a, b)), pc.ket(ma @ a, mb @ b))


def test_bell_phi_zero_is_phi_plus_in_hv():
    target = (pc.ket(pc.H, pc.H) + pc.ket(pc.V, pc.V)) / math.sqrt(2)
    assert abs(pc.overlap(pc.bell_phi(0.0), target) - 1.0) < 1e-12


def test_bell_phi_pi_is_psi_plus():
    # (|++> - |-->)/sqrt2 = (|HV> + |VH>)/sqrt2
    target = (pc.ket(pc.H, pc.V) + pc.ket(pc.V, pc.H)) / math.sqrt(2)
    assert abs(pc.overlap(pc.bell_phi(np.pi), target) - 1.0) < 1e-12


@given(angles)
def test_hh_projection_oracle(phi):
    # amplitudes: <HH|++> = 1/2, <HH|--> = 1/2
    expected = abs(0.5 + 0.5 * np.exp(1j * phi)) ** 2 / 2
    assert abs(pc.project(pc.bell_phi(phi), pc.H, pc.H) - expected) < 1e-12
    assert abs(expected - (1 + math.cos(phi)) / 4) < 1e-12


@given(angles, angles, angles, st.integers(0, 2**32 - 1))
def test_projection_bounds_and_completeness(a1, a2, phi, seed):
    rng = np.random.default_rng(seed)
    s = random_state(rng, 4)
    ba = pc.waveplate(a1, a2) @ pc.H
    ba_perp = pc.waveplate(a1, a2) @ pc.V
    bb = pc.hwp(phi) @ pc.H
    bb_perp = pc.hwp(phi) @ pc.V
    total = 0.0
    for x in (ba, ba_perp):
        for y in (bb, bb_perp):
            p = pc.project(s, x, y)
            assert 0.0 <= p <= 1.0
            total += p
    assert abs(total - 1.0) < 1e-10


def test_project_rejects_unnormalized_state():
    with pytest.raises(ContractViolation):
        pc.project(2 * pc.PHI_PLUS, pc.H, pc.H)
    with pytest.raises(ContractViolation):
        pc.project(pc.PHI_PLUS, 2 * pc.H, pc.H)


def test_waveplate_rejects_nan():
    with pytest.raises(InvalidArgument):
        pc.waveplate(float("nan"), 0.0)


def test_normalize_zero_vector():
    with pytest.raises(ContractViolation):
        pc.normalize(np.zeros(2))


@given(unit)
def test_werner_is_density_matrix(v):
    assert pc.is_density_matrix(pc.werner(v))


@given(unit)
def test_werner_overlap_matches_trace(v):
    rho = pc.werner(v)
    direct = np.vdot(pc.PHI_PLUS, rho @ pc.PHI_PLUS).real
    assert abs(direct - pc.werner_overlap(v)) < 1e-12


def test_werner_rejects_out_of_range():
    with pytest.raises(InvalidArgument):
        pc.werner(1.2)


def test_fidelity_bound_endpoints():
    assert pc.fidelity_bound(1.0) == pytest.approx(1.0, abs=1e-15)
    assert pc.fidelity_bound(0.0) == pytest.approx(0.25, abs=1e-15)


def test_fidelity_bound_monotone():
    f = pc.fidelity_bound(np.linspace(0, 1, 1000))
    assert np.all(np.diff(f) > 0)


def test_fidelity_bound_reference_values():
    # hand-evaluated: (1.5*0.7071068 + 0.5*1.5811388)^2 / 4
    assert pc.fidelity_bound(0.5) == pytest.approx(0.8567627, abs=1e-6)
    assert pc.fidelity_bound(0.99) == pytest.approx(0.9999257, abs=1e-6)


@given(unit)
def test_fidelity_bound_dominates_overlap(v):
    assert pc.fidelity_bound(v) >= pc.werner_overlap(v) - 1e-12


@pytest.mark.parametrize("bad", [-0.01, 1.01, float("nan")])
def test_fidelity_bound_domain(bad):
    with pytest.raises(InvalidArgument):
        pc.fidelity_bound(bad)
