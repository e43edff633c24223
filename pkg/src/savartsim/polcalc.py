"""Jones calculus for one and two photons.

States are plain numpy arrays: a Jones vector is a complex array of shape (2,)
ordered (H, V); a two-photon state has shape (4,) ordered (HH, HV, VH, VV);
Jones matrices are (2, 2) and density matrices (4, 4).
"""

import numpy as np

from .errors import ContractViolation, InvalidArgument

SQRT2 = np.sqrt(2.0)

H = np.array([1.0, 0.0], dtype=complex)
V = np.array([0.0, 1.0], dtype=complex)
PLUS = np.array([1.0, 1.0], dtype=complex) / SQRT2
MINUS = np.array([1.0, -1.0], dtype=complex) / SQRT2
# diagonal/antidiagonal aliases
D = PLUS
A = MINUS

IDENTITY = np.eye(2, dtype=complex)

NORM_TOL = 1e-9


def _check_finite(*values):
    for v in values:
        if not np.all(np.isfinite(v)):
            raise InvalidArgument(f"non-finite argument: {v!r}")


def jones(amp_h, amp_v):
    return np.array([amp_h, amp_v], dtype=complex)


def ket(a, b):
    """Product state |a>|b> in (HH, HV, VH, VV) order."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def norm2(state):
    state = np.asarray(state)
    return float(np.vdot(state, state).real)


def normalize(state):
    n = np.sqrt(norm2(state))
    if n == 0.0:
        raise ContractViolation("cannot normalize the zero vector")
    return np.asarray(state, dtype=complex) / n


def rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, s], [-s, c]], dtype=complex)


def waveplate(retardance, fast_axis_angle):
    """Linear retarder with its fast axis at ``fast_axis_angle`` from H.

    A retardance of pi is a half-wave plate; a liquid-crystal retarder is
    the same matrix with a voltage-dependent retardance.
    """
    _check_finite(retardance, fast_axis_angle)
    half = 0.5 * retardance
    core = np.diag([np.exp(-1j * half), np.exp(1j * half)])
    return rotation(-fast_axis_angle) @ core @ rotation(fast_axis_angle)


def hwp(fast_axis_angle):
    return waveplate(np.pi, fast_axis_angle)


def tensor_apply(m_a, m_b, state):
    """Apply local operations ``m_a`` (photon A) and ``m_b`` (photon B)."""
    state = np.asarray(state, dtype=complex)
    _check_finite(m_a, m_b, state)
    return np.kron(m_a, m_b) @ state


def _require_normalized(vec, label):
    if abs(norm2(vec) - 1.0) > NORM_TOL:
        raise ContractViolation(f"{label} is not normalized (norm^2={norm2(vec):.12g})")


def project(state, bra_a, bra_b):
    """Probability |<a, b|state>|^2 of detecting photon A in ``bra_a`` and B in ``bra_b``."""
    _require_normalized(state, "state")
    _require_normalized(bra_a, "bra_a")
    _require_normalized(bra_b, "bra_b")
    amp = np.vdot(ket(bra_a, bra_b), state)
    return float(min(max(abs(amp) ** 2, 0.0), 1.0))


def overlap(s1, s2):
    """|<s1|s2>|^2, the global-phase-free comparison used throughout."""
    return float(abs(np.vdot(s1, s2)) ** 2)


def same_ray(s1, s2, tol=1e-10):
    return abs(overlap(normalize(s1), normalize(s2)) - 1.0) <= tol


def bell_phi(phi):
    """(|++> + exp(i phi)|-->)/sqrt(2) expressed in the H/V basis."""
    _check_finite(phi)
    return (ket(PLUS, PLUS) + np.exp(1j * phi) * ket(MINUS, MINUS)) / SQRT2


PHI_PLUS = bell_phi(0.0)


def pure_density(state):
    state = np.asarray(state, dtype=complex)
    return np.outer(state, state.conj())


def werner(v, target=None):
    """Werner mixture v|target><target| + (1 - v) I/4, target defaulting to Phi+."""
    _check_finite(v)
    if not 0.0 <= v <= 1.0:
        raise InvalidArgument(f"visibility must lie in [0, 1], got {v}")
    if target is None:
        target = PHI_PLUS
    return v * pure_density(target) + (1.0 - v) * np.eye(4, dtype=complex) / 4.0


def is_density_matrix(rho, tol=1e-12):
    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        return False
    hermitian = np.allclose(rho, rho.conj().T, atol=tol, rtol=0.0)
    unit_trace = abs(np.trace(rho) - 1.0) <= tol
    psd = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T)).min() >= -1e-10
    return bool(hermitian and unit_trace and psd)


def _check_visibility(v):
    _check_finite(v)
    if np.any((np.asarray(v) < 0.0) | (np.asarray(v) > 1.0)):
        raise InvalidArgument(f"visibility must lie in [0, 1], got {v}")


def fidelity_bound(v_s):
    """Worst-case two-qubit fidelity from the Bell-state visibility of a Werner state.

    F = (3/2 sqrt(v) + 1/2 sqrt(4 - 3v))^2 / 4
    """
    _check_visibility(v_s)
    return 0.25 * (1.5 * np.sqrt(v_s) + 0.5 * np.sqrt(4.0 - 3.0 * v_s)) ** 2


def werner_overlap(v):
    """<Phi|rho_W|Phi> = (1 + 3v)/4, reported alongside ``fidelity_bound``."""
    _check_visibility(v)
    return (1.0 + 3.0 * v) / 4.0
