import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from artifact.flow import beta_matrices, coupling_elements, evolve_polar, interaction_phases
from artifact.hilbert import PolarFrame, ValidationError, polar_decompose, reconstruct, reduced_trace
from artifact.hyperfine import (
    alpha,
    beta,
    delta,
    frame_norm_sq,
    transport_phases,
    HyperfineParams,
    bloch_trajectory,
    closed_form_frame,
    closed_form_q,
    continuous_arctan,
    dynamical_phase,
    ellipse_coefficients,
    gamma_t,
    hyperfine_hamiltonian,
    hyperfine_matrix,
    label_sign,
    label_via_locate,
    oracle_table,
    polar_basis_beta,
    polar_basis_hamiltonian,
    radii,
)

P = HyperfineParams(mu=1.0, theta=3 * math.pi / 7, q_plus_0=0.94)
TIMES = np.linspace(0.01, 10 * math.pi / 4, 37)
PAULI = (np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1]))

def _admissible(args):
    _, theta, qp = args
    qm = math.sqrt(1 - qp * qp)
    return (qp - qm) ** 2 > (math.cos(theta) * (qp + qm)) ** 2 + 1e-9


params = (
    st.tuples(st.sampled_from([0.5, 1.0, 2.0]), st.floats(0.2, 1.45), st.floats(0.75, 0.99))
    .filter(_admissible)
    .map(lambda a: HyperfineParams(*a))
)


def a0_frame(t):
    f = closed_form_frame(P, t)
    z = np.exp(1j * dynamical_phase(P, t))
    return PolarFrame(f.q * z.conjugate(), f.phi * z, f.psi)


def test_spectrum():
    ev = np.linalg.eigvalsh(hyperfine_matrix(1.0))
    assert np.allclose(ev, [-3, 1, 1, 1])


def test_state_solves_schrodinger():
    h = hyperfine_matrix(P.mu)
    e, v = np.linalg.eigh(h)
    g0 = gamma_t(P, 0.0).amplitudes
    for t in TIMES:
        want = v @ (np.exp(-1j * e * t) * (v.conj().T @ g0))
        assert np.abs(gamma_t(P, t).amplitudes - want).max() < 1e-12


@settings(max_examples=25, deadline=None)
@given(params, st.floats(0.0, 8.0))
def test_closed_radii_match_svd(p, t):
    assert np.allclose(radii(p, t), polar_decompose(gamma_t(p, t)).radii, atol=1e-10)


@pytest.mark.parametrize("t", TIMES)
def test_frame_reconstructs(t):
    f = closed_form_frame(P, t)
    f.check(1e-12)
    assert np.abs(reconstruct(f).amplitudes - gamma_t(P, t).amplitudes).max() < 1e-9


def test_initial_gauge():
    assert np.allclose(transport_phases(P, 0.0), 0.0)
    assert np.allclose(closed_form_frame(P, 0.0).q.imag, 0.0)
    # a point just off the basepoint along C_+ is in the + part
    r = radii(P, 0.0)
    assert label_sign(P, 0.0, np.array([r[0] * np.exp(1e-6j), r[1]])) == ("+", False)


def test_delta_at_quarter_period():
    t = math.pi / (2 * P.omega)
    want = P.l ** 2 * (P.k ** 2 + P.S ** 2 * ((P.C * P.l) ** 2 - P.k ** 2))
    assert delta(P, t) == pytest.approx(want, rel=1e-14)


@pytest.mark.parametrize("t", TIMES[::4])
def test_frame_norms(t):
    for s in (1, -1):
        v = np.array([alpha(P, t), beta(P, t, s)])
        assert np.vdot(v, v).real == pytest.approx(frame_norm_sq(P, t, s), rel=1e-10)


def test_closed_q_matches_frame():
    for t in TIMES:
        assert np.abs(closed_form_q(P, t) - closed_form_frame(P, t).q).max() < 1e-9


@pytest.mark.parametrize("t", TIMES[::6])
def test_polar_basis_hamiltonian(t):
    want = coupling_elements(hyperfine_matrix(P.mu), a0_frame(t)).entries.reshape(4, 4)
    assert np.allclose(polar_basis_hamiltonian(P, t), want, atol=1e-10)


@pytest.mark.parametrize("t", TIMES[::6])
def test_polar_basis_beta(t):
    beta, _ = beta_matrices(a0_frame(t), hyperfine_matrix(P.mu))
    assert np.allclose(polar_basis_beta(P, t), beta, atol=1e-10)


def test_bloch_vectors_are_spin_expectations():
    for t in TIMES:
        g = gamma_t(P, t)
        e, p = bloch_trajectory(P, t)
        for side, point in ((1, e), (2, p)):
            rho = reduced_trace(g, side).matrix
            assert np.allclose(point, [0.5 * np.trace(rho @ s).real for s in PAULI], atol=1e-12)


def test_ellipse_and_antipodality():
    e_, f_, g_ = ellipse_coefficients(P)
    assert f_ == 0
    e, p = bloch_trajectory(P, TIMES)
    assert np.allclose((2 * e[:, 0] / e_) ** 2 + (2 * e[:, 1] / g_) ** 2, 1.0)
    assert np.allclose(e[:, :2], -p[:, :2])
    assert np.allclose(e[:, 2], p[:, 2])


def test_radius_rate_from_interaction_law():
    # pure interaction: rdot from Im H0_{jj,kk} equals d/dt sqrt((1 ± sqrt Δ)/2)
    times = np.linspace(0.0, 2.0, 41)
    traj = evolve_polar(gamma_t(P, 0.0), hyperfine_hamiltonian(P.mu), times, frame0=closed_form_frame(P, 0.0))
    rdot = interaction_phases(traj, hyperfine_hamiltonian(P.mu)).rdot
    h = 1e-6
    want = (radii(P, times + h) - radii(P, times - h)) / (2 * h)
    assert np.abs(rdot - want).max() < 1e-6


def test_continuous_arctan():
    x = np.linspace(-0.5, 0.5, 11)
    assert np.allclose(continuous_arctan(2.0, x), np.arctan(2.0 * np.tan(x)))
    x = np.linspace(0, 20, 20001)
    y = continuous_arctan(0.3, x)
    assert np.abs(np.diff(y)).max() < 0.01
    assert y[-1] == pytest.approx(20.0, abs=math.pi / 2)
    assert np.all(continuous_arctan(0.0, x) == 0)


def test_dynamical_phase_is_the_energy_integral():
    h = hyperfine_matrix(P.mu)
    t, dt = 1.3, 1e-4
    rate = (dynamical_phase(P, t + dt) - dynamical_phase(P, t - dt)) / (2 * dt)
    c = coupling_elements(h, a0_frame(t)).diagonal()
    assert np.allclose(c, rate, atol=1e-6)


def test_labels_agree_with_locate():
    for t in np.linspace(0, 10 * math.pi / 4, 10_000):
        q = closed_form_q(P, t)
        a, ea = label_sign(P, t, q)
        b, eb = label_via_locate(q)
        assert ea or eb or a == b


def test_oracle_table_rows():
    rows = oracle_table(P, TIMES[:3])
    assert len(rows) == 3
    assert set(rows[0]) >= {"t", "re_q_plus", "tau_minus", "label"}


def test_parameter_validation():
    with pytest.raises(ValidationError):
        HyperfineParams(1.0, 1.0, 0.5)
    with pytest.raises(ValidationError):
        HyperfineParams(1.0, 0.0, 0.9)
    with pytest.raises(ValidationError):
        HyperfineParams(0.0, 1.0, 0.9)
    with pytest.raises(ValidationError):
        closed_form_frame(HyperfineParams(1.0, 1.0, 1 / math.sqrt(2)), 0.1)
