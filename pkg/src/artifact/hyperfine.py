"""Closed-form dynamics of two spin-1/2 systems coupled by ``mu * sigma1 . sigma2``.

The initial state has both spins in the x-z plane, symmetric about the z axis
at half-angle ``theta``, with real amplitudes ``q_plus_0 >= q_minus_0``.
Index 0 of every pair is the ``+`` branch (larger radius), index 1 is ``-``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .connection import HamiltonianSpec
from .elliptic import legendre_pi
from .hilbert import BipartiteSpace, PolarFrame, StateVector, ValidationError
from .toroid import RightToroid, ToroidPoint, locate, two_part_label

SIGNS = (1, -1)
LABELS = ("+", "-")


def hyperfine_matrix(mu: float = 1.0) -> np.ndarray:
    """``mu * (sx⊗sx + sy⊗sy + sz⊗sz)``; singlet energy ``-3 mu``, triplet ``mu``."""
    return mu * np.array([[1, 0, 0, 0], [0, -1, 2, 0], [0, 2, -1, 0], [0, 0, 0, 1]], dtype=complex)


def hyperfine_hamiltonian(mu: float = 1.0) -> HamiltonianSpec:
    z = np.zeros((2, 2), complex)
    return HamiltonianSpec.constant(hyperfine_matrix(mu), (2, 2), split=(hyperfine_matrix(mu), z, z))


def continuous_arctan(c: float, x):
    """``arctan(c tan x)`` continued through the poles of tan; zero at ``x = 0``."""
    x = np.asarray(x, dtype=float)
    if c == 0:
        return np.zeros_like(x)
    a = abs(c)
    sx, cx = np.sin(x), np.cos(x)
    # arctan(a tan x) - x has a pole-free atan2 form for a > 0
    return np.sign(c) * (x + np.arctan2((a - 1) * sx * cx, cx * cx + a * sx * sx))


@dataclass(frozen=True)
class HyperfineParams:
    mu: float
    theta: float
    q_plus_0: float

    def __post_init__(self) -> None:
        if not (1 / math.sqrt(2) <= self.q_plus_0 < 1):
            raise ValidationError("q_plus_0 must lie in [1/sqrt(2), 1)")
        if not (0 < self.theta < math.pi / 2):
            raise ValidationError("theta must lie in (0, pi/2)")
        if self.mu == 0:
            raise ValidationError("mu must be non-zero")
        if self.k ** 2 < (self.C * self.l) ** 2:
            raise ValidationError("axis convention needs k^2 >= C^2 l^2")

    # glossary ---------------------------------------------------------------------
    @property
    def q_minus_0(self) -> float:
        return math.sqrt(1 - self.q_plus_0 ** 2)

    @property
    def C(self) -> float:
        return math.cos(self.theta)

    @property
    def S(self) -> float:
        return math.sin(self.theta)

    @property
    def k(self) -> float:
        return self.q_plus_0 - self.q_minus_0

    @property
    def l(self) -> float:  # noqa: E743
        return self.q_plus_0 + self.q_minus_0

    @property
    def omega(self) -> float:
        return 4 * self.mu

    @property
    def e(self) -> float:
        """Eccentricity of the polarization ellipse."""
        return math.sqrt(max(self.k ** 2 - (self.C * self.l) ** 2, 0.0)) / self.k

    def check_regular(self) -> None:
        if self.q_plus_0 == self.q_minus_0 or self.k == 0:
            raise ValidationError("equal initial radii are degenerate")
        if self.e >= 1:
            raise ValidationError("degenerate ellipse (e >= 1)")


def gamma_components(p: HyperfineParams, t):
    """``(a, b, d)`` with ``Γ(t) = (a, b, -b, d)``."""
    t = np.asarray(t, dtype=float)
    ph1 = np.exp(-1j * p.mu * t)
    ph3 = np.exp(3j * p.mu * t)
    a = 0.5 * (p.C * p.l + p.k) * ph1
    b = -0.5 * p.S * p.l * ph3
    d = 0.5 * (p.C * p.l - p.k) * ph1
    return a, b, d


def gamma_t(p: HyperfineParams, t: float) -> StateVector:
    a, b, d = gamma_components(p, t)
    return StateVector(BipartiteSpace(2, 2), np.array([a, b, -b, d]), norm_tol=1e-12)


def delta(p: HyperfineParams, t):
    """``Δ(t) = 1 - 4|ad + b²|² = l²(k² + S²(C²l² - k²) sin²ωt)``."""
    s = np.sin(p.omega * np.asarray(t, dtype=float))
    return p.l ** 2 * (p.k ** 2 + p.S ** 2 * ((p.C * p.l) ** 2 - p.k ** 2) * s ** 2)


def radii(p: HyperfineParams, t) -> np.ndarray:
    sd = np.sqrt(delta(p, t))
    return np.stack([np.sqrt((1 + sd) / 2), np.sqrt((1 - sd) / 2)], axis=-1)


def alpha(p: HyperfineParams, t):
    x = p.omega * np.asarray(t, dtype=float)
    return p.S * p.l * (p.k * np.cos(x) - 1j * p.C * p.l * np.sin(x))


def beta(p: HyperfineParams, t, sign: int):
    return -p.C * p.k * p.l + sign * np.sqrt(delta(p, t))


def frame_norm_sq(p: HyperfineParams, t, sign: int):
    """``|φ_±|² = 2√Δ(√Δ ∓ Ckl)`` for the unnormalized spinors ``±(α, β_±)``."""
    sd = np.sqrt(delta(p, t))
    return 2 * sd * (sd - sign * p.C * p.k * p.l)


def _pi_term(p: HyperfineParams, x: float) -> float:
    e2 = p.e ** 2
    return legendre_pi(e2, float(x), p.S ** 2 * e2)


def transport_phases(p: HyperfineParams, t: float) -> np.ndarray:
    """``τ_±`` making ``e^{iτ}(α, ±β)`` parallel transported (A^0)."""
    x = p.omega * t
    base = 0.5 * continuous_arctan(p.C * p.l / p.k, x)
    extra = p.C ** 2 * p.l / (2 * p.k) * _pi_term(p, x)
    return np.array([base + extra, base - extra])


def nu(p: HyperfineParams, t: float) -> float:
    c = math.sqrt(1 - p.S ** 2 * p.e ** 2)
    return p.C ** 2 / c * float(continuous_arctan(c, p.omega * t))


def dynamical_phase(p: HyperfineParams, t: float) -> float:
    """``∫₀ᵗ H_{kk,kk} ds``, equal for both branches: ``ν/2 - ωt/4``."""
    return 0.5 * nu(p, t) - 0.25 * p.omega * t


def closed_form_q(p: HyperfineParams, t: float) -> np.ndarray:
    """A^H amplitudes ``q_±(t)`` from the elliptic closed form.

    ``arg q_± = ν/2 + σ_± ∓ (C²l/k) Π(e²; ωt | S²e²) - ωt/2`` with
    ``σ_± = arctan((C²l² ± √Δ)/(k² ± √Δ) tan ωt)`` on the continuous branch.
    """
    p.check_regular()
    x = p.omega * t
    sd = math.sqrt(float(delta(p, t)))
    pi_val = p.C ** 2 * p.l / p.k * _pi_term(p, x)
    out = np.empty(2, complex)
    for i, s in enumerate(SIGNS):
        den = p.k ** 2 + s * sd
        if s < 0 and _sigma_minus_singular(p):
            raise ValidationError("k^2 - sqrt(Delta) changes sign; use closed_form_frame")
        sigma = float(continuous_arctan(((p.C * p.l) ** 2 + s * sd) / den, x))
        arg = 0.5 * nu(p, t) + sigma - s * pi_val - 0.5 * x
        out[i] = math.sqrt((1 + s * sd) / 2) * np.exp(1j * arg)
    return out


def _sigma_minus_singular(p: HyperfineParams) -> bool:
    lo = p.l * p.k * math.sqrt(1 - p.S ** 2 * p.e ** 2)
    return lo <= p.k ** 2 <= p.l * p.k


def closed_form_frame(p: HyperfineParams, t: float) -> PolarFrame:
    """Polar frame carrying the A^H amplitudes at time ``t``.

    ``φ_± = ±e^{iτ_±}(α, β_±)/|·|`` and ``ψ_± = e^{iτ_±}(α, -β_±)/|·|`` are
    A^0-transported; the dynamical factor ``exp(-i(ν/2 - ωt/4))`` is placed on
    ``φ`` so that ``q`` is the A^H amplitude.
    """
    p.check_regular()
    a, b, d = gamma_components(p, t)
    al = complex(alpha(p, t))
    taus = transport_phases(p, t)
    dyn = dynamical_phase(p, t)
    phi = np.empty((2, 2), complex)
    psi = np.empty((2, 2), complex)
    q = np.empty(2, complex)
    for i, s in enumerate(SIGNS):
        be = float(beta(p, t, s))
        norm = math.sqrt(float(frame_norm_sq(p, t, s)))
        hat_q = -s * (b * np.conj(al) / be + d)
        rot = np.exp(1j * taus[i])
        q[i] = hat_q * np.exp(-2j * taus[i]) * np.exp(1j * dyn)
        phi[:, i] = s * rot * np.array([al, be]) / norm * np.exp(-1j * dyn)
        psi[:, i] = rot * np.array([al, -be]) / norm
    return PolarFrame(q, phi, psi)


def polar_basis_hamiltonian(p: HyperfineParams, t: float) -> np.ndarray:
    """``H_{jk,mn}`` in the A^0 product basis, ordered ``(++, +-, -+, --)``.

    With ``B = Ckl/sqrt(Δ - C²k²l²)`` and ``T = τ_+ - τ_-``.
    """
    sd2 = float(delta(p, t))
    B = p.C * p.k * p.l / math.sqrt(sd2 - (p.C * p.k * p.l) ** 2)
    tau = float(np.diff(transport_phases(p, t)[::-1])[0])
    u = np.exp(-1j * tau)
    m = np.array(
        [
            [B * B - 1, 2 * B * u, -2 * B * u, -2 * u * u],
            [2 * B / u, 1 - B * B, 2 * B * B, 2 * B * u],
            [-2 * B / u, 2 * B * B, 1 - B * B, -2 * B * u],
            [-2 / (u * u), 2 * B / u, -2 * B / u, B * B - 1],
        ]
    )
    return p.mu / (B * B + 1) * m


def polar_basis_beta(p: HyperfineParams, t: float) -> np.ndarray:
    """``β_ab = <φ_a, dρ₁/dt φ_b>`` in the normalized A^0 basis."""
    x = p.omega * t
    sd2 = float(delta(p, t))
    sd = math.sqrt(sd2)
    eps = p.k ** 2 * p.e ** 2 * math.cos(x) * math.sin(x)
    tau = float(np.diff(transport_phases(p, t)[::-1])[0])
    root = math.sqrt(sd2 - (p.C * p.k * p.l) ** 2)
    ckl = p.C * p.k * p.l
    off_up = -np.exp(-1j * tau) * ckl * (eps + 1j * sd) / root
    off_dn = -np.exp(1j * tau) * ckl * (eps - 1j * sd) / root
    return p.omega * p.S ** 2 * p.l ** 2 / (2 * sd) * np.array([[-eps, off_up], [off_dn, eps]])


def bloch_trajectory(p: HyperfineParams, t) -> tuple[np.ndarray, np.ndarray]:
    """Electron and proton spin-axis points on the polarization ellipse (scaled by ½).

    Returns arrays of shape ``(..., 3)``; the proton point is the reflection
    of the electron point through the ellipse centre ``(0, 0, z)/2``.
    """
    x = p.omega * np.asarray(t, dtype=float)
    big_e = p.S * (p.q_plus_0 ** 2 - p.q_minus_0 ** 2)
    big_g = p.S * p.C * p.l ** 2
    z = p.C * (p.q_plus_0 ** 2 - p.q_minus_0 ** 2)
    if big_e * big_g == 0:
        raise ValidationError("degenerate ellipse (GE = 0)")
    ex = big_e * np.cos(x)
    ey = big_g * np.sin(x)
    ez = np.full_like(ex, z)
    electron = 0.5 * np.stack([ex, ey, ez], axis=-1)
    proton = 0.5 * np.stack([-ex, -ey, ez], axis=-1)
    return electron, proton


def ellipse_coefficients(p: HyperfineParams) -> tuple[float, float, float]:
    """``(E, F, G)`` of ``x = E cos ωt + F sin ωt, y = G sin ωt`` (``F = 0`` for real amplitudes)."""
    return p.S * (p.q_plus_0 ** 2 - p.q_minus_0 ** 2), 0.0, p.S * p.C * p.l ** 2


def arc_point(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Radii and arc coordinates ``S_k = r_k θ_k`` reduced into ``[0, 2π r_k)``."""
    r = np.abs(q)
    theta = np.mod(np.angle(q), 2 * math.pi)
    return r, np.mod(r * theta, 2 * math.pi * r)


def label_sign(p: HyperfineParams, t: float, q: np.ndarray | None = None) -> tuple[str, bool]:
    """Which part of the two-part partition holds ``q(t)``: ``'+'`` or ``'-'``."""
    if q is None:
        q = closed_form_frame(p, t).q
    r, s = arc_point(q)
    k, edge = two_part_label(s[0], s[1], r[0], r[1])
    return LABELS[k], edge


def label_via_locate(q: np.ndarray) -> tuple[str, bool]:
    r, s = arc_point(q)
    lab = locate(ToroidPoint(s), RightToroid(tuple(r / np.linalg.norm(r))))
    return LABELS[lab.k], lab.on_boundary


def oracle_table(p: HyperfineParams, times) -> list[dict]:
    """Rows ``t, Re/Im q_±, τ_±, x, y, z, label`` for plotting and CSV export."""
    rows = []
    electron, _ = bloch_trajectory(p, np.asarray(times, dtype=float))
    for t, pt in zip(times, electron):
        frame = closed_form_frame(p, float(t))
        tau = transport_phases(p, float(t))
        lab, _ = label_sign(p, float(t), frame.q)
        rows.append(
            {
                "t": float(t),
                "re_q_plus": frame.q[0].real,
                "im_q_plus": frame.q[0].imag,
                "re_q_minus": frame.q[1].real,
                "im_q_minus": frame.q[1].imag,
                "tau_plus": tau[0],
                "tau_minus": tau[1],
                "x": pt[0],
                "y": pt[1],
                "z": pt[2],
                "label": lab,
            }
        )
    return rows
