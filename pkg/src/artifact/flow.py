"""Evolution of polar frames and amplitudes along a Schrödinger path.

Two strategies are provided.  ``ode`` integrates the coupled system for an
A^0-horizontal frame ``(q⁰, φ⁰, ψ⁰)`` and attaches the dynamical factor
``exp(i∫H_kk,kk)``.  ``svd`` re-decomposes ``Γ(t)`` on a fine grid, keeps
branches continuous by overlap matching and parallel-transports ``φ`` and
``ψ`` separately, with a Richardson step on the transport phases.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp
from scipy.optimize import linear_sum_assignment

from .connection import HamiltonianSpec, IntegrationError, schrodinger_evolve
from .hilbert import BipartiteSpace, PolarFrame, StateVector, ValidationError, partial_trace, polar_decompose

DEGENERACY_FLOOR = 1e-6


class DegenerateFrameError(ValidationError):
    """Squared radii are closer than the floor, so the frame ODE is singular."""

    def __init__(self, message: str, t: Optional[float] = None):
        super().__init__(message if t is None else f"{message} at t = {t:.6g}")
        self.t = t


@dataclass(frozen=True)
class CouplingMatrix:
    """``entries[j, k, m, n] = <φ_j⊗ψ_k, H φ_m⊗ψ_n>``."""

    entries: np.ndarray

    @property
    def m(self) -> int:
        return self.entries.shape[0]

    def diagonal(self) -> np.ndarray:
        """``H_{kk,kk}`` as a real vector."""
        idx = np.arange(self.m)
        return self.entries[idx, idx, idx, idx].real

    def pair_block(self) -> np.ndarray:
        """``P[j, k] = H_{jj,kk}``, the coupling between product terms of the decomposition."""
        idx = np.arange(self.m)
        return self.entries[idx[:, None], idx[:, None], idx[None, :], idx[None, :]]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        e = self.entries
        return bool(np.abs(e - e.transpose(2, 3, 0, 1).conj()).max() <= tol * max(1.0, np.abs(e).max()))


def _products(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """``P[:, j, k] = φ_j ⊗ ψ_k``."""
    n1, m = phi.shape
    n2 = psi.shape[0]
    return np.einsum("aj,bk->abjk", phi, psi).reshape(n1 * n2, m, m)


def coupling_elements(h: np.ndarray, frame: PolarFrame) -> CouplingMatrix:
    h = np.asarray(h, dtype=complex)
    n1, n2 = frame.phi.shape[0], frame.psi.shape[0]
    if h.shape != (n1 * n2, n1 * n2):
        raise ValidationError(f"Hamiltonian of shape {h.shape} does not act on {n1}x{n2}")
    p = _products(frame.phi, frame.psi)
    return CouplingMatrix(np.einsum("ajk,ab,bmn->jkmn", p.conj(), h, p))


def beta_matrices(frame: PolarFrame, h: np.ndarray, q: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    """``(β, β')`` with ``β_ab = <φ_a, ρ̇₁ φ_b>`` and ``β'_ab = <ψ_a, ρ̇₂ ψ_b>``."""
    q = frame.q if q is None else np.asarray(q, dtype=complex)
    c = coupling_elements(h, frame).entries
    idx = np.arange(frame.m)
    # x[a, b] = Σ_k q_k H_{ab,kk};  y[a, b] = Σ_k conj(q_k) H_{kk,ab}
    x = np.einsum("abk,k->ab", c[:, :, idx, idx], q)
    y = np.einsum("kab,k->ab", c[idx, idx, :, :], q.conj())
    beta = -1j * (x * q.conj()[None, :] - q[:, None] * y.T)
    beta_p = -1j * (x.T * q.conj()[None, :] - q[:, None] * y)
    return beta, beta_p


def reduced_derivatives(gamma: np.ndarray, h: np.ndarray, n1: int, n2: int) -> tuple[np.ndarray, np.ndarray]:
    """``(ρ̇₁, ρ̇₂)`` from ``Tred(-i[H, P_Γ])``."""
    g = np.asarray(gamma, dtype=complex).ravel()
    p = np.outer(g, g.conj())
    comm = -1j * (h @ p - p @ h)
    return partial_trace(comm, (n1, n2), keep=[0]), partial_trace(comm, (n1, n2), keep=[1])


@dataclass(frozen=True)
class FlowDerivative:
    q: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    energies: np.ndarray  # H_{kk,kk}


def _check_gaps(r2: np.ndarray, floor: float, t: Optional[float] = None) -> None:
    if r2.min() <= floor:
        raise DegenerateFrameError("a radius vanishes", t)
    gaps = np.abs(r2[:, None] - r2[None, :])
    np.fill_diagonal(gaps, np.inf)
    if gaps.min() <= floor:
        raise DegenerateFrameError(f"squared radii closer than {floor:g}", t)


def flow_rhs(frame: PolarFrame, h: np.ndarray, floor: float = DEGENERACY_FLOOR, t: Optional[float] = None) -> FlowDerivative:
    """Right-hand side of the frame ODE for an A^0-horizontal frame.

    ``q̇_a = -i Σ_k H_{aa,kk} q_k`` and ``φ̇_a = Σ_{k≠a} β_ka/(r_a² - r_k²) φ_k``
    (``ψ`` likewise with ``β'``).  When a factor is larger than the number of
    terms, the part of ``ρ̇ φ_a`` outside the frame is added with denominator
    ``r_a²``.
    """
    q = frame.q
    r2 = np.abs(q) ** 2
    _check_gaps(r2, floor, t)
    c = coupling_elements(h, frame)
    qdot = -1j * c.pair_block() @ q
    beta, beta_p = beta_matrices(frame, h, q)
    denom = r2[None, :] - r2[:, None]  # [k, a] -> r_a² - r_k²
    np.fill_diagonal(denom, np.inf)
    phi_dot = frame.phi @ (beta / denom)
    psi_dot = frame.psi @ (beta_p / denom)
    n1, n2 = frame.phi.shape[0], frame.psi.shape[0]
    if n1 > frame.m or n2 > frame.m:
        gamma = ((frame.phi * q) @ frame.psi.T).ravel()
        rd1, rd2 = reduced_derivatives(gamma, h, n1, n2)
        if n1 > frame.m:
            out = rd1 @ frame.phi
            out -= frame.phi @ (frame.phi.conj().T @ out)
            phi_dot = phi_dot + out / r2
        if n2 > frame.m:
            out = rd2 @ frame.psi
            out -= frame.psi @ (frame.psi.conj().T @ out)
            psi_dot = psi_dot + out / r2
    return FlowDerivative(qdot, phi_dot, psi_dot, c.diagonal())


def eigenvector_derivative(a: np.ndarray, a_dot: np.ndarray, j: Optional[int] = None) -> np.ndarray:
    """Horizontal eigenvector derivatives ``φ̇_j = Σ_{k≠j} <φ_k, Ȧ φ_j>/(λ_j - λ_k) φ_k``.

    Eigenvectors come from ``eigh`` in descending order; returns all columns,
    or column ``j`` when given.
    """
    lam, vec = np.linalg.eigh(a)
    lam, vec = lam[::-1], vec[:, ::-1]
    coef = vec.conj().T @ a_dot @ vec
    denom = lam[None, :] - lam[:, None]
    if np.any(np.abs(denom + np.eye(lam.size)) < 1e-14):
        raise DegenerateFrameError("eigenvalues are degenerate")
    np.fill_diagonal(denom, np.inf)
    out = vec @ (coef / denom)
    return out if j is None else out[:, j]


# ------------------------------------------------------------------------------------
# trajectories


@dataclass(frozen=True)
class PolarTrajectory:
    """Sampled polar decomposition ``Γ(t) = Σ q_k φ_k ⊗ ψ_k`` with A^H amplitudes.

    ``q`` holds the A^H amplitudes, ``q0`` the A^0 ones, and
    ``dynamical[t, k] = ∫ H_kk,kk``.  ``phi`` carries the dynamical factor and
    ``psi`` is A^0-horizontal.
    """

    times: np.ndarray
    q: np.ndarray
    q0: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    gammas: np.ndarray
    dynamical: np.ndarray
    mode: str
    degenerate_times: tuple = field(default=())

    @property
    def space(self) -> BipartiteSpace:
        return BipartiteSpace(self.phi.shape[1], self.psi.shape[1])

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.q)

    def frame(self, i: int) -> PolarFrame:
        return PolarFrame(self.q[i], self.phi[i], self.psi[i])

    @property
    def frames(self) -> list:
        return [self.frame(i) for i in range(self.times.size)]

    def gamma(self, i: int) -> StateVector:
        return StateVector(self.space, self.gammas[i], norm_tol=1e-9)

    def reconstruct_residual(self) -> float:
        rebuilt = np.einsum("tak,tk,tbk->tab", self.phi, self.q, self.psi).reshape(self.gammas.shape)
        return float(np.abs(rebuilt - self.gammas).max())

    def to_csv(self, path) -> None:
        m = self.q.shape[1]
        cols = ["t"] + [f"{p}_{k}" for k in range(m) for p in ("re_q", "im_q", "r")]
        rows = [",".join(cols)]
        for t, q in zip(self.times, self.q):
            vals = [t] + [v for z in q for v in (z.real, z.imag, abs(z))]
            rows.append(",".join(repr(float(v)) for v in vals))
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")

    def frames_json(self, path) -> None:
        data = {
            "mode": self.mode,
            "times": self.times.tolist(),
            "phi": [[[z.real, z.imag] for z in row] for row in self.phi.reshape(self.times.size, -1)],
            "psi": [[[z.real, z.imag] for z in row] for row in self.psi.reshape(self.times.size, -1)],
            "shape_phi": list(self.phi.shape[1:]),
            "shape_psi": list(self.psi.shape[1:]),
        }
        with open(path, "w") as fh:
            json.dump(data, fh)


def _default_step(spec: HamiltonianSpec) -> float:
    norm = np.linalg.norm(spec.value_at(0.0), 2)
    return 0.02 / max(1.0, float(norm))


def _fine_grid(times: np.ndarray, max_step: float) -> tuple[np.ndarray, np.ndarray]:
    """Refine ``times`` so every output time sits on an even node of a uniform-per-interval grid."""
    pieces = [times[:1]]
    where = [0]
    for lo, hi in zip(times[:-1], times[1:]):
        per = max(1, int(np.ceil((hi - lo) / (2 * max_step))))
        pieces.append(np.linspace(lo, hi, 2 * per + 1)[1:])
        where.append(where[-1] + 2 * per)
    return np.concatenate(pieces), np.array(where)


def _richardson_transport(vectors: np.ndarray) -> np.ndarray:
    """A^0 transport angles for gauge-chained vectors ``(T, n, m)``; ``T`` odd.

    The chain already has real positive neighbour overlaps, so the fine sum is
    zero and only the doubled-step sum contributes to ``(4 fine - coarse)/3``.
    """
    inc2 = np.angle(np.einsum("tak,tak->tk", vectors[:-2:2].conj(), vectors[2::2]))
    coarse = np.concatenate([np.zeros((1, vectors.shape[2])), -np.cumsum(inc2, axis=0)])
    even = -coarse / 3.0
    out = np.empty((vectors.shape[0], vectors.shape[2]))
    out[::2] = even
    out[1::2] = 0.5 * (even[:-1] + even[1:])
    return out


def _chain(prev: np.ndarray, new: np.ndarray) -> np.ndarray:
    ov = np.einsum("ak,ak->k", prev.conj(), new)
    return new * np.exp(-1j * np.angle(ov))


def _svd_mode(gamma0: StateVector, frame0: PolarFrame, spec: HamiltonianSpec, times: np.ndarray, tol: float, max_step: Optional[float]):
    n1, n2 = gamma0.space.n1, gamma0.space.n2
    m = frame0.m
    fine, where = _fine_grid(times, max_step or _default_step(spec))
    path = schrodinger_evolve(gamma0, spec, fine, tol=tol)
    phi = np.empty((fine.size, n1, m), complex)
    psi = np.empty((fine.size, n2, m), complex)
    phi[0], psi[0] = frame0.phi, frame0.psi
    degenerate = []
    for i in range(1, fine.size):
        u, s, vh = np.linalg.svd(path.states[i].reshape(n1, n2))
        u, v = u[:, :m], vh[:m, :].T
        score = np.abs(phi[i - 1].conj().T @ u) * np.abs(psi[i - 1].conj().T @ v)
        rows, cols = linear_sum_assignment(-score)
        u, v = u[:, cols], v[:, cols]
        s2 = s[:m][cols] ** 2
        if np.min(np.abs(s2[:, None] - s2[None, :]) + np.eye(m)) < DEGENERACY_FLOOR:
            degenerate.append(float(fine[i]))
        phi[i] = _chain(phi[i - 1], u)
        psi[i] = _chain(psi[i - 1], v)
    phi = phi * np.exp(1j * _richardson_transport(phi))[:, None, :]
    psi = psi * np.exp(1j * _richardson_transport(psi))[:, None, :]
    prods = np.einsum("tak,tbk->tabk", phi, psi).reshape(fine.size, n1 * n2, m)
    q0 = np.einsum("tak,ta->tk", prods.conj(), path.states)
    if spec.time_dependent:
        energies = np.array([np.einsum("ak,ab,bk->k", p.conj(), spec.value_at(t), p).real for t, p in zip(fine, prods)])
    else:
        h = spec.value_at(0.0)
        energies = np.einsum("tak,ab,tbk->tk", prods.conj(), h, prods).real
    dyn = cumulative_simpson(energies, x=fine, axis=0, initial=0.0)
    sel = where
    factor = np.exp(1j * dyn[sel])
    return PolarTrajectory(
        times,
        q0[sel] * factor,
        q0[sel],
        phi[sel] * factor.conj()[:, None, :],
        psi[sel],
        path.states[sel],
        dyn[sel],
        "svd",
        tuple(sorted(set(degenerate))),
    )


def _ode_mode(gamma0: StateVector, frame0: PolarFrame, spec: HamiltonianSpec, times: np.ndarray, tol: float, floor: float):
    if spec.time_dependent:
        raise ValidationError("ode mode needs a time-independent Hamiltonian; use mode='svd'")
    n1, n2 = gamma0.space.n1, gamma0.space.n2
    m = frame0.m
    h = spec.value_at(0.0)
    sizes = [m, n1 * m, n2 * m, m]
    splits = np.cumsum(sizes)[:-1]

    def unpack(y):
        z = y[: y.size // 2] + 1j * y[y.size // 2 :]
        q, ph, ps, dyn = np.split(z, splits)
        return q, ph.reshape(n1, m), ps.reshape(n2, m), dyn.real

    def rhs(t, y):
        q, ph, ps, _ = unpack(y)
        d = flow_rhs(PolarFrame(q, ph, ps), h, floor, t)
        z = np.concatenate([d.q, d.phi.ravel(), d.psi.ravel(), d.energies.astype(complex)])
        return np.concatenate([z.real, z.imag])

    z0 = np.concatenate([frame0.q, frame0.phi.ravel(), frame0.psi.ravel(), np.zeros(m, complex)])
    sol = solve_ivp(rhs, (times[0], times[-1]), np.concatenate([z0.real, z0.imag]), method="DOP853", t_eval=times, rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise IntegrationError(f"frame ODE failed: {sol.message}")
    parts = [unpack(y) for y in sol.y.T]
    q0 = np.array([p[0] for p in parts])
    phi0 = np.array([p[1] for p in parts])
    psi0 = np.array([p[2] for p in parts])
    dyn = np.array([p[3] for p in parts])
    factor = np.exp(1j * dyn)
    path = schrodinger_evolve(gamma0, spec, times, tol=tol)
    return PolarTrajectory(times, q0 * factor, q0, phi0 * factor.conj()[:, None, :], psi0, path.states, dyn, "ode")


def evolve_polar(
    gamma0: StateVector,
    spec: HamiltonianSpec,
    times: Sequence[float],
    frame0: Optional[PolarFrame] = None,
    tol: float = 1e-10,
    mode: str = "svd",
    max_step: Optional[float] = None,
    floor: float = DEGENERACY_FLOOR,
) -> PolarTrajectory:
    """Polar trajectory of ``Γ(t)`` whose terms are A^H-horizontal.

    ``frame0`` must reconstruct ``gamma0``; it defaults to
    :func:`polar_decompose` with real amplitudes.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 2 or np.any(np.diff(times) <= 0):
        raise ValidationError("times must be strictly increasing with at least two samples")
    if frame0 is None:
        frame0 = polar_decompose(gamma0)
    rebuilt = (frame0.phi * frame0.q) @ frame0.psi.T
    if np.abs(rebuilt.ravel() - gamma0.amplitudes).max() > 1e-10:
        raise ValidationError("frame0 does not reconstruct gamma0")
    if mode == "svd":
        return _svd_mode(gamma0, frame0, spec, times, tol, max_step)
    if mode == "ode":
        return _ode_mode(gamma0, frame0, spec, times, tol, floor)
    raise ValueError(f"unknown mode {mode!r}")


# ------------------------------------------------------------------------------------
# interaction phases


@dataclass(frozen=True)
class InteractionPhases:
    times: np.ndarray
    upsilon: np.ndarray  # (T, m)
    rdot: np.ndarray  # (T, m)


def interaction_phases(traj: PolarTrajectory, spec: HamiltonianSpec) -> InteractionPhases:
    """``Υ_k = <Γ, H0 Γ> - <Γ_k, H0 Γ_k>`` and ``ṙ_j = Σ_k Im((H0)_{jj,kk}) r_k`` along a trajectory.

    The coupling uses product vectors rephased so that every amplitude is real.
    """
    if spec.split is None:
        raise ValidationError("interaction phases need a Hamiltonian with a (H0, H1, H2) split")
    h0 = spec.split[0]
    ups = np.empty(traj.q.shape)
    rdot = np.empty(traj.q.shape)
    for i in range(traj.times.size):
        q = traj.q[i]
        r = np.abs(q)
        rot = np.where(r > 0, q / np.where(r > 0, r, 1), 1)
        frame = PolarFrame(r, traj.phi[i] * rot, traj.psi[i])
        c = coupling_elements(h0, frame)
        g = traj.gammas[i]
        ups[i] = np.vdot(g, h0 @ g).real - c.diagonal()
        rdot[i] = c.pair_block().imag @ r
    return InteractionPhases(traj.times, ups, rdot)


def interaction_picture_amplitudes(traj: PolarTrajectory, spec: HamiltonianSpec) -> np.ndarray:
    """``r_k exp(-i∫Υ_k)`` by Simpson quadrature on the trajectory grid."""
    ip = interaction_phases(traj, spec)
    phase = cumulative_simpson(ip.upsilon, x=ip.times, axis=0, initial=0.0)
    return np.abs(traj.q) * np.exp(-1j * phase)
