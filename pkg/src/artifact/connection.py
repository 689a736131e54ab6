"""Schrödinger propagation and horizontal lifts for the connections A^0 and A^H.

A path ``t -> z(t)`` of unit vectors is A^H-horizontal when
``<z, dz/dt> = -i <z, H z>``; with ``H = 0`` this is ordinary parallel
transport (A^0).  Units have ħ = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_simpson, solve_ivp

from .hilbert import BipartiteSpace, StateVector, ValidationError, partial_trace

HERMITIAN_TOL = 1e-12


class IntegrationError(RuntimeError):
    """The integrator could not reach the requested tolerance."""


def _check_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError("Hamiltonian must be a square matrix")
    scale = max(1.0, np.abs(h).max())
    if np.abs(h - h.conj().T).max() > tol * scale:
        raise ValidationError("Hamiltonian is not Hermitian")
    return h


@dataclass(frozen=True)
class HamiltonianSpec:
    """A Hermitian generator on ``C^n1 ⊗ C^n2``, possibly time dependent.

    ``split`` holds ``(H0, H1, H2)`` with ``H = H0 + H1 ⊗ I + I ⊗ H2`` when known.
    """

    dims: tuple
    generator: Callable[[float], np.ndarray]
    time_dependent: bool = False
    split: Optional[tuple] = None
    family: str = "constant"
    params: Optional[dict] = None

    @property
    def dim(self) -> int:
        return int(self.dims[0] * self.dims[1])

    def value_at(self, t: float = 0.0) -> np.ndarray:
        return self.generator(t)

    # constructors -----------------------------------------------------------------
    @classmethod
    def constant(cls, h, dims: Sequence[int], split: Optional[tuple] = None) -> "HamiltonianSpec":
        h = _check_hermitian(h)
        n1, n2 = int(dims[0]), int(dims[1])
        if h.shape[0] != n1 * n2:
            raise ValidationError(f"Hamiltonian of size {h.shape[0]} does not act on {n1}x{n2}")
        if split is not None:
            h0, h1, h2 = (_check_hermitian(x) for x in split)
            rebuilt = h0 + np.kron(h1, np.eye(n2)) + np.kron(np.eye(n1), h2)
            if np.abs(rebuilt - h).max() > 1e-10:
                raise ValidationError("split does not reassemble to the Hamiltonian")
            split = (h0, h1, h2)
        h.setflags(write=False)
        return cls((n1, n2), lambda t, _h=h: _h, False, split, "constant", None)

    @classmethod
    def from_split(cls, h0, h1, h2) -> "HamiltonianSpec":
        h1 = _check_hermitian(h1)
        h2 = _check_hermitian(h2)
        n1, n2 = h1.shape[0], h2.shape[0]
        h0 = np.zeros((n1 * n2, n1 * n2), complex) if h0 is None else _check_hermitian(h0)
        h = h0 + np.kron(h1, np.eye(n2)) + np.kron(np.eye(n1), h2)
        return cls.constant(h, (n1, n2), split=(h0, h1, h2))

    @classmethod
    def sinusoidal(cls, static, drive, frequency: float, dims: Sequence[int], phase: float = 0.0) -> "HamiltonianSpec":
        """``H(t) = static + cos(frequency * t + phase) * drive``."""
        hs = _check_hermitian(static)
        hd = _check_hermitian(drive)
        n1, n2 = int(dims[0]), int(dims[1])
        if hs.shape != hd.shape or hs.shape[0] != n1 * n2:
            raise ValidationError("static and drive terms must share the space dimension")

        def gen(t: float) -> np.ndarray:
            return hs + np.cos(frequency * t + phase) * hd

        params = {"frequency": float(frequency), "phase": float(phase)}
        return cls((n1, n2), gen, True, None, "sinusoidal", params)


def split_hamiltonian(h: np.ndarray, n1: int, n2: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Minimal-interaction split ``H = H0 + H1 ⊗ I + I ⊗ H2``.

    ``H1 ⊗ I`` is the Hilbert–Schmidt projection of ``H`` onto ``L(H1) ⊗ I``
    with its trace part moved to ``H1`` only; ``H2`` is traceless, so ``H0`` is
    orthogonal to every ``A ⊗ I`` and ``I ⊗ B``.
    """
    h = _check_hermitian(h)
    h1 = partial_trace(h, (n1, n2), keep=[0]) / n2
    b = partial_trace(h, (n1, n2), keep=[1]) / n1
    h2 = b - np.trace(b).real / n2 * np.eye(n2)
    h0 = h - np.kron(h1, np.eye(n2)) - np.kron(np.eye(n1), h2)
    return 0.5 * (h0 + h0.conj().T), h1, h2


# ------------------------------------------------------------------------------------
# propagation


@dataclass(frozen=True)
class StatePath:
    """Sampled Schrödinger path: ``states[i]`` is the state at ``times[i]``."""

    times: np.ndarray
    states: np.ndarray  # (T, dim) complex
    space: BipartiteSpace
    norm_error: float = 0.0

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, i: int) -> StateVector:
        return StateVector(self.space, self.states[i], norm_tol=1e-9)


def _propagate_constant(psi0: np.ndarray, h: np.ndarray, times: np.ndarray) -> np.ndarray:
    e, v = np.linalg.eigh(h)
    c = v.conj().T @ psi0
    return (v @ (np.exp(-1j * np.outer(e, times)) * c[:, None])).T


def _propagate_rk(psi0: np.ndarray, spec: HamiltonianSpec, times: np.ndarray, tol: float) -> np.ndarray:
    d = psi0.size

    def rhs(t, y):
        z = y[:d] + 1j * y[d:]
        dz = -1j * (spec.value_at(t) @ z)
        return np.concatenate([dz.real, dz.imag])

    y0 = np.concatenate([psi0.real, psi0.imag])
    sol = solve_ivp(rhs, (times[0], times[-1]), y0, method="DOP853", t_eval=times, rtol=tol, atol=tol * 1e-2)
    if not sol.success:
        raise IntegrationError(f"Schrödinger integration failed: {sol.message}")
    return (sol.y[:d] + 1j * sol.y[d:]).T


def schrodinger_evolve(
    gamma0: StateVector,
    spec: HamiltonianSpec,
    times: Sequence[float],
    tol: float = 1e-10,
) -> StatePath:
    """Solve ``dΓ/dt = -i H Γ`` and sample at ``times``.

    Time-independent generators use the exact eigen-propagator; otherwise an
    adaptive embedded Runge–Kutta pair runs with relative tolerance ``tol``.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size < 1 or np.any(np.diff(times) < 0):
        raise ValidationError("times must be a non-decreasing 1-D sequence")
    if spec.dim != gamma0.space.dim:
        raise ValidationError("Hamiltonian and state dimensions differ")
    if spec.time_dependent:
        states = _propagate_rk(gamma0.amplitudes, spec, times, tol)
    else:
        h = _check_hermitian(spec.value_at(0.0))
        states = _propagate_constant(gamma0.amplitudes, h, times - times[0])
    norms = np.linalg.norm(states, axis=1)
    err = float(np.abs(norms - 1).max())
    if err > 1e-9:
        raise IntegrationError(f"norm drifted by {err:.2e}; tighten tol")
    states = states / norms[:, None]
    return StatePath(times, states, gamma0.space, err)


# ------------------------------------------------------------------------------------
# horizontality


@dataclass(frozen=True)
class PhasePath:
    """Unit-modulus factors ``zeta(t) = exp(i angle(t))`` with ``angle(times[0]) = 0``."""

    times: np.ndarray
    angle: np.ndarray

    @property
    def zeta(self) -> np.ndarray:
        return np.exp(1j * self.angle)


def _as_array(path) -> np.ndarray:
    if isinstance(path, StatePath):
        return path.states
    return np.asarray(path, dtype=complex)


def _energies(states: np.ndarray, spec: Optional[HamiltonianSpec], times: np.ndarray) -> np.ndarray:
    if spec is None:
        return np.zeros(times.size)
    if not spec.time_dependent:
        h = spec.value_at(0.0)
        return np.einsum("ti,ij,tj->t", states.conj(), h, states).real
    return np.array([np.vdot(z, spec.value_at(t) @ z).real for t, z in zip(times, states)])


def horizontality_residual(times, path, spec: Optional[HamiltonianSpec] = None) -> np.ndarray:
    """``|<Γ, dΓ/dt> + i <Γ, H Γ>|`` at interior samples (central differences)."""
    times = np.asarray(times, dtype=float)
    z = _as_array(path)
    if times.size < 3:
        raise ValidationError("need at least three samples")
    dz = (z[2:] - z[:-2]) / (times[2:] - times[:-2])[:, None]
    mid = z[1:-1]
    conn = np.einsum("ti,ti->t", mid.conj(), dz)
    energy = _energies(mid, spec, times[1:-1])
    return np.abs(conn + 1j * energy)


def _cumulative(values: np.ndarray, times: np.ndarray) -> np.ndarray:
    if times.size < 3:
        return np.concatenate([[0.0], np.cumsum(0.5 * (values[1:] + values[:-1]) * np.diff(times))])
    return cumulative_simpson(values, x=times, initial=0.0)


def horizontalizing_phase(
    times,
    path,
    extra: HamiltonianSpec,
    base: Optional[HamiltonianSpec] = None,
    check_tol: Optional[float] = 1e-6,
) -> PhasePath:
    """Factor turning an A^{H'}-horizontal path into an A^{H'+H''}-horizontal one.

    ``zeta(t) = exp(-i ∫ <Ω', H'' Ω'> ds)`` with composite Simpson quadrature on
    the sample grid.  ``base`` is ``H'`` (``None`` means ``H' = 0``); the input
    is checked against it unless ``check_tol`` is ``None``.
    """
    times = np.asarray(times, dtype=float)
    z = _as_array(path)
    if check_tol is not None and times.size >= 3:
        res = horizontality_residual(times, z, base)
        if res.max() > check_tol:
            raise ValidationError(f"input path is not horizontal (residual {res.max():.2e})")
    energy = _energies(z, extra, times)
    return PhasePath(times, -_cumulative(energy, times))


def transport_phase(times, path, spec: Optional[HamiltonianSpec] = None, richardson: bool = True) -> PhasePath:
    """Factor making an arbitrary-gauge sampled path A^H-horizontal.

    The gauge part is accumulated from overlaps ``arg <z_i, z_{i+1}>``; this
    is exact for the gauge but leaves an O(h^2) global error in the geometric
    part.  With ``richardson`` the grid must have an odd number of samples and
    the fine and doubled-step sums are combined, raising the order to h^4 at
    the even samples; odd samples are then linearly corrected.
    """
    times = np.asarray(times, dtype=float)
    z = _as_array(path)
    inc = np.angle(np.einsum("ti,ti->t", z[:-1].conj(), z[1:]))
    fine = np.concatenate([[0.0], -np.cumsum(inc)])
    phase = fine
    if richardson:
        if times.size % 2 == 0 or times.size < 3:
            raise ValidationError("Richardson transport needs an odd number of samples")
        inc2 = np.angle(np.einsum("ti,ti->t", z[:-2:2].conj(), z[2::2]))
        coarse = np.concatenate([[0.0], -np.cumsum(inc2)])
        even = (4.0 * fine[::2] - coarse) / 3.0
        corr = even - fine[::2]
        phase = fine.copy()
        phase[::2] = even
        phase[1::2] += 0.5 * (corr[:-1] + corr[1:])
    energy = _energies(z, spec, times)
    return PhasePath(times, phase - _cumulative(energy, times))
