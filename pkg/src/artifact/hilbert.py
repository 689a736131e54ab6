"""Bipartite state vectors, polar (Schmidt) decompositions and reduced traces.

Conventions
-----------
* Inner products are conjugate-linear in the first slot: ``<x, y> = x^† y``.
* Amplitudes of a state on ``H1 ⊗ H2`` are stored factor-1-major, so the
  matricization is ``gamma.amplitudes.reshape(n1, n2)``.
* A polar frame stores ``phi`` as an ``(n1, m)`` array and ``psi`` as an
  ``(n2, m)`` array, one column per term, with
  ``gamma = sum_k q[k] * kron(phi[:, k], psi[:, k])``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
RANK_TOL = 1e-12
DEGENERACY_TOL = 1e-8


class ValidationError(ValueError):
    """Raised when an input violates a documented precondition."""


@dataclass(frozen=True)
class BipartiteSpace:
    n1: int
    n2: int

    def __post_init__(self) -> None:
        if int(self.n1) != self.n1 or int(self.n2) != self.n2 or self.n1 < 1 or self.n2 < 1:
            raise ValidationError(f"factor dimensions must be positive integers, got {self.n1}, {self.n2}")

    @property
    def dim(self) -> int:
        return self.n1 * self.n2


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class StateVector:
    """A unit vector in ``H1 ⊗ H2``."""

    space: BipartiteSpace
    amplitudes: np.ndarray
    norm_tol: float = field(default=NORM_TOL, repr=False, compare=False)

    def __post_init__(self) -> None:
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size != self.space.dim:
            raise ValidationError(f"expected {self.space.dim} amplitudes, got {amps.size}")
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > self.norm_tol:
            raise ValidationError(f"state is not normalized (|norm - 1| = {abs(norm - 1.0):.3e})")
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_array(cls, amplitudes, n1: int, n2: int, normalize: bool = False) -> "StateVector":
        amps = np.asarray(amplitudes, dtype=complex).ravel()
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise ValidationError("cannot normalize the zero vector")
            amps = amps / norm
        return cls(BipartiteSpace(n1, n2), amps)

    @property
    def matrix(self) -> np.ndarray:
        """The ``n1 x n2`` matricization ``M[i, j] = <e_i ⊗ f_j, gamma>``."""
        return self.amplitudes.reshape(self.space.n1, self.space.n2)


@dataclass(frozen=True)
class PolarFrame:
    """Amplitudes ``q`` with bi-orthonormal columns ``phi`` and ``psi``.

    ``degenerate`` lists index pairs ``(j, k)`` with ``| |q_j| - |q_k| | < 1e-8``.
    """

    q: np.ndarray
    phi: np.ndarray
    psi: np.ndarray
    degenerate: tuple = ()

    def __post_init__(self) -> None:
        q = _frozen(np.ravel(self.q))
        phi = _frozen(np.atleast_2d(self.phi))
        psi = _frozen(np.atleast_2d(self.psi))
        if phi.shape[1] != q.size or psi.shape[1] != q.size:
            raise ValidationError("phi, psi must have one column per amplitude")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "psi", psi)

    @property
    def m(self) -> int:
        return self.q.size

    @property
    def radii(self) -> np.ndarray:
        return np.abs(self.q)

    def product(self, k: int) -> np.ndarray:
        """The product vector ``phi_k ⊗ psi_k``."""
        return np.kron(self.phi[:, k], self.psi[:, k])

    def check(self, tol: float = 1e-10) -> None:
        """Raise if the frame invariants fail at tolerance ``tol``."""
        m = self.m
        eye = np.eye(m)
        if np.abs(self.phi.conj().T @ self.phi - eye).max() > tol:
            raise ValidationError("phi columns are not orthonormal")
        if np.abs(self.psi.conj().T @ self.psi - eye).max() > tol:
            raise ValidationError("psi columns are not orthonormal")
        if abs(np.sum(np.abs(self.q) ** 2) - 1.0) > tol:
            raise ValidationError("amplitudes are not normalized")


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray

    def __post_init__(self) -> None:
        rho = _frozen(self.matrix)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValidationError("density operator must be square")
        if np.abs(rho - rho.conj().T).max() > 1e-12:
            raise ValidationError("density operator is not Hermitian")
        if abs(np.trace(rho).real - 1.0) > 1e-12:
            raise ValidationError("density operator must have unit trace")
        if np.linalg.eigvalsh(rho).min() < -1e-12:
            raise ValidationError("density operator has negative eigenvalues")
        object.__setattr__(self, "matrix", rho)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _gauge_fix(u: np.ndarray) -> complex:
    """Phase that makes the largest-magnitude entry of ``u`` real positive."""
    i = int(np.argmax(np.abs(u)))
    return np.exp(-1j * np.angle(u[i]))


def degenerate_pairs(radii: np.ndarray, tol: float = DEGENERACY_TOL) -> tuple:
    r = np.asarray(radii)
    return tuple(
        (j, k) for j in range(r.size) for k in range(j + 1, r.size) if abs(r[j] - r[k]) < tol
    )


def polar_decompose(
    gamma: StateVector,
    rank_tol: float = RANK_TOL,
    degeneracy_tol: float = DEGENERACY_TOL,
) -> PolarFrame:
    """Polar decomposition with ``q`` real, non-negative and descending.

    Each ``phi_k`` is rotated so its largest-magnitude entry is real
    positive; ``psi_k`` absorbs the reciprocal phase.
    """
    if not isinstance(gamma, StateVector):
        raise ValidationError("polar_decompose expects a StateVector")
    u, s, vh = np.linalg.svd(gamma.matrix, full_matrices=False)
    keep = s > rank_tol * s[0]
    u, s, vh = u[:, keep], s[keep], vh[keep, :]
    # M = U S Vh gives gamma = sum_k s_k u_k ⊗ vh_k (no conjugation on the second factor)
    phases = np.array([_gauge_fix(u[:, k]) for k in range(s.size)])
    phi = u * phases
    psi = vh.T * phases.conj()
    return PolarFrame(s.astype(complex), phi, psi, degenerate_pairs(s, degeneracy_tol))


def reconstruct(frame: PolarFrame, space: BipartiteSpace | None = None, check_norm: bool = True) -> StateVector:
    """Return ``sum_k q_k phi_k ⊗ psi_k``."""
    n1, n2 = frame.phi.shape[0], frame.psi.shape[0]
    if space is None:
        space = BipartiteSpace(n1, n2)
    if (space.n1, space.n2) != (n1, n2):
        raise ValidationError(f"frame lives in ({n1}, {n2}), not ({space.n1}, {space.n2})")
    mat = (frame.phi * frame.q) @ frame.psi.T
    return StateVector(space, mat.ravel(), norm_tol=1e-10 if check_norm else np.inf)


def reduced_trace(gamma: StateVector, side: int = 1) -> DensityOperator:
    """Density operator of factor ``side`` (the other factor is traced out)."""
    m = gamma.matrix
    if side == 1:
        rho = m @ m.conj().T
    elif side == 2:
        rho = m.T @ m.conj()
    else:
        raise ValidationError("side must be 1 or 2")
    rho = 0.5 * (rho + rho.conj().T)
    return DensityOperator(rho / np.trace(rho).real)


def partial_trace(op: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace of an operator on ``⊗_i C^{dims[i]}`` keeping factors ``keep``."""
    dims = [int(d) for d in dims]
    nf = len(dims)
    keep = sorted(int(k) for k in keep)
    op = np.asarray(op).reshape(dims + dims)
    traced = [i for i in range(nf) if i not in keep]
    # trace out from the highest index so axis numbers stay valid
    for i in sorted(traced, reverse=True):
        op = np.trace(op, axis1=i, axis2=i + op.ndim // 2)
    d = int(np.prod([dims[i] for i in keep])) if keep else 1
    return op.reshape(d, d)


def factor_projection(h: np.ndarray, n1: int, n2: int, side: int = 1) -> np.ndarray:
    """Hilbert–Schmidt projection of ``h`` onto ``L(H1) ⊗ I`` (or ``I ⊗ L(H2)``)."""
    if side == 1:
        a = partial_trace(h, (n1, n2), keep=[0]) / n2
        return np.kron(a, np.eye(n2))
    a = partial_trace(h, (n1, n2), keep=[1]) / n1
    return np.kron(np.eye(n1), a)


def moment_map(gamma: StateVector) -> tuple[np.ndarray, np.ndarray]:
    """``-(i/2) (Tred_1, Tred_2)`` of the projector onto ``gamma``."""
    return (-0.5j * reduced_trace(gamma, 1).matrix, -0.5j * reduced_trace(gamma, 2).matrix)


def luders_update(rho0: DensityOperator, projectors: Sequence[np.ndarray], tol: float = 1e-10) -> DensityOperator:
    """``sum_k P_k rho0 P_k`` for a family of mutually orthogonal projections."""
    ps = [np.asarray(p, dtype=complex) for p in projectors]
    for i, p in enumerate(ps):
        if np.abs(p @ p - p).max() > tol or np.abs(p - p.conj().T).max() > tol:
            raise ValidationError(f"projector {i} is not an orthogonal projection")
        for j in range(i):
            if np.abs(p @ ps[j]).max() > tol:
                raise ValidationError(f"projectors {j} and {i} are not mutually orthogonal")
    rho = sum(p @ rho0.matrix @ p for p in ps)
    tr = np.trace(rho).real
    if tr <= 0:
        raise ValidationError("update annihilates the state")
    return DensityOperator(rho / tr)


def rebipartition(
    amplitudes: np.ndarray | StateVector,
    factor_dims: Sequence[int],
    left_set: Sequence[int],
) -> StateVector:
    """Regroup a multi-factor vector as ``(⊗_{left}) ⊗ (⊗_{right})``.

    Factor indices are 0-based; within each group the original order is kept.
    """
    amps = amplitudes.amplitudes if isinstance(amplitudes, StateVector) else np.asarray(amplitudes, dtype=complex)
    dims = [int(d) for d in factor_dims]
    if int(np.prod(dims)) != amps.size:
        raise ValidationError(f"factor dims {dims} do not match {amps.size} amplitudes")
    left = sorted(set(int(i) for i in left_set))
    if not left or len(left) == len(dims) or left[0] < 0 or left[-1] >= len(dims):
        raise ValidationError("left_set must be a non-empty proper subset of factor indices")
    right = [i for i in range(len(dims)) if i not in left]
    t = amps.reshape(dims).transpose(left + right)
    n1 = int(np.prod([dims[i] for i in left]))
    return StateVector(BipartiteSpace(n1, amps.size // n1), t.ravel(), norm_tol=1e-10)


def random_state(n1: int, n2: int, rng: np.random.Generator) -> StateVector:
    """Haar-random state on ``C^n1 ⊗ C^n2``."""
    v = rng.normal(size=n1 * n2) + 1j * rng.normal(size=n1 * n2)
    return StateVector.from_array(v, n1, n2, normalize=True)


def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)
