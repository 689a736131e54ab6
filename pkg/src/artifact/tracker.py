"""Label timelines, jump events and conditional spectral states.

The label ``k(t)`` is the part of the Pythagorean partition of ``T(r(t))``
containing the amplitude point ``q(t)``.  Labels refer to branch indices of
the trajectory, which stay continuous through radius crossings.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .flow import PolarTrajectory
from .hilbert import PolarFrame, StateVector, ValidationError, polar_decompose, rebipartition
from .toroid import RightToroid, ToroidPoint, label_from_fractions, locate

DEGENERACY_GAP = 1e-6
AMBIGUITY_TOL = 1e-3


class PermanentDegeneracyError(ValidationError):
    """Radii stay equal for longer than the bridging window."""


class NonProductError(ValidationError):
    """An iterated stage is entangled across the next cut."""


@dataclass(frozen=True)
class JumpEvent:
    t: float
    from_k: int
    to_k: int
    boundary_kind: str

    def to_json(self) -> str:
        return json.dumps({"t": self.t, "from": self.from_k, "to": self.to_k, "boundary_kind": self.boundary_kind})


@dataclass(frozen=True)
class LabelTimeline:
    times: np.ndarray
    labels: np.ndarray
    on_boundary: np.ndarray
    degenerate: np.ndarray
    events: tuple = field(default=())

    def fraction(self, k: int, t0: float = -np.inf, t1: float = np.inf) -> float:
        sel = (self.times >= t0) & (self.times <= t1)
        return float(np.mean(self.labels[sel] == k))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("t,label,on_boundary,degenerate\n")
            for row in zip(self.times, self.labels, self.on_boundary, self.degenerate):
                fh.write(f"{float(row[0])!r},{int(row[1])},{int(row[2])},{int(row[3])}\n")

    def write_jumps(self, path) -> None:
        with open(path, "w") as fh:
            for ev in self.events:
                fh.write(ev.to_json() + "\n")


def _fractions(q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Box fractions ``θ_k/2π`` and squared radii for amplitude rows ``q``."""
    q = np.atleast_2d(q)
    r2 = np.abs(q) ** 2
    r2 = r2 / r2.sum(axis=1, keepdims=True)
    a = np.mod(np.angle(q), 2 * np.pi) / (2 * np.pi)
    return np.where(a >= 1.0, 0.0, a), r2


def _label(q: np.ndarray) -> tuple[int, bool]:
    a, r2 = _fractions(q)
    labels, edge = label_from_fractions(a, r2[0])
    return int(labels[0]), bool(edge[0])


def _gaps(q: np.ndarray) -> np.ndarray:
    r = np.abs(q)
    d = np.abs(r[:, :, None] - r[:, None, :])
    m = q.shape[1]
    d[:, np.arange(m), np.arange(m)] = np.inf
    return d.min(axis=(1, 2)) if m > 1 else np.full(q.shape[0], np.inf)


def _interp(q0: np.ndarray, q1: np.ndarray, s: float) -> np.ndarray:
    """Linear interpolation of radii and unwrapped phases."""
    r = (1 - s) * np.abs(q0) + s * np.abs(q1)
    dth = np.angle(q1 * np.conj(q0))
    return r * np.exp(1j * (np.angle(q0) + s * dth))


def _kind(q_left: np.ndarray, q_right: np.ndarray) -> str:
    a0, _ = _fractions(q_left)
    a1, _ = _fractions(q_right)
    if np.any(np.abs(a1 - a0) > 0.5):
        return "wrap"
    if np.any(np.argsort(-a0[0], kind="stable") != np.argsort(-a1[0], kind="stable")):
        return "sort-tie"
    return "slab"


def track_amplitudes(times, q, refine: bool = True, gap: float = DEGENERACY_GAP, window: Optional[float] = None) -> LabelTimeline:
    """Label timeline of sampled amplitudes ``q`` with shape ``(T, m)``.

    Samples whose radii are within ``gap`` carry the previous label.  A run of
    such samples longer than the bridging window (10 samples or 1e-3 time
    units, whichever is larger) is treated as permanent degeneracy.
    """
    times = np.asarray(times, dtype=float)
    q = np.asarray(q, dtype=complex)
    if q.ndim != 2 or q.shape[0] != times.size:
        raise ValidationError("q must have one row per time")
    a, r2 = _fractions(q)
    labels = np.empty(times.size, int)
    edge = np.zeros(times.size, bool)
    for i in range(times.size):
        lab, e = label_from_fractions(a[i : i + 1], r2[i])
        labels[i], edge[i] = lab[0], e[0]
    degenerate = _gaps(q) < gap
    span = times[-1] - times[0]
    step = span / max(times.size - 1, 1)
    if window is None:
        window = max(10 * step, 1e-3)
    run_start = None
    for i in range(times.size):
        if degenerate[i]:
            run_start = i if run_start is None else run_start
            if times[i] - times[run_start] > window or (run_start == 0 and i == times.size - 1):
                raise PermanentDegeneracyError(f"radii stay degenerate from t = {times[run_start]:.6g}")
            if i > 0:
                labels[i] = labels[i - 1]
        else:
            run_start = None
    events = []
    for i in np.nonzero(labels[1:] != labels[:-1])[0]:
        if degenerate[i] or degenerate[i + 1]:
            continue
        lo, hi = 0.0, 1.0
        left = labels[i]
        if refine:
            tol = 1e-9 * span / max(times[i + 1] - times[i], 1e-300)
            while hi - lo > tol:
                mid = 0.5 * (lo + hi)
                if _label(_interp(q[i], q[i + 1], mid))[0] == left:
                    lo = mid
                else:
                    hi = mid
        t = times[i] + 0.5 * (lo + hi) * (times[i + 1] - times[i])
        kind = _kind(_interp(q[i], q[i + 1], lo), _interp(q[i], q[i + 1], hi))
        events.append(JumpEvent(float(t), int(left), int(labels[i + 1]), kind))
    return LabelTimeline(times, labels, edge, degenerate, tuple(events))


def track_labels(traj: PolarTrajectory, refine: bool = True) -> LabelTimeline:
    """Label timeline of the A^H amplitudes of a trajectory."""
    return track_amplitudes(traj.times, traj.q, refine=refine)


@dataclass(frozen=True)
class BranchMatch:
    permutation: tuple
    ambiguous: bool


def continue_through_degeneracy(before: PolarFrame, after: PolarFrame, tol: float = AMBIGUITY_TOL) -> BranchMatch:
    """Match eigenbranches across a crossing by maximal ``|<φ_j(t-), φ_m(t+)>|``.

    ``permutation[j]`` is the column of ``after`` continuing branch ``j``.
    Near-ties in the overlaps fall back to the identity and are flagged.
    """
    if before.m != after.m:
        raise ValidationError("frames must have the same number of terms")
    score = np.abs(before.phi.conj().T @ after.phi)
    for row in score:
        top = np.sort(row)[::-1]
        if top.size > 1 and top[0] - top[1] < tol:
            return BranchMatch(tuple(range(before.m)), True)
    _, cols = linear_sum_assignment(-score)
    return BranchMatch(tuple(int(c) for c in cols), False)


# ------------------------------------------------------------------------------------
# conditional states


@dataclass(frozen=True)
class ConditionalState:
    """The ray selected for ``subsystem`` together with its label.

    ``provenance`` lists ``(system factors, subsystem factors, k)`` per stage.
    """

    subsystem: tuple
    ray: np.ndarray
    k: int
    on_boundary: bool
    provenance: tuple = ()

    def __post_init__(self) -> None:
        ray = np.array(self.ray, dtype=complex)
        if abs(np.linalg.norm(ray) - 1) > 1e-10:
            raise ValidationError("conditional ray must be normalized")
        ray.setflags(write=False)
        object.__setattr__(self, "ray", ray)

    def same_ray(self, other: np.ndarray, tol: float = 1e-8) -> bool:
        return abs(abs(np.vdot(self.ray, other)) - 1) < tol


def _select(frame: PolarFrame, point: Optional[ToroidPoint], rank_tol: float = 1e-12) -> tuple[int, bool]:
    if frame.m == 1:
        return 0, False
    toroid = RightToroid(tuple(frame.radii / np.linalg.norm(frame.radii)))
    if point is None:
        point = ToroidPoint.from_amplitudes(frame.q)
    lab = locate(point, toroid)
    return lab.k, lab.on_boundary


def conditional_state(
    gamma: StateVector,
    point: Optional[ToroidPoint] = None,
    side: int = 1,
    frame: Optional[PolarFrame] = None,
) -> ConditionalState:
    """Conditional spectral state of factor ``side`` for the amplitude point ``point``.

    With no point, the phases of ``frame.q`` are used (all zero for the default
    decomposition, which sits on the basepoint and is flagged).
    """
    if side not in (1, 2):
        raise ValidationError("side must be 1 or 2")
    frame = polar_decompose(gamma) if frame is None else frame
    k, edge = _select(frame, point)
    ray = frame.phi[:, k] if side == 1 else frame.psi[:, k]
    return ConditionalState((side - 1,), ray, k, edge, ((("S1", "S2"), (side - 1,), k),))


def iterate_conditional(
    amplitudes,
    factor_dims: Sequence[int],
    chain: Sequence[Sequence[int]],
    points: Optional[Sequence[Optional[ToroidPoint]]] = None,
    product_tol: float = 1e-8,
) -> ConditionalState:
    """Iterated conditional spectral state along nested subsystems.

    ``chain[0]`` is a set of factor indices conditioned against the rest of the
    system; each later entry is a subset of the previous one and is conditioned
    against the rest of the previous subsystem.  From the second stage on the
    current ray must be a product across the new cut.
    """
    amps = amplitudes.amplitudes if isinstance(amplitudes, StateVector) else np.asarray(amplitudes, dtype=complex)
    dims = [int(d) for d in factor_dims]
    if not chain:
        raise ValidationError("chain must have at least one stage")
    points = list(points) if points is not None else [None] * len(chain)
    if len(points) != len(chain):
        raise ValidationError("need one point (or None) per stage")
    system = list(range(len(dims)))
    vec = amps
    provenance = []
    k = 0
    edge = False
    for stage, (subset, point) in enumerate(zip(chain, points)):
        subset = sorted(int(i) for i in subset)
        if not set(subset) < set(system):
            raise ValidationError(f"stage {stage}: {subset} is not a proper subset of {system}")
        local = [system.index(i) for i in subset]
        sv = rebipartition(vec, [dims[i] for i in system], local)
        frame = polar_decompose(sv)
        if stage > 0 and frame.m > 1 and frame.radii[1] > product_tol:
            raise NonProductError(f"stage {stage}: ray is entangled across {subset} (second radius {frame.radii[1]:.2e})")
        if stage > 0:
            frame = PolarFrame(frame.q[:1], frame.phi[:, :1], frame.psi[:, :1])
        k, e = _select(frame, point)
        edge = edge or e
        provenance.append((tuple(system), tuple(subset), k))
        vec = frame.phi[:, k]
        system = subset
    return ConditionalState(tuple(system), vec, k, edge, tuple(provenance))


def fano_state(alphas: np.ndarray, weights: np.ndarray, n3: Optional[int] = None) -> np.ndarray:
    """``Σ_i c_i α_i ⊗ β_i ⊗ χ_i`` with standard-basis ``β_i``, ``χ_i``.

    Any convex decomposition ``Σ |c_i|² P_{α_i}`` of a density operator on the
    first factor arises from this three-factor vector by two-step conditioning.
    """
    alphas = np.asarray(alphas, dtype=complex)
    c = np.asarray(weights, dtype=complex)
    n1, m = alphas.shape
    n3 = m if n3 is None else n3
    out = np.zeros((n1, m, n3), complex)
    for i in range(m):
        out[:, i, i] = c[i] * alphas[:, i] / np.linalg.norm(alphas[:, i])
    out = out.ravel()
    return out / np.linalg.norm(out)
