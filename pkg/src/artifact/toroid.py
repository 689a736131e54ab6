"""Right toroids ``T(r) = ∏ S¹(r_k)`` and their Pythagorean partition.

Points are given in arc coordinates ``S_k = r_k θ_k``.  Dividing by the
circumference ``s_k = 2π r_k`` gives box fractions ``a_k ∈ [0, 1)``.  Sorting
them in descending order picks a simplex ``S_σ`` of the box, and the
projection ``τ = Σ r_k² a_k`` onto the main diagonal picks a slab of that
simplex.  Each slab belongs to exactly one part.  Labels are 0-based.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .hilbert import ValidationError

BOUNDARY_TOL = 1e-12
RADIUS_GAP_TOL = 1e-12


class DegenerateRadiiError(ValidationError):
    """Two radii coincide, so the partition is not defined."""


@dataclass(frozen=True)
class RightToroid:
    """A right toroid with radii in strictly descending order and ``Σ r² = 1``."""

    radii: tuple

    def __post_init__(self) -> None:
        r = tuple(self.radii)
        if not r:
            raise ValidationError("need at least one radius")
        if any(not (x > 0) for x in r):
            raise ValidationError("radii must be positive")
        if any(r[i] - r[i + 1] <= RADIUS_GAP_TOL for i in range(len(r) - 1)):
            raise DegenerateRadiiError(f"radii must be strictly descending, got {r}")
        total = sum(x * x for x in r)
        if abs(float(total) - 1.0) > 1e-10:
            raise ValidationError(f"squared radii must sum to 1 (got {float(total)!r})")
        object.__setattr__(self, "radii", r)

    @classmethod
    def from_squares(cls, squares: Sequence[float]) -> "RightToroid":
        return cls(tuple(math.sqrt(x) for x in squares))

    @classmethod
    def normalized(cls, radii: Sequence[float]) -> "RightToroid":
        r = np.asarray(radii, dtype=float)
        return cls(tuple(r / np.linalg.norm(r)))

    @property
    def n(self) -> int:
        return len(self.radii)

    @property
    def r(self) -> np.ndarray:
        return np.array(self.radii, dtype=float)

    @property
    def r2(self) -> np.ndarray:
        return self.r ** 2

    @property
    def circumferences(self) -> np.ndarray:
        return 2 * np.pi * self.r

    @property
    def f(self) -> np.ndarray:
        """Box edges ``f_j = s_j e_j`` as rows."""
        return np.diag(self.circumferences)

    @property
    def s(self) -> np.ndarray:
        """Main diagonal ``s = Σ f_j``."""
        return self.circumferences.copy()

    @property
    def g(self) -> np.ndarray:
        """Rows ``g_j = r_j² s - f_j``."""
        return np.outer(self.r2, self.s) - self.f


@dataclass(frozen=True)
class ToroidPoint:
    """Arc coordinates ``S_k``; use :meth:`reduced` to map into the box."""

    arcs: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "arcs", tuple(float(x) for x in np.ravel(self.arcs)))

    @classmethod
    def from_amplitudes(cls, q) -> "ToroidPoint":
        q = np.asarray(q, dtype=complex)
        r = np.abs(q)
        return cls(r * np.mod(np.angle(q), 2 * np.pi))

    def reduced(self, toroid: RightToroid) -> np.ndarray:
        if len(self.arcs) != toroid.n:
            raise ValidationError("point and toroid dimensions differ")
        return np.mod(np.array(self.arcs), toroid.circumferences)


@dataclass(frozen=True)
class PartitionLabel:
    k: int
    on_boundary: bool = False


# ------------------------------------------------------------------------------------
# point location


def box_fractions(arcs: np.ndarray, toroid: RightToroid) -> np.ndarray:
    a = np.mod(np.asarray(arcs, dtype=float), toroid.circumferences) / toroid.circumferences
    # mod can return exactly 1.0 after rounding
    return np.where(a >= 1.0, 0.0, a)


def label_from_fractions(a: np.ndarray, r2: np.ndarray, tol: float = BOUNDARY_TOL):
    """Vectorized core of :func:`locate` on box fractions ``a`` of shape ``(N, n)``."""
    a = np.atleast_2d(a)
    if a.shape[1] == 1:
        # a single circle is all one part
        return np.zeros(a.shape[0], int), np.zeros(a.shape[0], bool)
    order = np.argsort(-a, axis=1, kind="stable")
    a_sorted = np.take_along_axis(a, order, axis=1)
    cum = np.cumsum(r2[order], axis=1)
    tau = a @ r2
    j = np.minimum((cum < tau[:, None]).sum(axis=1), a.shape[1] - 1)
    labels = order[np.arange(a.shape[0]), j]
    edges = np.concatenate([np.zeros((a.shape[0], 1)), cum], axis=1)
    near_face = np.abs(edges - tau[:, None]).min(axis=1) <= tol
    tie = (a_sorted[:, :-1] - a_sorted[:, 1:]).min(axis=1) <= tol
    return labels, near_face | tie


def locate(point: ToroidPoint, toroid: RightToroid, tol: float = BOUNDARY_TOL) -> PartitionLabel:
    """Label of the part containing ``point``.

    Ties in the sort and points on a slab face get the lowest index and are flagged.
    """
    a = box_fractions(point.reduced(toroid), toroid)
    labels, boundary = label_from_fractions(a[None, :], toroid.r2, tol)
    return PartitionLabel(int(labels[0]), bool(boundary[0]))


def locate_many(arcs, toroid: RightToroid, tol: float = BOUNDARY_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Labels and boundary flags for an ``(N, n)`` array of arc coordinates."""
    arcs = np.atleast_2d(np.asarray(arcs, dtype=float))
    if arcs.shape[1] != toroid.n:
        raise ValidationError("point and toroid dimensions differ")
    return label_from_fractions(box_fractions(arcs, toroid), toroid.r2, tol)


def two_part_label(s_plus: float, s_minus: float, r_plus: float, r_minus: float, tol: float = BOUNDARY_TOL):
    """``(k, on_boundary)`` for ``n = 2`` from the three closed-form half-planes.

    ``(S_+, S_-)`` lies in part 0 iff it is below the line through the origin
    with slope ``r_-/r_+`` and below ``c2``, or above that line and above ``c3``.
    """
    c1 = r_minus * s_plus / r_plus
    c2 = 2 * math.pi * r_plus ** 2 / r_minus - s_plus * r_plus / r_minus
    c3 = 2 * math.pi * r_minus - s_plus * r_plus / r_minus
    below = s_minus < c1 and s_minus < c2
    above = s_minus > c1 and s_minus > c3
    scale = max(1.0, 2 * math.pi * r_plus)
    on_boundary = min(abs(s_minus - c1), abs(s_minus - c2), abs(s_minus - c3)) <= tol * scale
    return (0 if (below or above) else 1), on_boundary


# ------------------------------------------------------------------------------------
# diagonal cosets


@dataclass(frozen=True)
class DiagonalArcs:
    """Per-label intervals of the diagonal parameter ``λ ∈ [0, 1)``; arc length is ``2π λ``."""

    intervals: tuple  # per label, tuple of (start, end)
    measures: tuple  # per label, total λ-measure

    @property
    def lengths(self) -> np.ndarray:
        return 2 * np.pi * np.array([float(m) for m in self.measures])


def _merge(intervals):
    out = []
    for lo, hi in sorted(intervals):
        if out and lo <= out[-1][1]:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return tuple(out)


def diagonal_arcs_exact(r2: Sequence, a0: Sequence) -> DiagonalArcs:
    """Walk ``a(λ) = frac(a0 + λ)`` once around, exactly.

    All fractions grow at the same rate, so the sort order changes only when a
    coordinate wraps, and in between ``τ`` has slope ``Σ r² = 1``.  Accepts
    ``Fraction`` inputs for rational arithmetic.
    """
    n = len(r2)
    one = type(r2[0])(1)
    zero = one - one
    if abs(float(sum(r2)) - 1.0) > 1e-12:
        raise ValidationError("squared radii must sum to 1")
    wraps = sorted({(one - x) % one for x in a0} | {zero, one})
    per_label = [[] for _ in range(n)]
    for lo, hi in zip(wraps[:-1], wraps[1:]):
        if hi <= lo:
            continue
        mid = (lo + hi) / 2
        a_mid = [(x + mid) % one for x in a0]
        order = sorted(range(n), key=lambda i: (-a_mid[i], i))
        a_lo = [(x + lo) % one for x in a0]
        # coordinates wrapping exactly at lo restart from 0
        a_lo = [zero if (x + lo) % one == zero else v for x, v in zip(a0, a_lo)]
        tau_lo = sum(r * a for r, a in zip(r2, a_lo))
        cum = zero
        for k in order:
            start, end = cum, cum + r2[k]
            cum = end
            # λ - lo = τ - tau_lo inside the segment
            t0 = max(start - tau_lo, zero)
            t1 = min(end - tau_lo, hi - lo)
            if t1 > t0:
                per_label[k].append((lo + t0, lo + t1))
    intervals = tuple(_merge(iv) for iv in per_label)
    measures = tuple(sum((hi - lo for lo, hi in iv), zero) for iv in intervals)
    return DiagonalArcs(intervals, measures)


def diagonal_arcs_sampled(toroid: RightToroid, base: ToroidPoint, samples: int = 4096, xtol: float = 1e-14) -> DiagonalArcs:
    """Grid the coset, locate every sample and bisect each label change."""
    a0 = box_fractions(base.reduced(toroid), toroid)
    r2 = toroid.r2

    def lab(lam):
        return int(label_from_fractions(np.mod(a0 + lam, 1.0)[None, :], r2)[0][0])

    grid = (np.arange(samples) + 0.5) / samples
    labels, _ = label_from_fractions(np.mod(a0[None, :] + grid[:, None], 1.0), r2)
    cuts = []
    for i in np.nonzero(labels != np.roll(labels, -1))[0]:
        lo = grid[i]
        hi = grid[i + 1] if i + 1 < samples else grid[0] + 1.0
        left = lab(lo)
        while hi - lo > xtol:
            mid = 0.5 * (lo + hi)
            if lab(mid) == left:
                lo = mid
            else:
                hi = mid
        cuts.append((0.5 * (lo + hi), left, int(labels[(i + 1) % samples])))
    per_label = [[] for _ in range(toroid.n)]
    if not cuts:
        per_label[int(labels[0])].append((0.0, 1.0))
    else:
        for (c0, _, lab0), (c1, _, _) in zip(cuts, cuts[1:] + [(cuts[0][0] + 1.0, 0, 0)]):
            per_label[lab0].append((c0, c1))
    measures = tuple(sum(hi - lo for lo, hi in iv) for iv in per_label)
    return DiagonalArcs(tuple(tuple(iv) for iv in per_label), measures)


def diagonal_arcs(toroid: RightToroid, base: ToroidPoint, method: str = "exact", samples: int = 4096) -> DiagonalArcs:
    """Measure of each part along the diagonal coset through ``base``."""
    if method == "exact":
        a0 = box_fractions(base.reduced(toroid), toroid)
        return diagonal_arcs_exact(list(toroid.r2), list(a0))
    if method == "sampled":
        return diagonal_arcs_sampled(toroid, base, samples)
    raise ValueError(f"unknown method {method!r}")


def part_measure(toroid: RightToroid, k: int, samples: int = 10_000, rng: np.random.Generator | None = None):
    """Monte Carlo volume fraction of part ``k`` with its standard error."""
    if samples < 10_000:
        raise ValidationError("part_measure needs at least 1e4 samples")
    if not 0 <= k < toroid.n:
        raise ValidationError(f"label {k} out of range")
    rng = np.random.default_rng() if rng is None else rng
    labels, _ = label_from_fractions(rng.random((samples, toroid.n)), toroid.r2)
    p = float(np.mean(labels == k))
    return p, math.sqrt(max(p * (1 - p), 1e-300) / samples)


# ------------------------------------------------------------------------------------
# cells


def simplex_vertices(toroid: RightToroid, sigma: Sequence[int]) -> np.ndarray:
    """Vertices ``P_0 = 0, P_j = Σ_{ν≤j} f_σ(ν)`` of the box simplex ``S_σ``."""
    sigma = list(sigma)
    s = toroid.circumferences
    pts = np.zeros((toroid.n + 1, toroid.n))
    for j, axis in enumerate(sigma, start=1):
        pts[j] = pts[j - 1]
        pts[j, axis] = s[axis]
    return pts


def slab_vertices(toroid: RightToroid, k: int, sigma: Sequence[int]) -> np.ndarray:
    """Vertices of ``Sl(k, σ)``: the simplex ``S_σ`` clipped to the slab of ``k``.

    The slab is ``cum_{j-1} ≤ λ(x) ≤ cum_j`` with ``j = σ⁻¹(k)`` and
    ``λ(x) = <x, s>/<s, s>``; every pair of simplex vertices is an edge.
    """
    sigma = list(sigma)
    j0 = sigma.index(k) + 1
    pts = simplex_vertices(toroid, sigma)
    lam = np.concatenate([[0.0], np.cumsum(toroid.r2[sigma])])
    lo, hi = lam[j0 - 1], lam[j0]
    out = [pts[j0 - 1], pts[j0]]
    for a in range(j0):
        for b in range(j0, toroid.n + 1):
            for level in (lo, hi):
                if lam[a] < level < lam[b]:
                    w = (level - lam[a]) / (lam[b] - lam[a])
                    out.append(pts[a] + w * (pts[b] - pts[a]))
    return _unique_rows(np.array(out))


def _unique_rows(x: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    keep = []
    for row in x:
        if not any(np.abs(row - y).max() <= tol for y in keep):
            keep.append(row)
    return np.array(keep)


def slab_shift(toroid: RightToroid, k: int, sigma: Sequence[int]) -> np.ndarray:
    """``v_{kσ} = Σ_{ν<σ⁻¹(k)} f_σ(ν)``, the chain vertex just before ``k``."""
    sigma = list(sigma)
    return simplex_vertices(toroid, sigma)[sigma.index(k)]


def parallelotope_edges(toroid: RightToroid, k: int) -> np.ndarray:
    """Edge vectors of ``A_k``: ``g_j`` for ``j ≠ k`` and ``r_k² s``."""
    g = toroid.g
    return np.vstack([g[j] for j in range(toroid.n) if j != k] + [toroid.r2[k] * toroid.s])


def parallelotope_vertices(toroid: RightToroid, k: int) -> np.ndarray:
    edges = parallelotope_edges(toroid, k)
    corners = np.array(list(itertools.product((0, 1), repeat=toroid.n)), dtype=float)
    return corners @ edges


def in_parallelotope(x: np.ndarray, toroid: RightToroid, k: int, tol: float = 1e-9) -> np.ndarray:
    """Membership of rows of ``x`` in ``A_k`` through barycentric edge coordinates."""
    coef = np.linalg.solve(parallelotope_edges(toroid, k).T, np.atleast_2d(x).T).T
    return np.all((coef >= -tol) & (coef <= 1 + tol), axis=1)


@dataclass(frozen=True)
class CellGeometry:
    k: int
    sigma: tuple
    slab: np.ndarray  # vertices of Sl(k, σ)
    shifted: np.ndarray  # vertices of Sl†(k, σ) = Sl(k, σ) - v_{kσ}
    parallelotope: np.ndarray  # 2**n vertices of A_k


def cell_geometry(toroid: RightToroid, k: int, sigma: Sequence[int]) -> CellGeometry:
    if toroid.n > 4:
        raise ValidationError("cell export supports n <= 4")
    sigma = tuple(int(x) for x in sigma)
    if sorted(sigma) != list(range(toroid.n)):
        raise ValidationError("sigma must be a permutation of the axes")
    slab = slab_vertices(toroid, k, sigma)
    return CellGeometry(k, sigma, slab, slab - slab_shift(toroid, k, sigma), parallelotope_vertices(toroid, k))


def polytope_volume(vertices: np.ndarray) -> float:
    from scipy.spatial import ConvexHull

    if vertices.shape[1] == 1:
        return float(np.ptp(vertices))
    return float(ConvexHull(vertices).volume)


def halfspaces(vertices: np.ndarray) -> np.ndarray:
    """Facet equations ``[A | b]`` with ``A x + b ≤ 0`` inside."""
    from scipy.spatial import ConvexHull

    return ConvexHull(vertices).equations


def brute_force_labels(arcs: np.ndarray, toroid: RightToroid, tol: float = 1e-9) -> np.ndarray:
    """Labels by testing every ``Sl(k, σ)`` with half-space inequalities.

    Returns ``-1`` where no cell (or more than one, beyond ``tol``) contains the point.
    """
    x = np.mod(np.atleast_2d(arcs), toroid.circumferences)
    counts = np.zeros(x.shape[0], int)
    labels = np.full(x.shape[0], -1)
    for sigma in itertools.permutations(range(toroid.n)):
        for k in range(toroid.n):
            eq = halfspaces(slab_vertices(toroid, k, sigma))
            inside = np.all(x @ eq[:, :-1].T + eq[:, -1] <= tol, axis=1)
            labels[inside & (counts == 0)] = k
            # a point on a shared face is inside two cells with the same label
            clash = inside & (counts > 0) & (labels != k)
            labels[clash] = -2
            counts += inside
    labels[counts == 0] = -1
    return labels


# ------------------------------------------------------------------------------------
# naturality


@dataclass(frozen=True)
class NaturalityReport:
    n: int
    dropped_axis: int
    samples: int
    violations: int
    excluded: int
    mode: str

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)


def check_naturality(
    toroid: RightToroid,
    axis_to_drop: int | None = None,
    samples: int = 1000,
    rng: np.random.Generator | None = None,
    mode: str = "subtoroid",
    eps: float = 1e-4,
) -> NaturalityReport:
    """Compare labels on ``T(r)`` with labels on the toroid missing one axis.

    ``subtoroid`` samples points whose dropped coordinate is 0.  ``limit``
    builds an ``n``-toroid whose dropped radius is ``eps`` and compares
    labels on generic points; disagreements inside the ``O(eps²)`` band
    around a slab face are excluded and counted.
    """
    if toroid.n < 2:
        raise ValidationError("naturality needs n >= 2")
    d = toroid.n - 1 if axis_to_drop is None else int(axis_to_drop)
    if not 0 <= d < toroid.n:
        raise ValidationError(f"axis {d} out of range")
    rng = np.random.default_rng() if rng is None else rng
    keep = [i for i in range(toroid.n) if i != d]
    sub_r2 = toroid.r2[keep] / toroid.r2[keep].sum()
    if mode == "subtoroid":
        full_r2 = toroid.r2
        a = rng.random((samples, toroid.n))
        a[:, d] = 0.0
    elif mode == "limit":
        full_r2 = np.empty(toroid.n)
        full_r2[keep] = sub_r2 * (1 - eps ** 2)
        full_r2[d] = eps ** 2
        a = rng.random((samples, toroid.n))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    full, _ = label_from_fractions(a, full_r2)
    sub, sub_edge = label_from_fractions(a[:, keep], sub_r2, tol=2 * eps ** 2 if mode == "limit" else BOUNDARY_TOL)
    mapped = np.array(keep)[sub]
    bad = full != mapped
    excluded = int(np.sum(bad & sub_edge))
    return NaturalityReport(toroid.n, d, samples, int(np.sum(bad & ~sub_edge)), excluded, mode)


# ------------------------------------------------------------------------------------
# export


_COLORS = ("#d95f02", "#1b9e77", "#7570b3", "#e7298a")


def tiling_svg(toroid: RightToroid, scale: float = 60.0) -> str:
    """SVG of the ``n = 2`` box with its two simplices, slabs and labels."""
    if toroid.n != 2:
        raise ValidationError("SVG export is for n = 2")
    s1, s2 = toroid.circumferences
    w, h = s1 * scale, s2 * scale

    def pt(x):
        return f"{x[0] * scale:.4f},{h - x[1] * scale:.4f}"

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w + 20:.2f}" height="{h + 20:.2f}" '
        f'viewBox="-10 -10 {w + 20:.2f} {h + 20:.2f}">',
        f'<rect x="0" y="0" width="{w:.4f}" height="{h:.4f}" fill="none" stroke="black"/>',
    ]
    for sigma in itertools.permutations(range(2)):
        for k in range(2):
            poly = slab_vertices(toroid, k, sigma)
            c = poly.mean(axis=0)
            order = np.argsort(np.arctan2(poly[:, 1] - c[1], poly[:, 0] - c[0]))
            pts = " ".join(pt(v) for v in poly[order])
            parts.append(f'<polygon points="{pts}" fill="{_COLORS[k]}" fill-opacity="0.5" stroke="black"/>')
            cx, cy = pt(c).split(",")
            parts.append(f'<text x="{cx}" y="{cy}" font-size="12">p{k + 1}</text>')
    parts.append(f'<line x1="{pt((0, 0)).split(",")[0]}" y1="{h:.4f}" x2="{w:.4f}" y2="0" stroke="black" stroke-dasharray="4"/>')
    parts.append("</svg>")
    return "\n".join(parts)


def tiling_obj(toroid: RightToroid) -> str:
    """Wavefront-style ``v``/``f`` text for the slabs of a 3-toroid, one group per cell."""
    from scipy.spatial import ConvexHull

    if toroid.n != 3:
        raise ValidationError("OBJ export is for n = 3")
    lines = ["# slabs Sl(k, sigma) of the 3-box"]
    offset = 1
    for sigma in itertools.permutations(range(3)):
        for k in range(3):
            verts = slab_vertices(toroid, k, sigma)
            hull = ConvexHull(verts)
            lines.append(f"g part{k + 1}_sigma{''.join(str(i + 1) for i in sigma)}")
            lines.extend(f"v {x:.10f} {y:.10f} {z:.10f}" for x, y, z in verts)
            lines.extend("f " + " ".join(str(offset + i) for i in tri) for tri in hull.simplices)
            offset += len(verts)
    return "\n".join(lines) + "\n"


def exact_r2(squares: Sequence) -> list:
    """Rational squared radii for exact diagonal walks."""
    out = [Fraction(x) for x in squares]
    if sum(out) != 1:
        raise ValidationError("rational squared radii must sum to exactly 1")
    return out
