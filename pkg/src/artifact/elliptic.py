"""Carlson symmetric elliptic integrals and Legendre's integral of the third kind.

The duplication algorithms follow Carlson's 1995 formulation: each step
replaces the arguments by ``(x + lam) / 4`` until they agree to within a
relative spread small enough for a fifth-order Taylor tail.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad

_RTOL = 1e-16


class EllipticDomainError(ValueError):
    pass


def carlson_rc(x: float, y: float) -> float:
    """Degenerate integral ``R_C(x, y) = R_F(x, y, y)`` for ``x >= 0, y > 0``."""
    if x < 0 or y <= 0:
        raise EllipticDomainError(f"R_C needs x >= 0, y > 0 (got {x}, {y})")
    if x == y:
        return 1.0 / math.sqrt(x)
    u = x / y
    if abs(1.0 - u) < 1e-4:
        # arcsin(sqrt(w))/sqrt(w) in w = 1 - x/y avoids cancellation near x = y
        w = 1.0 - u
        return (1.0 + w / 6 + 3 * w * w / 40 + 5 * w ** 3 / 112 + 35 * w ** 4 / 1152) / math.sqrt(y)
    if x < y:
        return math.acos(math.sqrt(u)) / math.sqrt(y - x)
    return math.acosh(math.sqrt(u)) / math.sqrt(x - y)


def carlson_rf(x: float, y: float, z: float) -> float:
    """``R_F(x, y, z) = ½∫₀^∞ dt / sqrt((t+x)(t+y)(t+z))``; at most one argument zero."""
    if min(x, y, z) < 0 or (x == 0) + (y == 0) + (z == 0) > 1:
        raise EllipticDomainError(f"R_F arguments out of range: {x}, {y}, {z}")
    a0 = (x + y + z) / 3.0
    q = (3.0 * _RTOL) ** (-1.0 / 6.0) * max(abs(a0 - x), abs(a0 - y), abs(a0 - z))
    a, xm, ym, zm = a0, x, y, z
    scale = 1.0
    while scale * q >= abs(a):
        sx, sy, sz = math.sqrt(xm), math.sqrt(ym), math.sqrt(zm)
        lam = sx * sy + sx * sz + sy * sz
        xm, ym, zm = (xm + lam) / 4, (ym + lam) / 4, (zm + lam) / 4
        a = (a + lam) / 4
        scale /= 4
    X = (a0 - x) * scale / a
    Y = (a0 - y) * scale / a
    Z = -(X + Y)
    e2 = X * Y - Z * Z
    e3 = X * Y * Z
    return (1 - e2 / 10 + e3 / 14 + e2 * e2 / 24 - 3 * e2 * e3 / 44) / math.sqrt(a)


def carlson_rj(x: float, y: float, z: float, p: float) -> float:
    """``R_J(x, y, z, p) = (3/2)∫₀^∞ dt / ((t+p) sqrt((t+x)(t+y)(t+z)))`` for ``p > 0``."""
    if min(x, y, z) < 0 or (x == 0) + (y == 0) + (z == 0) > 1 or p <= 0:
        raise EllipticDomainError(f"R_J arguments out of range: {x}, {y}, {z}, {p}")
    a0 = (x + y + z + 2 * p) / 5.0
    delta = (p - x) * (p - y) * (p - z)
    q = (0.25 * _RTOL) ** (-1.0 / 6.0) * max(abs(a0 - x), abs(a0 - y), abs(a0 - z), abs(a0 - p))
    a, xm, ym, zm, pm = a0, x, y, z, p
    scale = 1.0
    acc = 0.0
    while scale * q >= abs(a):
        sx, sy, sz, sp = math.sqrt(xm), math.sqrt(ym), math.sqrt(zm), math.sqrt(pm)
        lam = sx * sy + sx * sz + sy * sz
        d = (sp + sx) * (sp + sy) * (sp + sz)
        e = scale ** 3 * delta / (d * d)
        acc += 6.0 * scale / d * carlson_rc(1.0, 1.0 + e)
        xm, ym, zm, pm = (xm + lam) / 4, (ym + lam) / 4, (zm + lam) / 4, (pm + lam) / 4
        a = (a + lam) / 4
        scale /= 4
    X = (a0 - x) * scale / a
    Y = (a0 - y) * scale / a
    Z = (a0 - z) * scale / a
    P = -(X + Y + Z) / 2
    e2 = X * Y + X * Z + Y * Z - 3 * P * P
    e3 = X * Y * Z + 2 * e2 * P + 4 * P ** 3
    e4 = (2 * X * Y * Z + e2 * P + 3 * P ** 3) * P
    e5 = X * Y * Z * P * P
    tail = 1 - 3 * e2 / 14 + e3 / 6 + 9 * e2 * e2 / 88 - 3 * e4 / 22 - 9 * e2 * e3 / 52 + 3 * e5 / 26
    return scale * a ** -1.5 * tail + acc


def _check_pi_domain(n: float, phi: float, m: float) -> None:
    # the worst point on [0, |phi|] has sin^2 = min(1, sin^2 phi) once |phi| >= pi/2
    s2 = 1.0 if abs(phi) >= math.pi / 2 else math.sin(phi) ** 2
    if m * s2 >= 1 or n * s2 >= 1:
        raise EllipticDomainError(f"Pi(n={n}; phi={phi} | m={m}) is outside the admissible range")


def _pi_principal(n: float, phi: float, m: float) -> float:
    """Carlson form valid for ``|phi| <= pi/2``."""
    s = math.sin(phi)
    c2 = math.cos(phi) ** 2
    s2 = s * s
    d2 = 1.0 - m * s2
    if s == 0.0:
        return 0.0
    return s * carlson_rf(c2, d2, 1.0) + n / 3.0 * s * s2 * carlson_rj(c2, d2, 1.0, 1.0 - n * s2)


def complete_pi(n: float, m: float) -> float:
    """Complete integral ``Pi(n | m) = Pi(n; pi/2 | m)``."""
    _check_pi_domain(n, math.pi / 2, m)
    return carlson_rf(0.0, 1.0 - m, 1.0) + n / 3.0 * carlson_rj(0.0, 1.0 - m, 1.0, 1.0 - n)


def legendre_pi_quad(n: float, phi: float, m: float) -> float:
    """Adaptive Gauss–Kronrod evaluation of the defining integral."""
    _check_pi_domain(n, phi, m)

    def f(t: float) -> float:
        s2 = math.sin(t) ** 2
        return 1.0 / ((1.0 - n * s2) * math.sqrt(1.0 - m * s2))

    # split at multiples of pi/2 so each panel is smooth and short
    edges = np.arange(0.0, abs(phi), math.pi / 2)
    edges = np.append(edges, abs(phi))
    total = sum(quad(f, lo, hi, epsabs=1e-14, epsrel=1e-14, limit=200)[0] for lo, hi in zip(edges[:-1], edges[1:]))
    return math.copysign(total, phi)


def legendre_pi(n: float, phi: float, m: float, method: str = "carlson") -> float:
    """Legendre's incomplete integral of the third kind.

    ``Pi(n; phi | m) = ∫₀^phi dr / ((1 - n sin²r) sqrt(1 - m sin²r))``,
    continued past ``pi/2`` through ``Pi(n; j pi + t | m) = 2 j Pi(n | m) + Pi(n; t | m)``.
    """
    if method == "quad":
        return legendre_pi_quad(n, phi, m)
    if method != "carlson":
        raise ValueError(f"unknown method {method!r}")
    _check_pi_domain(n, phi, m)
    j = math.floor(phi / math.pi + 0.5)
    t = phi - j * math.pi
    out = _pi_principal(n, t, m)
    if j:
        out += 2 * j * complete_pi(n, m)
    return out


def legendre_pi_array(n: float, phis, m: float) -> np.ndarray:
    """Vector of ``legendre_pi(n, phi, m)`` over an array of amplitudes."""
    return np.array([legendre_pi(n, float(p), m) for p in np.ravel(phis)]).reshape(np.shape(phis))
