"""Spindle surfaces: closed surfaces of revolution with two conical tips.

The metric is ``dx^2 + psi(x)^2 dtheta^2`` on ``(0, L) x S^1``.  Near each tip
the profile is exactly conical, ``psi(x) = alpha0 * x`` and
``psi(x) = alphaL * (L - x)``, so the cross-section at the tip is a circle of
circumference ``2*pi*alpha``.  The two collars are joined by the unique quintic
matching value, slope and curvature at both junctions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Polynomial


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class CrossSectionSpectrum:
    """Eigenvalues of the cross-section Laplacian with multiplicities.

    ``entries`` is a tuple of ``(lambda, multiplicity)`` pairs, strictly
    decreasing in lambda, starting with ``(0.0, k)``.
    """

    entries: tuple[tuple[float, int], ...]
    label: str = ""

    def __post_init__(self):
        if not self.entries:
            raise GeometryError("empty spectrum")
        lams = [lam for lam, _ in self.entries]
        if any(lam > 0 for lam in lams):
            raise GeometryError("cross-section eigenvalues must be <= 0")
        if lams[0] != 0.0:
            raise GeometryError("0 must be the first eigenvalue (constants)")
        if any(b >= a for a, b in zip(lams, lams[1:])):
            raise GeometryError("eigenvalues must be strictly decreasing")
        if any(int(k) < 1 for _, k in self.entries):
            raise GeometryError("multiplicities must be positive")

    @property
    def lambdas(self) -> list[float]:
        return [lam for lam, _ in self.entries]

    @property
    def lambda1(self) -> float:
        """Greatest non-zero eigenvalue."""
        if len(self.entries) < 2:
            raise GeometryError("spectrum has no non-zero eigenvalue")
        return self.entries[1][0]

    @property
    def lambda_max_abs(self) -> float:
        return abs(self.entries[-1][0])


def circle_spectrum(alpha: float, k_max: int) -> CrossSectionSpectrum:
    """Circle of circumference ``2*pi*alpha``: ``-(k/alpha)^2``, mult. 2 for k >= 1."""
    if alpha <= 0:
        raise GeometryError("alpha must be positive")
    entries = [(0.0, 1)] + [(-((k / alpha) ** 2), 2) for k in range(1, k_max + 1)]
    return CrossSectionSpectrum(tuple(entries), label=f"circle({alpha:g})")


def sphere_spectrum(n: int, j_max: int) -> CrossSectionSpectrum:
    """Unit round sphere ``S^n``: ``-j(j+n-1)``."""
    if n < 1:
        raise GeometryError("n must be >= 1")
    if n == 1:
        return circle_spectrum(1.0, j_max)
    entries = []
    for j in range(j_max + 1):
        mult = math.comb(n + j, n) - (math.comb(n + j - 2, n) if j >= 2 else 0)
        entries.append((-float(j * (j + n - 1)), mult))
    return CrossSectionSpectrum(tuple(entries), label=f"sphere({n})")


def union_spectrum(*spectra: CrossSectionSpectrum) -> CrossSectionSpectrum:
    """Spectrum of a disjoint union of cross-sections (multiplicities add)."""
    acc: dict[float, int] = {}
    for sp in spectra:
        for lam, k in sp.entries:
            acc[lam] = acc.get(lam, 0) + k
    entries = tuple(sorted(acc.items(), key=lambda e: -e[0]))
    return CrossSectionSpectrum(entries, label="+".join(sp.label for sp in spectra))


@dataclass(frozen=True)
class SpindleGeometry:
    alpha0: float
    alphaL: float
    L: float
    x_c: float
    # quintic in t = (x - x_c) / (L - 2 x_c) on the interior segment
    interior: Polynomial = field(compare=False, repr=False)

    @property
    def interior_width(self) -> float:
        return self.L - 2.0 * self.x_c

    def tip_alpha(self, tip: int) -> float:
        return self.alpha0 if tip == 0 else self.alphaL

    def cross_section(self, k_max: int) -> CrossSectionSpectrum:
        """Spectrum of the boundary Laplacian (both tip circles)."""
        return union_spectrum(circle_spectrum(self.alpha0, k_max),
                              circle_spectrum(self.alphaL, k_max))

    def lambda1(self) -> float:
        return -1.0 / max(self.alpha0, self.alphaL) ** 2


def _quintic_bridge(a0: float, aL: float, x_c: float, width: float) -> Polynomial:
    # value, first and second derivative (in t) at t=0 and t=1
    rhs = np.array([a0 * x_c, a0 * width, 0.0, aL * x_c, -aL * width, 0.0])
    rows = []
    for t in (0.0, 1.0):
        rows.append([t**k for k in range(6)])
        rows.append([k * t ** (k - 1) if k >= 1 else 0.0 for k in range(6)])
        rows.append([k * (k - 1) * t ** (k - 2) if k >= 2 else 0.0 for k in range(6)])
    A = np.array([rows[0], rows[1], rows[2], rows[3], rows[4], rows[5]])
    return Polynomial(np.linalg.solve(A, rhs))


def build_spindle(alpha0: float, alphaL: float, L: float, x_c: float) -> SpindleGeometry:
    for name, val in (("alpha0", alpha0), ("alphaL", alphaL), ("L", L), ("x_c", x_c)):
        if not val > 0:
            raise GeometryError(f"{name} must be positive, got {val}")
    if not x_c < L / 2:
        raise GeometryError(f"collar width x_c={x_c} must be < L/2={L / 2}")
    width = L - 2.0 * x_c
    poly = _quintic_bridge(alpha0, alphaL, x_c, width)
    roots = poly.roots()
    real = roots[np.abs(roots.imag) < 1e-12].real
    t = np.linspace(0.0, 1.0, 2001)
    if np.any((real >= 0.0) & (real <= 1.0)) or np.min(poly(t)) <= 0.0:
        raise GeometryError("interior profile is not positive")
    return SpindleGeometry(float(alpha0), float(alphaL), float(L), float(x_c), poly)


def profile_eval(geom: SpindleGeometry, x):
    """Return ``(psi, dpsi)`` at ``x`` (scalar or array) in ``[0, L]``."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0.0) or np.any(xa > geom.L):
        raise GeometryError(f"x outside [0, {geom.L}]")
    width = geom.interior_width
    left = xa <= geom.x_c
    right = xa >= geom.L - geom.x_c
    t = (xa - geom.x_c) / width
    psi = np.where(left, geom.alpha0 * xa,
                   np.where(right, geom.alphaL * (geom.L - xa), geom.interior(t)))
    dpsi = np.where(left, geom.alpha0,
                    np.where(right, -geom.alphaL, geom.interior.deriv()(t) / width))
    if xa.ndim == 0:
        return float(psi), float(dpsi)
    return psi, dpsi


def profile_d2(geom: SpindleGeometry, x):
    """Second derivative of the profile (zero on the conical collars)."""
    xa = np.asarray(x, dtype=float)
    width = geom.interior_width
    mid = (xa > geom.x_c) & (xa < geom.L - geom.x_c)
    t = (xa - geom.x_c) / width
    return np.where(mid, geom.interior.deriv(2)(t) / width**2, 0.0)


def exact_volume(geom: SpindleGeometry) -> float:
    """Closed-form ``2*pi * int_0^L psi dx`` (oracle for the grid quadrature)."""
    collars = 0.5 * (geom.alpha0 + geom.alphaL) * geom.x_c**2
    anti = geom.interior.integ()
    middle = (anti(1.0) - anti(0.0)) * geom.interior_width
    return 2.0 * math.pi * (collars + middle)


def volume(geom: SpindleGeometry, grid) -> float:
    """Riemannian area by the grid quadrature (trapezoid against psi, plus tip caps)."""
    return 2.0 * math.pi * float(np.sum(grid.weights))


@dataclass(frozen=True)
class CutoffOmega:
    """Collar cut-off: 1 for x <= inner, 0 for x >= outer (distance from a tip)."""

    inner: float
    outer: float
    shape: str = "smoothstep-quintic"

    def __post_init__(self):
        if self.shape not in ("smoothstep-quintic", "indicator"):
            raise GeometryError(f"unknown cutoff shape {self.shape!r}")
        if not 0.0 < self.inner < self.outer:
            raise GeometryError("need 0 < inner < outer")

    @classmethod
    def default(cls, geom: SpindleGeometry) -> "CutoffOmega":
        return cls(inner=geom.x_c / 2, outer=geom.x_c)

    @property
    def support(self) -> float:
        """Largest distance at which the cut-off can be non-zero."""
        return self.inner if self.shape == "indicator" else self.outer


def cutoff_eval(omega: CutoffOmega, x, deriv: int = 0):
    """Cut-off value (``deriv=0``) or its exact first/second derivative in x."""
    xa = np.asarray(x, dtype=float)
    if omega.shape == "indicator":
        if deriv:
            raise GeometryError("the indicator cut-off has no derivatives")
        val = np.where(xa <= omega.inner, 1.0, 0.0)
    else:
        w = omega.outer - omega.inner
        t = np.clip((xa - omega.inner) / w, 0.0, 1.0)
        if deriv == 0:
            val = (1.0 - t) ** 3 * (1.0 + 3.0 * t + 6.0 * t**2)
        elif deriv == 1:
            val = -30.0 * t**2 * (1.0 - t) ** 2 / w
        elif deriv == 2:
            val = -60.0 * t * (1.0 - t) * (1.0 - 2.0 * t) / w**2
        else:
            raise GeometryError("only derivatives up to order 2 are available")
    return float(val) if val.ndim == 0 else val
