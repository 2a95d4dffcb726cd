"""Indicial roots, weight window and bi-Laplacian asymptotics near a conical tip.

Everything here is a closed-form function of the cross-section spectrum
``lambda_j <= 0`` and the cross-section dimension ``n``.  Roots are exponents
``z`` of the conormal symbol ``z^2 - (n-1) z + lambda``, i.e. a term ``x^{-z}``
solves the leading-order cone equation.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import asdict, dataclass

from .geometry import CrossSectionSpectrum, circle_spectrum, sphere_spectrum

REAL_TOL = 1e-12
#: fraction of the supremum used as the working extra-decay margin
DELTA0_FRACTION = 0.9
#: upper bound on the log power in the bi-Laplacian asymptotics space
MAX_LOG_POWER = 3


class IndicialError(ValueError):
    pass


@dataclass(frozen=True)
class WeightedIndex:
    s: float
    gamma: float
    p: float = 2.0

    def __post_init__(self):
        if self.s < 0:
            raise IndicialError("s must be >= 0")
        if not self.p > 1:
            raise IndicialError("p must be > 1")


@dataclass(frozen=True)
class IndicialRoot:
    value: complex
    source_lambda: float
    branch: str  # "plus" | "minus"
    shifted: bool = False
    multiplicity: int = 1

    @property
    def real(self) -> float:
        return self.value.real


@dataclass(frozen=True)
class AsymptoticTerm:
    rho: complex
    max_log_power: int = MAX_LOG_POWER


@dataclass(frozen=True)
class GammaWindow:
    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo >= self.hi

    def __contains__(self, gamma: float) -> bool:
        return self.lo < gamma < self.hi

    def __iter__(self):
        return iter((self.lo, self.hi))


@dataclass(frozen=True)
class IndicialReport:
    n: int
    gamma: float
    q_delta: tuple[IndicialRoot, ...]
    q_delta2: tuple[IndicialRoot, ...]
    gamma_window: GammaWindow
    terms: tuple[AsymptoticTerm, ...]
    delta0_sup: float
    delta0_chosen: float
    minimal_domain_clean: bool
    # whether H^{s+2,gamma+2} + C_omega is a direct sum
    cw_sum_direct: bool

    def to_dict(self) -> dict:
        def root(r: IndicialRoot) -> dict:
            d = asdict(r)
            d["value"] = _cjson(r.value)
            return d

        return {
            "n": self.n,
            "gamma": self.gamma,
            "q_delta": [root(r) for r in self.q_delta],
            "q_delta2": [root(r) for r in self.q_delta2],
            "gamma_window": [self.gamma_window.lo, self.gamma_window.hi],
            "terms": [{"rho": _cjson(t.rho), "max_log_power": t.max_log_power}
                      for t in self.terms],
            "delta0_sup": self.delta0_sup,
            "delta0_chosen": self.delta0_chosen,
            "minimal_domain_clean": self.minimal_domain_clean,
            "cw_sum_direct": self.cw_sum_direct,
        }


def _cjson(z: complex):
    return z.real if z.imag == 0 else [z.real, z.imag]


def _roots(n: int, spec: CrossSectionSpectrum, center: float, shifted: bool) -> list[IndicialRoot]:
    out = []
    half = (n - 1) / 2
    for lam in spec.lambdas:
        disc = half * half - lam
        if abs(disc) <= REAL_TOL:
            out.append(IndicialRoot(complex(center), lam, "plus", shifted, multiplicity=2))
            continue
        r = cmath.sqrt(disc)
        out.append(IndicialRoot(center + r, lam, "plus", shifted))
        out.append(IndicialRoot(center - r, lam, "minus", shifted))
    return out


def _sorted(roots):
    return sorted(roots, key=lambda r: (r.value.real, r.value.imag, r.shifted))


def q_delta(n: int, spec: CrossSectionSpectrum) -> list[IndicialRoot]:
    """Roots ``(n-1)/2 +- sqrt(((n-1)/2)^2 - lambda_j)`` of the Laplacian."""
    if n < 1:
        raise IndicialError("n must be >= 1")
    if not spec.entries:
        raise IndicialError("empty spectrum")
    return _sorted(_roots(n, spec, (n - 1) / 2, shifted=False))


def q_delta_squared(n: int, spec: CrossSectionSpectrum) -> list[IndicialRoot]:
    """Roots of the bi-Laplacian: the Laplacian roots plus the family centred at (n-5)/2."""
    base = q_delta(n, spec)
    return _sorted(base + _roots(n, spec, (n - 5) / 2, shifted=True))


def distinct_values(roots, tol: float = REAL_TOL) -> list[complex]:
    vals: list[complex] = []
    for r in roots:
        v = r.value if isinstance(r, IndicialRoot) else r.rho
        if not any(abs(v - w) <= tol for w in vals):
            vals.append(v)
    return vals


def gamma_window(n: int, lambda1: float) -> GammaWindow:
    """Admissible weights ``((n-3)/2, min(-1 + sqrt(((n-1)/2)^2 - lambda1), (n+1)/2))``."""
    if lambda1 >= 0:
        raise IndicialError(f"lambda1 must be negative, got {lambda1}")
    half = (n - 1) / 2
    hi = min(-1.0 + math.sqrt(half * half - lambda1), (n + 1) / 2)
    return GammaWindow((n - 3) / 2, hi)


def required_lambda(n: int, re_lo: float, re_hi: float) -> float:
    """Smallest ``|lambda|`` cut-off so that every root with real part in
    ``[re_lo, re_hi]`` comes from some ``|lambda_j| <= cut-off``."""
    half = (n - 1) / 2
    reach = max(abs(re_lo - c) for c in (half, (n - 5) / 2))
    reach = max(reach, max(abs(re_hi - c) for c in (half, (n - 5) / 2)))
    return max(reach * reach - half * half, 0.0)


def _check_coverage(n: int, spec: CrossSectionSpectrum, re_lo: float, re_hi: float):
    need = required_lambda(n, re_lo - 1.0, re_hi + 1.0)
    if spec.lambda_max_abs < need:
        raise IndicialError(
            f"spectrum truncated at |lambda|={spec.lambda_max_abs:g}; "
            f"need |lambda| >= {need:g} to cover real parts in [{re_lo - 1:g}, {re_hi + 1:g}]")


def minimal_domain_clean(n: int, spec: CrossSectionSpectrum, gamma: float) -> bool:
    """True iff no Laplacian root lies on the line ``Re z = (n-3)/2 - gamma``."""
    line = (n - 3) / 2 - gamma
    _check_coverage(n, spec, line, line)
    return not any(abs(r.value.real - line) <= REAL_TOL for r in q_delta(n, spec))


def strip(n: int, gamma: float) -> tuple[float, float]:
    """Half-open real-part strip ``[(n-7)/2 - gamma, (n-3)/2 - gamma)``."""
    return (n - 7) / 2 - gamma, (n - 3) / 2 - gamma


def asymptotics_space(n: int, spec: CrossSectionSpectrum, gamma: float) -> list[AsymptoticTerm]:
    window = gamma_window(n, spec.lambda1)
    if gamma not in window:
        raise IndicialError(f"gamma={gamma} outside window ({window.lo:g}, {window.hi:g})")
    lo, hi = strip(n, gamma)
    _check_coverage(n, spec, lo, hi)
    inside = [r for r in q_delta_squared(n, spec)
              if lo - REAL_TOL <= r.value.real < hi - REAL_TOL]
    return [AsymptoticTerm(v) for v in distinct_values(inside)]


def delta0(terms, gamma: float, n: int) -> tuple[float, float]:
    """Supremum of the extra decay margin and the working value used downstream."""
    if not terms:
        sup = 2.0
    else:
        sup = min((n + 1) / 2 - t.rho.real - gamma - 2.0 for t in terms)
        if sup <= 0:
            raise IndicialError(f"inconsistent asymptotics: delta0 supremum {sup} <= 0")
        sup = min(sup, 2.0)
    return sup, DELTA0_FRACTION * min(sup, 2.0)


def report(n: int, spec: CrossSectionSpectrum, gamma: float) -> IndicialReport:
    window = gamma_window(n, spec.lambda1)
    terms = asymptotics_space(n, spec, gamma)
    sup, chosen = delta0(terms, gamma, n)
    return IndicialReport(
        n=n,
        gamma=gamma,
        q_delta=tuple(q_delta(n, spec)),
        q_delta2=tuple(q_delta_squared(n, spec)),
        gamma_window=window,
        terms=tuple(terms),
        delta0_sup=sup,
        delta0_chosen=chosen,
        minimal_domain_clean=minimal_domain_clean(n, spec, gamma),
        cw_sum_direct=gamma + 2 >= (n + 1) / 2,
    )


def covering_spectrum(n: int, gamma: float, alpha: float | None = None) -> CrossSectionSpectrum:
    """Circle (n=1) or unit-sphere spectrum truncated just far enough for ``report``."""
    lo, hi = strip(n, gamma)
    line = (n - 3) / 2 - gamma
    need = required_lambda(n, min(lo, line) - 1.0, max(hi, line) + 1.0)
    if n == 1:
        a = 1.0 if alpha is None else alpha
        k = max(1, math.ceil(a * math.sqrt(need)))
        return circle_spectrum(a, k)
    j = 1
    while j * (j + n - 1) < need:
        j += 1
    return sphere_spectrum(n, j)
