"""Energy, mass, gradient pairings and weighted Mellin-Sobolev norms of fields.

Integrals over the surface use ``dmu = psi dx dtheta`` with the radial grid
weights and the uniform angular rule ``2*pi/M``.  The gradient pairing is the
Dirichlet form of the discrete Laplacian, so ``grad_inner(u, v) =
-<u, Lap v>`` holds to round-off; ``green_residual`` instead measures the
gradient with an independent nodal stencil and therefore converges like h^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .discrete import Field, angular_derivative, apply_laplacian, radial_derivative
from .geometry import CutoffOmega, cutoff_eval, profile_eval
from .indicial import WeightedIndex


class NormError(ValueError):
    pass


@dataclass(frozen=True)
class NormRequest:
    index: WeightedIndex
    cutoff: CutoffOmega | None = None   # None: the geometry's default cut-off
    split_constants: bool = False       # norm in H^{s,gamma}_p + C_omega

    @property
    def label(self) -> str:
        i = self.index
        return f"norm_{i.s:g}_{i.gamma:g}_{i.p:g}"


@dataclass
class FunctionalReport:
    energy: float
    mass: float
    grad_sq: float
    norms: dict[str, float] = field(default_factory=dict)


def _parseval_weights(n_modes: int, n_theta: int) -> np.ndarray:
    c = np.full(n_modes, 2.0)
    c[0] = 1.0
    if n_theta % 2 == 0:
        c[-1] = 1.0
    return c


def integrate(u: Field | np.ndarray, disc=None) -> float:
    """``int u dmu``."""
    if isinstance(u, Field):
        disc, u = u.disc, u.physical()
    return float(2.0 * math.pi * np.mean(u, axis=1) @ disc.grid.weights)


def inner(u: Field, v: Field) -> float:
    """``<u, v>_w = int u v dmu``."""
    return integrate(u.physical() * v.physical(), u.disc)


def mass(u: Field) -> float:
    return integrate(u)


def grad_inner(u: Field, v: Field) -> float:
    """Discrete Dirichlet form ``int <grad u, grad v>_g dmu`` (symmetric, >= 0 on the diagonal)."""
    disc = u.disc
    U, V = u.modal(), v.modal()
    off = disc.ops[0].off[:, None]
    dU, dV = np.diff(U, axis=0), np.diff(V, axis=0)
    per_mode = (np.sum(off * (dU * dV.conj()).real, axis=0)
                + np.sum(disc._pot * (U * V.conj()).real, axis=0))
    c = _parseval_weights(U.shape[1], disc.n_theta)
    return float(2.0 * math.pi * per_mode @ c)


def grad_sq(u: Field) -> float:
    return grad_inner(u, u)


def energy(u: Field) -> float:
    """``1/2 int |grad u|^2 + 1/4 int (u^2 - 1)^2``."""
    ph = u.physical()
    return 0.5 * grad_sq(u) + 0.25 * integrate((ph * ph - 1.0) ** 2, u.disc)


def chemical_potential(u: Field) -> Field:
    """``J(u) = -Lap u + u^3 - u``."""
    ph = u.physical()
    return u.disc.field(-apply_laplacian(u).physical() + ph**3 - ph)


def wide_grad_inner(u: Field, v: Field) -> float:
    """Gradient pairing with nodal three-point derivatives and the trapezoid rule.

    Independent of the operator's face-flux stencil; used for convergence studies.
    """
    disc = u.disc
    x, psi = disc.grid.x, disc.grid.psi
    a, b = u.physical(), v.physical()
    radial = radial_derivative(a, x) * radial_derivative(b, x)
    angular = angular_derivative(a) * angular_derivative(b) / psi[:, None] ** 2
    return float(2.0 * math.pi * np.mean(radial + angular, axis=1) @ disc.grid.trap_weights)


def green_residual(w: Field, v: Field) -> float:
    """``|int <grad w, grad v> dmu + int w Lap v dmu|``."""
    return abs(wide_grad_inner(w, v) + inner(w, apply_laplacian(v)))


def report(u: Field, requests=()) -> FunctionalReport:
    return FunctionalReport(
        energy=energy(u),
        mass=mass(u),
        grad_sq=grad_sq(u),
        norms={r.label: mellin_norm(u, r) for r in requests},
    )


# ---------------------------------------------------------------- norms


#: sub-intervals per grid cell in the norm quadrature (resolves the cut-off ramp)
REFINE = 8


def _cutoff(u: Field, req: NormRequest) -> CutoffOmega:
    return req.cutoff if req.cutoff is not None else CutoffOmega.default(u.disc.geom)


def _subdivide(x: np.ndarray, upto: float | None = None, r: int = REFINE):
    """Sub-nodes splitting every cell of ``x`` into ``r`` parts (truncated at
    ``upto``), with the cell index and fraction for linear interpolation."""
    t = np.arange(r) / r
    xf = np.append((x[:-1, None] + np.diff(x)[:, None] * t).ravel(), x[-1])
    if upto is not None:
        xf = np.append(xf[xf < upto], upto)
    idx = np.clip(np.searchsorted(x, xf, side="right") - 1, 0, x.size - 2)
    frac = (xf - x[idx]) / (x[idx + 1] - x[idx])
    return xf, idx, frac


def _interp(E: np.ndarray, idx: np.ndarray, frac: np.ndarray) -> np.ndarray:
    return E[idx] * (1.0 - frac)[:, None] + E[idx + 1] * frac[:, None]


def _trapz(f: np.ndarray, x: np.ndarray) -> float:
    return float(np.sum(0.5 * (f[1:] + f[:-1]) * np.diff(x)))


def _seminorm(eu, ew, shift_w, s: int, p: float, sub, weight: np.ndarray) -> np.ndarray:
    """Sum over ``k + j <= s`` of ``mean_theta |weight * D^k d_theta^j (a v)|^p`` on
    the sub-nodes, where ``v = u - shift``: ``eu[i] = D^i u`` at the grid nodes
    (stencils), ``ew[i] = D^i a`` and ``shift_w[i] = D^i shift`` exact on the sub-nodes."""
    idx, frac = sub
    line = np.zeros(weight.size)
    for k in range(s + 1):
        for j in range(s - k + 1):
            acc = 0.0
            for i in range(k + 1):
                e = eu[k - i]
                v = _interp(angular_derivative(e, j) if j else e, idx, frac)
                if j == 0:
                    v = v - shift_w[k - i][:, None]
                acc = acc + math.comb(k, i) * ew[i][:, None] * v
            line += np.mean(np.abs(weight[:, None] * acc) ** p, axis=1)
    return line


def collar_seminorm(u: Field, req: NormRequest, tip: int, n: int = 1, shift: float = 0.0) -> float:
    """Sum over ``k + j <= s`` of
    ``int int |x^{(n+1)/2 - gamma} (x d_x)^k d_theta^j (omega v)|^p alpha dtheta dx/x``
    on the collar of ``tip`` (returned as the p-th power), ``v = u - shift * omega``.

    Derivatives of u come from the nodal stencils; omega is treated exactly.
    """
    idx = req.index
    s, gamma, p = int(idx.s), idx.gamma, idx.p
    if s not in (0, 1, 2) or s != idx.s:
        raise NormError(f"unsupported smoothness s={idx.s}; only 0, 1, 2")
    cut = _cutoff(u, req)
    if cut.shape == "indicator" and (s > 0 or shift):
        raise NormError("the indicator cut-off only supports s = 0 without constants")
    disc = u.disc
    d = disc.grid.tip_distance(tip)
    order = np.argsort(d)
    order = order[d[order] <= disc.geom.L / 2]
    xs = d[order]
    # (x d_x)^i u at the nodes
    eu = [u.physical()[order]]
    for _ in range(s):
        eu.append(xs[:, None] * radial_derivative(eu[-1], xs))
    xf, *sub = _subdivide(xs, cut.support)
    if cut.shape == "indicator":
        ew = [np.ones_like(xf)]
    else:
        w1, w2 = cutoff_eval(cut, xf, 1), cutoff_eval(cut, xf, 2)
        ew = [cutoff_eval(cut, xf), xf * w1, xf * w1 + xf * xf * w2]
    shift_w = [shift * w for w in ew]
    weight = xf ** ((n + 1) / 2 - gamma)
    line = _seminorm(eu, ew, shift_w, s, p, sub, weight)
    alpha = disc.geom.tip_alpha(tip)
    return 2.0 * math.pi * alpha * _trapz(line / xf, xf)


def interior_seminorm(u: Field, req: NormRequest, shift: tuple[float, float] = (0.0, 0.0)) -> float:
    """Sum over ``k + j <= s`` of ``int |d_x^k d_theta^j ((1 - omega) v)|^p dmu`` with
    ``v = u - c_0 omega(x) - c_L omega(L - x)``."""
    idx = req.index
    s, p = int(idx.s), idx.p
    cut = _cutoff(u, req)
    disc = u.disc
    x = disc.grid.x
    eu = [u.physical()]
    for _ in range(s):
        eu.append(radial_derivative(eu[-1], x))
    xf, *sub = _subdivide(x)
    y = disc.geom.L - xf
    if cut.shape == "indicator":
        om = [cutoff_eval(cut, xf) + cutoff_eval(cut, y)]
        tips = [om[0] * 0.0]
    else:
        om = [cutoff_eval(cut, xf, i) + (-1) ** i * cutoff_eval(cut, y, i) for i in range(3)]
        c0, cL = shift
        tips = [c0 * cutoff_eval(cut, xf, i) + (-1) ** i * cL * cutoff_eval(cut, y, i)
                for i in range(3)]
    ew = [1.0 - om[0]] + [-o for o in om[1:]]
    psi, _ = profile_eval(disc.geom, xf)
    line = _seminorm(eu, ew, tips, s, p, sub, np.ones_like(xf))
    return 2.0 * math.pi * _trapz(line * psi, xf)


def tip_constants(u: Field) -> tuple[float, float]:
    """Angular mean at the node nearest each tip."""
    U = u.modal()
    return float(U[0, 0].real), float(U[-1, 0].real)


def mellin_norm(u: Field, req: NormRequest) -> float:
    """Weighted Mellin-Sobolev norm ``||u||_{H^{s,gamma}_p}`` (integer s).

    With ``split_constants`` the tip constants ``c_i`` (times the cut-off) are
    removed first and ``sqrt(c_0^2 + c_L^2)`` is added back, giving the norm of
    ``H^{s,gamma}_p + C_omega``.
    """
    c0 = cL = extra = 0.0
    if req.split_constants:
        if _cutoff(u, req).shape == "indicator":
            raise NormError("splitting off tip constants needs a smooth cut-off")
        c0, cL = tip_constants(u)
        extra = math.hypot(c0, cL)
    p = req.index.p
    acc = (collar_seminorm(u, req, 0, shift=c0) + collar_seminorm(u, req, 1, shift=cL)
           + interior_seminorm(u, req, shift=(c0, cL)))
    return acc ** (1.0 / p) + extra


def weighted_sup_bound(u: Field, beta: float, tip: int = 0) -> float:
    """``max |u - u_tip| / x^beta`` over collar nodes, ``x`` the distance to ``tip``."""
    disc = u.disc
    d = disc.grid.tip_distance(tip)
    sel = d <= disc.geom.x_c
    c = tip_constants(u)[0 if tip == 0 else 1]
    dev = np.abs(u.physical()[sel] - c).max(axis=1)
    return float(np.max(dev / d[sel] ** beta))
