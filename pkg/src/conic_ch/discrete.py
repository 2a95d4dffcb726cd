"""Fourier-in-angle, finite-volume-in-x discretization of the spindle Laplacian.

For angular mode ``m`` the Laplacian reduces to

    L_m u = (1/psi) (psi u')' - (m/psi)^2 u

which is discretized as ``L_m = W^{-1} K_m`` with ``K_m`` symmetric tridiagonal
and ``W = diag(w)`` the quadrature weights of ``int f psi dx``.  The first and
last rows close the truncated tip with the Robin condition
``x u' = (m/alpha) u`` at ``x_1``, which keeps the bounded branch ``x^{m/alpha}``
(and constants for m = 0).  Equivalently, the tip cell is ``[0, x_{3/2}]``
and the flux through the cap ``[0, x_1]`` balances its angular term exactly for
a pure power ``x^{m/alpha}``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .geometry import GeometryError, SpindleGeometry, profile_eval

GRADINGS = ("log-collar", "uniform")


class OperatorError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class RadialGrid:
    x: np.ndarray
    weights: np.ndarray        # trapezoid weights against psi, tip caps included
    trap_weights: np.ndarray   # trapezoid weights against psi, no caps
    psi: np.ndarray
    face_psi: np.ndarray       # psi at the cell faces (x_i + x_{i+1}) / 2
    grading: str
    n_collar: int
    L: float

    @property
    def N(self) -> int:
        return self.x.size

    @property
    def x_min(self) -> float:
        return float(self.x[0])

    def tip_distance(self, tip: int) -> np.ndarray:
        return self.x if tip == 0 else self.L - self.x

    def collar_ratio(self) -> float:
        """Geometric ratio between consecutive collar nodes (log-collar only)."""
        return float(self.x[1] / self.x[0])


def _log_collar_nodes(L: float, x_c: float, x_min: float, N: int) -> tuple[np.ndarray, int]:
    # pick the collar node count whose outermost collar spacing best matches the
    # uniform middle spacing
    best = None
    for nc in range(3, (N + 1) // 2):
        n_mid = N - 2 * nc + 1
        if n_mid < 1:
            break
        ell = math.log(x_c / x_min) / (nc - 1)
        h_c = x_c * (1.0 - math.exp(-ell))
        h_mid = (L - 2 * x_c) / n_mid
        score = abs(math.log(h_c / h_mid))
        if best is None or score < best[0]:
            best = (score, nc, n_mid)
    if best is None:
        raise GeometryError(f"N={N} too small for a log-collar grid")
    _, nc, n_mid = best
    collar = x_min * (x_c / x_min) ** (np.arange(nc) / (nc - 1))
    collar[-1] = x_c
    mid = x_c + (L - 2 * x_c) * np.arange(1, n_mid) / n_mid
    right = L - collar[::-1]
    return np.concatenate([collar, mid, right]), nc


def build_grid(geom: SpindleGeometry, N: int, x_min: float, grading: str = "log-collar") -> RadialGrid:
    if grading not in GRADINGS:
        raise GeometryError(f"unknown grading {grading!r}; expected one of {GRADINGS}")
    if N < 16:
        raise GeometryError(f"n_radial={N} must be >= 16")
    if not 0.0 < x_min < geom.x_c:
        raise GeometryError(f"x_min={x_min} must lie in (0, x_c={geom.x_c})")
    if grading == "log-collar":
        x, nc = _log_collar_nodes(geom.L, geom.x_c, x_min, N)
    else:
        x, nc = np.linspace(x_min, geom.L - x_min, N), 0
    psi, _ = profile_eval(geom, x)
    h = np.diff(x)
    trap = psi * np.concatenate([[h[0]], h[:-1] + h[1:], [h[-1]]]) / 2.0
    w = trap.copy()
    w[0] += 0.5 * geom.alpha0 * x[0] ** 2
    w[-1] += 0.5 * geom.alphaL * (geom.L - x[-1]) ** 2
    face_psi, _ = profile_eval(geom, 0.5 * (x[1:] + x[:-1]))
    return RadialGrid(x=x, weights=w, trap_weights=trap, psi=psi, face_psi=face_psi,
                      grading=grading, n_collar=nc, L=geom.L)


@dataclass(eq=False)
class ModeOperator:
    """Per-mode operator ``L_m = W^{-1} K_m`` with ``K_m`` symmetric tridiagonal.

    ``K_m u = D^T diag(off) D u - pot * u`` where ``D`` is the forward difference;
    ``pot`` collects the angular term and the Robin tip closures.
    """

    m: int
    off: np.ndarray       # face conductances psi_{i+1/2} / h_{i+1/2}
    pot: np.ndarray       # nonnegative diagonal sink
    weights: np.ndarray
    tip_robin: tuple[float, float]   # (m/alpha0, m/alphaL): x u' = c u at the tips
    values: np.ndarray | None = None
    vectors: np.ndarray | None = None  # W-orthonormal columns

    @property
    def diag(self) -> np.ndarray:
        d = -self.pot.copy()
        d[:-1] -= self.off
        d[1:] -= self.off
        return d

    @property
    def trid(self) -> tuple[np.ndarray, np.ndarray]:
        """``W^{-1/2} K W^{-1/2}`` as (diagonal, off-diagonal)."""
        s = np.sqrt(self.weights)
        return self.diag / self.weights, self.off / (s[:-1] * s[1:])

    def stiffness(self) -> np.ndarray:
        return np.diag(self.diag) + np.diag(self.off, 1) + np.diag(self.off, -1)

    def apply(self, u: np.ndarray) -> np.ndarray:
        """``L_m u`` along axis 0."""
        return _flux_apply(self.off, self.pot, u) / _bcast(self.weights, u)


def _bcast(w: np.ndarray, u: np.ndarray) -> np.ndarray:
    return w.reshape((-1,) + (1,) * (u.ndim - 1))


def _flux_apply(off, pot, u):
    flux = _bcast(off, u[1:]) * (u[1:] - u[:-1])
    out = -(pot if pot.ndim == u.ndim else _bcast(pot, u)) * u
    out[:-1] += flux
    out[1:] -= flux
    return out


def assemble_mode_operator(geom: SpindleGeometry, grid: RadialGrid, m: int) -> ModeOperator:
    m = abs(int(m))
    x = grid.x
    off = grid.face_psi / np.diff(x)
    pot = m * m * grid.trap_weights / grid.psi**2
    c0, cL = m / geom.alpha0, m / geom.alphaL
    # outward flux psi * u' through the truncated tips, from x u' = c u
    pot[0] += grid.psi[0] * c0 / x[0]
    pot[-1] += grid.psi[-1] * cL / (geom.L - x[-1])
    return ModeOperator(m=m, off=off, pot=pot, weights=grid.weights, tip_robin=(c0, cL))


def eigendecompose(op: ModeOperator) -> ModeOperator:
    d, e = op.trid
    # stemr (the default) can fail on fine graded grids, where the spectrum spans
    # many decades; stev (implicit QL) is slower but robust
    for driver in ("stemr", "stev"):
        try:
            vals, q = eigh_tridiagonal(d, e, lapack_driver=driver)
            break
        except np.linalg.LinAlgError as exc:
            err = exc
    else:
        raise OperatorError(f"eigensolver failed for mode m={op.m}: {err}")
    order = np.argsort(vals)[::-1]
    vals, q = vals[order], q[:, order]
    if op.m == 0:
        # exact kernel: constants
        vals[0] = 0.0
        c = np.sqrt(op.weights / op.weights.sum())
        q[:, 0] = c
    op.values = vals
    op.vectors = q / np.sqrt(op.weights)[:, None]
    return op


@dataclass(eq=False)
class Discretization:
    """Geometry + radial grid + angular resolution + the per-mode operator table."""

    geom: SpindleGeometry
    grid: RadialGrid
    n_theta: int
    ops: list[ModeOperator] = field(default_factory=list)

    def __post_init__(self):
        if self.n_theta < 2 or self.n_theta & (self.n_theta - 1):
            raise GeometryError(f"n_theta={self.n_theta} must be a power of two")
        if not self.ops:
            self.ops = [eigendecompose(assemble_mode_operator(self.geom, self.grid, m))
                        for m in range(self.n_modes)]
        self._pot = np.stack([op.pot for op in self.ops], axis=1)
        self._vecs = np.stack([op.vectors for op in self.ops])
        self._vals = np.stack([op.values for op in self.ops], axis=1)

    @property
    def n_modes(self) -> int:
        return self.n_theta // 2 + 1

    @property
    def shape(self) -> tuple[int, int]:
        return self.grid.N, self.n_theta

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta

    @property
    def eigenvalues(self) -> np.ndarray:
        """(N, n_modes) array of per-mode eigenvalues, columns nonincreasing."""
        return self._vals

    @property
    def volume(self) -> float:
        return 2.0 * math.pi * float(self.grid.weights.sum())

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.grid.x, self.theta, indexing="ij")

    def apply_modal(self, U: np.ndarray) -> np.ndarray:
        """Laplacian on modal coefficients, shape (N, n_modes)."""
        out = _flux_apply(self.ops[0].off, self._pot, U)
        return out / self.grid.weights[:, None]

    def to_eigen(self, U: np.ndarray) -> np.ndarray:
        """Coefficients in the W-orthonormal eigenbasis, shape (N, n_modes)."""
        wU = self.grid.weights[:, None] * U
        return np.einsum("mij,im->jm", self._vecs, wU)

    def from_eigen(self, C: np.ndarray) -> np.ndarray:
        return np.einsum("mij,jm->im", self._vecs, C)

    def field(self, values) -> "Field":
        arr = np.asarray(values, dtype=float)
        if arr.shape != self.shape:
            arr = np.broadcast_to(arr, self.shape).copy()
        return Field(self, arr, "physical")

    def from_function(self, f) -> "Field":
        X, T = self.mesh()
        return self.field(f(X, T))

    def from_modes(self, U: np.ndarray) -> "Field":
        return Field(self, np.asarray(U, dtype=complex), "modal")


@dataclass(eq=False)
class Field:
    """Order parameter on the (radial node) x (angle) lattice.

    ``rep == "physical"``: real array (N, n_theta).  ``rep == "modal"``: complex
    array (N, n_theta//2 + 1) of angular Fourier coefficients, normalized so
    ``u(theta) = sum_m c_m e^{i m theta}`` (real-FFT half spectrum).
    """

    disc: Discretization
    data: np.ndarray
    rep: str = "physical"

    def physical(self) -> np.ndarray:
        if self.rep == "physical":
            return self.data
        return np.fft.irfft(self.data, n=self.disc.n_theta, axis=1, norm="forward")

    def modal(self) -> np.ndarray:
        if self.rep == "modal":
            return self.data
        return np.fft.rfft(self.data, axis=1, norm="forward")

    def copy(self) -> "Field":
        return Field(self.disc, self.data.copy(), self.rep)

    def __add__(self, other: "Field") -> "Field":
        return self.disc.field(self.physical() + other.physical())

    def __sub__(self, other: "Field") -> "Field":
        return self.disc.field(self.physical() - other.physical())

    def __mul__(self, c: float) -> "Field":
        return self.disc.field(c * self.physical())

    __rmul__ = __mul__


def transform(u: Field, to: str) -> Field:
    if to == "physical":
        return Field(u.disc, u.physical(), "physical")
    if to == "modal":
        return Field(u.disc, u.modal(), "modal")
    raise ValueError(f"unknown representation {to!r}")


def apply_laplacian(u: Field) -> Field:
    return transform(Field(u.disc, u.disc.apply_modal(u.modal()), "modal"), "physical")


def radial_derivative(f: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Second-order three-point derivative along axis 0 on a non-uniform grid."""
    return np.gradient(f, x, axis=0, edge_order=2)


def angular_derivative(u: np.ndarray, order: int = 1) -> np.ndarray:
    """Spectral ``d^k/dtheta^k`` along axis 1 (Nyquist mode dropped for odd k)."""
    M = u.shape[1]
    U = np.fft.rfft(u, axis=1)
    m = np.arange(U.shape[1])
    factor = (1j * m) ** order
    if order % 2 == 1:
        factor[-1] = 0.0
    return np.fft.irfft(U * factor, n=M, axis=1)


def tip_closure_residual(u: Field) -> float:
    """Largest two-point defect ``|u_m(x_2) - u_m(x_1) (x_2/x_1)^{m/alpha}|`` over
    modes and tips, relative to the field's largest modal amplitude."""
    U = u.modal()
    scale = max(float(np.abs(U).max()), 1e-300)
    g = u.disc.geom
    res = 0.0
    for tip, (i1, i2) in ((0, (0, 1)), (1, (-1, -2))):
        d = u.disc.grid.tip_distance(tip)
        ratio = d[i2] / d[i1]
        alpha = g.tip_alpha(tip)
        for m in range(U.shape[1]):
            res = max(res, abs(U[i2, m] - U[i1, m] * ratio ** (m / alpha)))
    return res / scale
