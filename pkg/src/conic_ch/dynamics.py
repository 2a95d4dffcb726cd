"""Cahn-Hilliard time stepping, initial fields and near-tip exponent fits.

The scheme is linearly implicit with a stabilizing term ``S``:

    (I + dt L^2 - S dt L) u_{n+1} = u_n + dt L(u_n^3 - u_n) - S dt L u_n

and is solved mode by mode in the W-orthonormal eigenbasis, where the left
side is the diagonal ``1 + dt lam^2 + S dt |lam| >= 1``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import solve_banded

from . import functionals as fn
from .discrete import Discretization, Field
from .geometry import CutoffOmega, cutoff_eval

INITIAL_KINDS = ("random", "mode_bump", "pure_phase_perturbed")
NOISE_FLOOR = 1e-10
#: 0-based half-open node range, i.e. collar nodes 4..12 counted from the tip
FIT_WINDOW = (3, 12)

# resolution-independent coefficient table of the random initial field
_TABLE_K = 2048
_TABLE_M = 32


class SimulationError(RuntimeError):
    pass


@dataclass(frozen=True)
class InitialCondition:
    kind: str = "random"
    amplitude: float = 0.1
    seed: int = 0
    m: int = 1
    j: int = 0

    def __post_init__(self):
        if self.kind not in INITIAL_KINDS:
            raise ValueError(f"unknown initial kind {self.kind!r}; expected one of {INITIAL_KINDS}")


@dataclass(frozen=True)
class SolverConfig:
    dt: float = 1e-3
    t_end: float = 1.0
    stabilization: float = 2.0
    output_every: int = 100
    initial: InitialCondition = InitialCondition()
    norm_requests: tuple[fn.NormRequest, ...] = ()
    fit_modes: tuple[int, ...] = ()
    nonlinear: bool = True
    snapshot_every: int = 0   # in steps; 0 disables snapshots

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


# ------------------------------------------------------------ initial fields


def _a(d: np.ndarray, cut: CutoffOmega) -> np.ndarray:
    """``int_0^d (1 - omega)``, in closed form for the quintic smoothstep."""
    w = cut.outer - cut.inner
    t = np.clip((d - cut.inner) / w, 0.0, 1.0)
    ramp = w * t**4 * (2.5 - 3.0 * t + t * t)
    return ramp + np.maximum(d - cut.outer, 0.0)


def flat_coordinate(disc: Discretization) -> np.ndarray:
    """Map ``[0, L] -> [0, 1]`` with derivative ``(1 - omega_0)(1 - omega_L)``,
    so anything built from it is constant on the inner tip collars."""
    cut = CutoffOmega.default(disc.geom)
    L = disc.geom.L

    def s(x):
        return _a(x, cut) - _a(L - x, cut) - x

    s0, s1 = s(np.array(0.0)), s(np.array(L))
    return (s(disc.grid.x) - s0) / (s1 - s0)


def tip_envelope(disc: Discretization, m: int) -> np.ndarray:
    """1 in the middle, ``(d / x_c)^{m/alpha}`` towards each tip."""
    g = disc.geom
    cut = CutoffOmega.default(g)
    x = disc.grid.x
    w0, wL = cutoff_eval(cut, x), cutoff_eval(cut, g.L - x)
    return (w0 * (x / g.x_c) ** (m / g.alpha0) + (1.0 - w0 - wL)
            + wL * ((g.L - x) / g.x_c) ** (m / g.alphaL))


def _series(disc: Discretization, rng: np.random.Generator, k_max: int, m_max: int,
            decay: float) -> np.ndarray:
    xi = rng.standard_normal((_TABLE_K, _TABLE_M, 2))
    sigma = flat_coordinate(disc)
    k = np.arange(k_max + 1)
    # k = 0 carries the tip data; the rough terms vanish on the flat tip regions,
    # so tip values (and the slow modes) do not depend on the truncation
    basis = np.sin(np.pi * np.outer(sigma, k))
    basis[:, 0] = 1.0
    theta = disc.theta
    out = np.zeros(disc.shape)
    for m in range(min(m_max, disc.n_theta // 2 - 1) + 1):
        coef = (1.0 + k + m) ** -decay * (1.0 if m == 0 else 0.5)
        radial_c = basis @ (coef * xi[: k_max + 1, m, 0])
        if m == 0:
            out += radial_c[:, None]
            continue
        radial_s = basis @ (coef * xi[: k_max + 1, m, 1])
        env = tip_envelope(disc, m)[:, None]
        out += env * (radial_c[:, None] * np.cos(m * theta) + radial_s[:, None] * np.sin(m * theta))
    return out


def _random_norm() -> float:
    k = np.arange(_TABLE_K)[:, None]
    m = np.arange(_TABLE_M)[None, :]
    c = (1.0 + k + m) ** -2.0 * np.where(m == 0, 1.0, 0.5)
    return float(np.sqrt(c.sum()))


def make_initial(disc: Discretization, ic: InitialCondition) -> Field:
    """Initial field for ``ic``.

    * ``random``: a fixed rough series (coefficients ~ 1/(1+k+m) in front of
      ``sin(k pi sigma)``) drawn from ``seed`` and sampled with ``K = N/4``
      radial terms, so refining the grid resolves more of the same function.
    * ``mode_bump``: ``amplitude * v cos(m theta)`` with ``v`` the j-th
      eigenvector of mode m, scaled to unit maximum.
    * ``pure_phase_perturbed``: ``1 + amplitude * (smooth series)``.
    """
    if ic.kind == "random":
        rng = np.random.default_rng(ic.seed)
        raw = _series(disc, rng, disc.grid.N // 4, disc.n_theta // 4, decay=1.0)
        return disc.field(ic.amplitude * raw / _random_norm())
    if ic.kind == "pure_phase_perturbed":
        rng = np.random.default_rng(ic.seed)
        raw = _series(disc, rng, 4, 2, decay=2.0)
        return disc.field(1.0 + ic.amplitude * raw / np.abs(raw).max())
    if not 0 <= ic.m < disc.n_modes or not 0 <= ic.j < disc.grid.N:
        raise ValueError(f"mode_bump (m={ic.m}, j={ic.j}) outside the discretization")
    v = disc.ops[ic.m].vectors[:, ic.j]
    v = v / v[np.argmax(np.abs(v))]
    return disc.field(ic.amplitude * v[:, None] * np.cos(ic.m * disc.theta)[None, :])


# ------------------------------------------------------------ time stepping


class IMEXStepper:
    def __init__(self, disc: Discretization, dt: float, stabilization: float = 2.0,
                 nonlinear: bool = True):
        if not dt > 0:
            raise ValueError("dt must be positive")
        if stabilization < 0:
            raise ValueError("stabilization must be >= 0")
        self.disc = disc
        self.dt = dt
        self.S = stabilization
        self.nonlinear = nonlinear
        lam = disc.eigenvalues
        denom = 1.0 + dt * lam**2 - stabilization * dt * lam
        assert np.all(denom >= 1.0)
        self._gain = 1.0 / denom
        self._lam = lam

    def step_eigen(self, C: np.ndarray) -> np.ndarray:
        """Advance eigen-coefficients ``C`` (N, n_modes) by one step."""
        disc, dt = self.disc, self.dt
        rhs = (1.0 - self.S * dt * self._lam) * C
        if self.nonlinear:
            u = np.fft.irfft(disc.from_eigen(C), n=disc.n_theta, axis=1, norm="forward")
            F = np.fft.rfft(u**3 - u, axis=1, norm="forward")
            rhs = rhs + dt * self._lam * disc.to_eigen(F)
        return self._gain * rhs

    def step(self, u: Field) -> Field:
        C = self.disc.to_eigen(u.modal())
        return Field(self.disc, self.disc.from_eigen(self.step_eigen(C)), "modal").copy()


def imex_step(u: Field, cfg: SolverConfig) -> Field:
    return IMEXStepper(u.disc, cfg.dt, cfg.stabilization, cfg.nonlinear).step(u)


# ------------------------------------------------------------ diagnostics


@dataclass(frozen=True)
class TipFit:
    t: float
    m: int
    rho_hat: float
    r2: float

    @property
    def ok(self) -> bool:
        return math.isfinite(self.rho_hat)


@dataclass
class DiagnosticsSeries:
    norm_labels: tuple[str, ...] = ()
    times: list[float] = field(default_factory=list)
    energy: list[float] = field(default_factory=list)
    mass: list[float] = field(default_factory=list)
    grad_sq: list[float] = field(default_factory=list)
    l2_sq: list[float] = field(default_factory=list)
    max_abs: list[float] = field(default_factory=list)
    norms: list[list[float]] = field(default_factory=list)
    tip_fits: list[TipFit] = field(default_factory=list)

    HEAD = ("t", "energy", "mass", "grad_sq", "l2_sq", "max_abs")

    def record(self, t: float, u: Field, requests, fit_modes=()):
        rep = fn.report(u, requests)
        ph = u.physical()
        self.times.append(t)
        self.energy.append(rep.energy)
        self.mass.append(rep.mass)
        self.grad_sq.append(rep.grad_sq)
        self.l2_sq.append(fn.inner(u, u))
        self.max_abs.append(float(np.abs(ph).max()))
        self.norms.append([rep.norms[r.label] for r in requests])
        for m in fit_modes:
            rho, r2 = fit_tip_exponent(u, m)
            self.tip_fits.append(TipFit(t, m, rho, r2))

    def rows(self):
        for i, t in enumerate(self.times):
            yield [t, self.energy[i], self.mass[i], self.grad_sq[i], self.l2_sq[i],
                   self.max_abs[i], *self.norms[i]]

    def write_csv(self, path: Path):
        _write_csv(path, [*self.HEAD, *self.norm_labels], self.rows())

    def write_fits_csv(self, path: Path):
        _write_csv(path, ["t", "m", "rho_hat", "r2"],
                   ([f.t, f.m, f.rho_hat, f.r2] for f in self.tip_fits))


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def write_snapshot(u: Field, t: float, step: int, out_dir: Path) -> Path:
    """Raw little-endian float64 array (C order, N x n_theta) plus a JSON sidecar."""
    disc = u.disc
    stem = out_dir / f"snapshot_{step:07d}"
    u.physical().astype("<f8").tofile(stem.with_suffix(".bin"))
    g = disc.geom
    meta = {
        "time": t,
        "step": step,
        "shape": list(disc.shape),
        "dtype": "float64-le",
        "order": "C (radial, angle)",
        "geometry": {"alpha0": g.alpha0, "alphaL": g.alphaL, "length": g.L, "collar_width": g.x_c},
        "grid": {"grading": disc.grid.grading, "x": disc.grid.x.tolist(), "n_theta": disc.n_theta},
    }
    stem.with_suffix(".json").write_text(json.dumps(meta, indent=1) + "\n")
    return stem.with_suffix(".bin")


def read_snapshot(path: Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    data = np.fromfile(path.with_suffix(".bin"), dtype="<f8").reshape(meta["shape"])
    return data, meta


@dataclass
class RunResult:
    series: DiagnosticsSeries
    final: Field
    snapshots: list[Path] = field(default_factory=list)


def run(disc: Discretization, cfg: SolverConfig, out_dir: Path | None = None,
        u0: Field | None = None) -> RunResult:
    """Integrate to ``t_end`` recording diagnostics every ``output_every`` steps."""
    requests = tuple(cfg.norm_requests)
    series = DiagnosticsSeries(norm_labels=tuple(r.label for r in requests))
    u = make_initial(disc, cfg.initial) if u0 is None else u0
    stepper = IMEXStepper(disc, cfg.dt, cfg.stabilization, cfg.nonlinear)
    snaps: list[Path] = []
    series.record(0.0, u, requests, cfg.fit_modes)
    if out_dir is not None and cfg.snapshot_every:
        snaps.append(write_snapshot(u, 0.0, 0, out_dir))
    C = disc.to_eigen(u.modal())
    n = cfg.n_steps
    for step in range(1, n + 1):
        # overflow is caught just below, with the step index
        with np.errstate(over="ignore", invalid="ignore"):
            C = stepper.step_eigen(C)
        if not np.isfinite(C).all():
            raise SimulationError(f"non-finite values at step {step} (t={step * cfg.dt:g})")
        record = step % cfg.output_every == 0 or step == n
        snap = out_dir is not None and cfg.snapshot_every and step % cfg.snapshot_every == 0
        if record or snap:
            u = Field(disc, disc.from_eigen(C), "modal")
            t = step * cfg.dt
            if record:
                series.record(t, u, requests, cfg.fit_modes)
            if snap:
                snaps.append(write_snapshot(u, t, step, out_dir))
    final = Field(disc, disc.from_eigen(C), "modal")
    return RunResult(series, final, snaps)


# ------------------------------------------------------------ tip asymptotics


def fit_tip_exponent(u: Field | np.ndarray, m: int, tip: int = 0,
                     window: tuple[int, int] = FIT_WINDOW, x: np.ndarray | None = None
                     ) -> tuple[float, float]:
    """Slope of ``log|u_m(x_i)|`` against ``log x_i`` over ``window`` (node
    indices counted from ``tip``) and the fit's r^2.

    ``u`` is a Field or an already extracted radial profile (then ``x`` gives
    the tip distances).  Returns ``(nan, nan)`` when the amplitude on the window
    is below the noise floor.  For m = 0 the tip value is subtracted first.
    """
    if isinstance(u, Field):
        prof = u.modal()[:, m]
        x = u.disc.grid.tip_distance(tip)
        if tip == 1:
            prof, x = prof[::-1], x[::-1]
        if m == 0:
            prof = prof - prof[0]
    else:
        prof = np.asarray(u)
    lo, hi = window
    amp = np.abs(prof[lo:hi])
    if amp.size < 2 or np.any(amp < NOISE_FLOOR):
        return math.nan, math.nan
    lx, ly = np.log(x[lo:hi]), np.log(amp)
    slope, icpt = np.polyfit(lx, ly, 1)
    resid = ly - (slope * lx + icpt)
    tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - float(np.sum(resid**2) / tot) if tot > 0 else 1.0
    return float(slope), r2


def steady_mode_solve(disc: Discretization, m: int, f: np.ndarray) -> np.ndarray:
    """Solve ``L_m u = f`` for one angular mode (m >= 1: the operator is definite)."""
    if m < 1:
        raise ValueError("steady solve needs m >= 1 (mode 0 has the constants in its kernel)")
    op = disc.ops[m]
    ab = np.zeros((3, disc.grid.N))
    ab[0, 1:] = op.off
    ab[1] = op.diag
    ab[2, :-1] = op.off
    return solve_banded((1, 1), ab, op.weights * np.asarray(f, dtype=float))
