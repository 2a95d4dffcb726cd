"""Flat ``key = value`` run configuration with validation.

Every key can be overridden from the command line (``--key value``); flags win
over the file.  Validation collects all violations before failing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields
from pathlib import Path

from . import indicial
from .discrete import GRADINGS
from .dynamics import INITIAL_KINDS, InitialCondition, SolverConfig
from .functionals import NormRequest
from .geometry import GeometryError, SpindleGeometry, build_spindle


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("; ".join(problems))


@dataclass
class RunConfig:
    alpha0: float = 1.0
    alphaL: float = 1.0
    length: float = 2.0
    collar_width: float = 0.5
    n_radial: int = 64
    n_theta: int = 16
    x_min: float = 1e-3
    grading: str = "log-collar"
    dt: float = 1e-3
    t_end: float = 1.0
    stabilization: float = 2.0
    output_every: int = 100
    snapshot_every: int = 1000
    initial_kind: str = "random"
    initial_amplitude: float = 0.1
    initial_seed: int = 0
    initial_m: int = 1
    initial_j: int = 0
    gamma: float = -0.5
    norms: str = ""          # "s,gamma,p; ..."; empty: (0, gamma, 2) and (2, gamma + 2, 2)
    norm_split_constants: bool = True
    fit_modes: str = "1"
    out_dir: str = "out"
    format: str = "csv"

    # -------------------------------------------------------------- derived

    def geometry(self) -> SpindleGeometry:
        return build_spindle(self.alpha0, self.alphaL, self.length, self.collar_width)

    def norm_indices(self) -> list[indicial.WeightedIndex]:
        text = self.norms.strip()
        if not text:
            return [indicial.WeightedIndex(0, self.gamma, 2.0),
                    indicial.WeightedIndex(2, self.gamma + 2.0, 2.0)]
        out = []
        for item in text.split(";"):
            s, g, p = (float(v) for v in item.split(","))
            out.append(indicial.WeightedIndex(s, g, p))
        return out

    def norm_requests(self) -> tuple[NormRequest, ...]:
        return tuple(NormRequest(i, split_constants=self.norm_split_constants)
                     for i in self.norm_indices())

    def fit_mode_list(self) -> tuple[int, ...]:
        return tuple(int(v) for v in self.fit_modes.replace(",", " ").split())

    def solver(self) -> SolverConfig:
        ic = InitialCondition(self.initial_kind, self.initial_amplitude, self.initial_seed,
                              self.initial_m, self.initial_j)
        return SolverConfig(dt=self.dt, t_end=self.t_end, stabilization=self.stabilization,
                            output_every=self.output_every, initial=ic,
                            norm_requests=self.norm_requests(), fit_modes=self.fit_mode_list(),
                            snapshot_every=self.snapshot_every)

    def gamma_window(self) -> indicial.GammaWindow:
        # both tip circles belong to the boundary; the larger alpha gives lambda_1
        lam1 = -1.0 / max(self.alpha0, self.alphaL) ** 2
        return indicial.gamma_window(1, lam1)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "norms" and not v.strip():
                v = "; ".join(f"{i.s:g},{i.gamma!r},{i.p:g}" for i in self.norm_indices())
            lines.append(f"{key_name(f.name)} = {_show(v)}")
        return "\n".join(lines) + "\n"


def key_name(attr: str) -> str:
    """Attribute name -> config key (``initial_kind`` -> ``initial.kind``)."""
    return "initial." + attr[len("initial_"):] if attr.startswith("initial_") else attr


KEYS = {key_name(f.name): f for f in fields(RunConfig)}


def _show(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _convert(raw: str, typ):
    if typ in (float, "float"):
        v = float(raw)
        if not math.isfinite(v):
            raise ValueError("not finite")
        return v
    if typ in (int, "int"):
        return int(raw)
    if typ in (bool, "bool"):
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected true/false")
    return raw.strip()


def read_file(path: str | Path) -> dict[str, str]:
    values: dict[str, str] = {}
    problems = []
    p = Path(path)
    if not p.is_file():
        raise ConfigError([f"config file {str(p)!r} does not exist"])
    for n, line in enumerate(p.read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems.append(f"line {n}: expected 'key = value'")
            continue
        k, v = (s.strip() for s in line.split("=", 1))
        values[k] = v
    if problems:
        raise ConfigError(problems)
    return values


def parse_config(path: str | Path | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Config file (optional) plus flag overrides -> validated RunConfig."""
    raw = read_file(path) if path is not None else {}
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    problems = []
    cfg = RunConfig()
    for k, v in raw.items():
        f = KEYS.get(k)
        if f is None:
            problems.append(f"unknown key {k!r}")
            continue
        try:
            setattr(cfg, f.name, _convert(v, f.type))
        except ValueError as exc:
            problems.append(f"{k}: cannot parse {v!r} ({exc})")
    if problems:
        raise ConfigError(problems)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    problems = []

    def need(ok: bool, msg: str):
        if not ok:
            problems.append(msg)

    for k in ("alpha0", "alphaL", "length", "collar_width", "x_min", "dt"):
        need(getattr(cfg, k) > 0, f"{k} must be > 0, got {getattr(cfg, k)!r}")
    need(cfg.collar_width < cfg.length / 2,
         f"collar_width must be < length/2 = {cfg.length / 2!r}, got {cfg.collar_width!r}")
    if cfg.alpha0 > 0 and cfg.alphaL > 0 and 0 < cfg.collar_width < cfg.length / 2:
        try:
            cfg.geometry()
        except GeometryError as exc:
            problems.append(f"geometry: {exc}")
    need(cfg.n_radial >= 16, f"n_radial must be >= 16, got {cfg.n_radial}")
    need(cfg.n_theta >= 4 and cfg.n_theta & (cfg.n_theta - 1) == 0,
         f"n_theta must be a power of two >= 4, got {cfg.n_theta}")
    need(cfg.x_min < cfg.collar_width,
         f"x_min must lie in (0, collar_width={cfg.collar_width!r}), got {cfg.x_min!r}")
    need(cfg.grading in GRADINGS, f"grading must be one of {GRADINGS}, got {cfg.grading!r}")
    need(cfg.t_end >= 0, f"t_end must be >= 0, got {cfg.t_end!r}")
    need(cfg.stabilization >= 0, f"stabilization must be >= 0, got {cfg.stabilization!r}")
    need(cfg.output_every >= 1, f"output_every must be >= 1, got {cfg.output_every}")
    need(cfg.snapshot_every >= 0, f"snapshot_every must be >= 0, got {cfg.snapshot_every}")
    need(cfg.initial_kind in INITIAL_KINDS,
         f"initial.kind must be one of {INITIAL_KINDS}, got {cfg.initial_kind!r}")
    need(cfg.initial_seed >= 0, f"initial.seed must be >= 0, got {cfg.initial_seed}")
    need(0 <= cfg.initial_m <= cfg.n_theta // 2,
         f"initial.m must lie in [0, n_theta/2 = {cfg.n_theta // 2}], got {cfg.initial_m}")
    need(0 <= cfg.initial_j < cfg.n_radial,
         f"initial.j must lie in [0, n_radial), got {cfg.initial_j}")
    need(cfg.format == "csv", f"format must be 'csv', got {cfg.format!r}")
    if cfg.alpha0 > 0 and cfg.alphaL > 0:
        win = cfg.gamma_window()
        need(cfg.gamma in win,
             f"gamma={cfg.gamma!r} outside the admissible window ({win.lo!r}, {win.hi!r})")
    try:
        for idx in cfg.norm_indices():
            need(idx.s in (0, 1, 2), f"norms: s must be 0, 1 or 2, got {idx.s:g}")
    except (ValueError, indicial.IndicialError) as exc:
        problems.append(f"norms: cannot parse {cfg.norms!r} ({exc}); expected 's,gamma,p; ...'")
    try:
        modes = cfg.fit_mode_list()
        need(all(0 <= m <= cfg.n_theta // 2 for m in modes),
             f"fit_modes must lie in [0, {cfg.n_theta // 2}], got {cfg.fit_modes!r}")
    except ValueError:
        problems.append(f"fit_modes: cannot parse {cfg.fit_modes!r}")
    if problems:
        raise ConfigError(problems)
