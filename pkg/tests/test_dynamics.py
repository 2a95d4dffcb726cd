import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_disc
from conic_ch import functionals as fn
from conic_ch.discrete import tip_closure_residual
from conic_ch.dynamics import (
    IMEXStepper, InitialCondition, SimulationError, SolverConfig, fit_tip_exponent, imex_step,
    make_initial, read_snapshot, run, steady_mode_solve,
)


@pytest.mark.parametrize("c", [0.0, 1.0, -1.0])
def test_fixed_points(disc, c):
    u = disc.field(c)
    out = imex_step(u, SolverConfig(dt=1e-2))
    assert np.abs(out.physical() - c).max() <= 1e-13


def test_linear_single_mode_gain(disc):
    m, j, dt = 2, 3, 1e-3
    v = disc.ops[m].vectors[:, j]
    u = disc.field(v[:, None] * np.cos(m * disc.theta))
    out = IMEXStepper(disc, dt, stabilization=0.0, nonlinear=False).step(u)
    lam = disc.ops[m].values[j]
    assert np.allclose(out.physical(), u.physical() / (1 + dt * lam**2), atol=1e-12)


@given(st.integers(0, 10_000), st.sampled_from([1e-4, 1e-2, 1.0]))
@settings(max_examples=10, deadline=None)
def test_mass_preserved_per_step(seed, dt):
    d = make_disc(N=24)
    u = make_initial(d, InitialCondition("random", 0.5, seed))
    m0 = fn.mass(u)
    v = IMEXStepper(d, dt).step(u)
    scale = max(abs(m0), fn.integrate(np.abs(u.physical()), d))
    assert abs(fn.mass(v) - m0) <= 1e-12 * scale


def test_initial_fields(disc):
    u = make_initial(disc, InitialCondition("pure_phase_perturbed", 0.0, 3))
    assert np.all(u.physical() == 1.0)
    b = make_initial(disc, InitialCondition("mode_bump", 0.5, 0, m=2, j=1))
    U = b.modal()
    assert np.flatnonzero(np.abs(U).max(axis=0) > 1e-14).tolist() == [2]
    assert np.abs(b.physical()).max() == pytest.approx(0.5)
    r1 = make_initial(disc, InitialCondition("random", 0.1, 11))
    r2 = make_initial(disc, InitialCondition("random", 0.1, 11))
    r3 = make_initial(disc, InitialCondition("random", 0.1, 12))
    assert np.array_equal(r1.physical(), r2.physical())
    assert not np.array_equal(r1.physical(), r3.physical())
    with pytest.raises(ValueError):
        InitialCondition("gaussian")


def test_random_field_resolution_independent_tip_data():
    # the tip constant is the same on every grid; the mass only picks up the
    # O(1/k^2) integrals of the newly resolved sin terms
    vals = []
    for N in (64, 128, 256):
        u = make_initial(make_disc(N=N, n_theta=16), InitialCondition("random", 0.1, 0))
        vals.append((fn.mass(u), u.modal()[0, 0].real))
    for a, b in zip(vals, vals[1:]):
        assert b[1] == pytest.approx(a[1], rel=1e-12)
        assert b[0] == pytest.approx(a[0], rel=1e-2)


@pytest.mark.parametrize("kind", ["random", "pure_phase_perturbed"])
def test_generators_satisfy_closure(disc, kind):
    assert tip_closure_residual(make_initial(disc, InitialCondition(kind, 0.3, 7))) <= 1e-8


def test_fit_exact_power_law():
    x = np.geomspace(1e-3, 0.5, 20)
    rho, r2 = fit_tip_exponent(x**1.25, 1, x=x)
    assert rho == pytest.approx(1.25, abs=1e-12) and r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_below_floor(disc):
    rho, r2 = fit_tip_exponent(disc.field(0.0), 1)
    assert math.isnan(rho) and math.isnan(r2)


@pytest.mark.parametrize("tip", [0, 1])
def test_steady_solve_exponent(tip):
    d = make_disc(0.8, 0.8, N=64)
    x = d.grid.x
    f = np.exp(-(((x - 1.0) / 0.1) ** 2))
    u = steady_mode_solve(d, 1, f)
    prof = np.zeros((x.size, d.n_modes), complex)
    prof[:, 1] = u
    rho, r2 = fit_tip_exponent(d.from_modes(prof), 1, tip=tip)
    assert rho == pytest.approx(1.25, rel=0.05)
    assert r2 >= 0.99
    with pytest.raises(ValueError):
        steady_mode_solve(d, 0, f)


def test_pure_phase_stays_bounded():
    d = make_disc(N=32, n_theta=8)
    cfg = SolverConfig(dt=1e-2, t_end=10.0, output_every=50,
                       initial=InitialCondition("pure_phase_perturbed", 1e-3, 0))
    res = run(d, cfg)
    assert max(res.series.max_abs) <= 1.1


def test_run_series_and_energy_decay():
    d = make_disc(N=32, n_theta=8)
    cfg = SolverConfig(dt=1e-3, t_end=0.5, output_every=50,
                       initial=InitialCondition("random", 0.1, 0))
    res = run(d, cfg)
    s = res.series
    assert len(s.times) == 11 and s.times[-1] == pytest.approx(0.5)
    assert all(b <= a for a, b in zip(s.energy, s.energy[1:]))
    assert max(abs(m - s.mass[0]) for m in s.mass) <= 1e-12 * max(abs(s.mass[0]), 1.0)


def test_blow_up_reports_step():
    d = make_disc(0.8, 0.8, 6.0, 0.5, N=64, n_theta=16)
    cfg = SolverConfig(dt=1.0, t_end=200.0, stabilization=0.0,
                       initial=InitialCondition("pure_phase_perturbed", 0.5, 0))
    with pytest.raises(SimulationError, match="step"):
        run(d, cfg)


def test_snapshots_and_csv(tmp_path):
    d = make_disc(N=24, n_theta=8)
    req = fn.NormRequest(fn.WeightedIndex(0, -0.5, 2))
    cfg = SolverConfig(dt=1e-3, t_end=0.01, output_every=5, snapshot_every=5, norm_requests=(req,),
                       fit_modes=(1,), initial=InitialCondition("random", 0.1, 0))
    res = run(d, cfg, out_dir=tmp_path)
    assert [p.name for p in res.snapshots] == [f"snapshot_{k:07d}.bin" for k in (0, 5, 10)]
    data, meta = read_snapshot(res.snapshots[-1])
    assert np.array_equal(data, res.final.physical())
    assert meta["step"] == 10 and meta["shape"] == [24, 8]
    assert json.loads((tmp_path / "snapshot_0000010.json").read_text())["time"] == pytest.approx(0.01)
    res.series.write_csv(tmp_path / "s.csv")
    text = (tmp_path / "s.csv").read_bytes()
    assert b"\r" not in text
    lines = text.decode().splitlines()
    assert lines[0] == "t,energy,mass,grad_sq,l2_sq,max_abs,norm_0_-0.5_2"
    assert len(lines) == 4
    res.series.write_fits_csv(tmp_path / "f.csv")
    assert (tmp_path / "f.csv").read_text().splitlines()[0] == "t,m,rho_hat,r2"
