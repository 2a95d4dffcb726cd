"""Empirical energy-stability threshold of the IMEX step.

For each grid and stabilization S, run random(0.1) for a fixed number of steps
at a ladder of dt values and report the largest step energy increase (relative
to the initial energy) and the relative mass drift.  The documented threshold
is the largest dt on the ladder with no increase above 1e-8 * energy(u0).

    python3 scripts/dt_threshold.py [--steps 10000]
"""
import argparse

import numpy as np

from conic_ch import functionals as fn
from conic_ch.discrete import Discretization, build_grid
from conic_ch.dynamics import IMEXStepper, InitialCondition, make_initial
from conic_ch.geometry import build_spindle

GRIDS = [
    # (alpha0, alphaL, L, x_c, N, n_theta)
    (1.0, 1.0, 2.0, 0.5, 64, 16),
    (1.0, 1.0, 2.0, 0.5, 128, 16),
    (0.8, 0.8, 6.0, 0.5, 64, 16),
]
DTS = [1e-4, 1e-3, 1e-2, 1e-1, 1.0]
TOL = 1e-8


def sweep(disc, dt, S, steps):
    u = make_initial(disc, InitialCondition("random", 0.1, 0))
    e0, m0 = fn.energy(u), fn.mass(u)
    scale = max(abs(m0), fn.integrate(np.abs(u.physical()), disc))
    stepper = IMEXStepper(disc, dt, S)
    C = disc.to_eigen(u.modal())
    prev, worst, drift = e0, -np.inf, 0.0
    for _ in range(steps):
        C = stepper.step_eigen(C)
        v = disc.from_modes(disc.from_eigen(C))
        e = fn.energy(v)
        if not np.isfinite(e):
            return np.inf, np.inf
        worst = max(worst, (e - prev) / e0)
        drift = max(drift, abs(fn.mass(v) - m0) / scale)
        prev = e
    return worst, drift


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--steps", type=int, default=10000)
    args = ap.parse_args()
    print("alpha,L,N,n_theta,S,dt,max_rel_energy_increase,max_rel_mass_drift,monotone")
    for a0, aL, L, xc, N, M in GRIDS:
        g = build_spindle(a0, aL, L, xc)
        disc = Discretization(g, build_grid(g, N, 1e-3), M)
        for S in (0.0, 2.0):
            for dt in DTS:
                worst, drift = sweep(disc, dt, S, args.steps)
                ok = worst <= TOL
                print(f"{a0},{L},{N},{M},{S},{dt},{worst:.3e},{drift:.3e},{ok}", flush=True)


if __name__ == "__main__":
    main()
