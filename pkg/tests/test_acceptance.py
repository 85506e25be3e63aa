"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v -s``.  Stated runtime bounds
assume the compiled kernel backend (the default build).
"""

import math
import time

import numpy as np
import pytest

from depsim import (
    Configuration,
    ModelParams,
    asymptotic_minimal_energy,
    energy_gradient,
    energy_pairwise,
    is_admissible,
    max_contact_number_2d,
    minimal_energy,
    monte_carlo_union_volume,
    overlap_closed_2d,
    overlap_closed_3d,
    overlap_derivative,
    overlap_quadrature,
    rho_thresholds,
    simulate,
)
from depsim.analysis import (
    Histogram,
    default_bin_edges,
    effective_sample_size,
    ks_statistic,
)
from depsim.cli import parse_config, run
from depsim.geometry import OverlapPotential
from depsim.potentials import PotentialSpec
from depsim.rng import make_generator
from depsim.sampling import (
    AnnealSchedule,
    MCMCParams,
    anneal_packing,
    concentration_estimate,
    default_eta,
    sample_bath_given_spheres,
    sample_hard_spheres,
    initial_sphere_positions,
)

from conftest import random_admissible_spheres


def _check(num: int, desc: str, ok: bool, detail: str = ""):
    line = f"[criterion {num:02d}] {'PASS' if ok else 'FAIL'} - {desc}"
    if detail:
        line += f" ({detail})"
    print(line, flush=True)
    assert ok, line


def test_criterion_01_quadrature_matches_closed_forms():
    t0 = time.perf_counter()
    u = np.arange(0.0, 1.0 + 1e-12, 1e-3)
    worst = 0.0
    for d, closed in ((2, overlap_closed_2d), (3, overlap_closed_3d)):
        r_dep = 1.0
        gap = np.max(np.abs(overlap_quadrature(u, d, r_dep) - closed(u, r_dep)))
        worst = max(worst, gap / r_dep**d)
    wall = time.perf_counter() - t0
    _check(
        1,
        "quadrature vs closed forms <= 1e-10 on the u grid, under 1 s",
        worst <= 1e-10 and wall < 1.0,
        f"max gap {worst:.2e}, {wall:.2f}s",
    )


def test_criterion_02_boundary_smoothness():
    v1_2d = overlap_closed_2d(1.0, 1.0)
    v1_3d = overlap_closed_3d(1.0, 1.0)
    d1_2d = overlap_derivative(1.0, 2, 1.0)
    d1_3d = overlap_derivative(1.0, 3, 1.0)
    u, h = 1.0 - 1e-4, 1e-6
    dd2 = (overlap_closed_2d(u + h, 1.0) - 2 * overlap_closed_2d(u, 1.0)
           + overlap_closed_2d(u - h, 1.0)) / h**2
    dd3 = (overlap_closed_3d(u + h, 1.0) - 2 * overlap_closed_3d(u, 1.0)
           + overlap_closed_3d(u - h, 1.0)) / h**2
    ok = (
        v1_2d == 0.0 and v1_3d == 0.0 and d1_2d == 0.0 and d1_3d == 0.0
        and dd2 > 1e2 and dd3 <= 4.0 * math.pi
    )
    _check(2, "value and slope vanish at tangency; curvature blows up only in d=2",
           ok, f"d2''={dd2:.1f}, d3''={dd3:.3f}")


def test_criterion_03_maximal_overlap_constants():
    worst = 0.0
    for rho in (0.05, 0.1, 0.15):
        r_dep = 1.0 + rho
        u = 1.0 / (1.0 + rho)
        ref3 = 2.0 * math.pi * rho**2 * (1.0 + 2.0 * rho / 3.0)
        worst = max(worst, abs(overlap_closed_3d(u, r_dep) - ref3) / ref3)
        ref2 = 2.0 * r_dep**2 * (
            math.acos(1.0 / (1.0 + rho)) - math.sqrt(rho * (2.0 + rho)) / (1.0 + rho) ** 2
        )
        worst = max(worst, abs(overlap_closed_2d(u, r_dep) - ref2) / ref2)
    _check(3, "hard-contact overlap matches the closed constants to 1e-12",
           worst <= 1e-12, f"worst rel {worst:.2e}")


def test_criterion_04_threshold_constants():
    r2_2, r3_2 = rho_thresholds(2)
    r2_3, r3_3 = rho_thresholds(3)
    ok = (
        abs(r2_2 - 0.154700) <= 1e-6
        and abs(r3_2 - 0.414213) <= 1e-6
        and abs(r2_3 - 0.154700) <= 1e-6
        and abs(r3_3 - 0.224744) <= 1e-6
    )
    _check(4, "pair/multi-body size-ratio thresholds", ok,
           f"({r2_2:.6f}, {r3_2:.6f}), ({r2_3:.6f}, {r3_3:.6f})")


def test_criterion_05_gradient_finite_difference():
    t0 = time.perf_counter()
    gen = make_generator(5005)
    worst = 0.0
    count = 0
    for k in range(100):
        d = 2 if k % 2 == 0 else 3
        n = 2 + k % 5
        p = ModelParams(d=d, r_sphere=1.0, r_particle=0.1)
        h = 1e-5 * p.r_sphere
        # keep pair distances away from the depletion tangency, where the
        # energy is C^1 but not C^2 and central differences lose accuracy
        pts = random_admissible_spheres(gen, n, p, avoid_tangency=1e-3)
        grad = energy_gradient(pts, p)
        fd = np.zeros_like(grad)
        for i in range(n):
            for c in range(d):
                plus = pts.copy()
                plus[i, c] += h
                minus = pts.copy()
                minus[i, c] -= h
                fd[i, c] = (energy_pairwise(plus, p) - energy_pairwise(minus, p)) / (2 * h)
        scale = np.maximum(np.abs(fd), 1e-9)
        worst = max(worst, float(np.max(np.abs(grad - fd) / scale)))
        count += 1
    wall = time.perf_counter() - t0
    _check(5, "energy gradient vs central differences, rel <= 1e-6, under 10 s",
           worst <= 1e-6 and wall < 10.0 and count == 100,
           f"worst rel {worst:.2e}, {wall:.1f}s")


def test_criterion_06_energy_vs_monte_carlo():
    t0 = time.perf_counter()
    gen = make_generator(6006)
    failures = 0
    for k in range(50):
        d = 2 if k < 25 else 3
        rho = 0.1 if d == 2 else 0.12
        p = ModelParams(d=d, r_sphere=1.0, r_particle=rho)
        n = 2 + k % 5
        pts = random_admissible_spheres(gen, n, p)
        est, se = monte_carlo_union_volume(pts, p, samples=1_000_000, seed=8000 + k)
        if abs(energy_pairwise(pts, p) - est) > 4.0 * se:
            failures += 1
    wall = time.perf_counter() - t0
    _check(6, "pairwise energy within 4 standard errors of the MC volume on 50 configs",
           failures == 0 and wall < 120.0, f"{failures} misses, {wall:.0f}s")


def test_criterion_07_contact_number_table():
    table = {2: 1, 3: 3, 4: 5, 5: 7, 6: 9, 7: 12}
    ok = all(max_contact_number_2d(n) == c for n, c in table.items())
    _check(7, "planar maximal contact numbers for n = 2..7", ok)


def test_criterion_08_packing_recovery():
    mcmc = MCMCParams(proposal_sigma=0.5, n_sweeps=10, burn_in=1)
    schedule = AnnealSchedule()
    p2 = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    p3 = ModelParams(d=3, r_sphere=1.0, r_particle=0.1)
    results = []
    slowest = 0.0
    ok = True
    for params, n, target in [
        (p2, 3, 3), (p2, 4, 5), (p2, 5, 7), (p2, 6, 9), (p3, 4, 6),
    ]:
        hits = 0
        for seed in range(10):
            t0 = time.perf_counter()
            res = anneal_packing(n, params, schedule, mcmc, seed=seed)
            wall = time.perf_counter() - t0
            slowest = max(slowest, wall)
            hits += res.contact_history[-1] == target
        results.append(f"n={n},d={params.d}: {hits}/10")
        ok = ok and hits >= 8
    ok = ok and slowest <= 300.0
    _check(8, "annealing attains the maximal contact number in >= 8/10 seeds",
           ok, "; ".join(results) + f"; slowest run {slowest:.0f}s")


def test_criterion_09_dynamics_sampler_equilibrium():
    t0 = time.perf_counter()
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1, sigma_sphere=1.0)
    vstar = OverlapPotential.from_params(p).max_value()
    z = 3.0 / vstar
    psi = PotentialSpec.sphere(2, 0.0, 6.0, normalize=False)

    mcmc = MCMCParams(proposal_sigma=0.3, n_sweeps=600_000, burn_in=40_000, thinning=10)
    chain = sample_hard_spheres(2, p, psi, mcmc, z=z, seed=101)
    d_mcmc = np.array([np.linalg.norm(c.spheres[0] - c.spheres[1]) for c in chain.configs])

    init = Configuration(spheres=np.array([[-1.05, 0.0], [1.05, 0.0]]))
    recs = simulate(init, p, (psi, None), dt=5e-6, n_steps=300_000_000,
                    record_every=500, seed=202, mode="depletion", z=z)
    d_sde = np.array([np.linalg.norm(r.cfg.spheres[0] - r.cfg.spheres[1]) for r in recs[1:]])
    ess = effective_sample_size(d_sde)

    edges = default_bin_edges(p, max(d_mcmc.max(), d_sde.max()) * 1.001)
    ks = ks_statistic(
        Histogram.from_samples(d_mcmc, edges), Histogram.from_samples(d_sde, edges)
    )
    wall = time.perf_counter() - t0
    _check(9, "depletion dynamics and Metropolis sampler agree (KS <= 0.05, ESS >= 1e4)",
           ks <= 0.05 and ess >= 1e4 and wall <= 600.0,
           f"KS {ks:.4f}, ESS {ess:.0f}, {wall:.0f}s")


def test_criterion_10_constraint_integrity():
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1, z_dot=2.9,
                    sigma_sphere=1.0, sigma_particle=1.0)
    psi_s = PotentialSpec.sphere(2, 3.0, 1.0, normalize=False)
    psi_p = PotentialSpec.particle(2, 5.0)
    sph = initial_sphere_positions(3, 2, 1.0)
    par = sample_bath_given_spheres(sph, p, 5.5, seed=1010, psi_particle=psi_p)
    cfg = Configuration(spheres=sph, particles=par)
    recs = simulate(cfg, p, (psi_s, psi_p), dt=4e-4, n_steps=100_000,
                    record_every=100, seed=1011, mode="two-type")
    violations = sum(0 if is_admissible(r.cfg, p, tol=1e-9) else 1 for r in recs)
    monotone = all(
        np.all(b.local_time_spheres >= a.local_time_spheres)
        and np.all(b.local_time_particles >= a.local_time_particles)
        for a, b in zip(recs, recs[1:])
    )
    _check(10, "1e5 two-type steps: zero admissibility violations, monotone local times",
           violations == 0 and monotone and 150 <= cfg.m <= 260,
           f"m={cfg.m}, snapshots={len(recs)}")


def test_criterion_11_concentration_monotonicity():
    t0 = time.perf_counter()
    p = ModelParams(d=2, r_sphere=1.0, r_particle=0.1)
    vstar = OverlapPotential.from_params(p).max_value()
    eta = default_eta(p)
    z_list = [w / vstar for w in (1.0, 5.0, 25.0, 125.0)]
    mcmc = MCMCParams(proposal_sigma=0.5, n_sweeps=120_000, burn_in=60_000, thinning=20)
    fr = concentration_estimate(3, p, z_list, eta, mcmc, seed=1100)
    wall = time.perf_counter() - t0
    ok = bool(np.all(np.diff(fr) >= -1e-12) and fr[-1] >= 0.9 and wall <= 600.0)
    _check(11, "near-minimal mass non-decreasing in activity, >= 0.9 at the largest",
           ok, "fractions " + ", ".join(f"{f:.3f}" for f in fr) + f", {wall:.0f}s")


def test_criterion_12_asymptotic_expansion_orders():
    ratios2 = []
    for rho in (0.02, 0.01, 0.005):
        p = ModelParams(d=2, r_sphere=1.0, r_particle=rho)
        gap = abs(minimal_energy(7, p) - asymptotic_minimal_energy(7, 2, rho))
        ratios2.append(gap / rho**2.5)
    ok2 = max(ratios2) <= 2.0 * min(ratios2)
    ok3 = True
    for n in (2, 4, 5):
        ratios3 = []
        for rho in (0.02, 0.01, 0.005):
            p = ModelParams(d=3, r_sphere=1.0, r_particle=rho)
            gap = abs(minimal_energy(n, p) - asymptotic_minimal_energy(n, 3, rho))
            ratios3.append(gap / rho**3)
        ok3 = ok3 and max(ratios3) <= 2.0 * min(ratios3)
    _check(12, "minimal-energy expansion remainders are O(rho^{5/2}) / O(rho^3)",
           ok2 and ok3,
           f"d2 spread {max(ratios2) / min(ratios2):.3f}")


CONFIG_13 = """
[run]
mode = two-type
seed = 4242
n_steps = 2000
record_every = 200
replicas = 2
[model]
d = 2
r_sphere = 1.0
r_particle = 0.1
z = 2.0
[spheres]
n = 3
[sphere_potential]
hinge_radius = 3.0
slope = 1.0
[particle_potential]
radius = 4.0
"""


def test_criterion_13_reproducibility(tmp_path):
    outs = []
    for name in ("a", "b"):
        cfg = parse_config(CONFIG_13)
        cfg.out = str(tmp_path / name)
        assert run(cfg) == 0
        outs.append(tmp_path / name)
    same = all(
        (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
        for f in ("snapshots_r0.csv", "snapshots_r1.csv",
                  "local_times_r0.csv", "local_times_r1.csv")
    )
    _check(13, "identical config and seed give byte-identical snapshot artifacts", same)
