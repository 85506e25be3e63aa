"""Time-discretized integrators for the reflected two-type dynamics and the
depletion gradient dynamics.

Reflection at the non-overlap boundary is realized by post-step projection:
after each Euler-Maruyama increment, violated pairs are pushed back to exact
contact along their centre axis, splitting the correction in proportion to
the bodies' mobility weights (sphere-sphere 1:1, sphere-particle 1:sigma_p^2,
matching the local-time coefficients of the underlying equations).  The
accumulated corrections are the discrete local times.

Coefficient conventions: the sphere confinement drift of the two-type
system defaults to -(sigma/2) grad psi, with the -(sigma^2/2) variant
selectable; the particle drift is -(sigma_p^2/2) grad psi_R, optionally
scaled by a further factor sigma (``particle_stray_sigma``).  The depletion
dynamics uses -(1/2) grad psi - (z/2) grad E.  All conventions coincide at
sigma = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from .backend import kernels
from .core import Configuration, ModelParams
from .geometry import rho_thresholds
from .potentials import PotentialSpec
from .rng import make_generator, normals

__all__ = [
    "IntegratorState",
    "TrajectoryRecord",
    "ProjectionError",
    "SimulationError",
    "resolve_constraints",
    "step_two_type",
    "step_depletion",
    "simulate",
    "default_dt",
    "MAX_PROJ_ITERS",
]

MAX_PROJ_ITERS = 100


class ProjectionError(RuntimeError):
    """Constraint projection failed to converge; carries the offending pairs."""

    def __init__(self, pairs):
        self.pairs = list(pairs)
        super().__init__(f"projection did not converge; violated pairs: {self.pairs}")


class SimulationError(RuntimeError):
    """A step failed; carries the step index and offending pairs."""

    def __init__(self, step: int, pairs):
        self.step = step
        self.pairs = list(pairs)
        super().__init__(f"integration failed at step {step}; violated pairs: {self.pairs}")


def default_dt(params: ModelParams) -> float:
    """Default time step 1e-4 (2 r_sphere)^2 / sigma_sphere^2.

    Keeps the per-step displacement well below the sphere radius so the
    projection is a small perturbation of the free increment.
    """
    return 1e-4 * (2.0 * params.r_sphere) ** 2 / params.sigma_sphere**2


@dataclass
class IntegratorState:
    """Configuration, clock, local-time accumulators and generator state.

    States form a linear chain: stepping consumes the generator, so treat a
    stepped-from state as moved.  L is symmetric with zero diagonal; both
    accumulators are non-negative and non-decreasing along a trajectory.
    """

    cfg: Configuration
    t: float
    local_time_spheres: np.ndarray
    local_time_particles: np.ndarray
    rng: np.random.Generator

    @classmethod
    def initial(cls, cfg: Configuration, seed: int) -> "IntegratorState":
        return cls(
            cfg=cfg,
            t=0.0,
            local_time_spheres=np.zeros((cfg.n, cfg.n)),
            local_time_particles=np.zeros((cfg.n, cfg.m)),
            rng=make_generator(seed),
        )


@dataclass(frozen=True)
class TrajectoryRecord:
    """Snapshot plus cumulative local-time statistics."""

    step: int
    t: float
    cfg: Configuration
    local_time_spheres: np.ndarray
    local_time_particles: np.ndarray


def _violated_pairs(sph: np.ndarray, par: np.ndarray, contact_ss: float, contact_sp: float):
    pairs = []
    n = sph.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if np.linalg.norm(sph[i] - sph[j]) < contact_ss * (1.0 - 1e-13):
                pairs.append(("SS", i, j))
    for i in range(n):
        for k in range(par.shape[0]):
            if np.linalg.norm(sph[i] - par[k]) < contact_sp * (1.0 - 1e-13):
                pairs.append(("SP", i, k))
    return pairs


def resolve_constraints(
    cfg: Configuration,
    params: ModelParams,
    weights: Optional[Tuple[float, float]] = None,
    max_iters: int = MAX_PROJ_ITERS,
):
    """Project a configuration back onto the admissible set.

    Violated pairs are separated to exact contact along their centre axis,
    the correction split in proportion to the mobility weights
    ``(w_sphere, w_particle)`` (defaults ``(1, sigma_particle^2)``).  Returns
    the projected configuration and a ledger with the per-pair discrete
    local-time increments; admissible input comes back unchanged with an
    empty ledger.
    """
    w_s, w_p = weights if weights is not None else (1.0, params.sigma_particle**2)
    sph = np.array(cfg.spheres, dtype=np.float64, order="C", copy=True)
    par = np.array(cfg.particles, dtype=np.float64, order="C", copy=True)
    dL = np.zeros((cfg.n, cfg.n))
    dell = np.zeros((cfg.n, cfg.m))
    sweeps = kernels.project_contacts(
        sph, par, 2.0 * params.r_sphere, params.r_depletion, w_s, w_p, max_iters, dL, dell
    )
    if sweeps < 0:
        raise ProjectionError(_violated_pairs(sph, par, 2.0 * params.r_sphere, params.r_depletion))
    ledger = {"spheres": dL, "particles": dell, "sweeps": int(sweeps)}
    return Configuration(spheres=sph, particles=par), ledger


def _drift_prefactors(
    params: ModelParams, sphere_drift_convention: str, particle_stray_sigma: bool
) -> Tuple[float, float]:
    if sphere_drift_convention == "sigma":
        drift_s = 0.5 * params.sigma_sphere
    elif sphere_drift_convention == "sigma2":
        drift_s = 0.5 * params.sigma_sphere**2
    else:
        raise ValueError("sphere_drift_convention must be 'sigma' or 'sigma2'")
    drift_p = 0.5 * params.sigma_particle**2
    if particle_stray_sigma:
        drift_p *= params.sigma_sphere
    return drift_s, drift_p


def step_two_type(
    state: IntegratorState,
    params: ModelParams,
    spec_pair: Tuple[PotentialSpec, PotentialSpec],
    dt: float,
    noise: Optional[Tuple[np.ndarray, np.ndarray]] = None,
    sphere_drift_convention: str = "sigma",
    particle_stray_sigma: bool = False,
) -> IntegratorState:
    """One Euler-Maruyama step of the two-type dynamics with projection.

    Spheres gain sigma sqrt(dt) xi minus the confinement drift, particles
    likewise with their own coefficients; the projection then restores
    admissibility and credits the corrections to the matching local-time
    accumulators.  ``noise`` is a test hook: a pair of standard-normal
    arrays of shapes (n, d) and (m, d) replacing the generator draws.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    sphere_spec, particle_spec = spec_pair
    cfg = state.cfg
    n, m, d = cfg.n, cfg.m, cfg.d
    if noise is None:
        xi_s = normals(state.rng, (1, n, d))
        xi_p = normals(state.rng, (1, m, d))
    else:
        xi_s = np.ascontiguousarray(noise[0], dtype=np.float64).reshape(1, n, d)
        xi_p = np.ascontiguousarray(noise[1], dtype=np.float64).reshape(1, m, d)
    drift_s, drift_p = _drift_prefactors(params, sphere_drift_convention, particle_stray_sigma)
    sph = np.array(cfg.spheres, dtype=np.float64, order="C", copy=True)
    par = np.array(cfg.particles, dtype=np.float64, order="C", copy=True)
    L = state.local_time_spheres.copy()
    ell = state.local_time_particles.copy()
    status = kernels.run_two_type_chunk(
        sph, par, L, ell, xi_s, xi_p, dt,
        params.sigma_sphere, params.sigma_particle, drift_s, drift_p,
        sphere_spec.effective_slope, sphere_spec.hinge_radius,
        particle_spec.effective_slope, particle_spec.hinge_radius,
        2.0 * params.r_sphere, params.r_depletion,
        params.sigma_particle**2, MAX_PROJ_ITERS,
    )
    if status >= 0:
        raise ProjectionError(_violated_pairs(sph, par, 2.0 * params.r_sphere, params.r_depletion))
    return IntegratorState(
        cfg=Configuration(spheres=sph, particles=par),
        t=state.t + dt,
        local_time_spheres=L,
        local_time_particles=ell,
        rng=state.rng,
    )


def step_depletion(
    state: IntegratorState,
    params: ModelParams,
    psi_spec: PotentialSpec,
    dt: float,
    noise: Optional[np.ndarray] = None,
    z: Optional[float] = None,
) -> IntegratorState:
    """One step of the depletion gradient dynamics (spheres only).

    Drift -(1/2) grad psi - (z/2) grad E: the induced pair force pulls
    spheres with overlapping depletion shells together, and the sphere-
    sphere projection at distance 2 r_sphere credits L.  Requires the
    pairwise-energy regime rho <= rho2 (warned otherwise).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    cfg = state.cfg
    n, d = cfg.n, cfg.d
    zz = params.z_dot if z is None else z
    rho2, _ = rho_thresholds(params.d)
    if params.rho > rho2:
        import warnings

        warnings.warn("depletion drift uses the pairwise energy, which is "
                      f"approximate for rho={params.rho:.4f} > {rho2:.4f}")
    if noise is None:
        xi = normals(state.rng, (1, n, d))
    else:
        xi = np.ascontiguousarray(noise, dtype=np.float64).reshape(1, n, d)
    sph = np.array(cfg.spheres, dtype=np.float64, order="C", copy=True)
    L = state.local_time_spheres.copy()
    status = kernels.run_depletion_chunk(
        sph, L, xi, dt, params.sigma_sphere, zz, params.r_depletion,
        2.0 * params.r_sphere, psi_spec.effective_slope, psi_spec.hinge_radius,
        MAX_PROJ_ITERS,
    )
    if status >= 0:
        raise ProjectionError(
            _violated_pairs(sph, np.empty((0, d)), 2.0 * params.r_sphere, params.r_depletion)
        )
    return IntegratorState(
        cfg=Configuration(spheres=sph, particles=cfg.particles),
        t=state.t + dt,
        local_time_spheres=L,
        local_time_particles=state.local_time_particles.copy(),
        rng=state.rng,
    )


def simulate(
    initial: Configuration,
    params: ModelParams,
    potentials: Tuple[PotentialSpec, Optional[PotentialSpec]],
    dt: float,
    n_steps: int,
    record_every: int,
    seed: int,
    mode: str = "two-type",
    sphere_drift_convention: str = "sigma",
    particle_stray_sigma: bool = False,
    z: Optional[float] = None,
    max_proj_iters: int = MAX_PROJ_ITERS,
) -> List[TrajectoryRecord]:
    """Run a trajectory and return snapshots every ``record_every`` steps.

    Deterministic per seed; the first record is the initial configuration
    and the final step is always recorded.  Step failures surface as
    ``SimulationError`` carrying the failing step index.
    """
    if mode not in ("two-type", "depletion"):
        raise ValueError("mode must be 'two-type' or 'depletion'")
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    if record_every < 1:
        raise ValueError("record_every must be at least 1")
    sphere_spec, particle_spec = potentials
    n, m, d = initial.n, initial.m, initial.d
    zz = params.z_dot if z is None else z
    gen = make_generator(seed)
    sph = np.array(initial.spheres, dtype=np.float64, order="C", copy=True)
    par = np.array(initial.particles, dtype=np.float64, order="C", copy=True)
    L = np.zeros((n, n))
    ell = np.zeros((n, m))
    records = [
        TrajectoryRecord(0, 0.0, Configuration(spheres=sph, particles=par), L.copy(), ell.copy())
    ]
    if mode == "two-type":
        drift_s, drift_p = _drift_prefactors(params, sphere_drift_convention, particle_stray_sigma)
        if particle_spec is None:
            raise ValueError("two-type mode needs a particle confinement potential")
    done = 0
    while done < n_steps:
        chunk = min(record_every, n_steps - done)
        if mode == "two-type":
            xi_s = normals(gen, (chunk, n, d))
            xi_p = normals(gen, (chunk, m, d))
            status = kernels.run_two_type_chunk(
                sph, par, L, ell, xi_s, xi_p, dt,
                params.sigma_sphere, params.sigma_particle, drift_s, drift_p,
                sphere_spec.effective_slope, sphere_spec.hinge_radius,
                particle_spec.effective_slope, particle_spec.hinge_radius,
                2.0 * params.r_sphere, params.r_depletion,
                params.sigma_particle**2, max_proj_iters,
            )
        else:
            xi = normals(gen, (chunk, n, d))
            status = kernels.run_depletion_chunk(
                sph, L, xi, dt, params.sigma_sphere, zz, params.r_depletion,
                2.0 * params.r_sphere, sphere_spec.effective_slope,
                sphere_spec.hinge_radius, max_proj_iters,
            )
        if status >= 0:
            raise SimulationError(
                done + int(status),
                _violated_pairs(sph, par, 2.0 * params.r_sphere, params.r_depletion),
            )
        done += chunk
        records.append(
            TrajectoryRecord(
                done, done * dt, Configuration(spheres=sph, particles=par), L.copy(), ell.copy()
            )
        )
    return records
