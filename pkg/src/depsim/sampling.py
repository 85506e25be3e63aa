"""Equilibrium samplers and the activity-annealing packing optimizer.

``sample_hard_spheres`` targets the projected measure of the hard spheres,
with density proportional to exp(-z E(x)) prod exp(-psi(x_i)) on the
admissible set.  ``sample_two_type`` targets the joint sphere/particle
measure by Gibbs alternation: the particle bath conditioned on the spheres
is an exactly samplable thinned Poisson process, so no bath random walk is
needed.  ``anneal_packing`` sweeps the activity upward so the chain settles
into contact-number-maximizing clusters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .backend import kernels
from .core import (
    Configuration,
    EPS_CONTACT_ANNEAL,
    ModelParams,
    contact_number,
)
from .geometry import (
    OverlapPotential,
    energy_pairwise,
    minimal_energy,
    rho_thresholds,
    v_unit_ball,
)
from .potentials import PotentialSpec, hinge
from .rng import log_uniforms, make_generator, normals

__all__ = [
    "MCMCParams",
    "AnnealSchedule",
    "ChainResult",
    "AnnealResult",
    "sample_hard_spheres",
    "sample_bath_given_spheres",
    "sample_two_type",
    "anneal_packing",
    "concentration_estimate",
    "initial_sphere_positions",
    "default_anneal_psi",
    "default_eta",
]

_MIN_PROPOSAL_FACTOR = 1e-12


@dataclass(frozen=True)
class MCMCParams:
    """Single-sphere Gaussian-displacement Metropolis parameters.

    Adaptation (burn-in only, target acceptance 0.3) rescales the proposal;
    a window with zero acceptances halves it, and underflow below
    1e-12 r_sphere is an error.
    """

    proposal_sigma: float
    n_sweeps: int
    burn_in: int = 0
    thinning: int = 1
    adapt: bool = True
    target_acceptance: float = 0.3
    adapt_window: int = 50

    def __post_init__(self):
        if self.proposal_sigma <= 0:
            raise ValueError("proposal_sigma must be positive")
        if self.burn_in >= self.n_sweeps:
            raise ValueError("burn_in must be smaller than n_sweeps")
        if self.thinning < 1 or self.adapt_window < 1:
            raise ValueError("thinning and adapt_window must be at least 1")


@dataclass(frozen=True)
class AnnealSchedule:
    """Geometric activity ladder: level k runs at z_initial * growth^k.

    The default ladder starts at one inverse overlap volume (so the
    attraction is of order one thermal unit per contact) and ends deep in
    the concentration regime.  A small fraction of proposals use a large
    jump scale so spheres can hop across the cluster instead of sliding
    around it; the mixture is symmetric, so detailed balance is untouched.
    """

    z_initial: Optional[float] = None
    growth: float = 2.0
    n_levels: int = 12
    sweeps_per_level: int = 50_000
    hop_fraction: float = 0.15
    hop_sigma_factor: float = 1.5

    def __post_init__(self):
        if self.growth <= 1.0:
            raise ValueError("growth factor must exceed 1")
        if self.n_levels < 1 or self.sweeps_per_level < 2:
            raise ValueError("n_levels and sweeps_per_level must be positive")
        if not (0.0 <= self.hop_fraction < 1.0):
            raise ValueError("hop_fraction must lie in [0, 1)")

    def levels(self, params: ModelParams) -> np.ndarray:
        z0 = self.z_initial
        if z0 is None:
            z0 = 1.0 / OverlapPotential.from_params(params).max_value()
        return z0 * self.growth ** np.arange(self.n_levels)


@dataclass
class ChainResult:
    """Post-burn-in thinned states with per-state energies and diagnostics."""

    configs: List[Configuration]
    energies: np.ndarray
    psi_totals: np.ndarray
    accepted_per_sweep: np.ndarray
    proposal_sigma_final: float

    @property
    def acceptance_rate(self) -> float:
        n = self.configs[0].n if self.configs else 1
        return float(np.mean(self.accepted_per_sweep)) / n


@dataclass
class AnnealResult:
    best: Configuration
    best_energy: float
    best_psi_total: float
    contact_history: List[int]
    energy_history: List[float]
    z_levels: np.ndarray


def initial_sphere_positions(n: int, d: int, r_sphere: float, spacing: float = 2.5) -> np.ndarray:
    """Admissible starting layout: lattice sites nearest the origin.

    Triangular lattice in d=2, cubic in d=3, scaled to ``spacing * r_sphere``
    between neighbours and recentred.
    """
    if d == 2:
        a = spacing * r_sphere
        sites = []
        k = 1
        while len(sites) < 4 * n + 8:
            sites = [
                (a * (i + 0.5 * j), a * (math.sqrt(3.0) / 2.0) * j)
                for i in range(-k, k + 1)
                for j in range(-k, k + 1)
            ]
            k += 1
    elif d == 3:
        a = spacing * r_sphere
        sites = []
        k = 1
        while len(sites) < 4 * n + 8:
            sites = [
                (a * i, a * j, a * l)
                for i in range(-k, k + 1)
                for j in range(-k, k + 1)
                for l in range(-k, k + 1)
            ]
            k += 1
    else:
        raise ValueError("initial layouts implemented for d in {2, 3}")
    sites = sorted(sites, key=lambda p: sum(c * c for c in p))[:n]
    pos = np.asarray(sites, dtype=np.float64)
    return pos - pos.mean(axis=0)


def _run_chain(
    pos: np.ndarray,
    params: ModelParams,
    psi_spec: PotentialSpec,
    mcmc: MCMCParams,
    z: float,
    gen: np.random.Generator,
    bath: Optional[np.ndarray] = None,
    bath_kwargs: Optional[dict] = None,
    track_best: bool = False,
    hop_fraction: float = 0.0,
    hop_sigma: float = 0.0,
):
    """Shared Metropolis loop; optionally refreshes an explicit bath.

    With ``bath_kwargs`` the chain alternates bath resampling (exact thinned
    Poisson conditional) with exclusion-constrained sphere sweeps; otherwise
    the induced pairwise energy drives the acceptance ratio.
    """
    n, d = pos.shape
    contact = 2.0 * params.r_sphere
    r_dep = params.r_depletion
    kappa = psi_spec.effective_slope
    hinge_r = psi_spec.hinge_radius
    bulk_energy = n * v_unit_ball(d) * r_dep**d
    scale = mcmc.proposal_sigma
    accepted = np.zeros(mcmc.n_sweeps, dtype=np.int64)
    configs: List[Configuration] = []
    energies: List[float] = []
    psis: List[float] = []
    window_acc = 0
    best_pos = None
    best_energy = math.inf
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for sweep in range(mcmc.n_sweeps):
            if bath_kwargs is not None and sweep % bath_kwargs["refresh_every"] == 0:
                bath = sample_bath_given_spheres(
                    pos,
                    params,
                    bath_kwargs["window_radius"],
                    seed=None,
                    gen=gen,
                    psi_particle=bath_kwargs["psi_particle"],
                    z=z,
                )
            prop = normals(gen, (n, d)) * scale
            if hop_fraction > 0.0:
                hop = gen.random(n) < hop_fraction
                prop[hop] *= hop_sigma / scale
            logu = log_uniforms(gen, (n,))
            if bath is None:
                acc = kernels.mh_sweep_depletion(
                    pos, z, r_dep, contact, kappa, hinge_r, prop, logu
                )
            else:
                acc = kernels.mh_sweep_bath(
                    pos, bath, contact, r_dep, kappa, hinge_r, prop, logu
                )
            accepted[sweep] = acc
            window_acc += acc
            if (sweep + 1) % mcmc.adapt_window == 0 and sweep < mcmc.burn_in:
                rate = window_acc / (n * mcmc.adapt_window)
                if window_acc == 0:
                    scale *= 0.5
                elif mcmc.adapt:
                    scale *= math.exp(0.5 * (rate - mcmc.target_acceptance))
                if scale < _MIN_PROPOSAL_FACTOR * params.r_sphere:
                    raise RuntimeError("proposal scale underflow: no accepted move")
                window_acc = 0
            retain = sweep >= mcmc.burn_in and (sweep - mcmc.burn_in) % mcmc.thinning == 0
            if retain or track_best:
                e = bulk_energy - kernels.overlap_energy_sum(pos, r_dep, d)
                if retain:
                    if bath is None:
                        configs.append(Configuration(spheres=pos.copy(), particles=np.empty((0, d))))
                    else:
                        configs.append(Configuration(spheres=pos.copy(), particles=bath.copy()))
                    energies.append(e)
                    psis.append(
                        float(
                            np.sum(
                                hinge(kappa * (np.linalg.norm(pos, axis=1) - hinge_r))
                            )
                        )
                        + n * psi_spec.normalization
                    )
                if track_best and e < best_energy:
                    best_energy = e
                    best_pos = pos.copy()
    result = ChainResult(
        configs=configs,
        energies=np.asarray(energies),
        psi_totals=np.asarray(psis),
        accepted_per_sweep=accepted,
        proposal_sigma_final=scale,
    )
    return (result, best_pos, best_energy) if track_best else result


def sample_hard_spheres(
    n: int,
    params: ModelParams,
    psi_spec: PotentialSpec,
    mcmc: MCMCParams,
    z: Optional[float] = None,
    seed: int = 0,
    initial: Optional[np.ndarray] = None,
    hop_fraction: float = 0.0,
    hop_sigma: Optional[float] = None,
) -> ChainResult:
    """Metropolis sampler for the projected hard-sphere measure.

    Stationary density ~ exp(-z E) 1_admissible prod exp(-psi); single-sphere
    Gaussian displacement proposals whose acceptance ratio uses only the
    energy terms of the moved sphere.  ``hop_fraction`` optionally mixes in
    large-scale displacements (scale ``hop_sigma``, default 1.5 r_sphere);
    the mixture is symmetric, so the target is unchanged.  Deterministic
    per seed.
    """
    zz = params.z_dot if z is None else z
    rho2, _ = rho_thresholds(params.d)
    if params.rho > rho2:
        warnings.warn(
            f"rho={params.rho:.4f} exceeds the pairwise threshold {rho2:.4f}; "
            "the sampled energy is the pairwise approximation"
        )
    gen = make_generator(seed)
    pos = (
        np.array(initial, dtype=np.float64, order="C", copy=True)
        if initial is not None
        else initial_sphere_positions(n, params.d, params.r_sphere)
    )
    return _run_chain(
        pos, params, psi_spec, mcmc, zz, gen,
        hop_fraction=hop_fraction,
        hop_sigma=hop_sigma if hop_sigma is not None else 1.5 * params.r_sphere,
    )


def sample_bath_given_spheres(
    spheres,
    params: ModelParams,
    window_radius: float,
    seed: Optional[int] = 0,
    psi_particle: Optional[PotentialSpec] = None,
    z: Optional[float] = None,
    gen: Optional[np.random.Generator] = None,
) -> np.ndarray:
    """Exact bath conditional: thinned Poisson process around the spheres.

    Draws Poisson(z * volume of the ball window) uniform points, keeps each
    with probability exp(-psi_particle) (1 inside the confinement ball) and
    rejects points in any depletion ball.  The retained set together with
    the spheres is admissible.
    """
    sph = np.asarray(spheres, dtype=np.float64)
    d = params.d if sph.size == 0 else sph.shape[1]
    zz = params.z_dot if z is None else z
    if gen is None:
        gen = make_generator(seed if seed is not None else 0)
    vol = v_unit_ball(d) * window_radius**d
    count = int(gen.poisson(zz * vol))
    if count == 0:
        return np.empty((0, d))
    g = normals(gen, (count, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = window_radius * gen.random(count) ** (1.0 / d)
    pts = g * radii[:, None]
    keep = np.ones(count, dtype=bool)
    if psi_particle is not None:
        a = psi_particle.effective_slope
        vals = hinge(a * (np.linalg.norm(pts, axis=1) - psi_particle.hinge_radius))
        keep &= gen.random(count) < np.exp(-np.asarray(vals))
    if sph.size:
        diff = pts[:, None, :] - sph[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        keep &= np.min(dist2, axis=1) >= params.r_depletion**2
    return np.ascontiguousarray(pts[keep])


def bath_window_radius(particle_spec: PotentialSpec) -> float:
    """Radius beyond which the thinning weight exp(-psi_R) is negligible."""
    a = particle_spec.effective_slope
    return particle_spec.hinge_radius + (35.0 / a if a > 0 else 0.0)


def sample_two_type(
    n: int,
    params: ModelParams,
    psi_pair,
    R: float,
    mcmc: MCMCParams,
    seed: int = 0,
    initial: Optional[np.ndarray] = None,
    sweeps_per_bath: int = 1,
) -> ChainResult:
    """Gibbs sampler for the joint sphere/particle equilibrium measure.

    Alternates exact bath resampling (``sample_bath_given_spheres`` with the
    particle-confinement thinning) with Metropolis sphere sweeps under the
    bath-exclusion constraint and the sphere confinement.  The sphere
    marginal matches the projected measure when the depletion shells stay
    inside the confinement ball.
    """
    sphere_spec, particle_spec = psi_pair
    if particle_spec.hinge_radius != R:
        particle_spec = PotentialSpec.particle(params.d, R, particle_spec.slope)
    gen = make_generator(seed)
    pos = (
        np.array(initial, dtype=np.float64, order="C", copy=True)
        if initial is not None
        else initial_sphere_positions(n, params.d, params.r_sphere)
    )
    bath_kwargs = {
        "window_radius": bath_window_radius(particle_spec),
        "psi_particle": particle_spec,
        "refresh_every": max(1, sweeps_per_bath),
    }
    return _run_chain(
        pos, params, sphere_spec, mcmc, params.z_dot, gen,
        bath=np.empty((0, params.d)), bath_kwargs=bath_kwargs,
    )


def default_anneal_psi(params: ModelParams) -> PotentialSpec:
    """Weak confinement for annealing, hinged at the origin.

    Prevents cluster drift without biasing internal geometry.  The planar
    slope 0.1 / r_sphere is too weak in d=3, where the accessible volume
    grows fast enough that clusters fail to nucleate; there the slope is
    1 / r_sphere (still far below the contact forces at annealing
    activities).
    """
    slope = 0.1 if params.d == 2 else 1.0
    return PotentialSpec.sphere(params.d, 0.0, slope / params.r_sphere, normalize=False)


def anneal_packing(
    n: int,
    params: ModelParams,
    schedule: AnnealSchedule,
    mcmc: MCMCParams,
    seed: int = 0,
    psi_spec: Optional[PotentialSpec] = None,
) -> AnnealResult:
    """Anneal the activity upward and return the best configuration found.

    Each level runs the hard-sphere sampler at fixed activity, warm-started
    from the best-energy state seen so far; the reported contact history is
    the contact number of that running best at tolerance 1e-2.  Reported
    energies are of z E alone; the confinement contribution is returned
    separately.
    """
    if psi_spec is None:
        psi_spec = default_anneal_psi(params)
    z_levels = schedule.levels(params)
    gen = make_generator(seed)
    pos = initial_sphere_positions(n, params.d, params.r_sphere)
    best_pos = pos.copy()
    best_energy = energy_pairwise(pos, params)
    contact_history: List[int] = []
    energy_history: List[float] = []
    scale = mcmc.proposal_sigma
    hop_sigma = schedule.hop_sigma_factor * params.r_sphere
    for z in z_levels:
        level_mcmc = MCMCParams(
            proposal_sigma=scale,
            n_sweeps=schedule.sweeps_per_level,
            burn_in=max(1, schedule.sweeps_per_level // 2),
            thinning=schedule.sweeps_per_level,
            adapt=mcmc.adapt,
            target_acceptance=mcmc.target_acceptance,
            adapt_window=mcmc.adapt_window,
        )
        result, lvl_pos, lvl_energy = _run_chain(
            pos, params, psi_spec, level_mcmc, float(z), gen, track_best=True,
            hop_fraction=schedule.hop_fraction, hop_sigma=hop_sigma,
        )
        scale = result.proposal_sigma_final
        if lvl_energy < best_energy:
            best_energy = lvl_energy
            best_pos = lvl_pos.copy()
        pos = best_pos.copy()
        contact_history.append(contact_number(best_pos, params, EPS_CONTACT_ANNEAL))
        energy_history.append(best_energy)
    kappa = psi_spec.effective_slope
    psi_total = float(
        np.sum(hinge(kappa * (np.linalg.norm(best_pos, axis=1) - psi_spec.hinge_radius)))
    )
    return AnnealResult(
        best=Configuration(spheres=best_pos, particles=np.empty((0, params.d))),
        best_energy=best_energy,
        best_psi_total=psi_total,
        contact_history=contact_history,
        energy_history=energy_history,
        z_levels=z_levels,
    )


def default_eta(params: ModelParams) -> float:
    """Concentration-window default: a tenth of one contact's energy gain."""
    return 0.1 * OverlapPotential.from_params(params).max_value()


def concentration_estimate(
    n: int,
    params: ModelParams,
    z_list: Sequence[float],
    eta: float,
    mcmc: MCMCParams,
    seed: int = 0,
    psi_spec: Optional[PotentialSpec] = None,
) -> np.ndarray:
    """Per-activity mass of the near-minimal-energy set.

    For each activity, the fraction of post-burn-in samples with
    E <= E_min + eta, E_min from the exact contact-number constants.
    Chains are warm-started from the previous activity's final state so the
    high-activity chains equilibrate within the sweep budget; hop proposals
    keep unbound spheres searching when the adapted scale is small.
    """
    if psi_spec is None:
        psi_spec = default_anneal_psi(params)
    e_min = minimal_energy(n, params)
    fractions = []
    initial = None
    for level, z in enumerate(z_list):
        result = sample_hard_spheres(
            n, params, psi_spec, mcmc, z=float(z), seed=seed + level,
            initial=initial, hop_fraction=0.15,
        )
        initial = result.configs[-1].spheres
        fractions.append(float(np.mean(result.energies <= e_min + eta)))
    return np.asarray(fractions)
