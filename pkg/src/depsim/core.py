"""Configurations, model parameters, admissibility, and contact counting.

The model has two body types in R^d: hard spheres of radius ``r_sphere``
(pairwise centre distance at least ``2 r_sphere``) and point-centred
depletant particles of radius ``r_particle`` which may overlap each other
but must keep their centres at distance at least
``r_depletion = r_sphere + r_particle`` from every sphere centre.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "ModelParams",
    "Configuration",
    "ContactGraph",
    "ContactCount",
    "is_admissible",
    "contact_number",
    "contact_graph",
    "max_contact_number_2d",
    "known_contact_values_3d",
    "TOL_OVERLAP",
    "EPS_CONTACT_ANALYTIC",
    "EPS_CONTACT_ANNEAL",
]

#: Relative overlap tolerance accepted from the projection integrator.
TOL_OVERLAP = 1e-9
#: Contact tolerance for analytically constructed configurations.
EPS_CONTACT_ANALYTIC = 1e-6
#: Contact tolerance for stochastic-optimizer outputs.
EPS_CONTACT_ANNEAL = 1e-2


@dataclass(frozen=True)
class ModelParams:
    """Dimension, radii, bath activity and diffusion coefficients.

    ``rho = r_particle / r_sphere`` must lie in [0, 1); the depletion radius
    ``r_depletion = r_sphere * (1 + rho)`` equals ``r_sphere + r_particle``
    exactly.
    """

    d: int
    r_sphere: float
    r_particle: float = 0.0
    z_dot: float = 0.0
    sigma_sphere: float = 1.0
    sigma_particle: float = 1.0

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension d must be an integer >= 2, got {self.d}")
        if not self.r_sphere > 0:
            raise ValueError("r_sphere must be positive")
        if not (0 <= self.r_particle < self.r_sphere):
            raise ValueError(
                "r_particle must satisfy 0 <= r_particle < r_sphere "
                f"(got r_particle={self.r_particle}, r_sphere={self.r_sphere}); "
                "the size ratio must lie in [0, 1)"
            )
        if self.z_dot < 0:
            raise ValueError("bath activity z_dot must be non-negative")
        if not self.sigma_sphere > 0 or not self.sigma_particle > 0:
            raise ValueError("diffusion coefficients must be positive")

    @property
    def rho(self) -> float:
        """Particle-to-sphere size ratio, in [0, 1)."""
        return self.r_particle / self.r_sphere

    @property
    def r_depletion(self) -> float:
        """Exclusion radius for particle centres around a sphere centre."""
        return self.r_sphere + self.r_particle


def _as_points(arr, d: int, what: str) -> np.ndarray:
    a = np.asarray(arr, dtype=np.float64)
    if a.size == 0:
        return a.reshape(0, d)
    if a.ndim != 2 or a.shape[1] != d:
        raise ValueError(f"{what} must be an (n, {d}) array, got shape {a.shape}")
    return a


@dataclass(frozen=True)
class Configuration:
    """Immutable snapshot of sphere and particle centres.

    Bodies are ordered, indexed lists; arrays are copied on construction and
    frozen, so snapshots are safe to share across threads.
    """

    spheres: np.ndarray
    particles: np.ndarray = field(default_factory=lambda: np.empty((0, 0)))

    def __post_init__(self):
        sph = np.array(self.spheres, dtype=np.float64, copy=True)
        if sph.ndim != 2:
            raise ValueError("spheres must be an (n, d) array")
        d = sph.shape[1]
        par = _as_points(self.particles, d, "particles")
        par = np.array(par, dtype=np.float64, copy=True)
        sph.setflags(write=False)
        par.setflags(write=False)
        object.__setattr__(self, "spheres", sph)
        object.__setattr__(self, "particles", par)

    @property
    def n(self) -> int:
        return self.spheres.shape[0]

    @property
    def m(self) -> int:
        return self.particles.shape[0]

    @property
    def d(self) -> int:
        return self.spheres.shape[1]


def _min_cross_gap_ok(sph: np.ndarray, par: np.ndarray, rmin: float) -> bool:
    if sph.shape[0] == 0 or par.shape[0] == 0:
        return True
    diff = sph[:, None, :] - par[None, :, :]
    return bool(np.min(np.einsum("ijk,ijk->ij", diff, diff)) >= rmin * rmin)


def is_admissible(cfg: Configuration, params: ModelParams, tol: float = TOL_OVERLAP) -> bool:
    """True iff no pair constraint is violated beyond the relative tolerance.

    Sphere-sphere gaps must be at least ``2 r_sphere (1 - tol)`` and
    sphere-particle gaps at least ``r_depletion (1 - tol)``.
    """
    if cfg.d != params.d:
        raise ValueError(f"configuration dimension {cfg.d} does not match params.d={params.d}")
    sph = cfg.spheres
    n = sph.shape[0]
    if n > 1:
        rmin = 2.0 * params.r_sphere * (1.0 - tol)
        diff = sph[:, None, :] - sph[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        iu = np.triu_indices(n, k=1)
        if dist2[iu].size and np.min(dist2[iu]) < rmin * rmin:
            return False
    return _min_cross_gap_ok(sph, cfg.particles, params.r_depletion * (1.0 - tol))


def contact_number(spheres, params: ModelParams, eps_c: float = EPS_CONTACT_ANALYTIC) -> int:
    """Number of sphere pairs within ``2 r_sphere (1 + eps_c)`` of each other."""
    sph = np.asarray(spheres, dtype=np.float64)
    n = sph.shape[0]
    if n <= 1:
        return 0
    rmax = 2.0 * params.r_sphere * (1.0 + eps_c)
    diff = sph[:, None, :] - sph[None, :, :]
    dist2 = np.einsum("ijk,ijk->ij", diff, diff)
    iu = np.triu_indices(n, k=1)
    return int(np.count_nonzero(dist2[iu] <= rmax * rmax))


@dataclass(frozen=True)
class ContactGraph:
    """Adjacency structure over sphere centres at contact distance."""

    n: int
    edges: frozenset
    tolerance: float

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def contact_graph(spheres, params: ModelParams, eps_c: float = EPS_CONTACT_ANALYTIC) -> ContactGraph:
    """Build the contact graph of a sphere configuration."""
    sph = np.asarray(spheres, dtype=np.float64)
    n = sph.shape[0]
    rmax = 2.0 * params.r_sphere * (1.0 + eps_c)
    edges = set()
    for i in range(n):
        for j in range(i + 1, n):
            if np.dot(sph[i] - sph[j], sph[i] - sph[j]) <= rmax * rmax:
                edges.add((i, j))
    return ContactGraph(n=n, edges=frozenset(edges), tolerance=eps_c)


def max_contact_number_2d(n: int) -> int:
    """Maximal contact number of n non-overlapping unit discs in the plane.

    Evaluates floor(3n - sqrt(12n - 3)) in exact integer arithmetic.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    m = 12 * n - 3
    s = math.isqrt(m)
    # floor(3n - sqrt(m)): exact when m is a perfect square, else one less.
    return 3 * n - s if s * s == m else 3 * n - s - 1


class ContactCount(NamedTuple):
    value: int
    exact: bool


_KNOWN_3D = {
    2: ContactCount(1, True),
    3: ContactCount(3, True),
    4: ContactCount(6, True),
    5: ContactCount(9, True),
    6: ContactCount(12, False),
    7: ContactCount(15, False),
    8: ContactCount(18, False),
    9: ContactCount(21, False),
}


def known_contact_values_3d(n: int) -> Optional[ContactCount]:
    """Tabulated maximal contact numbers for n spheres in R^3.

    Exact for n in 2..5; for n in 6..9 the value is the largest known count
    and is flagged ``exact=False`` (a lower bound on the true maximum).
    Returns None outside the tabulated range.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    return _KNOWN_3D.get(n)
