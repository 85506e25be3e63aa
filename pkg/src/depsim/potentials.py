"""Radial confinement potentials for spheres and particles.

Both potentials are built from one C^1 hinge profile

    phi(t) = 0 for t <= 0,   t^2/4 on [0, 2],   t - 1 for t >= 2,

applied to the distance from the origin:

    sphere confinement    psi(x) = a + phi(kappa (|x| - hinge_radius))
    particle confinement  psi(x) = phi(kappa R^{d+1} (|x| - R))

The sphere normalization constant a makes exp(-psi) integrate to one, so it
defines a reference probability measure with finite second moment.  The
particle potential vanishes on the ball of radius R and its slope grows
like R^{d+1}, confining the finite bath near that ball.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.integrate import quad

from .geometry import v_unit_ball

__all__ = ["hinge", "hinge_prime", "PotentialSpec", "psi_value_and_grad", "sphere_psi_normalization"]


def hinge(t):
    """C^1 hinge profile: 0, then t^2/4, then t - 1."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t <= 0.0, 0.0, np.where(t <= 2.0, 0.25 * t * t, t - 1.0))
    return float(out) if out.ndim == 0 else out


def hinge_prime(t):
    """Derivative of the hinge profile, bounded by 1."""
    t = np.asarray(t, dtype=np.float64)
    out = np.where(t <= 0.0, 0.0, np.where(t <= 2.0, 0.5 * t, 1.0))
    return float(out) if out.ndim == 0 else out


def sphere_psi_normalization(d: int, hinge_radius: float, slope: float) -> float:
    """Constant a with integral of exp(-a - phi(slope (|x| - hinge_radius))) equal to 1.

    Computed by one-dimensional radial quadrature: the integral over R^d is
    S_{d-1} int_0^inf r^{d-1} exp(-phi(slope (r - hinge_radius))) dr with
    S_{d-1} = d v_d the unit-sphere surface area.
    """
    if slope <= 0:
        raise ValueError("normalization requires a positive slope")
    surface = d * v_unit_ball(d)

    def integrand(r):
        return r ** (d - 1) * math.exp(-hinge(slope * (r - hinge_radius)))

    # linear tail beyond hinge_radius + 2/slope; split at the profile breaks
    breaks = [hinge_radius, hinge_radius + 2.0 / slope]
    upper = hinge_radius + 2.0 / slope + 80.0 / slope + 80.0 * d / slope
    pts = [b for b in breaks if 0.0 < b < upper]
    total, _ = quad(integrand, 0.0, upper, points=pts, limit=200, epsabs=1e-13, epsrel=1e-12)
    return math.log(surface * total)


@dataclass(frozen=True)
class PotentialSpec:
    """Parametrized radial confinement potential.

    ``kind`` is "sphere" or "particle".  For spheres the effective slope is
    ``slope`` and the stored normalization constant shifts values so that
    exp(-psi) is a probability density.  For particles the effective slope
    is ``slope * hinge_radius^{d+1}`` and the potential vanishes inside the
    hinge radius R.
    """

    kind: str
    hinge_radius: float
    slope: float
    d: int
    normalization: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sphere", "particle"):
            raise ValueError("kind must be 'sphere' or 'particle'")
        if self.hinge_radius < 0 or self.slope < 0:
            raise ValueError("hinge_radius and slope must be non-negative")

    @classmethod
    def sphere(cls, d: int, hinge_radius: float, slope: float, normalize: bool = True) -> "PotentialSpec":
        a = sphere_psi_normalization(d, hinge_radius, slope) if (normalize and slope > 0) else 0.0
        return cls(kind="sphere", hinge_radius=hinge_radius, slope=slope, d=d, normalization=a)

    @classmethod
    def particle(cls, d: int, radius: float, slope: float = 1.0) -> "PotentialSpec":
        if radius <= 0:
            raise ValueError("particle confinement radius must be positive")
        return cls(kind="particle", hinge_radius=radius, slope=slope, d=d)

    @property
    def effective_slope(self) -> float:
        """Coefficient multiplying (|x| - hinge_radius) inside the profile."""
        if self.kind == "sphere":
            return self.slope
        return self.slope * self.hinge_radius ** (self.d + 1)


def psi_value_and_grad(spec: PotentialSpec, x) -> Tuple[float, np.ndarray]:
    """Potential value and gradient at a point; gradient is 0 at the origin.

    psi(x) = offset + phi(A (|x| - r0)) with A the effective slope, so the
    gradient A phi'(A (|x| - r0)) x/|x| is bounded by A.
    """
    x = np.asarray(x, dtype=np.float64)
    r = float(np.linalg.norm(x))
    a = spec.effective_slope
    t = a * (r - spec.hinge_radius)
    val = float(hinge(t)) + spec.normalization
    if r == 0.0 or a == 0.0:
        return val, np.zeros_like(x)
    grad = (a * float(hinge_prime(t)) / r) * x
    return val, grad
