"""Depletion overlap potentials, interaction terms, and configuration energy.

The induced energy of a hard-sphere configuration is the volume of the
union of depletion balls of radius ``r_depletion`` around the centres.  For
size ratios rho <= rho2 it reduces exactly to single-ball volumes minus
pairwise overlap volumes; the pairwise overlap has closed forms in d = 2
and d = 3 and an integral form in general dimension.

Distances enter through the rescaled argument u = |x_i - x_j| / (2 r_dep):
depletion balls overlap iff u < 1 and hard contact sits at u = 1/(1+rho).
The closed forms are evaluated on all of [0, 1] (and 0 beyond); arguments
below the hard-contact point only arise in oracle checks with overlapping
or coincident balls, never from admissible configurations.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .backend import kernels
from .core import ModelParams, known_contact_values_3d, max_contact_number_2d
from .rng import make_generator

__all__ = [
    "v_unit_ball",
    "overlap_closed_2d",
    "overlap_closed_3d",
    "overlap_derivative",
    "overlap_quadrature",
    "OverlapPotential",
    "rho_thresholds",
    "three_body_2d",
    "energy_pairwise",
    "energy_gradient",
    "monte_carlo_union_volume",
    "minimal_energy",
    "asymptotic_minimal_energy",
    "EnergyModel",
]


def v_unit_ball(d: int) -> float:
    """Volume of the unit ball in R^d: pi^(d/2) / Gamma(d/2 + 1)."""
    if d < 1:
        raise ValueError("d must be at least 1")
    return math.pi ** (d / 2.0) / math.gamma(d / 2.0 + 1.0)


def overlap_closed_2d(u, r_dep: float = 1.0):
    """Overlap area of two discs of radius r_dep at centre distance 2*r_dep*u.

    2 r_dep^2 (arccos u - u sqrt(1 - u^2)) on [0, 1], zero beyond.
    """
    u = np.asarray(u, dtype=np.float64)
    uc = np.clip(u, 0.0, 1.0)
    val = 2.0 * r_dep * r_dep * (np.arccos(uc) - uc * np.sqrt(1.0 - uc * uc))
    out = np.where(u >= 1.0, 0.0, val)
    return float(out) if out.ndim == 0 else out


def overlap_closed_3d(u, r_dep: float = 1.0):
    """Overlap volume of two balls of radius r_dep at centre distance 2*r_dep*u.

    (4 pi / 3) r_dep^3 (1 - u)^2 (1 + u/2) on [0, 1], zero beyond.
    """
    u = np.asarray(u, dtype=np.float64)
    uc = np.clip(u, 0.0, 1.0)
    val = (4.0 * math.pi / 3.0) * r_dep**3 * (1.0 - uc) ** 2 * (1.0 + 0.5 * uc)
    out = np.where(u >= 1.0, 0.0, val)
    return float(out) if out.ndim == 0 else out


def overlap_derivative(u, d: int, r_dep: float = 1.0):
    """One-sided derivative of the overlap volume in u.

    -2 v_{d-1} r_dep^d (1 - u^2)^{(d-1)/2} for u in [0, 1); exactly 0 for
    u >= 1 (the overlap is C^1 at tangency).
    """
    u = np.asarray(u, dtype=np.float64)
    uc = np.clip(u, 0.0, 1.0)
    base = 1.0 - uc * uc
    val = -2.0 * v_unit_ball(d - 1) * r_dep**d * base ** ((d - 1) / 2.0)
    out = np.where(u >= 1.0, 0.0, val)
    return float(out) if out.ndim == 0 else out


def _gauss_legendre_cache():
    cache = {}

    def nodes(k: int):
        if k not in cache:
            cache[k] = np.polynomial.legendre.leggauss(k)
        return cache[k]

    return nodes

_gl_nodes = _gauss_legendre_cache()


def _integrate_sin_pow(a: float, b: float, d: int, tol: float) -> float:
    """Adaptive integral of sin^d(theta) on [a, b] to absolute tolerance.

    Compares embedded 32- and 64-node Gauss-Legendre estimates, bisecting
    where they disagree; the integrand is smooth, so the 64-node rule is
    essentially exact and refinement is a safety net.
    """
    x32, w32 = _gl_nodes(32)
    x64, w64 = _gl_nodes(64)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    f32 = np.sin(mid + half * x32) ** d
    f64 = np.sin(mid + half * x64) ** d
    i32 = half * float(np.dot(w32, f32))
    i64 = half * float(np.dot(w64, f64))
    if abs(i64 - i32) <= tol or (b - a) < 1e-12:
        return i64
    return _integrate_sin_pow(a, mid, d, 0.5 * tol) + _integrate_sin_pow(mid, b, d, 0.5 * tol)


def overlap_quadrature(u, d: int, r_dep: float = 1.0, tol: float = 1e-12):
    """Overlap volume by numerical quadrature of 2 v_{d-1} r^d sin^d on [0, arccos u].

    Independent of the closed forms; absolute tolerance ``tol`` on the
    angular integral.  Zero for u >= 1.
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    scalar = np.isscalar(u) or np.ndim(u) == 0
    uu = np.atleast_1d(np.asarray(u, dtype=np.float64))
    pref = 2.0 * v_unit_ball(d - 1) * r_dep**d
    out = np.zeros_like(uu)
    for idx, ui in enumerate(uu):
        if ui >= 1.0:
            continue
        theta = math.acos(max(ui, 0.0))
        out[idx] = pref * _integrate_sin_pow(0.0, theta, d, tol / max(pref, 1.0))
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class OverlapPotential:
    """Pair overlap volume as a function of u = distance / (2 r_depletion).

    Non-negative, non-increasing, zero from u = 1 on, with maximal value at
    the hard-contact point u = 1/(1+rho).
    """

    d: int
    r_depletion: float
    rho: float

    def value(self, u):
        if self.d == 2:
            return overlap_closed_2d(u, self.r_depletion)
        if self.d == 3:
            return overlap_closed_3d(u, self.r_depletion)
        return overlap_quadrature(u, self.d, self.r_depletion)

    def derivative(self, u):
        return overlap_derivative(u, self.d, self.r_depletion)

    @property
    def u_contact(self) -> float:
        return 1.0 / (1.0 + self.rho)

    def max_value(self) -> float:
        """Overlap at hard contact, evaluated fresh from the closed form."""
        return float(self.value(self.u_contact))

    @classmethod
    def from_params(cls, params: ModelParams) -> "OverlapPotential":
        return cls(d=params.d, r_depletion=params.r_depletion, rho=params.rho)


def rho_thresholds(d: int) -> Tuple[float, float]:
    """Size-ratio thresholds (rho2, rho3) for multi-body interactions.

    Below rho2 = 2 sqrt(3)/3 - 1 the interaction is exactly pairwise in any
    dimension (three depletion shells around mutually touching spheres first
    share a point when the triangle circumradius reaches r_depletion).
    Four-body overlaps require rho above sqrt(2) - 1 in the plane (square of
    touching discs) and above sqrt(3/2) - 1 in dimension >= 3 (regular
    tetrahedron).
    """
    if d < 2:
        raise ValueError("d must be at least 2")
    rho2 = 2.0 * math.sqrt(3.0) / 3.0 - 1.0
    rho3 = math.sqrt(2.0) - 1.0 if d == 2 else math.sqrt(1.5) - 1.0
    return rho2, rho3


def _min_enclosing_radius(p1, p2, p3) -> float:
    pts = [np.asarray(p, dtype=np.float64) for p in (p1, p2, p3)]
    best = math.inf
    for a in range(3):
        for b in range(a + 1, 3):
            c = 3 - a - b
            centre = 0.5 * (pts[a] + pts[b])
            r = 0.5 * float(np.linalg.norm(pts[a] - pts[b]))
            if np.linalg.norm(pts[c] - centre) <= r * (1.0 + 1e-12):
                best = min(best, r)
    if best < math.inf:
        return best
    # acute triangle: circumradius a b c / (4 T)
    la = float(np.linalg.norm(pts[1] - pts[2]))
    lb = float(np.linalg.norm(pts[0] - pts[2]))
    lc = float(np.linalg.norm(pts[0] - pts[1]))
    s = 0.5 * (la + lb + lc)
    area2 = s * (s - la) * (s - lb) * (s - lc)
    return la * lb * lc / (4.0 * math.sqrt(max(area2, 0.0)))


def three_body_2d(x1, x2, x3, r_dep: float) -> float:
    """Area of the common intersection of three discs of radius r_dep.

    Evaluates (1/2)(sum of pairwise overlaps - pi r_dep^2 + 2 T), with T the
    area of the triangle of centres, valid when the triple intersection is
    non-empty; returns 0 when the three discs share no common point.
    Coincident centres are fine (the formula stays exact); collinear centres
    with positive extent fall outside the formula's regime and are rejected.
    """
    p1 = np.asarray(x1, dtype=np.float64)
    p2 = np.asarray(x2, dtype=np.float64)
    p3 = np.asarray(x3, dtype=np.float64)
    if p1.shape != (2,) or p2.shape != (2,) or p3.shape != (2,):
        raise ValueError("three_body_2d expects three points in the plane")
    if _min_enclosing_radius(p1, p2, p3) >= r_dep:
        return 0.0
    a2 = float(np.dot(p1 - p2, p1 - p2))
    b2 = float(np.dot(p1 - p3, p1 - p3))
    c2 = float(np.dot(p2 - p3, p2 - p3))
    extent = max(a2, b2, c2)
    tri2 = max(4.0 * a2 * b2 - (a2 + b2 - c2) ** 2, 0.0)  # (4 T)^2
    scale = max(extent, r_dep * r_dep)
    if extent > 1e-24 * scale and tri2 <= 1e-20 * scale * scale:
        raise ValueError("degenerate collinear centres")
    pair_sum = (
        overlap_closed_2d(math.sqrt(a2) / (2.0 * r_dep), r_dep)
        + overlap_closed_2d(math.sqrt(b2) / (2.0 * r_dep), r_dep)
        + overlap_closed_2d(math.sqrt(c2) / (2.0 * r_dep), r_dep)
    )
    return 0.5 * (pair_sum - math.pi * r_dep * r_dep + 0.5 * math.sqrt(tri2))


def _check_pairwise_regime(params: ModelParams, what: str) -> None:
    rho2, _ = rho_thresholds(params.d)
    if params.rho > rho2:
        warnings.warn(
            f"{what}: size ratio rho={params.rho:.4f} exceeds the pairwise "
            f"threshold {rho2:.4f}; the pairwise energy is only an "
            "approximation of the union volume",
            stacklevel=3,
        )


def energy_pairwise(spheres, params: ModelParams) -> float:
    """Configuration energy n v_d r_dep^d - sum of pairwise overlaps.

    Exact union-of-balls volume for rho <= rho2; beyond that threshold a
    warning flags it as an approximation.
    """
    sph = np.ascontiguousarray(spheres, dtype=np.float64)
    n = sph.shape[0]
    if n == 0:
        return 0.0
    d = sph.shape[1]
    if d != params.d:
        raise ValueError("dimension mismatch")
    _check_pairwise_regime(params, "energy_pairwise")
    r_dep = params.r_depletion
    bulk = n * v_unit_ball(d) * r_dep**d
    if d in (2, 3):
        pair = kernels.overlap_energy_sum(sph, r_dep, d)
    else:
        iu = np.triu_indices(n, k=1)
        diff = sph[:, None, :] - sph[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))[iu]
        pair = float(np.sum(overlap_quadrature(dist / (2.0 * r_dep), d, r_dep)))
    return bulk - pair


def energy_gradient(spheres, params: ModelParams) -> np.ndarray:
    """Gradient of the pairwise energy with respect to each sphere centre.

    Row i equals v_{d-1} r_dep^{d-1} sum_{j != i}
    (1 - |x_i - x_j|^2 / (4 r_dep^2))_+^{(d-1)/2} (x_i - x_j)/|x_i - x_j|:
    the energy grows as overlapping depletion balls separate, so the induced
    force -grad E is attractive.  Coincident centres are rejected.
    """
    sph = np.ascontiguousarray(spheres, dtype=np.float64)
    n, d = sph.shape
    if d != params.d:
        raise ValueError("dimension mismatch")
    r_dep = params.r_depletion
    out = np.zeros_like(sph)
    if n <= 1:
        return out
    if d in (2, 3):
        kernels.overlap_gradient(sph, r_dep, d, out)
        return out
    pref = v_unit_ball(d - 1) * r_dep ** (d - 1)
    four_r2 = 4.0 * r_dep * r_dep
    for i in range(n):
        diff = sph[i] - sph
        dist2 = np.einsum("jk,jk->j", diff, diff)
        dist2[i] = np.inf
        if np.any(dist2 == 0.0):
            raise ValueError("coincident sphere centres")
        base = np.maximum(1.0 - dist2 / four_r2, 0.0)
        w = np.where(base > 0.0, base ** ((d - 1) / 2.0), 0.0)
        with np.errstate(invalid="ignore"):
            out[i] = pref * np.sum((w / np.sqrt(dist2))[:, None] * diff, axis=0)
    return out


def monte_carlo_union_volume(
    spheres, params: ModelParams, samples: int, seed: int
) -> Tuple[float, float]:
    """Hit-or-miss estimate of the union volume of depletion balls.

    Uniform sampling over the tight axis-aligned bounding box of the union;
    returns (estimate, standard error).  Deterministic for a given seed.
    """
    if samples < 10_000:
        raise ValueError("at least 10^4 samples required")
    sph = np.asarray(spheres, dtype=np.float64)
    if sph.size == 0:
        return 0.0, 0.0
    n, d = sph.shape
    r_dep = params.r_depletion
    lo = sph.min(axis=0) - r_dep
    hi = sph.max(axis=0) + r_dep
    box_vol = float(np.prod(hi - lo))
    gen = make_generator(seed)
    hits = 0
    remaining = int(samples)
    r2 = r_dep * r_dep
    while remaining > 0:
        batch = min(remaining, 262_144)
        pts = lo + (hi - lo) * gen.random((batch, d))
        diff = pts[:, None, :] - sph[None, :, :]
        dist2 = np.einsum("ijk,ijk->ij", diff, diff)
        hits += int(np.count_nonzero(np.any(dist2 <= r2, axis=1)))
        remaining -= batch
    p = hits / samples
    est = box_vol * p
    se = box_vol * math.sqrt(p * (1.0 - p) / samples)
    return est, se


def _contact_constant(n: int, d: int) -> int:
    if n < 1:
        raise ValueError("n must be at least 1")
    if n == 1:
        return 0
    if d == 2:
        return max_contact_number_2d(n)
    if d == 3:
        known = known_contact_values_3d(n)
        if known is None:
            raise ValueError(
                f"maximal contact number for n={n} spheres in dimension 3 is "
                "not tabulated (known values cover n = 2..9)"
            )
        return known.value
    raise ValueError("minimal energy requires d in {2, 3}")


def minimal_energy(n: int, params: ModelParams) -> float:
    """Minimal configuration energy n v_d r_dep^d - c(n,d) * max overlap.

    Uses the exact planar contact-number formula in d=2 and the tabulated
    values in d=3 (largest-known counts for n in 6..9, so the result is an
    upper bound on the true minimum there).
    """
    c = _contact_constant(n, params.d)
    pot = OverlapPotential.from_params(params)
    return n * v_unit_ball(params.d) * params.r_depletion ** params.d - c * pot.max_value()


def asymptotic_minimal_energy(n: int, d: int, rho: float, r_sphere: float = 1.0) -> float:
    """Small-rho expansion of the minimal energy.

    d=2: n pi r^2 (1+rho)^2 - c(n,2) (8 sqrt(2)/3) r^2 rho^{3/2}, i.e. the
    exact ball-volume term minus the leading overlap term; the remainder is
    O(rho^{5/2}).  (Expanding the volume term as 1 + 2 rho would leave an
    O(rho^2) remainder instead.)
    d=3: n (4/3) pi r^3 (1 + 3 rho + 3 (1 - c(n,3)/(2n)) rho^2), remainder
    O(rho^3).
    """
    c = _contact_constant(n, d)
    if d == 2:
        vol = n * math.pi * r_sphere**2 * (1.0 + rho) ** 2
        return vol - c * (8.0 * math.sqrt(2.0) / 3.0) * r_sphere**2 * rho**1.5
    if d == 3:
        return (
            n * (4.0 / 3.0) * math.pi * r_sphere**3
            * (1.0 + 3.0 * rho + 3.0 * (1.0 - c / (2.0 * n)) * rho**2)
        )
    raise ValueError("asymptotic minimal energy requires d in {2, 3}")


@dataclass(frozen=True)
class EnergyModel:
    """Configuration-energy evaluator with a selectable body order.

    ``pairwise`` uses the two-body reduction (exact for rho <= rho2);
    ``pairwise-plus-triple`` adds three-body corrections and is offered only
    in d=2; ``monte-carlo`` estimates the union volume directly.
    """

    params: ModelParams
    body_order: str = "pairwise"
    mc_samples: int = 100_000
    mc_seed: int = 0

    _ORDERS = ("pairwise", "pairwise-plus-triple", "monte-carlo")

    def __post_init__(self):
        if self.body_order not in self._ORDERS:
            raise ValueError(f"body_order must be one of {self._ORDERS}")
        if self.body_order == "pairwise-plus-triple" and self.params.d != 2:
            raise ValueError(
                "three-body corrections are only available in d=2; no closed "
                "form is implemented in higher dimension"
            )

    def energy(self, spheres) -> float:
        if self.body_order == "monte-carlo":
            return monte_carlo_union_volume(spheres, self.params, self.mc_samples, self.mc_seed)[0]
        with warnings.catch_warnings():
            if self.body_order == "pairwise-plus-triple":
                warnings.simplefilter("ignore")
            e = energy_pairwise(spheres, self.params)
        if self.body_order == "pairwise-plus-triple":
            sph = np.asarray(spheres, dtype=np.float64)
            n = sph.shape[0]
            r_dep = self.params.r_depletion
            for i in range(n):
                for j in range(i + 1, n):
                    for k in range(j + 1, n):
                        e += three_body_2d(sph[i], sph[j], sph[k], r_dep)
        return e
