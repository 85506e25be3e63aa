"""Post-hoc estimators and diagnostics over trajectory and sample streams."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .core import Configuration, ModelParams
from .geometry import energy_pairwise

__all__ = [
    "Histogram",
    "pair_distance_histogram",
    "ks_statistic",
    "modulus_of_continuity",
    "energy_trace",
    "integrated_autocorr_time",
    "effective_sample_size",
    "default_bin_edges",
]


@dataclass(frozen=True)
class Histogram:
    """Counts over strictly increasing bin edges; values outside are dropped."""

    bin_edges: np.ndarray
    counts: np.ndarray
    total: int

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("bin edges must be strictly increasing with >= 2 entries")
        if counts.shape != (edges.size - 1,) or np.any(counts < 0):
            raise ValueError("counts must be non-negative with one entry per bin")
        if int(np.sum(counts)) != self.total:
            raise ValueError("counts must sum to total")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @classmethod
    def from_samples(cls, values, bin_edges) -> "Histogram":
        edges = np.asarray(bin_edges, dtype=np.float64)
        counts, _ = np.histogram(np.asarray(values, dtype=np.float64), bins=edges)
        return cls(bin_edges=edges, counts=counts.astype(np.int64), total=int(counts.sum()))

    def rebin(self, factor: int) -> "Histogram":
        """Merge ``factor`` adjacent bins; factor must divide the bin count."""
        nb = self.counts.size
        if factor < 1 or nb % factor != 0:
            raise ValueError("factor must divide the number of bins")
        counts = self.counts.reshape(nb // factor, factor).sum(axis=1)
        return Histogram(self.bin_edges[::factor], counts, self.total)

    def cdf(self) -> np.ndarray:
        if self.total == 0:
            return np.zeros_like(self.counts, dtype=np.float64)
        return np.cumsum(self.counts) / self.total


def default_bin_edges(params: ModelParams, r_max: float, width: float | None = None) -> np.ndarray:
    """Pair-distance bins resolving the depletion well.

    Default width (2 r_dep - 2 r_sphere) / 50 from hard contact out to r_max.
    """
    if width is None:
        width = 2.0 * (params.r_depletion - params.r_sphere) / 50.0
    lo = 2.0 * params.r_sphere * (1.0 - 1e-9)
    n_bins = max(1, int(np.ceil((r_max - lo) / width)))
    return lo + width * np.arange(n_bins + 1)


def _spheres_of(item) -> np.ndarray:
    if isinstance(item, Configuration):
        return item.spheres
    if hasattr(item, "cfg"):
        return item.cfg.spheres
    return np.asarray(item, dtype=np.float64)


def pair_distance_histogram(stream: Iterable, i: int, j: int, bins) -> Histogram:
    """Histogram of |x_i - x_j| over the snapshots of a stream."""
    dists = []
    for item in stream:
        sph = _spheres_of(item)
        n = sph.shape[0]
        if i == j or not (0 <= i < n) or not (0 <= j < n):
            raise ValueError(f"invalid sphere indices ({i}, {j}) for n={n}")
        dists.append(float(np.linalg.norm(sph[i] - sph[j])))
    if not dists:
        raise ValueError("empty stream")
    dists = np.asarray(dists)
    if np.isscalar(bins) or np.ndim(bins) == 0:
        edges = np.linspace(dists.min(), max(dists.max(), dists.min() + 1e-12), int(bins) + 1)
    else:
        edges = np.asarray(bins, dtype=np.float64)
    return Histogram.from_samples(dists, edges)


def ks_statistic(h1: Histogram, h2: Histogram) -> float:
    """Max absolute difference of the normalized cumulative counts."""
    if h1.bin_edges.shape != h2.bin_edges.shape or not np.array_equal(h1.bin_edges, h2.bin_edges):
        raise ValueError("histograms must share identical bin edges")
    return float(np.max(np.abs(h1.cdf() - h2.cdf())))


def modulus_of_continuity(path, dt: float, delta: float) -> float:
    """Largest displacement over any time window shorter than ``delta``.

    ``path`` is sampled on a uniform grid of spacing ``dt``; windows are the
    grid pairs with |t - s| < delta, so ``delta`` must exceed the grid
    resolution.
    """
    x = np.asarray(path, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    if dt <= 0 or delta <= dt:
        raise ValueError("delta must exceed the grid spacing dt")
    max_off = min(int(np.ceil(delta / dt)) - 1, x.shape[0] - 1)
    w = 0.0
    for off in range(1, max_off + 1):
        diff = x[off:] - x[:-off]
        if diff.size:
            w = max(w, float(np.sqrt(np.max(np.einsum("ij,ij->i", diff, diff)))))
    return w


def energy_trace(stream: Iterable, params: ModelParams) -> np.ndarray:
    """Pairwise configuration energy per snapshot."""
    return np.asarray([energy_pairwise(_spheres_of(item), params) for item in stream])


def integrated_autocorr_time(x) -> float:
    """Integrated autocorrelation time by the initial-positive-sequence rule.

    tau = 1/2 + sum of consecutive autocorrelation pairs while positive, so
    the effective sample size is N / (2 tau).  Returns 1/2 for white noise.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    if n < 4:
        return 0.5
    x = x - x.mean()
    if np.allclose(x, 0.0):
        return 0.5
    nfft = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, nfft)
    acov = np.fft.irfft(f * np.conj(f), nfft)[:n] / n
    rho = acov / acov[0]
    tau = 0.5
    k = 1
    while k + 1 < n:
        pair = rho[k] + rho[k + 1]
        if pair <= 0:
            break
        tau += pair
        k += 2
    return float(tau)


def effective_sample_size(x) -> float:
    """N / (2 tau_int), with tau_int from the initial positive sequence."""
    x = np.asarray(x, dtype=np.float64)
    return x.size / (2.0 * integrated_autocorr_time(x))
