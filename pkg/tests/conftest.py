import math

import numpy as np
import pytest

from depsim import ModelParams
from depsim.rng import make_generator

ROOT3 = math.sqrt(3.0)

# max-contact triangular-lattice clusters (unit radius, side 2), n = 2..7
HEX_CLUSTERS = {
    2: [(0.0, 0.0), (2.0, 0.0)],
    3: [(0.0, 0.0), (2.0, 0.0), (1.0, ROOT3)],
    4: [(0.0, 0.0), (2.0, 0.0), (1.0, ROOT3), (3.0, ROOT3)],
    5: [(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (1.0, ROOT3), (3.0, ROOT3)],
    6: [(0.0, 0.0), (2.0, 0.0), (4.0, 0.0), (1.0, ROOT3), (3.0, ROOT3), (2.0, 2 * ROOT3)],
    7: [(0.0, 0.0)] + [(2 * math.cos(k * math.pi / 3), 2 * math.sin(k * math.pi / 3)) for k in range(6)],
}


def hex_cluster(n: int, r_sphere: float = 1.0) -> np.ndarray:
    return np.asarray(HEX_CLUSTERS[n], dtype=np.float64) * r_sphere


def random_admissible_spheres(
    gen: np.random.Generator,
    n: int,
    params: ModelParams,
    box: float | None = None,
    avoid_tangency: float = 0.0,
) -> np.ndarray:
    """Rejection-sample admissible sphere centres in [-box, box]^d.

    The default box targets packing fraction ~0.2 so rejection stays cheap
    for every n.  ``avoid_tangency`` additionally keeps every pair distance
    away from the depletion tangency 2 r_dep (finite differences are
    one-sided there).
    """
    d = params.d
    if box is None:
        vol = n * math.pi ** (d / 2) / math.gamma(d / 2 + 1)
        box = max(2.5, 0.5 * (vol / 0.2) ** (1.0 / d))
    two_rs = 2.0 * params.r_sphere
    two_rd = 2.0 * params.r_depletion
    while True:
        pts = gen.uniform(-box * params.r_sphere, box * params.r_sphere, size=(n, d))
        diff = pts[:, None, :] - pts[None, :, :]
        dist = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
        iu = np.triu_indices(n, k=1)
        pd = dist[iu]
        if np.all(pd >= two_rs) and np.all(np.abs(pd - two_rd) > avoid_tangency):
            return pts


@pytest.fixture
def gen():
    return make_generator(20250811)
