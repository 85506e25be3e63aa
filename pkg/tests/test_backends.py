"""Cross-checks between the compiled kernels and the numpy fallback.

Both backends implement the same arithmetic in the same order, so states
agree bit for bit on single calls and short runs.
"""

import numpy as np
import pytest

from depsim import _kernels_py as kpy
from depsim.rng import log_uniforms, make_generator, normals

kc = pytest.importorskip("depsim._kernels")


def _random_state(gen, n, m, d, spread=3.0):
    sph = gen.uniform(-spread, spread, size=(n, d))
    par = gen.uniform(-spread, spread, size=(m, d))
    return np.ascontiguousarray(sph), np.ascontiguousarray(par)


@pytest.mark.parametrize("d", [2, 3])
def test_energy_and_gradient_agree(d):
    gen = make_generator(1)
    for _ in range(20):
        sph, _ = _random_state(gen, 6, 0, d)
        assert kc.overlap_energy_sum(sph, 1.1, d) == kpy.overlap_energy_sum(sph, 1.1, d)
        out_c = np.zeros_like(sph)
        out_p = np.zeros_like(sph)
        kc.overlap_gradient(sph, 1.1, d, out_c)
        kpy.overlap_gradient(sph, 1.1, d, out_p)
        assert np.array_equal(out_c, out_p)


@pytest.mark.parametrize("d", [2, 3])
def test_projection_agrees_bitwise(d):
    gen = make_generator(2)
    for _ in range(10):
        sph_c, par_c = _random_state(gen, 4, 30, d, spread=2.5)
        sph_p, par_p = sph_c.copy(), par_c.copy()
        Lc = np.zeros((4, 4))
        Lp = np.zeros((4, 4))
        ec = np.zeros((4, 30))
        ep = np.zeros((4, 30))
        rc = kc.project_contacts(sph_c, par_c, 2.0, 1.1, 1.0, 1.5, 100, Lc, ec)
        rp = kpy.project_contacts(sph_p, par_p, 2.0, 1.1, 1.0, 1.5, 100, Lp, ep)
        assert rc == rp
        assert np.array_equal(sph_c, sph_p)
        assert np.array_equal(par_c, par_p)
        assert np.array_equal(Lc, Lp)
        assert np.array_equal(ec, ep)


@pytest.mark.parametrize("d", [2, 3])
def test_mh_sweeps_agree_bitwise(d):
    gen = make_generator(3)
    sph_c, par_c = _random_state(gen, 5, 40, d, spread=4.0)
    # resolve any initial overlaps first
    kc.project_contacts(sph_c, par_c, 2.0, 1.1, 1.0, 1.0, 100,
                        np.zeros((5, 5)), np.zeros((5, 40)))
    sph_p, par_p = sph_c.copy(), par_c.copy()
    for sweep in range(50):
        prop = normals(gen, (5, d)) * 0.3
        logu = log_uniforms(gen, (5,))
        ac = kc.mh_sweep_depletion(sph_c, 8.0, 1.1, 2.0, 1.0, 0.0, prop, logu)
        ap = kpy.mh_sweep_depletion(sph_p, 8.0, 1.1, 2.0, 1.0, 0.0, prop, logu)
        assert ac == ap
        assert np.array_equal(sph_c, sph_p)
    for sweep in range(50):
        prop = normals(gen, (5, d)) * 0.2
        logu = log_uniforms(gen, (5,))
        ac = kc.mh_sweep_bath(sph_c, par_c, 2.0, 1.1, 1.0, 0.0, prop, logu)
        ap = kpy.mh_sweep_bath(sph_p, par_p, 2.0, 1.1, 1.0, 0.0, prop, logu)
        assert ac == ap
        assert np.array_equal(sph_c, sph_p)


@pytest.mark.parametrize("d", [2, 3])
def test_chunk_runs_agree_bitwise(d):
    gen = make_generator(4)
    sph_c, par_c = _random_state(gen, 3, 25, d, spread=2.0)
    kc.project_contacts(sph_c, par_c, 2.0, 1.1, 1.0, 1.0, 100,
                        np.zeros((3, 3)), np.zeros((3, 25)))
    sph_p, par_p = sph_c.copy(), par_c.copy()

    noise = normals(gen, (200, 3, d))
    Lc = np.zeros((3, 3))
    Lp = np.zeros((3, 3))
    pos_c = sph_c.copy()
    pos_p = sph_p.copy()
    rc = kc.run_depletion_chunk(pos_c, Lc, noise, 4e-4, 1.0, 10.0, 1.1, 2.0, 1.0, 0.0, 100)
    rp = kpy.run_depletion_chunk(pos_p, Lp, noise, 4e-4, 1.0, 10.0, 1.1, 2.0, 1.0, 0.0, 100)
    assert rc == rp == -1
    assert np.array_equal(pos_c, pos_p)
    assert np.array_equal(Lc, Lp)

    noise_s = normals(gen, (200, 3, d))
    noise_p = normals(gen, (200, 25, d))
    Lc = np.zeros((3, 3))
    Lp = np.zeros((3, 3))
    ec = np.zeros((3, 25))
    ep = np.zeros((3, 25))
    s_c, p_c = sph_c.copy(), par_c.copy()
    s_p, p_p = sph_p.copy(), par_p.copy()
    rc = kc.run_two_type_chunk(s_c, p_c, Lc, ec, noise_s, noise_p, 4e-4, 1.0, 1.0,
                               0.5, 0.5, 1.0, 3.0, 64.0, 4.0, 2.0, 1.1, 1.0, 100)
    rp = kpy.run_two_type_chunk(s_p, p_p, Lp, ep, noise_s, noise_p, 4e-4, 1.0, 1.0,
                                0.5, 0.5, 1.0, 3.0, 64.0, 4.0, 2.0, 1.1, 1.0, 100)
    assert rc == rp == -1
    assert np.array_equal(s_c, s_p)
    assert np.array_equal(p_c, p_p)
    assert np.array_equal(Lc, Lp)
    assert np.array_equal(ec, ep)
