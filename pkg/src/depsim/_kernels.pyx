# cython: language_level=3
"""Compiled hot kernels: pairwise overlap energy/gradient, contact
projection, Metropolis sweeps, and chunked integrator loops.

Semantics (including expression shapes and reduction orders) mirror
``_kernels_py.py`` so either backend can be selected at import.
"""

from libc.math cimport acos, sqrt, M_PI

import numpy as np
cimport numpy as cnp

cnp.import_array()

cdef double _VIOL = 1.0 - 1e-13


cdef inline double _v_ovlap(double u, int d, double r_dep) noexcept nogil:
    cdef double omu
    if u >= 1.0:
        return 0.0
    if d == 2:
        return 2.0 * r_dep * r_dep * (acos(u) - u * sqrt(1.0 - u * u))
    omu = 1.0 - u
    return 4.0 * M_PI / 3.0 * (r_dep * r_dep * r_dep) * (omu * omu) * (1.0 + 0.5 * u)


cdef inline double _hinge(double t) noexcept nogil:
    if t <= 0.0:
        return 0.0
    if t <= 2.0:
        return 0.25 * t * t
    return t - 1.0


cdef inline double _hinge_prime(double t) noexcept nogil:
    if t <= 0.0:
        return 0.0
    if t <= 2.0:
        return 0.5 * t
    return 1.0


def overlap_energy_sum(const double[:, ::1] pos, double r_dep, int d):
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t i, j, c
    cdef double total = 0.0
    cdef double inv = 1.0 / (2.0 * r_dep)
    cdef double dist2, t, u
    for i in range(n):
        for j in range(i + 1, n):
            dist2 = 0.0
            for c in range(d):
                t = pos[i, c] - pos[j, c]
                dist2 += t * t
            u = sqrt(dist2) * inv
            if u < 1.0:
                total += _v_ovlap(u, d, r_dep)
    return total


cdef int _overlap_gradient(const double[:, ::1] pos, double r_dep, int d,
                           double[:, ::1] out) noexcept nogil:
    # returns -1 on coincident centres, else 0
    cdef Py_ssize_t n = pos.shape[0]
    cdef Py_ssize_t i, j, c
    cdef double pref = 2.0 * r_dep if d == 2 else M_PI * r_dep * r_dep
    cdef double four_r2 = 4.0 * (r_dep * r_dep)
    cdef double dist2, t, base, w, fac
    for i in range(n):
        for c in range(d):
            out[i, c] = 0.0
        for j in range(n):
            if j == i:
                continue
            dist2 = 0.0
            for c in range(d):
                t = pos[i, c] - pos[j, c]
                dist2 += t * t
            if dist2 >= four_r2:
                continue
            if dist2 == 0.0:
                return -1
            base = 1.0 - dist2 / four_r2
            w = sqrt(base) if d == 2 else base
            fac = pref * w / sqrt(dist2)
            for c in range(d):
                out[i, c] += fac * (pos[i, c] - pos[j, c])
    return 0


def overlap_gradient(const double[:, ::1] pos, double r_dep, int d, double[:, ::1] out):
    if _overlap_gradient(pos, r_dep, d, out) < 0:
        raise ValueError("coincident sphere centres")


cdef inline double _correct_pair(double[:, ::1] A, Py_ssize_t ia,
                                 double[:, ::1] B, Py_ssize_t ib, int d,
                                 double contact, double wa, double wb) noexcept nogil:
    cdef double dist2 = 0.0
    cdef double t, dist, gap, wsum, fa, fb, diff
    cdef Py_ssize_t c
    for c in range(d):
        t = A[ia, c] - B[ib, c]
        dist2 += t * t
    dist = sqrt(dist2)
    gap = contact - dist
    wsum = wa + wb
    fa = wa / wsum * gap / dist
    fb = wb / wsum * gap / dist
    for c in range(d):
        diff = A[ia, c] - B[ib, c]
        A[ia, c] += fa * diff
        B[ib, c] -= fb * diff
    return fa


cdef int _project(double[:, ::1] sph, double[:, ::1] par,
                  double contact_ss, double contact_sp,
                  double w_sphere, double w_particle, int max_sweeps,
                  double[:, ::1] L, double[:, ::1] ell,
                  Py_ssize_t[:, ::1] pair_buf) noexcept nogil:
    cdef Py_ssize_t n = sph.shape[0]
    cdef Py_ssize_t m = par.shape[0]
    cdef int d = <int> sph.shape[1]
    cdef double ss2 = contact_ss * contact_ss * _VIOL
    cdef double sp2 = contact_sp * contact_sp * _VIOL
    cdef Py_ssize_t i, j, k, c, p, n_ss, n_sp
    cdef int sweep
    cdef double dist2, t, dL
    for sweep in range(max_sweeps + 1):
        n_ss = 0
        for i in range(n):
            for j in range(i + 1, n):
                dist2 = 0.0
                for c in range(d):
                    t = sph[i, c] - sph[j, c]
                    dist2 += t * t
                if dist2 < ss2:
                    pair_buf[n_ss, 0] = i
                    pair_buf[n_ss, 1] = j
                    n_ss += 1
        n_sp = n_ss
        for i in range(n):
            for k in range(m):
                dist2 = 0.0
                for c in range(d):
                    t = sph[i, c] - par[k, c]
                    dist2 += t * t
                if dist2 < sp2:
                    pair_buf[n_sp, 0] = i
                    pair_buf[n_sp, 1] = k
                    n_sp += 1
        if n_sp == 0:
            return sweep
        if sweep == max_sweeps:
            return -1
        for p in range(n_ss):
            i = pair_buf[p, 0]
            j = pair_buf[p, 1]
            dist2 = 0.0
            for c in range(d):
                t = sph[i, c] - sph[j, c]
                dist2 += t * t
            if dist2 == 0.0:
                return -1
            if dist2 < ss2:
                dL = _correct_pair(sph, i, sph, j, d, contact_ss, 1.0, 1.0)
                L[i, j] += dL
                L[j, i] += dL
        for p in range(n_ss, n_sp):
            i = pair_buf[p, 0]
            k = pair_buf[p, 1]
            dist2 = 0.0
            for c in range(d):
                t = sph[i, c] - par[k, c]
                dist2 += t * t
            if dist2 == 0.0:
                return -1
            if dist2 < sp2:
                dL = _correct_pair(sph, i, par, k, d, contact_sp, w_sphere, w_particle)
                ell[i, k] += dL
    return -1


def project_contacts(double[:, ::1] sph, double[:, ::1] par,
                     double contact_ss, double contact_sp,
                     double w_sphere, double w_particle, int max_sweeps,
                     double[:, ::1] L, double[:, ::1] ell):
    cdef Py_ssize_t n = sph.shape[0]
    cdef Py_ssize_t m = par.shape[0]
    buf = np.empty((n * (n - 1) // 2 + n * m + 1, 2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] pair_buf = buf
    return _project(sph, par, contact_ss, contact_sp, w_sphere, w_particle,
                    max_sweeps, L, ell, pair_buf)


def mh_sweep_depletion(double[:, ::1] pos, double z, double r_dep, double contact,
                       double kappa, double hinge_r,
                       double[:, ::1] prop, double[::1] logu):
    cdef Py_ssize_t n = pos.shape[0]
    cdef int d = <int> pos.shape[1]
    if d != 2 and d != 3:
        raise ValueError("kernel supports d in {2, 3}")
    cdef double c2 = contact * contact
    cdef double inv = 1.0 / (2.0 * r_dep)
    cdef double new[3]
    cdef Py_ssize_t i, j, c
    cdef int acc = 0
    cdef bint ok
    cdef double dlog, dist2, t, ns, os
    for i in range(n):
        for c in range(d):
            new[c] = pos[i, c] + prop[i, c]
        ok = True
        dlog = 0.0
        for j in range(n):
            if j == i:
                continue
            dist2 = 0.0
            for c in range(d):
                t = new[c] - pos[j, c]
                dist2 += t * t
            if dist2 < c2:
                ok = False
                break
            dlog += z * _v_ovlap(sqrt(dist2) * inv, d, r_dep)
        if not ok:
            continue
        for j in range(n):
            if j == i:
                continue
            dist2 = 0.0
            for c in range(d):
                t = pos[i, c] - pos[j, c]
                dist2 += t * t
            dlog -= z * _v_ovlap(sqrt(dist2) * inv, d, r_dep)
        ns = 0.0
        os = 0.0
        for c in range(d):
            ns += new[c] * new[c]
            os += pos[i, c] * pos[i, c]
        dlog -= _hinge(kappa * (sqrt(ns) - hinge_r)) - _hinge(kappa * (sqrt(os) - hinge_r))
        if logu[i] < dlog:
            for c in range(d):
                pos[i, c] = new[c]
            acc += 1
    return acc


def mh_sweep_bath(double[:, ::1] sph, double[:, ::1] par,
                  double contact_ss, double contact_sp,
                  double kappa, double hinge_r,
                  double[:, ::1] prop, double[::1] logu):
    cdef Py_ssize_t n = sph.shape[0]
    cdef Py_ssize_t m = par.shape[0]
    cdef int d = <int> sph.shape[1]
    if d != 2 and d != 3:
        raise ValueError("kernel supports d in {2, 3}")
    cdef double ss2 = contact_ss * contact_ss
    cdef double sp2 = contact_sp * contact_sp
    cdef double new[3]
    cdef Py_ssize_t i, j, k, c
    cdef int acc = 0
    cdef bint ok
    cdef double dist2, t, ns, os, dlog
    for i in range(n):
        for c in range(d):
            new[c] = sph[i, c] + prop[i, c]
        ok = True
        for j in range(n):
            if j == i:
                continue
            dist2 = 0.0
            for c in range(d):
                t = new[c] - sph[j, c]
                dist2 += t * t
            if dist2 < ss2:
                ok = False
                break
        if ok:
            for k in range(m):
                dist2 = 0.0
                for c in range(d):
                    t = par[k, c] - new[c]
                    dist2 += t * t
                if dist2 < sp2:
                    ok = False
                    break
        if not ok:
            continue
        ns = 0.0
        os = 0.0
        for c in range(d):
            ns += new[c] * new[c]
            os += sph[i, c] * sph[i, c]
        dlog = -(_hinge(kappa * (sqrt(ns) - hinge_r)) - _hinge(kappa * (sqrt(os) - hinge_r)))
        if logu[i] < dlog:
            for c in range(d):
                sph[i, c] = new[c]
            acc += 1
    return acc


def run_depletion_chunk(double[:, ::1] pos, double[:, ::1] L,
                        double[:, :, ::1] noise, double dt, double sigma,
                        double z, double r_dep, double contact,
                        double kappa, double hinge_r, int max_sweeps):
    cdef Py_ssize_t steps = noise.shape[0]
    cdef Py_ssize_t n = pos.shape[0]
    cdef int d = <int> pos.shape[1]
    cdef double A = sigma * sqrt(dt)
    cdef double B = 0.5 * dt
    cdef double C = 0.5 * z * dt
    grad_arr = np.empty((n, d), dtype=np.float64)
    cdef double[:, ::1] grad = grad_arr
    empty_par = np.empty((0, d), dtype=np.float64)
    cdef double[:, ::1] par = empty_par
    empty_ell = np.empty((n, 0), dtype=np.float64)
    cdef double[:, ::1] ell = empty_ell
    buf = np.empty((n * (n - 1) // 2 + 1, 2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] pair_buf = buf
    cdef Py_ssize_t s, i, c
    cdef double norm2, norm, coeff
    cdef Py_ssize_t status = -1
    if d != 2 and d != 3:
        raise ValueError("kernel supports d in {2, 3}")
    with nogil:
        for s in range(steps):
            if _overlap_gradient(pos, r_dep, d, grad) < 0:
                status = s
                break
            for i in range(n):
                norm2 = 0.0
                for c in range(d):
                    norm2 += pos[i, c] * pos[i, c]
                norm = sqrt(norm2)
                coeff = 0.0
                if norm > 0.0 and kappa > 0.0:
                    coeff = kappa * _hinge_prime(kappa * (norm - hinge_r)) / norm
                for c in range(d):
                    pos[i, c] = pos[i, c] + A * noise[s, i, c] - B * (coeff * pos[i, c]) - C * grad[i, c]
            if _project(pos, par, contact, 0.0, 1.0, 1.0, max_sweeps, L, ell, pair_buf) < 0:
                status = s
                break
    return status


def run_two_type_chunk(double[:, ::1] sph, double[:, ::1] par,
                       double[:, ::1] L, double[:, ::1] ell,
                       double[:, :, ::1] noise_s, double[:, :, ::1] noise_p,
                       double dt, double sigma_s, double sigma_p,
                       double drift_s, double drift_p,
                       double kappa_s, double hinge_s,
                       double kappa_p, double hinge_p,
                       double contact_ss, double contact_sp,
                       double w_particle, int max_sweeps):
    cdef Py_ssize_t steps = noise_s.shape[0]
    cdef Py_ssize_t n = sph.shape[0]
    cdef Py_ssize_t m = par.shape[0]
    cdef int d = <int> sph.shape[1]
    cdef double As = sigma_s * sqrt(dt)
    cdef double Bs = drift_s * dt
    cdef double Ap = sigma_p * sqrt(dt)
    cdef double Bp = drift_p * dt
    buf = np.empty((n * (n - 1) // 2 + n * m + 1, 2), dtype=np.intp)
    cdef Py_ssize_t[:, ::1] pair_buf = buf
    cdef Py_ssize_t s, i, k, c
    cdef double norm2, norm, coeff, t, hp
    cdef Py_ssize_t status = -1
    if d != 2 and d != 3:
        raise ValueError("kernel supports d in {2, 3}")
    with nogil:
        for s in range(steps):
            for i in range(n):
                norm2 = 0.0
                for c in range(d):
                    norm2 += sph[i, c] * sph[i, c]
                norm = sqrt(norm2)
                coeff = 0.0
                if norm > 0.0 and kappa_s > 0.0:
                    coeff = kappa_s * _hinge_prime(kappa_s * (norm - hinge_s)) / norm
                for c in range(d):
                    sph[i, c] = sph[i, c] + As * noise_s[s, i, c] - Bs * (coeff * sph[i, c])
            for k in range(m):
                norm2 = 0.0
                for c in range(d):
                    norm2 += par[k, c] * par[k, c]
                norm = sqrt(norm2)
                coeff = 0.0
                if norm > 0.0:
                    t = kappa_p * (norm - hinge_p)
                    if t <= 0.0:
                        hp = 0.0
                    elif t <= 2.0:
                        hp = 0.5 * t
                    else:
                        hp = 1.0
                    coeff = kappa_p * hp / norm
                for c in range(d):
                    par[k, c] = par[k, c] + (Ap * noise_p[s, k, c] - (coeff * par[k, c]) * Bp)
            if _project(sph, par, contact_ss, contact_sp, 1.0, w_particle, max_sweeps, L, ell, pair_buf) < 0:
                status = s
                break
    return status
