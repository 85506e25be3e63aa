"""Pure-Python (numpy) implementations of the hot kernels.

Mirrors ``_kernels.pyx`` operation for operation; the compiled module is
preferred at import when available.  Expression shapes and reduction orders
match the compiled loops (scalar math via libm-backed ``math.*``), so both
backends agree bit-for-bit on d in {2, 3}, and each backend is individually
deterministic.
"""

from __future__ import annotations

import math

import numpy as np

# Violations are detected strictly inside the contact distance so that
# projection to exact contact terminates despite rounding.
_VIOL = 1.0 - 1e-13


def _v_ovlap(u: float, d: int, r_dep: float) -> float:
    if u >= 1.0:
        return 0.0
    if d == 2:
        return 2.0 * r_dep * r_dep * (math.acos(u) - u * math.sqrt(1.0 - u * u))
    omu = 1.0 - u
    return 4.0 * math.pi / 3.0 * (r_dep * r_dep * r_dep) * (omu * omu) * (1.0 + 0.5 * u)


def overlap_energy_sum(pos: np.ndarray, r_dep: float, d: int) -> float:
    """Sum of pairwise overlap volumes of depletion balls, ordered (i, j)."""
    n = pos.shape[0]
    total = 0.0
    inv = 1.0 / (2.0 * r_dep)
    for i in range(n):
        for j in range(i + 1, n):
            dist2 = 0.0
            for c in range(d):
                t = pos[i, c] - pos[j, c]
                dist2 += t * t
            u = math.sqrt(dist2) * inv
            if u < 1.0:
                total += _v_ovlap(u, d, r_dep)
    return total


def overlap_gradient(pos: np.ndarray, r_dep: float, d: int, out: np.ndarray) -> None:
    """Gradient (per sphere) of the union-of-balls energy, pairwise form.

    Component i is  v_{d-1} r_dep^{d-1} sum_j (1 - |x_i-x_j|^2/(2 r_dep)^2)_+^{(d-1)/2}
    times the unit vector from x_j to x_i: separating two overlapping
    depletion balls always increases the energy.
    """
    n = pos.shape[0]
    pref = 2.0 * r_dep if d == 2 else math.pi * r_dep * r_dep
    four_r2 = 4.0 * (r_dep * r_dep)
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
                raise ValueError(f"coincident sphere centres {i} and {j}")
            base = 1.0 - dist2 / four_r2
            w = math.sqrt(base) if d == 2 else base
            fac = pref * w / math.sqrt(dist2)
            for c in range(d):
                out[i, c] += fac * (pos[i, c] - pos[j, c])


def _correct_pair(A: np.ndarray, ia: int, B: np.ndarray, ib: int, d: int,
                  contact: float, wa: float, wb: float) -> float:
    """Separate rows A[ia], B[ib] to exact contact along their centre axis.

    Returns the (dimensionless) discrete local-time increment, booked on the
    a-side convention: displacement_a = dL * (a - b).
    """
    dist2 = 0.0
    for c in range(d):
        t = A[ia, c] - B[ib, c]
        dist2 += t * t
    dist = math.sqrt(dist2)
    gap = contact - dist
    wsum = wa + wb
    fa = wa / wsum * gap / dist
    fb = wb / wsum * gap / dist
    for c in range(d):
        diff = A[ia, c] - B[ib, c]
        A[ia, c] += fa * diff
        B[ib, c] -= fb * diff
    return fa


def project_contacts(
    sph: np.ndarray,
    par: np.ndarray,
    contact_ss: float,
    contact_sp: float,
    w_sphere: float,
    w_particle: float,
    max_sweeps: int,
    L: np.ndarray,
    ell: np.ndarray,
) -> int:
    """Iteratively project violated pairs back to exact contact distance.

    Each sweep collects currently violated pairs (sphere-sphere in (i<j)
    order, then sphere-particle in (i,k) order) and corrects them
    sequentially, rechecking each pair against the updated positions.
    L and ell accumulate the per-pair local-time increments.  Returns the
    number of sweeps that applied corrections, or -1 if violations remain
    after ``max_sweeps``.
    """
    n = sph.shape[0]
    m = par.shape[0]
    d = sph.shape[1]
    ss2 = contact_ss * contact_ss * _VIOL
    sp2 = contact_sp * contact_sp * _VIOL
    for sweep in range(max_sweeps + 1):
        pairs_ss = []
        if n > 1:
            diff = sph[:, None, :] - sph[None, :, :]
            dist2 = np.einsum("ijk,ijk->ij", diff, diff)
            ii, jj = np.triu_indices(n, k=1)
            hit = dist2[ii, jj] < ss2
            pairs_ss = list(zip(ii[hit].tolist(), jj[hit].tolist()))
        pairs_sp = []
        if n > 0 and m > 0:
            diff = sph[:, None, :] - par[None, :, :]
            dist2 = np.einsum("ijk,ijk->ij", diff, diff)
            ii, kk = np.nonzero(dist2 < sp2)
            pairs_sp = list(zip(ii.tolist(), kk.tolist()))
        if not pairs_ss and not pairs_sp:
            return sweep
        if sweep == max_sweeps:
            return -1
        for i, j in pairs_ss:
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
        for i, k in pairs_sp:
            dist2 = 0.0
            for c in range(d):
                t = sph[i, c] - par[k, c]
                dist2 += t * t
            if dist2 == 0.0:
                return -1
            if dist2 < sp2:
                dl = _correct_pair(sph, i, par, k, d, contact_sp, w_sphere, w_particle)
                ell[i, k] += dl
    return -1


def _hinge(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t <= 2.0:
        return 0.25 * t * t
    return t - 1.0


def _hinge_prime(t: float) -> float:
    if t <= 0.0:
        return 0.0
    if t <= 2.0:
        return 0.5 * t
    return 1.0


def _psi_of(X: np.ndarray, i: int, d: int, kappa: float, hinge_r: float) -> float:
    s = 0.0
    for c in range(d):
        s += X[i, c] * X[i, c]
    return _hinge(kappa * (math.sqrt(s) - hinge_r))


def mh_sweep_depletion(
    pos: np.ndarray,
    z: float,
    r_dep: float,
    contact: float,
    kappa: float,
    hinge_r: float,
    prop: np.ndarray,
    logu: np.ndarray,
) -> int:
    """One Metropolis sweep of single-sphere moves for the projected measure.

    Target density ~ exp(z * sum_pairs V_ovlap) * prod exp(-psi) on the
    hard-core-admissible set.  Only energy terms involving the moved sphere
    enter the acceptance ratio.  Mutates ``pos``; returns accepted count.
    """
    n, d = pos.shape
    c2 = contact * contact
    inv = 1.0 / (2.0 * r_dep)
    new = np.empty(d)
    acc = 0
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
            dlog += z * _v_ovlap(math.sqrt(dist2) * inv, d, r_dep)
        if not ok:
            continue
        for j in range(n):
            if j == i:
                continue
            dist2 = 0.0
            for c in range(d):
                t = pos[i, c] - pos[j, c]
                dist2 += t * t
            dlog -= z * _v_ovlap(math.sqrt(dist2) * inv, d, r_dep)
        ns = 0.0
        os = 0.0
        for c in range(d):
            ns += new[c] * new[c]
            os += pos[i, c] * pos[i, c]
        dlog -= _hinge(kappa * (math.sqrt(ns) - hinge_r)) - _hinge(kappa * (math.sqrt(os) - hinge_r))
        if logu[i] < dlog:
            for c in range(d):
                pos[i, c] = new[c]
            acc += 1
    return acc


def mh_sweep_bath(
    sph: np.ndarray,
    par: np.ndarray,
    contact_ss: float,
    contact_sp: float,
    kappa: float,
    hinge_r: float,
    prop: np.ndarray,
    logu: np.ndarray,
) -> int:
    """Single-sphere Metropolis sweep with an explicit (frozen) particle bath.

    No induced energy term: the bath exclusion constraint and the sphere
    confinement are the whole target.  Mutates ``sph``; returns accepted count.
    """
    n, d = sph.shape
    m = par.shape[0]
    ss2 = contact_ss * contact_ss
    sp2 = contact_sp * contact_sp
    new = np.empty(d)
    acc = 0
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
        if ok and m > 0:
            diff = par - new[None, :]
            if float(np.min(np.einsum("ij,ij->i", diff, diff))) < sp2:
                ok = False
        if not ok:
            continue
        ns = 0.0
        os = 0.0
        for c in range(d):
            ns += new[c] * new[c]
            os += sph[i, c] * sph[i, c]
        dlog = -(_hinge(kappa * (math.sqrt(ns) - hinge_r)) - _hinge(kappa * (math.sqrt(os) - hinge_r)))
        if logu[i] < dlog:
            for c in range(d):
                sph[i, c] = new[c]
            acc += 1
    return acc


def run_depletion_chunk(
    pos: np.ndarray,
    L: np.ndarray,
    noise: np.ndarray,
    dt: float,
    sigma: float,
    z: float,
    r_dep: float,
    contact: float,
    kappa: float,
    hinge_r: float,
    max_sweeps: int,
) -> int:
    """Advance the depletion gradient dynamics by ``noise.shape[0]`` steps.

    Per step, each sphere gains  A*xi - B*grad_psi - C*grad_E  with
    A = sigma*sqrt(dt), B = dt/2, C = z*dt/2, followed by projection of
    sphere-sphere contacts at distance ``contact``.  Returns the index of
    the first step whose projection failed, or -1 on success.
    """
    steps = noise.shape[0]
    n, d = pos.shape
    A = sigma * math.sqrt(dt)
    B = 0.5 * dt
    C = 0.5 * z * dt
    grad = np.empty_like(pos)
    empty_par = np.empty((0, d))
    empty_ell = np.empty((n, 0))
    for s in range(steps):
        overlap_gradient(pos, r_dep, d, grad)
        for i in range(n):
            norm2 = 0.0
            for c in range(d):
                norm2 += pos[i, c] * pos[i, c]
            norm = math.sqrt(norm2)
            coeff = 0.0
            if norm > 0.0 and kappa > 0.0:
                coeff = kappa * _hinge_prime(kappa * (norm - hinge_r)) / norm
            for c in range(d):
                pos[i, c] = pos[i, c] + A * noise[s, i, c] - B * (coeff * pos[i, c]) - C * grad[i, c]
        if project_contacts(pos, empty_par, contact, 0.0, 1.0, 1.0, max_sweeps, L, empty_ell) < 0:
            return s
    return -1


def run_two_type_chunk(
    sph: np.ndarray,
    par: np.ndarray,
    L: np.ndarray,
    ell: np.ndarray,
    noise_s: np.ndarray,
    noise_p: np.ndarray,
    dt: float,
    sigma_s: float,
    sigma_p: float,
    drift_s: float,
    drift_p: float,
    kappa_s: float,
    hinge_s: float,
    kappa_p: float,
    hinge_p: float,
    contact_ss: float,
    contact_sp: float,
    w_particle: float,
    max_sweeps: int,
) -> int:
    """Advance the two-type reflected dynamics by ``noise_s.shape[0]`` steps.

    ``drift_s`` / ``drift_p`` are the resolved prefactors of the confinement
    drifts (the caller fixes the coefficient convention).  Returns the index
    of the first failing step, or -1.
    """
    steps = noise_s.shape[0]
    n, d = sph.shape
    m = par.shape[0]
    As = sigma_s * math.sqrt(dt)
    Bs = drift_s * dt
    Ap = sigma_p * math.sqrt(dt)
    Bp = drift_p * dt
    for s in range(steps):
        for i in range(n):
            norm2 = 0.0
            for c in range(d):
                norm2 += sph[i, c] * sph[i, c]
            norm = math.sqrt(norm2)
            coeff = 0.0
            if norm > 0.0 and kappa_s > 0.0:
                coeff = kappa_s * _hinge_prime(kappa_s * (norm - hinge_s)) / norm
            for c in range(d):
                sph[i, c] = sph[i, c] + As * noise_s[s, i, c] - Bs * (coeff * sph[i, c])
        if m > 0:
            norms = np.sqrt(np.einsum("ij,ij->i", par, par))
            t = kappa_p * (norms - hinge_p)
            hp = np.where(t <= 0.0, 0.0, np.where(t <= 2.0, 0.5 * t, 1.0))
            with np.errstate(invalid="ignore", divide="ignore"):
                coeff = np.where(norms > 0.0, kappa_p * hp / norms, 0.0)
            par += Ap * noise_p[s] - (coeff[:, None] * par) * Bp
        if project_contacts(sph, par, contact_ss, contact_sp, 1.0, w_particle, max_sweeps, L, ell) < 0:
            return s
    return -1
