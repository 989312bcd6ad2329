# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled Metropolis-within-Gibbs kernel.

Bit-exact twin of ``_kernel_py.run_chain_kernel``; see that module's
docstring for the shared contract.  Every floating-point operation feeding a
decision, trace, or accumulator replicates the pure kernel's expression and
loop order; uniforms come from the ``bitgen_t.next_double`` slot of the same
BitGenerator the pure kernel consumes through ``Generator.random()``.  The
build disables FMA contraction (see setup.py) so compiled arithmetic rounds
exactly like the interpreter's.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer, PyCapsule_IsValid
from libc.math cimport INFINITY, log, sqrt

import numpy as np

from numpy.random cimport bitgen_t

KERNEL_NAME = "compiled"


cdef double _log_jeffreys(double[:, ::1] P, int m, double[:, ::1] A,
                          double[:, ::1] L, double const_term) noexcept:
    cdef int k = m - 1
    cdef int a, b, r, i, j, p, q
    cdef double s, ld, logdet, slog
    for a in range(k):
        for b in range(a + 1):
            s = 0.0
            for r in range(m):
                s += P[r, a] * P[r, b]
            A[a, b] = (1.0 if a == b else 0.0) - s
    for i in range(k):
        for j in range(i):
            s = A[i, j]
            for r in range(j):
                s -= L[i, r] * L[j, r]
            L[i, j] = s / L[j, j]
        s = A[i, i]
        for r in range(i):
            s -= L[i, r] * L[i, r]
        if s <= 0.0:
            return -INFINITY
        L[i, i] = sqrt(s)
    ld = 0.0
    for i in range(k):
        ld += log(L[i, i])
    logdet = 2.0 * ld
    slog = 0.0
    for p in range(m):
        for q in range(m):
            slog += log(P[p, q])
    return 0.5 * ((const_term + logdet) - slog)


def run_chain_kernel(
    P0,
    dirs,
    rows,
    cols,
    counts,
    bern_coef,
    dens0,
    prior_code,
    hastings,
    T,
    burn_in,
    thin,
    rng,
):
    """Run T row-major sweeps from P0; see ``sampler.run_chain`` for the API."""
    cdef int m = P0.shape[0]
    cdef int ndir = dirs.shape[0]
    cdef double[:, ::1] P = np.array(P0, dtype=np.float64, order="C")
    cdef const double[:, :, ::1] E = np.ascontiguousarray(dirs, dtype=np.float64)
    cdef const long long[::1] nrows = np.ascontiguousarray(rows, dtype=np.int64)
    cdef const long long[::1] ncols = np.ascontiguousarray(cols, dtype=np.int64)

    cdef bint use_counts = counts is not None
    cdef double[:, ::1] N
    if use_counts:
        N = np.ascontiguousarray(counts, dtype=np.float64)
    else:
        N = np.zeros((1, 1))
    cdef bint use_bern = bern_coef is not None
    cdef double[:, ::1] coef
    cdef double[::1] dens, dens_new
    cdef int nobs = 0
    if use_bern:
        coef = np.ascontiguousarray(bern_coef, dtype=np.float64)
        dens = np.array(dens0, dtype=np.float64)
        nobs = coef.shape[0]
        dens_new = np.zeros(nobs)
    else:
        coef = np.zeros((1, 1))
        dens = np.zeros(1)
        dens_new = np.zeros(1)
    cdef bint jeffreys = prior_code == 1
    cdef bint do_hastings = hastings
    cdef int T_c = T
    cdef int burn_c = burn_in
    cdef int thin_c = thin

    capsule = rng.bit_generator.capsule
    if not PyCapsule_IsValid(capsule, "BitGenerator"):
        raise ValueError("expected a BitGenerator capsule")
    cdef bitgen_t *bitgen = <bitgen_t *> PyCapsule_GetPointer(capsule, "BitGenerator")

    cdef double boundary = m * 1e-12
    cdef double const_term = (m - 1) * (m - 1) * log(<double> m)
    cdef double center = 1.0 / m
    cdef int k1 = m - 1
    cdef double[:, ::1] A = np.zeros((k1, k1))
    cdef double[:, ::1] L = np.zeros((k1, k1))
    cdef double[:, ::1] Pprop = np.zeros((m, m))
    cdef double[:, ::1] NB = np.zeros((m, m))

    cdef double lp_cur = _log_jeffreys(P, m, A, L, const_term) if jeffreys else 0.0
    cdef double ll_cur = 0.0
    cdef double md = <double> m
    cdef int p, q, k, d, t, nr, nc, i, j
    if use_counts:
        for p in range(m):
            for q in range(m):
                if N[p, q] != 0.0:
                    ll_cur += N[p, q] * log(md * P[p, q])
    elif use_bern:
        for k in range(nobs):
            ll_cur += log(dens[k])

    cdef double[:, ::1] sum_P = np.zeros((m, m))
    accept_np = np.zeros(ndir, dtype=np.int64)
    cdef long long[::1] accept_counts = accept_np
    radius_np = np.empty(T_c)
    logpost_np = np.empty(T_c)
    accrate_np = np.empty(T_c)
    cdef double[::1] radius_tr = radius_np
    cdef double[::1] logpost_tr = logpost_np
    cdef double[::1] accrate_tr = accrate_np
    cdef int n_kept = 0
    cdef int n_states = 0
    states_np = None
    cdef double[:, :, ::1] states
    if thin_c > 0:
        n_states = (T_c - burn_c + thin_c - 1) // thin_c
        states_np = np.empty((n_states, m, m))
        states = states_np
    else:
        states = np.zeros((1, m, m))
    cdef int stored = 0

    cdef int acc_sweep
    cdef double lo, hi, lo2, hi2, c, r_bound, u1, u2, gamma, val
    cdef double delta, lp_new, dll, cnt, nv, s, dfr
    cdef bint feasible

    for t in range(T_c):
        acc_sweep = 0
        for d in range(ndir):
            nr = <int> nrows[d]
            nc = <int> ncols[d]
            lo = -INFINITY
            hi = INFINITY
            for p in range(nr):
                for q in range(nc):
                    c = E[d, p, q]
                    r_bound = -P[p, q] / c
                    if c > 0.0:
                        if r_bound > lo:
                            lo = r_bound
                    else:
                        if r_bound < hi:
                            hi = r_bound
            u1 = bitgen.next_double(bitgen.state)
            gamma = lo + (hi - lo) * u1

            feasible = True
            for p in range(nr):
                for q in range(nc):
                    val = P[p, q] + gamma * E[d, p, q]
                    NB[p, q] = val
                    if val <= boundary:
                        feasible = False
            delta = -INFINITY
            lp_new = lp_cur
            dll = 0.0
            if feasible:
                if jeffreys:
                    for p in range(m):
                        for q in range(m):
                            Pprop[p, q] = P[p, q]
                    for p in range(nr):
                        for q in range(nc):
                            Pprop[p, q] = NB[p, q]
                    lp_new = _log_jeffreys(Pprop, m, A, L, const_term)
                    delta = lp_new - lp_cur
                else:
                    delta = 0.0
                if delta != -INFINITY:
                    if use_counts:
                        for p in range(nr):
                            for q in range(nc):
                                cnt = N[p, q]
                                if cnt != 0.0:
                                    dll += cnt * (log(NB[p, q]) - log(P[p, q]))
                    elif use_bern:
                        for k in range(nobs):
                            nv = dens[k] + gamma * coef[k, d]
                            dens_new[k] = nv
                            if nv <= 0.0:
                                dll = -INFINITY
                                break
                            dll += log(nv) - log(dens[k])
                    delta = delta + dll
                if delta != -INFINITY and do_hastings:
                    lo2 = -INFINITY
                    hi2 = INFINITY
                    for p in range(nr):
                        for q in range(nc):
                            c = E[d, p, q]
                            r_bound = -NB[p, q] / c
                            if c > 0.0:
                                if r_bound > lo2:
                                    lo2 = r_bound
                            else:
                                if r_bound < hi2:
                                    hi2 = r_bound
                    delta = delta + (log(hi - lo) - log(hi2 - lo2))

            u2 = bitgen.next_double(bitgen.state)
            if delta != -INFINITY:
                if u2 == 0.0 or log(u2) < delta:
                    for p in range(nr):
                        for q in range(nc):
                            P[p, q] = NB[p, q]
                    lp_cur = lp_new
                    ll_cur = ll_cur + dll
                    if use_bern:
                        for k in range(nobs):
                            dens[k] = dens_new[k]
                    accept_counts[d] += 1
                    acc_sweep += 1

        s = 0.0
        for p in range(m):
            for q in range(m):
                dfr = P[p, q] - center
                s += dfr * dfr
        radius_tr[t] = sqrt(s)
        logpost_tr[t] = lp_cur + ll_cur
        accrate_tr[t] = (<double> acc_sweep) / (<double> ndir)
        if t >= burn_c:
            for p in range(m):
                for q in range(m):
                    sum_P[p, q] += P[p, q]
            n_kept += 1
            if thin_c > 0 and (t - burn_c) % thin_c == 0:
                for p in range(m):
                    for q in range(m):
                        states[stored, p, q] = P[p, q]
                stored += 1

    final_P = np.asarray(P).copy()
    sum_arr = np.asarray(sum_P).copy()
    if states_np is not None:
        states_np = states_np[:stored]
    return sum_arr, n_kept, accept_np, radius_np, logpost_np, accrate_np, states_np, final_P
