"""Pure-Python Metropolis-within-Gibbs kernel.

Twin of the compiled kernel in ``_kernel.pyx``.  The two must produce
bit-identical output for identical inputs, so every floating-point operation
that feeds a decision, a trace, or an accumulator appears here in a fixed
order mirrored exactly by the C code:

* reductions (inner products, Cholesky, log sums, radius, running mean) are
  sequential loops in row-major order, never vectorized;
* scalar transcendentals go through libm (``math.log``/``math.sqrt`` here,
  ``log``/``sqrt`` there);
* exactly two uniforms are consumed per direction, the proposal gamma and the
  acceptance draw, whether or not the proposal is feasible, so the two
  kernels stay aligned on the same random stream
  (``Generator.random()`` and ``bitgen_t.next_double`` draw identical
  doubles from a shared ``BitGenerator`` state);
* the compiled twin is built with FMA contraction disabled.

Conventions shared with the caller (``sampler.py``): direction matrices and
Bernstein coefficient tables are precomputed once with numpy and passed to
both kernels unchanged; entries of P at or below m * 1e-12 count as boundary
and force rejection, which keeps every visited state strictly interior.
"""

import math

import numpy as np

KERNEL_NAME = "python"

_NEG_INF = float("-inf")


def _log_jeffreys(P, m, A, L, const):
    """0.5 * log I(P); -inf when the reduced information matrix degenerates.

    log I(P) = (m-1)^2 log m + logdet(I - (P'P)_[:m-1,:m-1]) - sum log P_ij,
    with ``const`` = (m-1)^2 log m precomputed by the caller.
    """
    k = m - 1
    for a in range(k):
        for b in range(a + 1):
            s = 0.0
            for r in range(m):
                s += P[r][a] * P[r][b]
            A[a][b] = (1.0 if a == b else 0.0) - s
    for i in range(k):
        for j in range(i):
            s = A[i][j]
            for r in range(j):
                s -= L[i][r] * L[j][r]
            L[i][j] = s / L[j][j]
        s = A[i][i]
        for r in range(i):
            s -= L[i][r] * L[i][r]
        if s <= 0.0:
            return _NEG_INF
        L[i][i] = math.sqrt(s)
    ld = 0.0
    for i in range(k):
        ld += math.log(L[i][i])
    logdet = 2.0 * ld
    slog = 0.0
    for p in range(m):
        for q in range(m):
            slog += math.log(P[p][q])
    return 0.5 * ((const + logdet) - slog)


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
    m = P0.shape[0]
    ndir = dirs.shape[0]
    P = [[float(P0[p, q]) for q in range(m)] for p in range(m)]
    E = [[[float(dirs[d, p, q]) for q in range(m)] for p in range(m)] for d in range(ndir)]
    nrows = [int(r) for r in rows]
    ncols = [int(c) for c in cols]
    use_counts = counts is not None
    N = [[float(counts[p, q]) for q in range(m)] for p in range(m)] if use_counts else None
    use_bern = bern_coef is not None
    if use_bern:
        nobs = bern_coef.shape[0]
        coef = [[float(bern_coef[k, d]) for d in range(ndir)] for k in range(nobs)]
        dens = [float(x) for x in dens0]
        dens_new = [0.0] * nobs
    jeffreys = prior_code == 1

    boundary = m * 1e-12
    const = (m - 1) * (m - 1) * math.log(m)
    center = 1.0 / m
    k1 = m - 1
    A = [[0.0] * k1 for _ in range(k1)]
    L = [[0.0] * k1 for _ in range(k1)]
    Pprop = [[0.0] * m for _ in range(m)]
    NB = [[0.0] * m for _ in range(m)]

    lp_cur = _log_jeffreys(P, m, A, L, const) if jeffreys else 0.0
    ll_cur = 0.0
    if use_counts:
        md = float(m)
        for p in range(m):
            for q in range(m):
                if N[p][q] != 0.0:
                    ll_cur += N[p][q] * math.log(md * P[p][q])
    elif use_bern:
        for k in range(nobs):
            ll_cur += math.log(dens[k])

    sum_P = [[0.0] * m for _ in range(m)]
    accept_counts = np.zeros(ndir, dtype=np.int64)
    radius_tr = np.empty(T)
    logpost_tr = np.empty(T)
    accrate_tr = np.empty(T)
    n_kept = 0
    if thin > 0:
        n_states = (T - burn_in + thin - 1) // thin
        states = np.empty((n_states, m, m))
    else:
        states = None
    stored = 0

    for t in range(T):
        acc_sweep = 0
        for d in range(ndir):
            nr = nrows[d]
            nc = ncols[d]
            Ed = E[d]
            lo = _NEG_INF
            hi = math.inf
            for p in range(nr):
                for q in range(nc):
                    c = Ed[p][q]
                    r = -P[p][q] / c
                    if c > 0.0:
                        if r > lo:
                            lo = r
                    else:
                        if r < hi:
                            hi = r
            u1 = rng.random()
            gamma = lo + (hi - lo) * u1

            feasible = True
            for p in range(nr):
                for q in range(nc):
                    val = P[p][q] + gamma * Ed[p][q]
                    NB[p][q] = val
                    if val <= boundary:
                        feasible = False
            delta = _NEG_INF
            lp_new = lp_cur
            dll = 0.0
            if feasible:
                if jeffreys:
                    for p in range(m):
                        for q in range(m):
                            Pprop[p][q] = P[p][q]
                    for p in range(nr):
                        for q in range(nc):
                            Pprop[p][q] = NB[p][q]
                    lp_new = _log_jeffreys(Pprop, m, A, L, const)
                    delta = lp_new - lp_cur
                else:
                    delta = 0.0
                if delta != _NEG_INF:
                    if use_counts:
                        for p in range(nr):
                            for q in range(nc):
                                cnt = N[p][q]
                                if cnt != 0.0:
                                    dll += cnt * (math.log(NB[p][q]) - math.log(P[p][q]))
                    elif use_bern:
                        for k in range(nobs):
                            nv = dens[k] + gamma * coef[k][d]
                            dens_new[k] = nv
                            if nv <= 0.0:
                                dll = _NEG_INF
                                break
                            dll += math.log(nv) - math.log(dens[k])
                    delta = delta + dll
                if delta != _NEG_INF and hastings:
                    lo2 = _NEG_INF
                    hi2 = math.inf
                    for p in range(nr):
                        for q in range(nc):
                            c = Ed[p][q]
                            r = -NB[p][q] / c
                            if c > 0.0:
                                if r > lo2:
                                    lo2 = r
                            else:
                                if r < hi2:
                                    hi2 = r
                    delta = delta + (math.log(hi - lo) - math.log(hi2 - lo2))

            u2 = rng.random()
            if delta != _NEG_INF:
                if u2 == 0.0 or math.log(u2) < delta:
                    for p in range(nr):
                        for q in range(nc):
                            P[p][q] = NB[p][q]
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
                dfr = P[p][q] - center
                s += dfr * dfr
        radius_tr[t] = math.sqrt(s)
        logpost_tr[t] = lp_cur + ll_cur
        accrate_tr[t] = acc_sweep / ndir
        if t >= burn_in:
            for p in range(m):
                for q in range(m):
                    sum_P[p][q] += P[p][q]
            n_kept += 1
            if thin > 0 and (t - burn_in) % thin == 0:
                for p in range(m):
                    for q in range(m):
                        states[stored, p, q] = P[p][q]
                stored += 1

    final_P = np.array(P)
    sum_arr = np.array(sum_P)
    if states is not None:
        states = states[:stored]
    return sum_arr, n_kept, accept_counts, radius_tr, logpost_tr, accrate_tr, states, final_P
