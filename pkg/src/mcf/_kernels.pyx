# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled orbit and certifier kernels.

Statement-for-statement mirror of ``mcf._kernels_py`` (orbit) and of
``mcf.certifier._walk_subtree_py`` (cylinder enumeration); compiled
with FMA contraction disabled so results match the pure-Python
reference bit for bit.
"""

from libc.math cimport fabs, floor, isfinite, log, nextafter

from .core import ConsistencyError, KernelPrecisionError

cdef extern from *:
    """
    typedef __int128 mcf_i128;
    static const double MCF_C2_LO = 0x1.37423899a1557p+0;
    static const double MCF_C2_HI = 0x1.37423899a1558p+0;
    static const double MCF_C3_LO = 0x1.a9efc35d12235p+2;
    static const double MCF_C3_HI = 0x1.a9efc35d12236p+2;
    """
    ctypedef long long i128 "mcf_i128"
    const double MCF_C2_LO
    const double MCF_C2_HI
    const double MCF_C3_LO
    const double MCF_C3_HI

COMPILED = True

SELMER = 0
CASSAIGNE = 1
BRUN = 2
JACOBI_PERRON = 3
INTERMEDIATE = 4
GARRITY = 5

OK = 0
TERMINATED = 1
NONFINITE = 2

cdef double _TINY = 1e-15
cdef double _INF = float("inf")
cdef double _LOG_EPS = 2e-14


# ---------------------------------------------------------------------------
# orbit kernel


cdef double _largest(double* buf, int n) nogil:
    cdef double best = 0.0
    cdef double besta = 0.0
    cdef double v, a
    cdef int j
    for j in range(n):
        v = buf[j]
        a = -v if v < 0.0 else v
        if a > besta:
            besta = a
            best = v
    return best


def run_segment(int alg, int d, x0_in, wa_in, wd_in, double ledger_a,
                double ledger_d, long long n0, long long steps, long long renorm,
                int monitor):
    """Same contract as the pure-Python reference."""
    cdef int na = d + 1
    cdef int nd = d
    cdef int nx = len(x0_in)
    cdef int nd2 = nd * nd
    cdef int na2 = na * na
    cdef double x[16]
    cdef double newx[16]
    cdef double w[16]
    cdef double quot[16]
    cdef double co1[16]
    cdef double co2[16]
    cdef int src1[16]
    cdef int src2[16]
    cdef double wa_buf[256]
    cdef double wd_buf[256]
    cdef double na_buf[256]
    cdef double ndl_buf[256]
    cdef double* wa = wa_buf
    cdef double* wd = wd_buf
    cdef double* newa = na_buf
    cdef double* newd = ndl_buf
    cdef double* tmp
    cdef double max_log_dnorm = -_INF
    cdef double max_log_dentry = -_INF
    cdef int status = OK
    cdef long long done = 0
    cdef long long t
    cdef int i, j, k, ell, kl, m, base, start, s1, s2
    cdef bint jp_dense, has0
    cdef int sh
    cdef double xd, x0, s, r, x1, v, acc, q, cbase, c1, c2, piv, rem, rr
    cdef double t1, t2, s2d, elld
    cdef double nrm, ent, rs

    if na > 16 or nx > 16:
        raise ValueError("dimension too large for the compiled kernel")
    for i in range(nx):
        x[i] = x0_in[i]
    for i in range(na2):
        wa[i] = wa_in[i]
    for i in range(nd2):
        wd[i] = wd_in[i]

    for t in range(steps):
        jp_dense = False
        if alg == SELMER:
            xd = x[d - 1]
            x0 = x[0]
            if x0 == 0.0:
                status = TERMINATED
                break
            for i in range(d - 1):
                src1[i] = i + 1
                co1[i] = 1.0
                src2[i] = -1
            if 2.0 * xd >= 1.0:
                src1[d - 1] = 0
                co1[d - 1] = 1.0
                src2[d - 1] = d
                co2[d - 1] = 1.0
                src1[d] = 0
                co1[d] = 1.0
                src2[d] = -1
                for j in range(d - 1):
                    newx[j] = x[j + 1] / x0
                newx[d - 1] = (1.0 - xd) / x0
            else:
                src1[d - 1] = 0
                co1[d - 1] = 1.0
                src2[d - 1] = -1
                src1[d] = 0
                co1[d] = 1.0
                src2[d] = d
                co2[d] = 1.0
                for j in range(d - 2):
                    newx[j] = x[j + 1] / x0
                newx[d - 2] = (1.0 - xd) / x0
                newx[d - 1] = xd / x0
        elif alg == CASSAIGNE:
            x0 = x[0]
            if x0 >= x[2]:
                src1[0] = 0
                co1[0] = 1.0
                src2[0] = -1
                src1[1] = 0
                co1[1] = 1.0
                src2[1] = 2
                co2[1] = 1.0
                src1[2] = 1
                co1[2] = 1.0
                src2[2] = -1
                s = x0 + x[1]
                if s < _TINY:
                    status = TERMINATED
                    break
                newx[0] = (x0 - x[2]) / s
                newx[1] = x[2] / s
                newx[2] = x[1] / s
            else:
                src1[0] = 1
                co1[0] = 1.0
                src2[0] = -1
                src1[1] = 0
                co1[1] = 1.0
                src2[1] = 2
                co2[1] = 1.0
                src1[2] = 2
                co1[2] = 1.0
                src2[2] = -1
                s = x[1] + x[2]
                if s < _TINY:
                    status = TERMINATED
                    break
                newx[0] = x[1] / s
                newx[1] = x0 / s
                newx[2] = (x[2] - x0) / s
        elif alg == BRUN:
            r = 1.0 - x[0]
            k = 0
            for i in range(d):
                if x[i] > r:
                    k += 1
            if k == 0:
                if r == 0.0:
                    status = TERMINATED
                    break
                src1[0] = 0
                co1[0] = 1.0
                src2[0] = -1
                src1[1] = 0
                co1[1] = 1.0
                src2[1] = 1
                co2[1] = 1.0
                for i in range(2, d + 1):
                    src1[i] = i
                    co1[i] = 1.0
                    src2[i] = -1
                for j in range(d):
                    newx[j] = x[j] / r
            else:
                x0 = x[0]
                if x0 == 0.0:
                    status = TERMINATED
                    break
                src1[0] = 0
                co1[0] = 1.0
                src2[0] = 1
                co2[0] = 1.0
                for i in range(1, k):
                    src1[i] = i + 1
                    co1[i] = 1.0
                    src2[i] = -1
                src1[k] = 0
                co1[k] = 1.0
                src2[k] = -1
                for i in range(k + 1, d + 1):
                    src1[i] = i
                    co1[i] = 1.0
                    src2[i] = -1
                for j in range(k - 1):
                    newx[j] = x[j + 1] / x0
                newx[k - 1] = r / x0
                for j in range(k, d):
                    newx[j] = x[j] / x0
        elif alg == JACOBI_PERRON:
            x1 = x[0]
            if x1 < _TINY:
                status = TERMINATED
                break
            jp_dense = True
            quot[0] = floor(1.0 / x1)
            quot[1] = 1.0
            for j in range(1, d):
                quot[j + 1] = floor(x[j] / x1)
            for i in range(1, d):
                src1[i] = i + 1
                co1[i] = 1.0
                src2[i] = -1
            src1[d] = 0
            co1[d] = 1.0
            src2[d] = -1
            for j in range(d - 1):
                v = (x[j + 1] - quot[j + 2] * x1) / x1
                newx[j] = v if v > 0.0 else 0.0
            v = (1.0 - quot[0] * x1) / x1
            newx[d - 1] = v if v > 0.0 else 0.0
        else:
            s = 0.0
            k = 0
            while k < d and s + x[k] < 1.0:
                s = s + x[k]
                k += 1
            if k == 0:
                status = TERMINATED
                break
            if alg == GARRITY and k > d - 2:
                xd = x[d - 1]
                x0 = x[0]
                if xd < _TINY or x0 == 0.0:
                    status = TERMINATED
                    break
                s2d = 0.0
                for i in range(d - 1):
                    s2d = s2d + x[i]
                rem = 1.0 - s2d
                elld = floor(rem / xd)
                rr = rem - elld * xd
                if rr < 0.0:
                    rr = 0.0
                for i in range(d - 1):
                    src1[i] = 0
                    co1[i] = 1.0
                    src2[i] = i + 1
                    co2[i] = 1.0
                if elld != 0.0:
                    src1[d - 1] = 0
                    co1[d - 1] = elld
                    src2[d - 1] = d
                    co2[d - 1] = 1.0
                else:
                    src1[d - 1] = d
                    co1[d - 1] = 1.0
                    src2[d - 1] = -1
                src1[d] = 0
                co1[d] = 1.0
                src2[d] = -1
                for j in range(d - 1):
                    newx[j] = x[j + 1] / x0
                newx[d - 1] = rr / x0
            else:
                r = 1.0 - s
                ell = 0
                for i in range(d):
                    if x[i] > r:
                        ell += 1
                kl = k if k < ell else ell
                for i in range(d + 1):
                    has0 = i < kl or i == ell or (ell < i <= k)
                    if i < ell:
                        sh = i + 1
                    elif i > ell:
                        sh = i
                    else:
                        sh = -1
                    if has0:
                        src1[i] = 0
                        co1[i] = 1.0
                        if sh >= 0:
                            src2[i] = sh
                            co2[i] = 1.0
                        else:
                            src2[i] = -1
                            co2[i] = 0.0
                    else:
                        src1[i] = sh
                        co1[i] = 1.0
                        src2[i] = -1
                if ell == 0:
                    if r == 0.0:
                        status = TERMINATED
                        break
                    for j in range(d):
                        newx[j] = x[j] / r
                else:
                    x0 = x[0]
                    if x0 == 0.0:
                        status = TERMINATED
                        break
                    for j in range(ell - 1):
                        newx[j] = x[j + 1] / x0
                    newx[ell - 1] = r / x0
                    for j in range(ell, d):
                        newx[j] = x[j] / x0

        # difference-cocycle update
        if alg == CASSAIGNE:
            x0 = x[0]
            if x0 == 0.0:
                status = NONFINITE
                break
            t1 = x[1] / x0
            t2 = x[2] / x0
            for j in range(nd):
                w[j] = t1 * wd[j] + t2 * wd[nd + j]
        else:
            for j in range(nd):
                acc = x[0] * wd[j]
                for i in range(1, nd):
                    acc += x[i] * wd[i * nd + j]
                w[j] = acc
        for i in range(nd):
            m = i + 1
            q = 0.0
            base = -1
            cbase = 0.0
            if src1[m] == 0:
                q += co1[m]
            elif src1[m] > 0:
                base = src1[m] - 1
                cbase = co1[m]
            if src2[m] == 0:
                q += co2[m]
            elif src2[m] > 0:
                base = src2[m] - 1
                cbase = co2[m]
            if base >= 0:
                if q != 0.0:
                    for j in range(nd):
                        newd[i * nd + j] = cbase * wd[base * nd + j] - q * w[j]
                else:
                    for j in range(nd):
                        newd[i * nd + j] = cbase * wd[base * nd + j]
            else:
                for j in range(nd):
                    newd[i * nd + j] = -q * w[j]
        tmp = wd
        wd = newd
        newd = tmp

        # matrix-cocycle update
        if jp_dense:
            for j in range(na):
                acc = quot[0] * wa[j] + wa[na + j]
                for i in range(2, na):
                    acc += quot[i] * wa[i * na + j]
                newa[j] = acc
            start = 1
        else:
            start = 0
        for i in range(start, na):
            s1 = src1[i]
            if src2[i] >= 0:
                c1 = co1[i]
                s2 = src2[i]
                c2 = co2[i]
                for j in range(na):
                    newa[i * na + j] = c1 * wa[s1 * na + j] + c2 * wa[s2 * na + j]
            else:
                c1 = co1[i]
                for j in range(na):
                    newa[i * na + j] = c1 * wa[s1 * na + j]
        tmp = wa
        wa = newa
        newa = tmp

        for j in range(nx):
            x[j] = newx[j]
        done = t + 1

        if renorm > 0 and (n0 + done) % renorm == 0:
            piv = wd[0]
            if piv == 0.0:
                piv = _largest(wd, nd2)
            if piv == 0.0 or not isfinite(piv):
                status = NONFINITE
                break
            for j in range(nd2):
                wd[j] = wd[j] / piv
            ledger_d += log(fabs(piv))
            piv = wa[0]
            if piv == 0.0:
                piv = _largest(wa, na2)
            if piv == 0.0 or not isfinite(piv):
                status = NONFINITE
                break
            for j in range(na2):
                wa[j] = wa[j] / piv
            ledger_a += log(fabs(piv))

        if monitor:
            nrm = 0.0
            ent = 0.0
            for i in range(nd):
                rs = 0.0
                for j in range(nd):
                    v = wd[i * nd + j]
                    if v < 0.0:
                        v = -v
                    rs += v
                    if v > ent:
                        ent = v
                if rs > nrm:
                    nrm = rs
            if nrm > 0.0:
                v = ledger_d + log(nrm)
                if v > max_log_dnorm:
                    max_log_dnorm = v
            if ent > 0.0:
                v = ledger_d + log(ent)
                if v > max_log_dentry:
                    max_log_dentry = v

    x_out = [x[i] for i in range(nx)]
    wa_out = [wa[i] for i in range(na2)]
    wd_out = [wd[i] for i in range(nd2)]
    return (status, ledger_a, ledger_d, max_log_dnorm, max_log_dentry, done,
            x_out, wa_out, wd_out)


# ---------------------------------------------------------------------------
# certifier kernel

cdef long long CAP = 1 << 25  # guard for the fixed-width fast path

cdef struct CertAcc:
    double s_minus
    double s_plus
    double s_closed
    double lower_sum
    double unscaled
    double vol_lo
    double vol_hi
    long long n_minus
    long long n_plus
    long long n_sing
    long long n_closed
    long long nodes
    long long leaves
    long long sing_num
    long long sing_den
    int allb_sing
    long long tiling_checked
    long long tiling_skipped
    long long tiling_failures
    long long max_entry


cdef struct CertCtx:
    int dim
    int n            # dim + 1
    int depth
    int prefix_len
    int aggregate
    int refine
    long long agg_log2
    long long ifact
    double c_lo
    double c_hi
    double log_b_up
    double fact
    double piece_scale
    long long lifts[4][4]
    CertAcc acc


cdef inline double _up(double v) nogil:
    return nextafter(v, _INF)


cdef inline double _dn(double v) nogil:
    return nextafter(v, -_INF)


cdef inline double _up2(double v) nogil:
    return nextafter(nextafter(v, _INF), _INF)


cdef inline double _dn2(double v) nogil:
    return nextafter(nextafter(v, -_INF), -_INF)


# zero operands make the IEEE result exact; no directed step then
cdef inline double add_up(double a, double b) nogil:
    cdef double r = a + b
    if a == 0.0 or b == 0.0:
        return r
    return _up(r)


cdef inline double add_dn(double a, double b) nogil:
    cdef double r = a + b
    if a == 0.0 or b == 0.0:
        return r
    return _dn(r)


cdef inline double mul_up(double a, double b) nogil:
    cdef double r = a * b
    if a == 0.0 or b == 0.0:
        return r
    return _up(r)


cdef inline double mul_dn(double a, double b) nogil:
    cdef double r = a * b
    if a == 0.0 or b == 0.0:
        return r
    return _dn(r)


cdef inline double div_up(double a, double b) nogil:
    cdef double r = a / b
    if a == 0.0:
        return r
    return _up(r)


cdef inline double div_dn(double a, double b) nogil:
    cdef double r = a / b
    if a == 0.0:
        return r
    return _dn(r)


cdef inline double _ratio_up(long long num, long long den) nogil:
    return _up2((<double> num) / (<double> den))


cdef inline double _ratio_dn(long long num, long long den) nogil:
    return _dn2((<double> num) / (<double> den))


cdef inline double _weight_up(long long num, long long den) nogil:
    if num == den:
        return 0.0
    return _up(_up(log(<double> num) - log(<double> den)) + _LOG_EPS)


cdef inline int _bitlen64(long long v) nogil:
    cdef int n = 0
    while v > 0:
        v >>= 1
        n += 1
    return n


cdef inline int _bitlen128(i128 v) nogil:
    cdef int n = 0
    while v > 0:
        v >>= 1
        n += 1
    return n


# subdivision tags: (i, i) is vertex i, (i, j) the midpoint of edge ij
cdef int _SUB3[4][3][2]
cdef int _SUB4[8][4][2]
_SUB3 = [
    [[0, 0], [0, 1], [0, 2]],
    [[1, 1], [0, 1], [1, 2]],
    [[2, 2], [0, 2], [1, 2]],
    [[0, 1], [1, 2], [0, 2]],
]
_SUB4 = [
    [[0, 0], [0, 1], [0, 2], [0, 3]],
    [[1, 1], [0, 1], [1, 2], [1, 3]],
    [[2, 2], [0, 2], [1, 2], [2, 3]],
    [[3, 3], [0, 3], [1, 3], [2, 3]],
    [[0, 1], [2, 3], [0, 2], [1, 2]],
    [[0, 1], [2, 3], [1, 2], [1, 3]],
    [[0, 1], [2, 3], [1, 3], [0, 3]],
    [[0, 1], [2, 3], [0, 3], [0, 2]],
]


cdef void _extremes(CertCtx* ctx, long long* ys, long long* mins_n,
                    long long* mins_d, long long* maxs_n, long long* maxs_d) nogil:
    cdef int n = ctx.n
    cdef int j, t
    cdef long long a, b
    for j in range(1, n):
        mins_n[j - 1] = ys[j]
        mins_d[j - 1] = ys[0]
        maxs_n[j - 1] = ys[j]
        maxs_d[j - 1] = ys[0]
        for t in range(1, n):
            a = ys[t * n + j]
            b = ys[t * n + 0]
            if (<i128> a) * mins_d[j - 1] < (<i128> mins_n[j - 1]) * b:
                mins_n[j - 1] = a
                mins_d[j - 1] = b
            if (<i128> a) * maxs_d[j - 1] > (<i128> maxs_n[j - 1]) * b:
                maxs_n[j - 1] = a
                maxs_d[j - 1] = b


cdef void _max_dnorm(CertCtx* ctx, long long* P, long long* ys,
                     long long* out_num, long long* out_den) nogil:
    cdef int n = ctx.n
    cdef long long bn = -1, bd = 1
    cdef long long y0, mrow, rs, v
    cdef int t, i, j
    for t in range(n):
        y0 = ys[t * n + 0]
        mrow = 0
        for i in range(1, n):
            rs = 0
            for j in range(1, n):
                v = P[i * n + j] * y0 - P[i * n + 0] * ys[t * n + j]
                rs += v if v >= 0 else -v
            if rs > mrow:
                mrow = rs
        if (<i128> mrow) * bd > (<i128> bn) * y0:
            bn = mrow
            bd = y0
    out_num[0] = bn
    out_den[0] = bd


cdef void _vols(CertCtx* ctx, long long* ys, double* out_lo, double* out_hi) nogil:
    cdef double lo = 1.0
    cdef double hi = 1.0
    cdef double f
    cdef int t
    for t in range(ctx.n):
        f = <double> ys[t * ctx.n + 0]
        lo = _dn2(lo / f)
        hi = _up2(hi / f)
    f = ctx.fact
    out_lo[0] = _dn2(lo / f)
    out_hi[0] = _up2(hi / f)


cdef double _piece_norm_up(CertCtx* ctx, long long* P,
                           double[4][3] vlo, double[4][3] vhi) nogil:
    cdef int d = ctx.dim
    cdef int n = ctx.n
    cdef double best = 0.0
    cdef double vmax, rs, q, p, e_hi, e_lo, a, b
    cdef int t, i, j
    for t in range(d + 1):
        vmax = 0.0
        for i in range(1, d + 1):
            rs = 0.0
            q = <double> P[i * n + 0]
            for j in range(1, d + 1):
                p = <double> P[i * n + j]
                e_hi = _up(p - mul_dn(q, vlo[t][j - 1]))
                e_lo = _dn(p - mul_up(q, vhi[t][j - 1]))
                a = e_hi if e_hi >= 0.0 else -e_hi
                b = e_lo if e_lo >= 0.0 else -e_lo
                rs = add_up(rs, a if a >= b else b)
            if rs > vmax:
                vmax = rs
        if vmax > best:
            best = vmax
    return best


cdef double _piece_maxprod_up(CertCtx* ctx, double[4][3] vlo, double[4][3] vhi) nogil:
    cdef int d = ctx.dim
    cdef double m, cj, best, cand, bonus, f_t, f_u
    cdef double d1_lo, d1_hi, d2_lo, d2_hi, a_lo, v
    cdef int j, t, u, e
    if d == 3:
        m = 1.0
        for j in range(3):
            cj = vhi[0][j]
            for t in range(1, 4):
                if vhi[t][j] > cj:
                    cj = vhi[t][j]
            m = mul_up(m, cj)
        return m
    best = 0.0
    for e in range(3):
        if e == 0:
            t = 0; u = 1
        elif e == 1:
            t = 0; u = 2
        else:
            t = 1; u = 2
        d1_lo = _dn(vlo[u][0] - vhi[t][0])
        d1_hi = _up(vhi[u][0] - vlo[t][0])
        d2_lo = _dn(vlo[u][1] - vhi[t][1])
        d2_hi = _up(vhi[u][1] - vlo[t][1])
        a_lo = mul_dn(d1_lo, d2_lo)
        v = mul_dn(d1_lo, d2_hi)
        if v < a_lo:
            a_lo = v
        v = mul_dn(d1_hi, d2_lo)
        if v < a_lo:
            a_lo = v
        v = mul_dn(d1_hi, d2_hi)
        if v < a_lo:
            a_lo = v
        bonus = (-a_lo if a_lo < 0.0 else 0.0) * 0.25
        f_t = mul_up(vhi[t][0], vhi[t][1])
        f_u = mul_up(vhi[u][0], vhi[u][1])
        cand = add_up(f_t if f_t >= f_u else f_u, bonus)
        if cand > best:
            best = cand
    return best


cdef double _piece_minprod_dn(CertCtx* ctx, double[4][3] vlo) nogil:
    cdef int d = ctx.dim
    cdef double best = _INF
    cdef double m
    cdef int t, j
    for t in range(d + 1):
        m = 1.0
        for j in range(d):
            m = mul_dn(m, vlo[t][j])
        if m < best:
            best = m
    return best


cdef int _piece_rec(CertCtx* ctx, long long* P, double[4][3] vlo,
                    double[4][3] vhi, double plo, double phi, int lvl) except -1:
    cdef int d = ctx.dim
    cdef double clo[4][3]
    cdef double chi[4][3]
    cdef double slo, shi, norm_up, w_up, lower, mp, upper
    cdef int child, v, j, a, b
    cdef int nchild = 4 if d == 2 else 8
    if lvl > 0:
        slo = mul_dn(plo, ctx.piece_scale)
        shi = mul_up(phi, ctx.piece_scale)
        for child in range(nchild):
            for v in range(d + 1):
                if d == 2:
                    a = _SUB3[child][v][0]
                    b = _SUB3[child][v][1]
                else:
                    a = _SUB4[child][v][0]
                    b = _SUB4[child][v][1]
                if a == b:
                    for j in range(d):
                        clo[v][j] = vlo[a][j]
                        chi[v][j] = vhi[a][j]
                else:
                    for j in range(d):
                        clo[v][j] = _dn(vlo[a][j] + vlo[b][j]) * 0.5
                        chi[v][j] = _up(vhi[a][j] + vhi[b][j]) * 0.5
            _piece_rec(ctx, P, clo, chi, slo, shi, lvl - 1)
        return 0
    norm_up = _piece_norm_up(ctx, P, vlo, vhi)
    if norm_up == 1.0:
        w_up = 0.0
    else:
        w_up = _up(_up(log(norm_up)))
    lower = mul_dn(mul_dn(ctx.c_lo, div_dn(1.0, _piece_maxprod_up(ctx, vlo, vhi))), plo)
    if lower < 0:
        raise ConsistencyError("negative measure lower bound")
    ctx.acc.lower_sum = add_dn(ctx.acc.lower_sum, lower)
    if w_up > 0.0:
        mp = _piece_minprod_dn(ctx, vlo)
        if mp <= 0.0:
            raise ConsistencyError("nonpositive piece product")
        upper = mul_up(mul_up(ctx.c_hi, div_up(1.0, mp)), phi)
        ctx.acc.s_plus = add_up(ctx.acc.s_plus, mul_up(upper, w_up))
    elif w_up < 0.0:
        ctx.acc.s_minus = add_up(ctx.acc.s_minus, mul_up(lower, w_up))
    return 0


cdef int _leaf(CertCtx* ctx, long long* P, long long* ys, bint all_b) except -1:
    cdef int d = ctx.dim
    cdef int n = ctx.n
    cdef long long num, den
    cdef long long mins_n[3]
    cdef long long mins_d[3]
    cdef long long maxs_n[3]
    cdef long long maxs_d[3]
    cdef double vlo[4][3]
    cdef double vhi[4][3]
    cdef double vol_lo, vol_hi, w_up, lower, upper, mfac
    cdef bint singular
    cdef int j, t

    ctx.acc.leaves += 1
    _max_dnorm(ctx, P, ys, &num, &den)
    _extremes(ctx, ys, mins_n, mins_d, maxs_n, maxs_d)
    _vols(ctx, ys, &vol_lo, &vol_hi)
    ctx.acc.vol_lo = add_dn(ctx.acc.vol_lo, vol_lo)
    ctx.acc.vol_hi = add_up(ctx.acc.vol_hi, vol_hi)
    singular = False
    for j in range(d):
        if mins_n[j] == 0:
            singular = True
    w_up = _weight_up(num, den)
    if num >= den and singular:
        ctx.acc.n_sing += 1
        if all_b:
            ctx.acc.allb_sing = 1
        if (<i128> num) * ctx.acc.sing_den > (<i128> ctx.acc.sing_num) * den:
            ctx.acc.sing_num = num
            ctx.acc.sing_den = den
        return 0
    if num >= den:
        ctx.acc.n_plus += 1
    else:
        ctx.acc.n_minus += 1
        if d == 2:
            mfac = 1.0
            for j in range(d):
                mfac = mul_dn(mfac, _ratio_dn(maxs_d[j], maxs_n[j]))
            mfac = mul_dn(mfac, vol_lo)
            ctx.acc.unscaled = add_up(ctx.acc.unscaled, mul_up(mfac, w_up))
    if ctx.refine > 0 and not singular:
        for t in range(n):
            for j in range(d):
                vlo[t][j] = _ratio_dn(ys[t * n + j + 1], ys[t * n + 0])
                vhi[t][j] = _ratio_up(ys[t * n + j + 1], ys[t * n + 0])
        _piece_rec(ctx, P, vlo, vhi, vol_lo, vol_hi, ctx.refine)
        return 0
    lower = ctx.c_lo
    for j in range(d):
        lower = mul_dn(lower, _ratio_dn(maxs_d[j], maxs_n[j]))
    lower = mul_dn(lower, vol_lo)
    if lower < 0:
        raise ConsistencyError("negative measure lower bound")
    ctx.acc.lower_sum = add_dn(ctx.acc.lower_sum, lower)
    if num >= den:
        upper = ctx.c_hi
        for j in range(d):
            upper = mul_up(upper, _ratio_up(mins_d[j], mins_n[j]))
        upper = mul_up(upper, vol_hi)
        ctx.acc.s_plus = add_up(ctx.acc.s_plus, mul_up(upper, w_up))
    else:
        ctx.acc.s_minus = add_up(ctx.acc.s_minus, mul_up(lower, w_up))
    return 0


cdef int _close(CertCtx* ctx, long long* P, long long* ys, int m) except -1:
    cdef int d = ctx.dim
    cdef long long num, den
    cdef long long mins_n[3]
    cdef long long mins_d[3]
    cdef long long maxs_n[3]
    cdef long long maxs_d[3]
    cdef double vol_lo, vol_hi, w_up, beta, lower, upper
    cdef int j

    ctx.acc.n_closed += 1
    _max_dnorm(ctx, P, ys, &num, &den)
    _extremes(ctx, ys, mins_n, mins_d, maxs_n, maxs_d)
    _vols(ctx, ys, &vol_lo, &vol_hi)
    ctx.acc.vol_lo = add_dn(ctx.acc.vol_lo, vol_lo)
    ctx.acc.vol_hi = add_up(ctx.acc.vol_hi, vol_hi)
    w_up = _weight_up(num, den)
    beta = add_up(w_up, mul_up(<double> (ctx.depth - m), ctx.log_b_up))
    lower = ctx.c_lo
    for j in range(d):
        lower = mul_dn(lower, _ratio_dn(maxs_d[j], maxs_n[j]))
    lower = mul_dn(lower, vol_lo)
    ctx.acc.lower_sum = add_dn(ctx.acc.lower_sum, lower)
    if beta >= 0.0:
        upper = ctx.c_hi
        for j in range(d):
            upper = mul_up(upper, _ratio_up(mins_d[j], mins_n[j]))
        upper = mul_up(upper, vol_hi)
        ctx.acc.s_closed = add_up(ctx.acc.s_closed, mul_up(upper, beta))
    else:
        ctx.acc.s_closed = add_up(ctx.acc.s_closed, mul_up(lower, beta))
    return 0


cdef int _node(CertCtx* ctx, long long* P, int m, bint all_b, i128* out_c) except -1:
    cdef int n = ctx.n
    cdef int d = ctx.dim
    cdef long long ys[16]
    cdef long long child[16]
    cdef long long mins_n[3]
    cdef long long mins_d[3]
    cdef long long maxs_n[3]
    cdef long long maxs_d[3]
    cdef i128 cprod, ca, cb
    cdef long long e, v
    cdef int i, j, t, letter
    cdef long long score
    cdef bint singular, closing

    ctx.acc.nodes += 1
    e = 0
    for i in range(n * n):
        v = P[i]
        if v < 0:
            v = -v
        if v > e:
            e = v
    if e > ctx.acc.max_entry:
        ctx.acc.max_entry = e
    if e > CAP:
        raise KernelPrecisionError("fast-path entries exceeded the width guard")

    for t in range(n):
        for j in range(n):
            v = 0
            for i in range(n):
                v += ctx.lifts[t][i] * P[i * n + j]
            ys[t * n + j] = v
        if ys[t * n + 0] <= 0:
            raise ConsistencyError("nonpositive vertex denominator")
    cprod = 1
    for t in range(n):
        cprod = cprod * ys[t * n + 0]
    out_c[0] = cprod

    if m == ctx.depth:
        _leaf(ctx, P, ys, all_b)
        return 0

    closing = False
    if ctx.aggregate and m > ctx.prefix_len:
        _extremes(ctx, ys, mins_n, mins_d, maxs_n, maxs_d)
        singular = False
        for j in range(d):
            if mins_n[j] == 0:
                singular = True
        if not singular:
            score = 3 + 7 + 1
            for j in range(d):
                score += _bitlen64(mins_d[j]) - _bitlen64(mins_n[j]) + 1
            score -= _bitlen128(cprod * <i128> ctx.ifact)
            if score <= ctx.agg_log2:
                closing = True
    if closing:
        _close(ctx, P, ys, m)
        return 0

    for letter in range(2):
        if ctx.dim == 2:
            if letter == 0:
                for j in range(3):
                    child[0 * 3 + j] = P[1 * 3 + j]
                    child[1 * 3 + j] = P[0 * 3 + j] + P[2 * 3 + j]
                    child[2 * 3 + j] = P[0 * 3 + j]
            else:
                for j in range(3):
                    child[0 * 3 + j] = P[1 * 3 + j]
                    child[1 * 3 + j] = P[0 * 3 + j]
                    child[2 * 3 + j] = P[0 * 3 + j] + P[2 * 3 + j]
        else:
            if letter == 0:
                for j in range(4):
                    child[0 * 4 + j] = P[1 * 4 + j]
                    child[1 * 4 + j] = P[2 * 4 + j]
                    child[2 * 4 + j] = P[0 * 4 + j] + P[3 * 4 + j]
                    child[3 * 4 + j] = P[0 * 4 + j]
            else:
                for j in range(4):
                    child[0 * 4 + j] = P[1 * 4 + j]
                    child[1 * 4 + j] = P[2 * 4 + j]
                    child[2 * 4 + j] = P[0 * 4 + j]
                    child[3 * 4 + j] = P[0 * 4 + j] + P[3 * 4 + j]
        if letter == 0:
            _node(ctx, child, m + 1, False, &ca)
        else:
            _node(ctx, child, m + 1, all_b, &cb)

    # local tiling identity: 1/ca + 1/cb == 1/cprod
    if ca < (<i128> 1) << 62 and cb < (<i128> 1) << 62:
        if cprod * (ca + cb) == ca * cb:
            ctx.acc.tiling_checked += 1
        else:
            ctx.acc.tiling_failures += 1
    else:
        ctx.acc.tiling_skipped += 1
    return 0


def cert_subtree(int dim, int depth, int prefix_len, p_flat, int all_b,
                 int aggregate, long long agg_log2, int refine):
    """Enumerate one subtree of the certification word tree.

    Mirrors the pure-Python walker; raises KernelPrecisionError when the
    int64 fast path would overflow (callers fall back to exact
    arithmetic)."""
    cdef CertCtx ctx
    cdef long long P[16]
    cdef i128 croot
    cdef int i
    if dim == 2:
        ctx.c_lo = MCF_C2_LO
        ctx.c_hi = MCF_C2_HI
        ctx.fact = 2.0
        ctx.ifact = 2
        ctx.piece_scale = 0.25
        ctx.log_b_up = _up(_up(log(2.0) - log(1.0)) + _LOG_EPS)
        ctx.lifts[0][0] = 1; ctx.lifts[0][1] = 1; ctx.lifts[0][2] = 1
        ctx.lifts[1][0] = 1; ctx.lifts[1][1] = 1; ctx.lifts[1][2] = 0
        ctx.lifts[2][0] = 2; ctx.lifts[2][1] = 1; ctx.lifts[2][2] = 1
    elif dim == 3:
        ctx.c_lo = MCF_C3_LO
        ctx.c_hi = MCF_C3_HI
        ctx.fact = 6.0
        ctx.ifact = 6
        ctx.piece_scale = 0.125
        ctx.log_b_up = _up(_up(log(3.0) - log(1.0)) + _LOG_EPS)
        ctx.lifts[0][0] = 1; ctx.lifts[0][1] = 1; ctx.lifts[0][2] = 1; ctx.lifts[0][3] = 1
        ctx.lifts[1][0] = 1; ctx.lifts[1][1] = 1; ctx.lifts[1][2] = 1; ctx.lifts[1][3] = 0
        ctx.lifts[2][0] = 2; ctx.lifts[2][1] = 2; ctx.lifts[2][2] = 1; ctx.lifts[2][3] = 1
        ctx.lifts[3][0] = 2; ctx.lifts[3][1] = 1; ctx.lifts[3][2] = 1; ctx.lifts[3][3] = 1
    else:
        raise ValueError("certification supports dimensions 2 and 3 only")
    ctx.dim = dim
    ctx.n = dim + 1
    ctx.depth = depth
    ctx.prefix_len = prefix_len
    ctx.aggregate = aggregate
    ctx.agg_log2 = agg_log2
    ctx.refine = refine
    ctx.acc.s_minus = 0.0
    ctx.acc.s_plus = 0.0
    ctx.acc.s_closed = 0.0
    ctx.acc.lower_sum = 0.0
    ctx.acc.unscaled = 0.0
    ctx.acc.vol_lo = 0.0
    ctx.acc.vol_hi = 0.0
    ctx.acc.n_minus = 0
    ctx.acc.n_plus = 0
    ctx.acc.n_sing = 0
    ctx.acc.n_closed = 0
    ctx.acc.nodes = 0
    ctx.acc.leaves = 0
    ctx.acc.sing_num = 0
    ctx.acc.sing_den = 1
    ctx.acc.allb_sing = 0
    ctx.acc.tiling_checked = 0
    ctx.acc.tiling_skipped = 0
    ctx.acc.tiling_failures = 0
    ctx.acc.max_entry = 1
    for i in range(ctx.n * ctx.n):
        P[i] = p_flat[i]
    _node(&ctx, P, prefix_len, all_b != 0, &croot)
    return {
        "s_minus": ctx.acc.s_minus,
        "s_plus": ctx.acc.s_plus,
        "s_closed": ctx.acc.s_closed,
        "lower_sum": ctx.acc.lower_sum,
        "unscaled": ctx.acc.unscaled,
        "n_minus": ctx.acc.n_minus,
        "n_plus": ctx.acc.n_plus,
        "n_sing": ctx.acc.n_sing,
        "n_closed": ctx.acc.n_closed,
        "nodes": ctx.acc.nodes,
        "leaves": ctx.acc.leaves,
        "sing_num": ctx.acc.sing_num,
        "sing_den": ctx.acc.sing_den,
        "allb_sing": bool(ctx.acc.allb_sing),
        "vol_lo": ctx.acc.vol_lo,
        "vol_hi": ctx.acc.vol_hi,
        "tiling_checked": ctx.acc.tiling_checked,
        "tiling_skipped": ctx.acc.tiling_skipped,
        "tiling_failures": ctx.acc.tiling_failures,
        "max_entry": ctx.acc.max_entry,
    }
