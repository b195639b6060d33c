"""Pure-Python orbit kernel.

Reference implementation of the hot loop: one projective step of the
selected algorithm, left-multiplication of the running matrix cocycles,
and periodic renormalization by the top-left coefficient with a
log-ledger.  The compiled kernel in ``mcf._kernels`` mirrors this code
operation by operation (and is built with FMA contraction disabled), so
the two backends produce bit-identical results.

State layout:
    x  : point coordinates (d entries, or 3 for the triangle map)
    wa : flat (d+1)*(d+1) working copy of the matrix cocycle
    wd : flat d*d working copy of the difference cocycle

The true cocycles are  exp(ledger) * working matrix.
"""

import math

COMPILED = False

SELMER, CASSAIGNE, BRUN, JACOBI_PERRON, INTERMEDIATE, GARRITY = range(6)

OK = 0
TERMINATED = 1
NONFINITE = 2

_TINY = 1e-15


def run_segment(alg, d, x0_in, wa_in, wd_in, ledger_a, ledger_d, n0, steps,
                renorm, monitor):
    """Advance the orbit by `steps` steps.

    Inputs are not mutated.  Returns

        (status, ledger_a, ledger_d, max_log_dnorm, max_log_dentry,
         steps_done, x, wa, wd)

    Renormalization happens after every step whose global index
    (n0 + local index) is a positive multiple of `renorm`.
    """
    na = d + 1
    nd = d
    x = list(x0_in)
    wa = list(wa_in)
    wd = list(wd_in)
    nx = len(x)
    src1 = [0] * na
    co1 = [0.0] * na
    src2 = [-1] * na
    co2 = [0.0] * na
    quot = [0.0] * na
    newx = [0.0] * nx
    w = [0.0] * nd
    nd2 = nd * nd
    na2 = na * na
    newd = [0.0] * nd2
    newa = [0.0] * na2
    max_log_dnorm = -math.inf
    max_log_dentry = -math.inf
    status = OK
    done = 0

    for t in range(steps):
        # --- branch selection, row tables, next point -------------------
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
            quot[0] = math.floor(1.0 / x1)
            quot[1] = 1.0
            for j in range(1, d):
                quot[j + 1] = math.floor(x[j] / x1)
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
            # intermediate / garrity share the subtract-count split
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
                s2 = 0.0
                for i in range(d - 1):
                    s2 = s2 + x[i]
                rem = 1.0 - s2
                ell = math.floor(rem / xd)
                rr = rem - ell * xd
                if rr < 0.0:
                    rr = 0.0
                for i in range(d - 1):
                    src1[i] = 0
                    co1[i] = 1.0
                    src2[i] = i + 1
                    co2[i] = 1.0
                if ell != 0.0:
                    src1[d - 1] = 0
                    co1[d - 1] = ell
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
                        src2[i] = sh
                        co2[i] = 1.0 if sh >= 0 else 0.0
                        if sh < 0:
                            src2[i] = -1
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

        # --- difference-cocycle update:  wd <- D1 . wd ------------------
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
        wd, newd = newd, wd

        # --- matrix-cocycle update:  wa <- A . wa -----------------------
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
        wa, newa = newa, wa

        for j in range(nx):
            x[j] = newx[j]
        done = t + 1

        # --- renormalization ---------------------------------------------
        if renorm > 0 and (n0 + done) % renorm == 0:
            piv = wd[0]
            if piv == 0.0:
                piv = _largest(wd, nd2)
            if piv == 0.0 or not math.isfinite(piv):
                status = NONFINITE
                break
            for j in range(nd2):
                wd[j] = wd[j] / piv
            ledger_d += math.log(abs(piv))
            piv = wa[0]
            if piv == 0.0:
                piv = _largest(wa, na2)
            if piv == 0.0 or not math.isfinite(piv):
                status = NONFINITE
                break
            for j in range(na2):
                wa[j] = wa[j] / piv
            ledger_a += math.log(abs(piv))

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
                v = ledger_d + math.log(nrm)
                if v > max_log_dnorm:
                    max_log_dnorm = v
            if ent > 0.0:
                v = ledger_d + math.log(ent)
                if v > max_log_dentry:
                    max_log_dentry = v

    return (status, ledger_a, ledger_d, max_log_dnorm, max_log_dentry, done,
            x, wa, wd)


def _largest(buf, n):
    best = 0.0
    besta = 0.0
    for j in range(n):
        v = buf[j]
        a = -v if v < 0.0 else v
        if a > besta:
            besta = a
            best = v
    return best
