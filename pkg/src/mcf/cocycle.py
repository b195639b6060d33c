"""Matrix cocycles: exact accumulation, exterior squares, and the
renormalized floating-point iteration.

The matrix cocycle multiplies one branch matrix per step on the left.
The difference cocycle is the restriction of the same product to the
hyperplane orthogonal to the lifted point, expressed in the chart that
drops the leading coordinate; its top Lyapunov exponent is the second
exponent of the matrix cocycle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction

from . import _backend
from .algorithms import AlgorithmId, step
from .core import IntMatrix, RationalMatrix, SimplexPoint


def chart_coords(x: SimplexPoint) -> tuple:
    """Chart coordinates entering the difference cocycle.

    For triangle points this is the pair of coordinate ratios against
    the leading coordinate; for all other domains it is the point
    itself.
    """
    c = x.coords
    if x.domain == "triangle":
        return (c[1] / c[0], c[2] / c[0])
    return c


def h_matrix(x: SimplexPoint) -> RationalMatrix:
    """(d+1) x d basis of the hyperplane annihilated by the lifted point:
    a negated-coordinates row over an identity block."""
    xt = [Fraction(v) for v in chart_coords(x)]
    d = len(xt)
    rows = [tuple(-v for v in xt)]
    for i in range(d):
        rows.append(tuple(1 if j == i else 0 for j in range(d)))
    return RationalMatrix(rows)


def pi_matrix(d: int) -> RationalMatrix:
    """d x (d+1) projection dropping the leading coordinate."""
    return RationalMatrix(
        tuple(tuple(1 if j == i + 1 else 0 for j in range(d + 1)) for i in range(d))
    )


def accumulate_A(alg: AlgorithmId, x: SimplexPoint, n: int) -> IntMatrix:
    """Exact n-step product of branch matrices, later steps on the left."""
    acc = IntMatrix.identity(alg.dim + 1)
    for _ in range(n):
        s = step(alg, x)
        acc = s.matrix @ acc
        x = s.next
    return acc


def orbit_word(alg: AlgorithmId, x: SimplexPoint, n: int) -> list:
    """Branch labels of the first n steps."""
    word = []
    for _ in range(n):
        s = step(alg, x)
        word.append(s.branch)
        x = s.next
    return word


def d_matrix(a_n: IntMatrix, x: SimplexPoint) -> RationalMatrix:
    """Difference cocycle at x for an accumulated matrix: the d x d
    matrix with entries  a[i+1][j+1] - a[i+1][0] * x_j  (exact)."""
    xt = [Fraction(v) for v in chart_coords(x)]
    d = len(xt)
    if a_n.n != d + 1:
        raise ValueError("matrix size does not match point dimension")
    rows = a_n.rows
    return RationalMatrix(
        tuple(
            tuple(rows[i + 1][j + 1] - rows[i + 1][0] * xt[j] for j in range(d))
            for i in range(d)
        )
    )


def _pairs(n: int) -> list:
    return [(i, j) for i in range(n) for j in range(i + 1, n)]


def wedge2(m):
    """Second exterior power: the matrix of 2x2 minors in lexicographic
    pair order.  Accepts IntMatrix, RationalMatrix, or nested lists."""
    if isinstance(m, IntMatrix):
        rows = m.rows
        wrap = IntMatrix
    elif isinstance(m, RationalMatrix):
        rows = m.rows
        if len(rows) != len(rows[0]):
            raise ValueError("square matrix required")
        wrap = RationalMatrix
    else:
        rows = [list(r) for r in m]
        wrap = None
    n = len(rows)
    if n < 2:
        raise ValueError("second exterior power needs size >= 2")
    ps = _pairs(n)
    out = [
        [
            rows[i][k] * rows[j][l] - rows[i][l] * rows[j][k]
            for (k, l) in ps
        ]
        for (i, j) in ps
    ]
    return wrap(out) if wrap else out


def inf_norm_flat(buf, n: int, stride: int) -> float:
    best = 0.0
    for i in range(n):
        rs = 0.0
        for j in range(stride):
            v = buf[i * stride + j]
            rs += -v if v < 0.0 else v
        if rs > best:
            best = rs
    return best


@dataclass
class CocycleState:
    """Renormalized float iteration state.

    `wa` and `wd` are flat row-major working matrices normalized so the
    reconstruction  log |cocycle| = ledger + log |working matrix| holds;
    after each renormalization their top-left entry is 1 (or the matrix
    is scaled by its largest entry when that coefficient vanishes).
    """

    alg: AlgorithmId
    point: tuple
    wa: list
    wd: list
    ledger_a: float = 0.0
    ledger_d: float = 0.0
    n: int = 0
    renorm: int = 1024

    def log_norm_a(self) -> float:
        na = self.alg.dim + 1
        return self.ledger_a + math.log(inf_norm_flat(self.wa, na, na))

    def log_norm_d(self) -> float:
        d = self.alg.dim
        return self.ledger_d + math.log(inf_norm_flat(self.wd, d, d))


def new_state(alg: AlgorithmId, x: SimplexPoint, renorm: int = 1024) -> CocycleState:
    d = alg.dim
    na = d + 1
    wa = [0.0] * (na * na)
    for i in range(na):
        wa[i * na + i] = 1.0
    wd = [0.0] * (d * d)
    for i in range(d):
        wd[i * d + i] = 1.0
    pt = tuple(float(v) for v in x.coords)
    return CocycleState(alg, pt, wa, wd, renorm=renorm)


def renorm_iterate(state: CocycleState, steps: int, monitor: bool = False):
    """Advance the renormalized iteration; returns (state, info).

    info carries the kernel status and, in monitor mode, running maxima
    of log |difference cocycle| (norm and entry).
    """
    code = _backend.ALG_CODE[state.alg.name]
    (status, la, ld, mnorm, mentry, done, x, wa, wd) = _backend.run_segment(
        code,
        state.alg.dim,
        list(state.point),
        state.wa,
        state.wd,
        state.ledger_a,
        state.ledger_d,
        state.n,
        steps,
        state.renorm,
        1 if monitor else 0,
    )
    new = replace(
        state,
        point=tuple(x),
        wa=list(wa),
        wd=list(wd),
        ledger_a=la,
        ledger_d=ld,
        n=state.n + done,
    )
    info = {
        "status": status,
        "steps_done": done,
        "max_log_dnorm": mnorm,
        "max_log_dentry": mentry,
    }
    return new, info


def jacobi_singular_values(rows) -> list:
    """Singular values by one-sided Jacobi iteration (descending).

    Adequate for the small working matrices monitored here; converges
    to ~1e-12 relative on well-scaled inputs.
    """
    a = [[float(v) for v in r] for r in rows]
    n = len(a)
    cols = [[a[i][j] for i in range(n)] for j in range(n)]
    for _ in range(60):
        off = 0.0
        for p in range(n):
            for q in range(p + 1, n):
                app = sum(v * v for v in cols[p])
                aqq = sum(v * v for v in cols[q])
                apq = sum(cols[p][i] * cols[q][i] for i in range(n))
                if app == 0.0 or aqq == 0.0:
                    continue
                off = max(off, abs(apq) / math.sqrt(app * aqq))
                if apq == 0.0:
                    continue
                tau = (aqq - app) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.sqrt(1.0 + tau * tau))
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = c * t
                for i in range(n):
                    vp = cols[p][i]
                    vq = cols[q][i]
                    cols[p][i] = c * vp - s * vq
                    cols[q][i] = s * vp + c * vq
        if off < 1e-13:
            break
    sv = sorted((math.sqrt(sum(v * v for v in col)) for col in cols), reverse=True)
    return sv
