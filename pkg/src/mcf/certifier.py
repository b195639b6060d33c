"""Certified upper bounds on the second Lyapunov exponent of the
subtract-the-smallest algorithm in dimensions 2 and 3.

The bound is a weighted sum over all branch words of a fixed even
depth: each word's cylinder is a simplex whose vertices are projective
images of the absorbing-set vertices under the word product, the
difference-cocycle norm is maximized over the cylinder (it is convex,
so vertex values dominate), and the invariant measure is enclosed
through its density, whose coordinate factors are monotone in the
vertex coordinates.  All floating-point operations round toward the
bounding direction, so the emitted number is a true upper bound.

An optional refinement level subdivides every nonsingular cylinder
`refine` times at edge midpoints and charges each piece its own vertex
weight and measure enclosure; the sum inequality holds piece by piece,
so refinement only tightens the bound while staying rigorous.

Cylinders where the density is unbounded (a vertex coordinate is zero)
cannot use a per-cylinder measure upper bound; positive-weight singular
cylinders are pooled and charged with the complement of the accounted
measure, or with an externally certified measure value.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from . import _backend
from .algorithms import SELMER, AlgorithmId, branch_matrix
from .core import (
    ORDERED_SIMPLEX,
    ConsistencyError,
    IntMatrix,
    KernelPrecisionError,
    Simplex,
    SimplexPoint,
    simplex_volume,
)
from .rounding import (
    C2_HI,
    C2_LO,
    C3_HI,
    C3_LO,
    DirectedFloat,
    add_down,
    add_up,
    div_down,
    div_up,
    down,
    log_ratio_up,
    mul_down,
    mul_up,
    ratio_down,
    ratio_up,
    up,
)

SIGMA_MINUS = "sigma_minus"
SIGMA_PLUS = "sigma_plus"
SINGULAR_PLUS = "singular_plus"

# conservative max single-step growth of the difference cocycle on the
# absorbing set (row sums of the one-step matrix), used to close subtrees
STEP_GROWTH = {2: 2, 3: 3}

_FACT = {2: 2, 3: 6}


def _c_bounds(dim: int):
    if dim == 2:
        return C2_LO, C2_HI
    if dim == 3:
        return C3_LO, C3_HI
    raise ValueError("certification supports dimensions 2 and 3 only")


def base_simplex(dim: int) -> Simplex:
    """Simplex hull of the absorbing set (the region where the last two
    coordinates sum to at least 1)."""
    if dim == 2:
        vs = [(1, 1), (1, 0), (Fraction(1, 2), Fraction(1, 2))]
    elif dim == 3:
        vs = [
            (1, 1, 1),
            (1, 1, 0),
            (1, Fraction(1, 2), Fraction(1, 2)),
            (Fraction(1, 2),) * 3,
        ]
    else:
        raise ValueError("certification supports dimensions 2 and 3 only")
    return Simplex(tuple(SimplexPoint(tuple(map(Fraction, v)), ORDERED_SIMPLEX) for v in vs))


def base_lifts(dim: int) -> tuple:
    """Integer-scaled homogeneous lifts of the base-simplex vertices."""
    if dim == 2:
        return ((1, 1, 1), (1, 1, 0), (2, 1, 1))
    if dim == 3:
        return ((1, 1, 1, 1), (1, 1, 1, 0), (2, 2, 1, 1), (2, 1, 1, 1))
    raise ValueError("certification supports dimensions 2 and 3 only")


def base_measure(dim: int) -> Fraction:
    return simplex_volume(base_simplex(dim))


def _letter_matrices(dim: int) -> dict:
    alg = AlgorithmId(SELMER, dim)
    return {"a": branch_matrix(alg, "a"), "b": branch_matrix(alg, "b")}


# ---------------------------------------------------------------------------
# exact per-node quantities


def _vertex_lifts(p_rows, lifts, n):
    return [
        tuple(sum(l[i] * p_rows[i][j] for i in range(n)) for j in range(n))
        for l in lifts
    ]


def _max_dnorm_fraction(p_rows, ys, d):
    """Max over vertices of the difference-cocycle sup norm, exact."""
    bn, bd = -1, 1
    for y in ys:
        y0 = y[0]
        if y0 <= 0:
            raise ConsistencyError("nonpositive vertex denominator")
        m = 0
        for i in range(1, d + 1):
            rs = 0
            for j in range(1, d + 1):
                v = p_rows[i][j] * y0 - p_rows[i][0] * y[j]
                rs += v if v >= 0 else -v
            if rs > m:
                m = rs
        if m * bd > bn * y0:
            bn, bd = m, y0
    return bn, bd


def _coord_extremes(ys, d):
    """Per coordinate, the (num, den) pairs of the min and max vertex value."""
    mins = []
    maxs = []
    for j in range(1, d + 1):
        lo = hi = None
        for y in ys:
            pair = (y[j], y[0])
            if lo is None:
                lo = hi = pair
                continue
            if pair[0] * lo[1] < lo[0] * pair[1]:
                lo = pair
            if pair[0] * hi[1] > hi[0] * pair[1]:
                hi = pair
        mins.append(lo)
        maxs.append(hi)
    return mins, maxs


def _vol_bounds(ys, dim):
    """Directed enclosure of the cylinder volume 1/(d! * prod y0)."""
    lo = 1.0
    hi = 1.0
    for y in ys:
        f = float(y[0])
        lo = _down2(lo / f)
        hi = _up2(hi / f)
    f = float(_FACT[dim])
    return _down2(lo / f), _up2(hi / f)


def _down2(v):
    return math.nextafter(math.nextafter(v, -math.inf), -math.inf)


def _up2(v):
    return math.nextafter(math.nextafter(v, math.inf), math.inf)


def _weight_up(num, den):
    if num == den:
        return 0.0
    return log_ratio_up(num, den)


def _lower_meas(maxs, vol_lo, c_lo):
    m = c_lo
    for (a, b) in maxs:
        m = mul_down(m, ratio_down(b, a))
    return mul_down(m, vol_lo)


def _upper_meas(mins, vol_hi, c_hi):
    m = c_hi
    for (a, b) in mins:
        m = mul_up(m, ratio_up(b, a))
    return mul_up(m, vol_hi)


def _close_score(mins, ys, dim):
    """Integer upper bound of log2(measure upper bound * weight factor);
    exact data only, so every backend makes identical decisions."""
    s = 3 + 7 + 1
    for (a, b) in mins:
        if a == 0:
            return None  # singular: not closeable
        s += b.bit_length() - a.bit_length() + 1
    c = _FACT[dim]
    for y in ys:
        c *= y[0]
    s -= c.bit_length()
    return s


# ---------------------------------------------------------------------------
# refined pieces (directed doubles; the compiled kernel mirrors this)

_SUBDIV3 = ((0, (0, 1), (0, 2)), (1, (0, 1), (1, 2)), (2, (0, 2), (1, 2)),
            ((0, 1), (1, 2), (0, 2)))
_SUBDIV4 = (
    (0, (0, 1), (0, 2), (0, 3)),
    (1, (0, 1), (1, 2), (1, 3)),
    (2, (0, 2), (1, 2), (2, 3)),
    (3, (0, 3), (1, 3), (2, 3)),
    ((0, 1), (2, 3), (0, 2), (1, 2)),
    ((0, 1), (2, 3), (1, 2), (1, 3)),
    ((0, 1), (2, 3), (1, 3), (0, 3)),
    ((0, 1), (2, 3), (0, 3), (0, 2)),
)


def _root_piece(ys, d):
    vlo = []
    vhi = []
    for y in ys:
        vlo.append([ratio_down(y[j], y[0]) for j in range(1, d + 1)])
        vhi.append([ratio_up(y[j], y[0]) for j in range(1, d + 1)])
    return vlo, vhi


def _split_piece(vlo, vhi, d):
    """Midpoint subdivision: 4 triangles (d=2) or 8 tetrahedra (d=3)."""
    spec = _SUBDIV3 if d == 2 else _SUBDIV4

    def pt(tag):
        if isinstance(tag, int):
            return vlo[tag][:], vhi[tag][:]
        a, b = tag
        lo = [down(vlo[a][j] + vlo[b][j]) * 0.5 for j in range(d)]
        hi = [up(vhi[a][j] + vhi[b][j]) * 0.5 for j in range(d)]
        return lo, hi

    out = []
    for tags in spec:
        pts = [pt(t) for t in tags]
        out.append(([p[0] for p in pts], [p[1] for p in pts]))
    return out


def _piece_norm_up(p_rows, vlo, vhi, d):
    """Upper bound of the max difference-cocycle sup norm over the piece
    vertices (which dominates the piece by convexity)."""
    best = 0.0
    for t in range(d + 1):
        vmax = 0.0
        for i in range(1, d + 1):
            rs = 0.0
            q = float(p_rows[i][0])
            for j in range(1, d + 1):
                p = float(p_rows[i][j])
                e_hi = up(p - mul_down(q, vlo[t][j - 1]))
                e_lo = down(p - mul_up(q, vhi[t][j - 1]))
                a = e_hi if e_hi >= 0.0 else -e_hi
                b = e_lo if e_lo >= 0.0 else -e_lo
                rs = add_up(rs, a if a >= b else b)
            if rs > vmax:
                vmax = rs
        if vmax > best:
            best = vmax
    return best


def _piece_maxprod_up(vlo, vhi, d):
    """Upper bound of max over the piece of the coordinate product."""
    if d == 3:
        m = 1.0
        for j in range(3):
            cj = max(vhi[t][j] for t in range(4))
            m = mul_up(m, cj)
        return m
    # d == 2: edge maxima of a bilinear form plus a curvature term
    best = 0.0
    for (t, u) in ((0, 1), (0, 2), (1, 2)):
        d1_lo = down(vlo[u][0] - vhi[t][0])
        d1_hi = up(vhi[u][0] - vlo[t][0])
        d2_lo = down(vlo[u][1] - vhi[t][1])
        d2_hi = up(vhi[u][1] - vlo[t][1])
        a_lo = min(
            mul_down(d1_lo, d2_lo), mul_down(d1_lo, d2_hi),
            mul_down(d1_hi, d2_lo), mul_down(d1_hi, d2_hi),
        )
        bonus = (-a_lo if a_lo < 0.0 else 0.0) * 0.25
        f_t = mul_up(vhi[t][0], vhi[t][1])
        f_u = mul_up(vhi[u][0], vhi[u][1])
        cand = add_up(f_t if f_t >= f_u else f_u, bonus)
        if cand > best:
            best = cand
    return best


def _piece_minprod_down(vlo, d):
    best = math.inf
    for t in range(d + 1):
        m = 1.0
        for j in range(d):
            m = mul_down(m, vlo[t][j])
        if m < best:
            best = m
    return best


# ---------------------------------------------------------------------------
# cylinder API


@dataclass(frozen=True)
class Cylinder:
    """A branch word with its exact simplex geometry."""

    word: str
    matrix: IntMatrix
    vertices: tuple
    volume: Fraction
    singular: bool

    @property
    def depth(self) -> int:
        return len(self.word)


def _cylinder_from_product(word, p_rows, dim):
    n = dim + 1
    ys = _vertex_lifts(p_rows, base_lifts(dim), n)
    verts = []
    singular = False
    for y in ys:
        if y[0] <= 0:
            raise ConsistencyError("nonpositive vertex denominator")
        coords = tuple(Fraction(y[j], y[0]) for j in range(1, n))
        if any(v == 0 for v in coords):
            singular = True
        verts.append(SimplexPoint(coords, ORDERED_SIMPLEX))
    c = 1
    for y in ys:
        c *= y[0]
    vol = Fraction(1, _FACT[dim] * c)
    return Cylinder(word, IntMatrix(p_rows), tuple(verts), vol, singular)


def enumerate_cylinders(dim: int, depth: int):
    """Depth-first stream of all depth-`depth` cylinders ('a' before 'b');
    each node updates the running product incrementally."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    mats = _letter_matrices(dim)
    rows = {c: m.rows for c, m in mats.items()}
    n = dim + 1
    ident = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))

    def rec(word, p_rows):
        if len(word) == depth:
            yield _cylinder_from_product(word, p_rows, dim)
            return
        for c in ("a", "b"):
            m = rows[c]
            child = tuple(
                tuple(sum(m[i][k] * p_rows[k][j] for k in range(n)) for j in range(n))
                for i in range(n)
            )
            yield from rec(word + c, child)

    yield from rec("", ident)


def _cylinder_lifts(c: Cylinder):
    ys = []
    for v in c.vertices:
        den = 1
        for x in v.coords:
            q = Fraction(x).denominator
            den = den * q // math.gcd(den, q)
        ys.append((den,) + tuple(int(x * den) for x in v.coords))
    return ys


def cylinder_weight(c: Cylinder):
    """(exact max difference-cocycle norm over vertices, upward log)."""
    d = c.vertices[0].dim
    ys = _cylinder_lifts(c)
    num, den = _max_dnorm_fraction(c.matrix.rows, ys, d)
    return Fraction(num, den), DirectedFloat(_weight_up(num, den), "up")


def measure_bounds(c: Cylinder, dim: int):
    """Directed (lower, upper) enclosure of the invariant measure of the
    cylinder; upper is +inf when the density is unbounded on it."""
    c_lo, c_hi = _c_bounds(dim)
    ys = _cylinder_lifts(c)
    mins, maxs = _coord_extremes(ys, dim)
    vol_lo = ratio_down(c.volume.numerator, c.volume.denominator)
    vol_hi = ratio_up(c.volume.numerator, c.volume.denominator)
    lower = DirectedFloat(_lower_meas(maxs, vol_lo, c_lo), "down")
    if any(a == 0 for a, _ in mins):
        return lower, DirectedFloat(math.inf, "up")
    return lower, DirectedFloat(_upper_meas(mins, vol_hi, c_hi), "up")


# ---------------------------------------------------------------------------
# subtree accumulation (pure Python path; the compiled kernel mirrors it)


class _Acc:
    __slots__ = (
        "s_minus", "s_plus", "s_closed", "lower_sum", "unscaled",
        "n_minus", "n_plus", "n_sing", "n_closed", "nodes", "leaves",
        "sing_num", "sing_den", "allb_sing", "vol_lo", "vol_hi",
        "tiling_checked", "tiling_skipped", "tiling_failures", "max_entry",
    )

    def __init__(self):
        self.s_minus = 0.0
        self.s_plus = 0.0
        self.s_closed = 0.0
        self.lower_sum = 0.0
        self.unscaled = 0.0
        self.n_minus = 0
        self.n_plus = 0
        self.n_sing = 0
        self.n_closed = 0
        self.nodes = 0
        self.leaves = 0
        self.sing_num = 0
        self.sing_den = 1
        self.allb_sing = False
        self.vol_lo = 0.0
        self.vol_hi = 0.0
        self.tiling_checked = 0
        self.tiling_skipped = 0
        self.tiling_failures = 0
        self.max_entry = 1

    def to_dict(self):
        return {k: getattr(self, k) for k in self.__slots__}


def _walk_subtree_py(dim, depth, prefix_len, p_rows, all_b_prefix,
                     aggregate, agg_log2, refine):
    """Enumerate one subtree with exact integers, accumulating directed
    sums.  Mirrored by the compiled kernel."""
    n = dim + 1
    d = dim
    lifts = base_lifts(dim)
    c_lo, c_hi = _c_bounds(dim)
    log_b_up = log_ratio_up(STEP_GROWTH[dim], 1)
    piece_scale = 0.25 if dim == 2 else 0.125
    mats = _letter_matrices(dim)
    rowmaps = {c: m.rows for c, m in mats.items()}
    acc = _Acc()

    def node(p_rows, m, all_b):
        acc.nodes += 1
        ys = _vertex_lifts(p_rows, lifts, n)
        e = max(max(abs(v) for v in r) for r in p_rows)
        if e > acc.max_entry:
            acc.max_entry = e
        cprod = 1
        for y in ys:
            if y[0] <= 0:
                raise ConsistencyError("nonpositive vertex denominator")
            cprod *= y[0]
        if m == depth:
            _leaf(p_rows, ys, all_b)
            return cprod
        if aggregate and m > prefix_len:
            mins, _ = _coord_extremes(ys, d)
            score = _close_score(mins, ys, dim)
            if score is not None and score <= agg_log2:
                _close(p_rows, ys, mins, m)
                return cprod
        ca = cb = None
        for letter in ("a", "b"):
            rm = rowmaps[letter]
            child = tuple(
                tuple(sum(rm[i][k] * p_rows[k][j] for k in range(n)) for j in range(n))
                for i in range(n)
            )
            cc = node(child, m + 1, all_b and letter == "b")
            if letter == "a":
                ca = cc
            else:
                cb = cc
        # local tiling identity: child volumes sum to the parent volume
        if cprod * (ca + cb) == ca * cb:
            acc.tiling_checked += 1
        else:
            acc.tiling_failures += 1
        return cprod

    def _leaf(p_rows, ys, all_b):
        acc.leaves += 1
        num, den = _max_dnorm_fraction(p_rows, ys, d)
        mins, maxs = _coord_extremes(ys, d)
        vol_lo, vol_hi = _vol_bounds(ys, dim)
        acc.vol_lo = add_down(acc.vol_lo, vol_lo)
        acc.vol_hi = add_up(acc.vol_hi, vol_hi)
        singular = any(a == 0 for a, _ in mins)
        w_up = _weight_up(num, den)
        if num >= den and singular:
            acc.n_sing += 1
            if all_b:
                acc.allb_sing = True
            if num * acc.sing_den > acc.sing_num * den:
                acc.sing_num, acc.sing_den = num, den
            return
        if num >= den:
            acc.n_plus += 1
        else:
            acc.n_minus += 1
            if dim == 2:
                m = 1.0
                for (a, b) in maxs:
                    m = mul_down(m, ratio_down(b, a))
                m = mul_down(m, vol_lo)
                acc.unscaled = add_up(acc.unscaled, mul_up(m, w_up))
        if refine > 0 and not singular:
            _leaf_pieces(p_rows, ys, vol_lo, vol_hi)
            return
        lower = _lower_meas(maxs, vol_lo, c_lo)
        if lower < 0:
            raise ConsistencyError("negative measure lower bound")
        acc.lower_sum = add_down(acc.lower_sum, lower)
        if num >= den:
            upper = _upper_meas(mins, vol_hi, c_hi)
            acc.s_plus = add_up(acc.s_plus, mul_up(upper, w_up))
        else:
            acc.s_minus = add_up(acc.s_minus, mul_up(lower, w_up))

    def _leaf_pieces(p_rows, ys, vol_lo, vol_hi):
        vlo, vhi = _root_piece(ys, d)
        stack = [(vlo, vhi, vol_lo, vol_hi, refine)]
        while stack:
            vlo, vhi, plo, phi, lvl = stack.pop()
            if lvl > 0:
                slo = mul_down(plo, piece_scale)
                shi = mul_up(phi, piece_scale)
                for piece in reversed(_split_piece(vlo, vhi, d)):
                    stack.append((piece[0], piece[1], slo, shi, lvl - 1))
                continue
            norm_up = _piece_norm_up(p_rows, vlo, vhi, d)
            if norm_up == 1.0:
                w_up = 0.0
            else:
                w_up = up(up(math.log(norm_up)))
            lower = mul_down(mul_down(c_lo, div_down(1.0, _piece_maxprod_up(vlo, vhi, d))), plo)
            if lower < 0:
                raise ConsistencyError("negative measure lower bound")
            acc.lower_sum = add_down(acc.lower_sum, lower)
            if w_up > 0.0:
                mp = _piece_minprod_down(vlo, d)
                if mp <= 0.0:
                    raise ConsistencyError("nonpositive piece product")
                upper = mul_up(mul_up(c_hi, div_up(1.0, mp)), phi)
                acc.s_plus = add_up(acc.s_plus, mul_up(upper, w_up))
            elif w_up < 0.0:
                acc.s_minus = add_up(acc.s_minus, mul_up(lower, w_up))

    def _close(p_rows, ys, mins, m):
        acc.n_closed += 1
        num, den = _max_dnorm_fraction(p_rows, ys, d)
        _, maxs = _coord_extremes(ys, d)
        vol_lo, vol_hi = _vol_bounds(ys, dim)
        acc.vol_lo = add_down(acc.vol_lo, vol_lo)
        acc.vol_hi = add_up(acc.vol_hi, vol_hi)
        w_up = _weight_up(num, den)
        beta = add_up(w_up, mul_up(float(depth - m), log_b_up))
        lower = _lower_meas(maxs, vol_lo, c_lo)
        acc.lower_sum = add_down(acc.lower_sum, lower)
        if beta >= 0.0:
            upper = _upper_meas(mins, vol_hi, c_hi)
            acc.s_closed = add_up(acc.s_closed, mul_up(upper, beta))
        else:
            acc.s_closed = add_up(acc.s_closed, mul_up(lower, beta))

    node(p_rows, prefix_len, all_b_prefix)
    return acc.to_dict()


# ---------------------------------------------------------------------------
# driver


@dataclass
class Certificate:
    algorithm: str
    dim: int
    depth: int
    bound: float
    class_counts: dict
    singular_policy: str
    singular_measure: float
    singular_max_log: float
    provenance: str | None
    checksum_num: int
    checksum_den: int
    tiling: dict
    sums: dict
    nodes: int
    leaves: int
    closed: int
    aggregate: bool
    agg_log2: int
    refine: int
    split_depth: int
    tasks: int
    backend: str
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            "schema": 1,
            "kind": "certificate",
            "algorithm": self.algorithm,
            "dim": self.dim,
            "depth": self.depth,
            "bound": self.bound,
            "class_counts": self.class_counts,
            "singular_policy": self.singular_policy,
            "singular_measure": self.singular_measure,
            "singular_max_log": self.singular_max_log,
            "provenance": self.provenance,
            "checksum_num": self.checksum_num,
            "checksum_den": self.checksum_den,
            "tiling": self.tiling,
            "sums": self.sums,
            "nodes": self.nodes,
            "leaves": self.leaves,
            "closed": self.closed,
            "aggregate": self.aggregate,
            "agg_log2": self.agg_log2,
            "refine": self.refine,
            "split_depth": self.split_depth,
            "tasks": self.tasks,
            "backend": self.backend,
            "elapsed_s": self.elapsed_s,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _prefixes(dim, split_depth):
    """Prefix nodes of the split level with their products and local
    tiling verification of the top tree (exact big ints)."""
    mats = _letter_matrices(dim)
    rowmaps = {c: m.rows for c, m in mats.items()}
    n = dim + 1
    lifts = base_lifts(dim)
    ident = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
    out = []
    checked = 0
    failures = 0

    def cprod_of(p_rows):
        c = 1
        for y in _vertex_lifts(p_rows, lifts, n):
            if y[0] <= 0:
                raise ConsistencyError("nonpositive vertex denominator")
            c *= y[0]
        return c

    def rec(word, p_rows):
        nonlocal checked, failures
        if len(word) == split_depth:
            out.append((word, p_rows))
            return cprod_of(p_rows)
        kids = []
        for letter in ("a", "b"):
            rm = rowmaps[letter]
            child = tuple(
                tuple(sum(rm[i][k] * p_rows[k][j] for k in range(n)) for j in range(n))
                for i in range(n)
            )
            kids.append(rec(word + letter, child))
        cp = cprod_of(p_rows)
        if cp * (kids[0] + kids[1]) == kids[0] * kids[1]:
            checked += 1
        else:
            failures += 1
        return cp

    rec("", ident)
    return out, checked, failures


def _run_subtree(args):
    (dim, depth, word, p_rows, aggregate, agg_log2, refine, use_kernel) = args
    all_b = set(word) <= {"b"}
    if use_kernel and _backend.cert_subtree is not None:
        flat = [v for r in p_rows for v in r]
        return _backend.cert_subtree(dim, depth, len(word), flat, 1 if all_b else 0,
                                     1 if aggregate else 0, agg_log2, refine)
    return _walk_subtree_py(dim, depth, len(word), p_rows, all_b,
                            aggregate, agg_log2, refine)


def certify(dim: int, depth: int, *, tasks: int = 1, split_depth: int = 8,
            aggregate: bool = False, agg_log2: int = -44, refine: int = 0,
            singular_measure: float | None = None, provenance: str | None = None,
            force_python: bool = False) -> Certificate:
    """Enumerate all depth-`depth` words and emit a certified upper
    bound for the second Lyapunov exponent.

    With `singular_measure`, the pooled singular contribution uses the
    externally certified measure of the all-'b' cylinder instead of the
    complement bound; this requires a provenance tag and is refused
    unless the singular pool is exactly that one cylinder.
    """
    t0 = time.monotonic()
    if dim not in (2, 3):
        raise ValueError("certification supports dimensions 2 and 3 only")
    if depth < 2 or depth % 2:
        raise ValueError("depth must be even and >= 2")
    if not 0 <= refine <= 6:
        raise ValueError("refine must be between 0 and 6")
    if (singular_measure is None) != (provenance is None):
        raise ValueError("external singular measure requires a provenance tag")
    split = min(split_depth, depth)
    use_kernel = _backend.cert_subtree is not None and not force_python

    prefixes, top_checked, top_failures = _prefixes(dim, split)
    args = [
        (dim, depth, word, p_rows, aggregate, agg_log2, refine, use_kernel)
        for word, p_rows in prefixes
    ]

    try:
        if tasks > 1:
            with ProcessPoolExecutor(max_workers=tasks) as pool:
                parts = list(pool.map(_run_subtree, args))
        else:
            parts = [_run_subtree(a) for a in args]
    except KernelPrecisionError:
        # fixed-width fast path would overflow: redo exactly
        args = [a[:-1] + (False,) for a in args]
        parts = [_run_subtree(a) for a in args]
        use_kernel = False

    # merge in prefix order (safe rounding is order-insensitive for the
    # bound; a fixed order keeps outputs bit-identical for any task count)
    tot = _Acc()
    for p in parts:
        tot.s_minus = add_up(tot.s_minus, p["s_minus"])
        tot.s_plus = add_up(tot.s_plus, p["s_plus"])
        tot.s_closed = add_up(tot.s_closed, p["s_closed"])
        tot.lower_sum = add_down(tot.lower_sum, p["lower_sum"])
        tot.unscaled = add_up(tot.unscaled, p["unscaled"])
        tot.vol_lo = add_down(tot.vol_lo, p["vol_lo"])
        tot.vol_hi = add_up(tot.vol_hi, p["vol_hi"])
        for k in ("n_minus", "n_plus", "n_sing", "n_closed", "nodes", "leaves",
                  "tiling_checked", "tiling_skipped", "tiling_failures"):
            setattr(tot, k, getattr(tot, k) + p[k])
        if p["sing_num"] * tot.sing_den > tot.sing_num * p["sing_den"]:
            tot.sing_num, tot.sing_den = p["sing_num"], p["sing_den"]
        tot.allb_sing = tot.allb_sing or p["allb_sing"]
        tot.max_entry = max(tot.max_entry, p["max_entry"])

    if top_failures or tot.tiling_failures:
        raise ConsistencyError("cylinder tiling failed; refusing to certify")

    leb = base_measure(dim)
    if not (Fraction(tot.vol_lo) <= leb <= Fraction(tot.vol_hi)):
        raise ConsistencyError("volume checksum does not enclose the base measure")

    # pooled singular contribution
    if tot.n_sing:
        sing_w_up = _weight_up(tot.sing_num, tot.sing_den)
        if sing_w_up < 0:
            raise ConsistencyError("singular pool with negative max weight")
        if singular_measure is not None:
            if tot.n_sing != 1 or not tot.allb_sing:
                raise ConsistencyError(
                    "external singular measure covers only the all-'b' cylinder, "
                    f"but the pool has {tot.n_sing} cylinders"
                )
            policy = "external"
            sing_meas = float(singular_measure)
        else:
            policy = "complement"
            sing_meas = up(1.0 - tot.lower_sum)
            if sing_meas < 0:
                raise ConsistencyError("complement measure bound negative")
        sing_part = mul_up(sing_meas, sing_w_up)
    else:
        policy = "complement"
        sing_meas = 0.0
        sing_w_up = 0.0
        sing_part = 0.0

    total = add_up(add_up(add_up(tot.s_minus, tot.s_plus), tot.s_closed), sing_part)
    bound = div_up(total, float(depth))

    cert = Certificate(
        algorithm=SELMER,
        dim=dim,
        depth=depth,
        bound=bound,
        class_counts={
            SIGMA_MINUS: tot.n_minus,
            SIGMA_PLUS: tot.n_plus,
            SINGULAR_PLUS: tot.n_sing,
        },
        singular_policy=policy,
        singular_measure=sing_meas,
        singular_max_log=sing_w_up if tot.n_sing else 0.0,
        provenance=provenance,
        checksum_num=leb.numerator,
        checksum_den=leb.denominator,
        tiling={
            "checked": tot.tiling_checked + top_checked,
            "skipped": tot.tiling_skipped,
            "failures": 0,
            "volume_interval": [tot.vol_lo, tot.vol_hi],
        },
        sums={
            "sigma_minus": tot.s_minus,
            "sigma_plus": tot.s_plus,
            "closed": tot.s_closed,
            "singular": sing_part,
            "lower_sum": tot.lower_sum,
            "unscaled_inner": tot.unscaled if dim == 2 else None,
        },
        nodes=tot.nodes + (2**split - 1),
        leaves=tot.leaves,
        closed=tot.n_closed,
        aggregate=aggregate,
        agg_log2=agg_log2,
        refine=refine,
        split_depth=split,
        tasks=tasks,
        backend="compiled" if use_kernel else "python",
        elapsed_s=_elapsed(t0),
    )
    return cert


def _elapsed(t0):
    if os.environ.get("MCF_NO_TIMING"):
        return 0.0
    return time.monotonic() - t0


# ---------------------------------------------------------------------------
# high-precision oracle


def oracle_recompute(dim: int, depth: int, *, prec: int = 220,
                     aggregate: bool = False, agg_log2: int = -44,
                     refine: int = 0, split_depth: int = 8,
                     singular_measure: float | None = None,
                     max_depth: int = 16) -> dict:
    """Recompute the certified sum in >=200-bit interval arithmetic.

    Enclosure of the exact value of the same sum: same term selection,
    same aggregation and piece classifications (decided with the fast
    path's directed doubles), values from exact rational data.  The fast
    path overestimates every term, so its bound never drops below the
    enclosure's lower endpoint.
    """
    from mpmath import iv, mp

    if depth > max_depth:
        raise ValueError(f"oracle depth capped at {max_depth}")
    if dim not in (2, 3):
        raise ValueError("certification supports dimensions 2 and 3 only")
    old = iv.prec
    iv.prec = prec
    try:
        if dim == 2:
            c_iv = 12 / (iv.pi * iv.pi)
        else:
            c_iv = 8 / _zeta3_iv(iv)
        logb = iv.log(iv.mpf(STEP_GROWTH[dim]))
        mats = _letter_matrices(dim)
        rowmaps = {c: m.rows for c, m in mats.items()}
        n = dim + 1
        d = dim
        lifts = base_lifts(dim)
        ident = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
        fact = _FACT[dim]
        split = min(split_depth, depth)
        piece_frac = Fraction(1, 4 if dim == 2 else 8)

        s_minus = iv.mpf(0)
        s_plus = iv.mpf(0)
        s_closed = iv.mpf(0)
        lower_sum = iv.mpf(0)
        sing_num, sing_den = 0, 1
        n_sing = 0
        allb_sing = False

        def frac(a, b=1):
            f = Fraction(a) / Fraction(b)
            return iv.mpf(f.numerator) / iv.mpf(f.denominator)

        def exact_norm(p_rows, verts):
            best = Fraction(0)
            for v in verts:
                for i in range(1, n):
                    rs = sum(abs(p_rows[i][j] - p_rows[i][0] * v[j - 1])
                             for j in range(1, n))
                    if rs > best:
                        best = rs
            return best

        def exact_maxprod(verts):
            if d == 3:
                m = Fraction(1)
                for j in range(3):
                    m *= max(v[j] for v in verts)
                return m
            best = Fraction(0)
            for (t, u) in ((0, 1), (0, 2), (1, 2)):
                a = (verts[u][0] - verts[t][0]) * (verts[u][1] - verts[t][1])
                cand = max(verts[t][0] * verts[t][1], verts[u][0] * verts[u][1])
                if a < 0:
                    cand += (-a) / 4
                if cand > best:
                    best = cand
            return best

        def exact_minprod(verts):
            best = None
            for v in verts:
                m = Fraction(1)
                for j in range(d):
                    m *= v[j]
                if best is None or m < best:
                    best = m
            return best

        def pieces_of(ys):
            """Exact piece vertices paired with the fast path's interval
            data so classification decisions match bit for bit."""
            verts = [tuple(Fraction(y[j], y[0]) for j in range(1, n)) for y in ys]
            vlo, vhi = _root_piece(ys, d)
            stack = [(verts, vlo, vhi, refine)]
            while stack:
                verts, vlo, vhi, lvl = stack.pop()
                if lvl == 0:
                    yield verts, vlo, vhi
                    continue
                spec = _SUBDIV3 if d == 2 else _SUBDIV4

                def pt(tag):
                    if isinstance(tag, int):
                        return verts[tag]
                    a, b = tag
                    return tuple((verts[a][j] + verts[b][j]) / 2 for j in range(d))

                exact_children = [[pt(t) for t in tags] for tags in spec]
                iv_children = _split_piece(vlo, vhi, d)
                for ev, (clo, chi) in zip(reversed(exact_children),
                                          reversed(iv_children)):
                    stack.append((ev, clo, chi, lvl - 1))

        def walk(p_rows, m, all_b):
            nonlocal s_minus, s_plus, s_closed, lower_sum
            nonlocal sing_num, sing_den, n_sing, allb_sing
            ys = _vertex_lifts(p_rows, lifts, n)
            if m == depth or (aggregate and split < m < depth):
                mins, maxs = _coord_extremes(ys, d)
                closing = False
                if m < depth:
                    score = _close_score(mins, ys, dim)
                    closing = score is not None and score <= agg_log2
                    if not closing:
                        _descend(p_rows, m, all_b)
                        return
                num, den = _max_dnorm_fraction(p_rows, ys, d)
                cprod = 1
                for y in ys:
                    cprod *= y[0]
                vol = frac(1, fact * cprod)
                lower = c_iv * vol
                for (a, b) in maxs:
                    lower = lower * frac(b, a)
                if closing:
                    w = iv.log(frac(num, den))
                    beta = w + (depth - m) * logb
                    lower_sum += lower
                    if beta.b >= 0:
                        upper = c_iv * vol
                        for (a, b) in mins:
                            upper = upper * frac(b, a)
                        s_closed += upper * beta
                    else:
                        s_closed += lower * beta
                    return
                singular = any(a == 0 for a, _ in mins)
                if num >= den and singular:
                    n_sing += 1
                    if all_b:
                        allb_sing = True
                    if num * sing_den > sing_num * den:
                        sing_num, sing_den = num, den
                    return
                if refine > 0 and not singular:
                    vol_piece = vol * frac(piece_frac**refine)
                    for verts, vlo, vhi in pieces_of(ys):
                        norm_up = _piece_norm_up(p_rows, vlo, vhi, d)
                        w_up = 0.0 if norm_up == 1.0 else up(up(math.log(norm_up)))
                        nrm = exact_norm(p_rows, verts)
                        mxp = exact_maxprod(verts)
                        lw = c_iv * vol_piece / frac(mxp)
                        lower_sum += lw
                        if w_up > 0.0:
                            mnp = exact_minprod(verts)
                            upv = c_iv * vol_piece / frac(mnp)
                            s_plus += upv * iv.log(frac(nrm))
                        elif w_up < 0.0:
                            s_minus += lw * iv.log(frac(nrm))
                    return
                w = iv.log(frac(num, den))
                lower_sum += lower
                if num >= den:
                    upper = c_iv * vol
                    for (a, b) in mins:
                        upper = upper * frac(b, a)
                    s_plus += upper * w
                else:
                    s_minus += lower * w
                return
            _descend(p_rows, m, all_b)

        def _descend(p_rows, m, all_b):
            for letter in ("a", "b"):
                rm = rowmaps[letter]
                child = tuple(
                    tuple(sum(rm[i][k] * p_rows[k][j] for k in range(n)) for j in range(n))
                    for i in range(n)
                )
                walk(child, m + 1, all_b and letter == "b")

        walk(ident, 0, True)

        if n_sing:
            w = iv.log(frac(sing_num, sing_den))
            if singular_measure is not None:
                if n_sing != 1 or not allb_sing:
                    raise ConsistencyError("external singular measure misuse")
                sing_part = iv.mpf(singular_measure) * w
            else:
                sing_part = (1 - lower_sum) * w
        else:
            sing_part = iv.mpf(0)
        total = (s_minus + s_plus + s_closed + sing_part) / depth
        lo = float(mp.mpf(total.a))
        hi = float(mp.mpf(total.b))
        return {
            "lo": math.nextafter(lo, -math.inf),
            "hi": math.nextafter(hi, math.inf),
            "prec": prec,
            "depth": depth,
            "dim": dim,
            "refine": refine,
            "n_sing": n_sing,
        }
    finally:
        iv.prec = old


def _zeta3_iv(iv):
    """Rigorous enclosure of zeta(3) from the alternating central-binomial
    series: 5/2 * sum (-1)^(n-1) / (n^3 binom(2n,n))."""
    terms = max(iv.prec // 2 + 20, 80)
    s = Fraction(0)
    binom = 2  # binom(2,1)
    last = Fraction(0)
    for k in range(1, terms + 1):
        if k > 1:
            binom = binom * (2 * k) * (2 * k - 1) // (k * k)
        last = Fraction(1, k**3 * binom)
        s += last if k % 2 else -last
    lo = Fraction(5, 2) * (s - last)
    hi = Fraction(5, 2) * (s + last)
    lo_iv = iv.mpf(lo.numerator) / iv.mpf(lo.denominator)
    hi_iv = iv.mpf(hi.numerator) / iv.mpf(hi.denominator)
    return lo_iv + iv.mpf([0, 1]) * (hi_iv - lo_iv)


def oracle_consistency(dim: int, depth: int, **kw) -> dict:
    """Run both paths and report the comparison the tests gate on."""
    cert = certify(dim, depth, **{k: v for k, v in kw.items()
                                  if k in ("tasks", "aggregate", "agg_log2",
                                           "singular_measure", "provenance",
                                           "force_python", "split_depth",
                                           "refine")})
    orc = oracle_recompute(
        dim, depth,
        aggregate=kw.get("aggregate", False),
        agg_log2=kw.get("agg_log2", -44),
        refine=kw.get("refine", 0),
        split_depth=kw.get("split_depth", 8),
        singular_measure=kw.get("singular_measure"),
    )
    return {
        "schema": 1,
        "kind": "oracle",
        "certificate_bound": cert.bound,
        "oracle_lo": orc["lo"],
        "oracle_hi": orc["hi"],
        "safe": cert.bound >= orc["lo"],
        "gap": cert.bound - orc["hi"],
        "dim": dim,
        "depth": depth,
    }
