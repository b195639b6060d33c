"""Branch selection, branch matrices, and one projective step per algorithm.

Every algorithm is described by a piecewise-projective map T on its
domain together with an integer matrix per branch.  The single
consistency contract, enforced in tests for all algorithms, is that

    lift(T x) . A(x)  is a positive scalar multiple of  lift(x).

Maps are applied branch-wise (the sorted order of the image is known
per branch), so map and matrix stay consistent even when floating
point roundoff drifts a point across a branch boundary.

Boundary ties are resolved toward the lexicographically smaller branch
label; boundaries are Lebesgue-null so this never affects estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .core import (
    ORDERED_SIMPLEX,
    TRIANGLE,
    UNIT_CUBE,
    AlgorithmTerminatedError,
    BurnInFailedError,
    DomainError,
    IntMatrix,
    NotInAbsorbingSetError,
    SimplexPoint,
    lift,
    ord_desc,
    proj,
)

SELMER = "selmer"
CASSAIGNE = "cassaigne"
BRUN = "brun"
JACOBI_PERRON = "jacobi_perron"
INTERMEDIATE = "intermediate"
GARRITY = "garrity"

ALGORITHMS = (SELMER, CASSAIGNE, BRUN, JACOBI_PERRON, INTERMEDIATE, GARRITY)

_DOMAIN_OF = {
    SELMER: ORDERED_SIMPLEX,
    BRUN: ORDERED_SIMPLEX,
    INTERMEDIATE: ORDERED_SIMPLEX,
    GARRITY: ORDERED_SIMPLEX,
    JACOBI_PERRON: UNIT_CUBE,
    CASSAIGNE: TRIANGLE,
}


@dataclass(frozen=True)
class AlgorithmId:
    name: str
    dim: int

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.name!r}")
        if self.dim < 2:
            raise ValueError("dimension must be >= 2")
        if self.name == CASSAIGNE and self.dim != 2:
            raise ValueError("the triangle (Cassaigne) algorithm needs dim = 2")

    @property
    def domain(self) -> str:
        return _DOMAIN_OF[self.name]


@dataclass(frozen=True)
class BranchStep:
    branch: object
    matrix: IntMatrix
    next: SimplexPoint


def _check_domain(alg: AlgorithmId, x: SimplexPoint):
    if x.domain != alg.domain:
        raise DomainError(f"{alg.name} expects a {alg.domain} point, got {x.domain}")
    if x.dim != alg.dim:
        raise DomainError(f"dimension mismatch: point {x.dim}, algorithm {alg.dim}")


def in_absorbing_set(x: SimplexPoint) -> bool:
    """Selmer absorbing region: the last two coordinates sum to >= 1."""
    c = x.coords
    return c[-2] + c[-1] >= 1


# ---------------------------------------------------------------------------
# branch selection


def branch(alg: AlgorithmId, x: SimplexPoint):
    """Unique branch label at x, deterministic on boundaries."""
    _check_domain(alg, x)
    c = x.coords
    name = alg.name
    d = alg.dim

    if name == SELMER:
        if not in_absorbing_set(x):
            raise NotInAbsorbingSetError(f"not in absorbing set: {c}")
        return "a" if 2 * c[d - 1] >= 1 else "b"

    if name == CASSAIGNE:
        return "a" if c[0] >= c[2] else "b"

    if name == BRUN:
        r = 1 - c[0]
        return sum(1 for v in c if v > r)

    if name == JACOBI_PERRON:
        if c[0] == 0:
            raise AlgorithmTerminatedError("algorithm terminates: first coordinate 0")
        return _jp_quotients(c)

    if name == INTERMEDIATE:
        k, r = _subtract_count(c)
        return (k, sum(1 for v in c if v > r))

    if name == GARRITY:
        k, r = _subtract_count(c)
        if k <= d - 2:
            return (k, sum(1 for v in c if v > r))
        rem = 1 - sum(c[: d - 1])
        if c[d - 1] == 0:
            raise AlgorithmTerminatedError("algorithm terminates: last coordinate 0")
        return (d - 1, _floor_div(rem, c[d - 1]))

    raise AssertionError(name)


def _jp_quotients(c) -> tuple:
    x1 = c[0]
    one = Fraction(1) if isinstance(x1, (Fraction, int)) else 1.0
    quots = tuple(_floor_div(v, x1) for v in c[1:])
    return (_floor_div(one, x1),) + quots


def _floor_div(a, b) -> int:
    if isinstance(a, (Fraction, int)) and isinstance(b, (Fraction, int)):
        return int(Fraction(a) // Fraction(b))
    return int(math.floor(a / b))


def _subtract_count(c):
    """Largest k with x1+...+xk < 1, and the remainder 1 - that sum."""
    s = c[0] * 0  # zero of the right flavor
    k = 0
    for v in c:
        if s + v < 1:
            s = s + v
            k += 1
        else:
            break
    if k == 0:
        raise AlgorithmTerminatedError("no branch: leading coordinate is 1")
    return k, 1 - s


# ---------------------------------------------------------------------------
# branch matrices

# Rows are lists of (column, coefficient) pairs; the matrix acts on row
# vectors from the right, so row i says where basis vector e_i goes.


def _basis_rows(alg: AlgorithmId, b) -> list:
    name = alg.name
    d = alg.dim

    if name == SELMER:
        rows = [[(i + 1, 1)] for i in range(d - 1)]
        if b == "a":
            rows += [[(0, 1), (d, 1)], [(0, 1)]]
        elif b == "b":
            rows += [[(0, 1)], [(0, 1), (d, 1)]]
        else:
            raise ValueError(f"invalid selmer branch {b!r}")
        return rows

    if name == CASSAIGNE:
        if b == "a":
            return [[(0, 1)], [(0, 1), (2, 1)], [(1, 1)]]
        if b == "b":
            return [[(1, 1)], [(0, 1), (2, 1)], [(2, 1)]]
        raise ValueError(f"invalid cassaigne branch {b!r}")

    if name == BRUN:
        k = b
        if not isinstance(k, int) or not 0 <= k <= d:
            raise ValueError(f"invalid brun branch {b!r}")
        if k == 0:
            return [[(0, 1)], [(0, 1), (1, 1)]] + [[(i, 1)] for i in range(2, d + 1)]
        rows = [[(0, 1), (1, 1)]]
        rows += [[(i + 1, 1)] for i in range(1, k)]
        rows += [[(0, 1)]]
        rows += [[(i, 1)] for i in range(k + 1, d + 1)]
        return rows

    if name == JACOBI_PERRON:
        a0, *aj = b
        if a0 < 1 or any(a < 0 for a in aj) or len(aj) != d - 1:
            raise ValueError(f"invalid jacobi_perron branch {b!r}")
        row0 = [(0, int(a0)), (1, 1)] + [
            (j + 2, int(a)) for j, a in enumerate(aj) if a
        ]
        rows = [row0]
        rows += [[(i + 1, 1)] for i in range(1, d)]
        rows += [[(0, 1)]]
        return rows

    if name in (INTERMEDIATE, GARRITY):
        k, ell = b
        if name == GARRITY and k == d - 1:
            if ell < 0:
                raise ValueError(f"invalid garrity branch {b!r}")
            rows = [[(0, 1), (i + 1, 1)] for i in range(d - 1)]
            rows += [([(0, int(ell))] if ell else []) + [(d, 1)]]
            rows += [[(0, 1)]]
            return rows
        if name == GARRITY and not (1 <= k <= d - 2 and k <= ell <= d):
            raise ValueError(f"invalid garrity branch {b!r}")
        if name == INTERMEDIATE and not (
            (1 <= k < d and k <= ell <= d) or (k == d and 0 <= ell <= d)
        ):
            raise ValueError(f"invalid intermediate branch {b!r}")
        # column 0 collects the subtracted entries and the remainder
        col0 = set(range(min(k, ell))) | {ell} | set(range(ell + 1, k + 1))
        rows = []
        for i in range(d + 1):
            row = [(0, 1)] if i in col0 else []
            if i < ell:
                row.append((i + 1, 1))
            elif i > ell:
                row.append((i, 1))
            rows.append(row)
        return rows

    raise AssertionError(name)


def branch_matrix(alg: AlgorithmId, b) -> IntMatrix:
    """The unimodular (d+1)x(d+1) matrix attached to branch b."""
    n = alg.dim + 1
    rows = _basis_rows(alg, b)
    dense = [[0] * n for _ in range(n)]
    for i, row in enumerate(rows):
        for j, v in row:
            dense[i][j] += v
    return IntMatrix(dense)


# ---------------------------------------------------------------------------
# one projective step


def _image_vector(alg: AlgorithmId, c, b) -> tuple:
    """Homogeneous image, already in the branch's sorted order."""
    name = alg.name
    d = alg.dim

    if name == SELMER:
        if b == "a":
            return c + (1 - c[d - 1],)
        return c[: d - 1] + (1 - c[d - 1], c[d - 1])

    if name == CASSAIGNE:
        x0, x1, x2 = c
        if b == "a":
            return (x0 - x2, x2, x1)
        return (x1, x0, x2 - x0)

    if name == BRUN:
        k = b
        r = 1 - c[0]
        return c[:k] + (r,) + c[k:]

    if name == JACOBI_PERRON:
        a0, *aj = b
        x1 = c[0]
        body = tuple(c[j + 1] - aj[j] * x1 for j in range(d - 1))
        return (x1,) + body + (1 - a0 * x1,)

    if name == INTERMEDIATE:
        k, ell = b
        r = 1 - sum(c[:k])
        return c[:ell] + (r,) + c[ell:]

    if name == GARRITY:
        k, ell = b
        if k <= d - 2:
            r = 1 - sum(c[:k])
            return c[:ell] + (r,) + c[ell:]
        r = 1 - sum(c[: d - 1]) - ell * c[d - 1]
        return c + (r,)

    raise AssertionError(name)


def step(alg: AlgorithmId, x: SimplexPoint) -> BranchStep:
    """Select the branch at x and apply one projective step."""
    b = branch(alg, x)
    y = _image_vector(alg, x.coords, b)
    if alg.name == CASSAIGNE:
        s = sum(y)
        nxt = SimplexPoint(tuple(v / s for v in y), TRIANGLE)
    else:
        nxt = proj(y, alg.domain)
    return BranchStep(b, branch_matrix(alg, b), nxt)


def burn_in(alg: AlgorithmId, x: SimplexPoint, cap: int = 10_000) -> SimplexPoint:
    """Iterate the everywhere-defined Selmer map until the orbit enters
    the absorbing set.  No cocycle is recorded during burn-in."""
    if alg.name != SELMER:
        raise ValueError("burn-in applies to the Selmer algorithm only")
    _check_domain(alg, x)
    d = alg.dim
    c = x.coords
    for _ in range(cap + 1):
        if c[d - 2] + c[d - 1] >= 1:
            return SimplexPoint(c, ORDERED_SIMPLEX)
        y = ord_desc((1 - c[d - 1],) + c)
        c = tuple(v / y[0] for v in y[1:])
    raise BurnInFailedError(f"burn-in failed after {cap} iterations")
