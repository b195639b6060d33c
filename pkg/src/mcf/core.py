"""Exact and floating-point linear algebra and simplex geometry.

Two numeric flavors are used throughout the package: exact rationals
(`fractions.Fraction`) for the certifier, the Pisot classifier and all
geometry, and 64-bit binary floats for the Monte-Carlo estimator.
Conversion between the flavors is always explicit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

Rational = Fraction

# Domain tags for points.
ORDERED_SIMPLEX = "ordered-simplex"   # 1 >= x1 >= ... >= xd >= 0
UNIT_CUBE = "unit-cube"               # [0,1]^d, unordered
TRIANGLE = "triangle"                 # nonnegative coords summing to 1

_DOMAINS = (ORDERED_SIMPLEX, UNIT_CUBE, TRIANGLE)


class DomainError(ValueError):
    """Point is outside the domain an operation expects."""


class NotInAbsorbingSetError(DomainError):
    """Selmer branch requested outside the absorbing set."""


class AlgorithmTerminatedError(DomainError):
    """The map is undefined at this point (zero pivot coordinate)."""


class BurnInFailedError(RuntimeError):
    """Burn-in iteration cap exceeded."""


class KernelPrecisionError(RuntimeError):
    """Fixed-width fast path would overflow; use the exact path."""


class ConsistencyError(RuntimeError):
    """Internal cross-check failed; no result is emitted."""


@dataclass(frozen=True)
class SimplexPoint:
    """A point of one of the three algorithm domains.

    Coordinates are either all floats or all Fractions.  For the
    triangle domain the point carries all three homogeneous
    coordinates; for the other domains it carries the d chart
    coordinates.
    """

    coords: tuple
    domain: str = ORDERED_SIMPLEX

    def __post_init__(self):
        if self.domain not in _DOMAINS:
            raise ValueError(f"unknown domain {self.domain!r}")
        object.__setattr__(self, "coords", tuple(self.coords))

    @property
    def dim(self) -> int:
        # triangle points are 3 homogeneous coordinates for a d=2 system
        if self.domain == TRIANGLE:
            return len(self.coords) - 1
        return len(self.coords)

    @property
    def is_exact(self) -> bool:
        return all(isinstance(c, (Fraction, int)) for c in self.coords)

    def validate(self, tol=0.0):
        c = self.coords
        if self.domain == ORDERED_SIMPLEX:
            seq = (1,) + c + (0,)
            for a, b in zip(seq, seq[1:]):
                if a < b - tol:
                    raise DomainError(f"not descending in [1,0]: {c}")
        elif self.domain == UNIT_CUBE:
            if any(v < -tol or v > 1 + tol for v in c):
                raise DomainError(f"outside unit cube: {c}")
        else:
            if any(v < -tol for v in c):
                raise DomainError(f"negative coordinate: {c}")
            s = sum(c)
            if abs(s - 1) > (tol if tol else 1e-12) and not (
                self.is_exact and s == 1
            ):
                raise DomainError(f"coordinates sum to {s}, not 1")
        return self

    def to_exact(self) -> "SimplexPoint":
        return SimplexPoint(tuple(Fraction(v) for v in self.coords), self.domain)

    def to_float(self) -> "SimplexPoint":
        return SimplexPoint(tuple(float(v) for v in self.coords), self.domain)


def ord_desc(v: Iterable) -> tuple:
    """Sort entries descendingly; stable for ties."""
    return tuple(sorted(v, reverse=True))


def lift(x: SimplexPoint) -> tuple:
    """Homogeneous lift: prepend a unit leading coordinate.

    Triangle points are already homogeneous and are returned as-is.
    """
    if isinstance(x, SimplexPoint):
        if x.domain == TRIANGLE:
            return x.coords
        one = Fraction(1) if x.is_exact else 1.0
        return (one,) + x.coords
    return (1,) + tuple(x)


def proj(y: Sequence, domain: str = ORDERED_SIMPLEX) -> SimplexPoint:
    """Projective chart: divide through by the leading coordinate."""
    if y[0] <= 0:
        raise DomainError("projective chart undefined: leading coordinate <= 0")
    y0 = y[0]
    return SimplexPoint(tuple(v / y0 for v in y[1:]), domain)


class IntMatrix:
    """Immutable square matrix with arbitrary-precision integer entries."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = tuple(tuple(int(v) for v in r) for r in rows)
        n = len(self.rows)
        if any(len(r) != n for r in self.rows):
            raise ValueError("matrix is not square")

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @property
    def n(self) -> int:
        return len(self.rows)

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            br = other.rows
            n = self.n
            return IntMatrix(
                tuple(
                    tuple(sum(a[k] * br[k][j] for k in range(n)) for j in range(n))
                    for a in self.rows
                )
            )
        if isinstance(other, RationalMatrix):
            return self.to_rational() @ other
        return NotImplemented

    def __eq__(self, other):
        return isinstance(other, IntMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"IntMatrix({list(map(list, self.rows))})"

    def row_mul(self, vec: Sequence) -> tuple:
        """Row vector times matrix."""
        n = self.n
        if len(vec) != n:
            raise ValueError("dimension mismatch")
        return tuple(sum(vec[i] * self.rows[i][j] for i in range(n)) for j in range(n))

    def det(self):
        """Exact determinant by fraction-free Bareiss elimination."""
        n = self.n
        m = [list(r) for r in self.rows]
        sign = 1
        prev = 1
        for k in range(n - 1):
            if m[k][k] == 0:
                for i in range(k + 1, n):
                    if m[i][k] != 0:
                        m[k], m[i] = m[i], m[k]
                        sign = -sign
                        break
                else:
                    return 0
            for i in range(k + 1, n):
                for j in range(k + 1, n):
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) // prev
            prev = m[k][k]
        return sign * m[n - 1][n - 1]

    def is_unimodular(self) -> bool:
        return self.det() in (1, -1)

    def max_abs(self) -> int:
        return max(abs(v) for r in self.rows for v in r)

    def to_rational(self) -> "RationalMatrix":
        return RationalMatrix(tuple(tuple(Fraction(v) for v in r) for r in self.rows))

    def to_float_rows(self) -> list:
        return [[float(v) for v in r] for r in self.rows]


class RationalMatrix:
    """Immutable rectangular matrix with exact rational entries."""

    __slots__ = ("rows",)

    def __init__(self, rows):
        self.rows = tuple(tuple(Fraction(v) for v in r) for r in rows)
        if self.rows:
            c = len(self.rows[0])
            if any(len(r) != c for r in self.rows):
                raise ValueError("ragged rows")

    @property
    def shape(self) -> tuple:
        return (len(self.rows), len(self.rows[0]) if self.rows else 0)

    def __matmul__(self, other):
        if isinstance(other, IntMatrix):
            other = other.to_rational()
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        r, k = self.shape
        k2, c = other.shape
        if k != k2:
            raise ValueError("dimension mismatch")
        br = other.rows
        return RationalMatrix(
            tuple(
                tuple(sum(a[t] * br[t][j] for t in range(k)) for j in range(c))
                for a in self.rows
            )
        )

    def __eq__(self, other):
        return isinstance(other, RationalMatrix) and self.rows == other.rows

    def __hash__(self):
        return hash(self.rows)

    def __repr__(self):
        return f"RationalMatrix({list(map(list, self.rows))})"

    def inf_norm(self) -> Fraction:
        """Maximum absolute row sum."""
        return max(sum(abs(v) for v in r) for r in self.rows)

    def max_abs_entry(self) -> Fraction:
        return max(abs(v) for r in self.rows for v in r)


@dataclass(frozen=True)
class Simplex:
    """d+1 rational-coordinate vertices in dimension d."""

    vertices: tuple

    def __post_init__(self):
        object.__setattr__(self, "vertices", tuple(self.vertices))

    @property
    def dim(self) -> int:
        return self.vertices[0].dim


def simplex_volume(s: Simplex) -> Fraction:
    """Lebesgue volume |det(p1-p0, ..., pd-p0)| / d!; zero iff degenerate."""
    verts = [v.coords if isinstance(v, SimplexPoint) else tuple(v) for v in s.vertices]
    d = len(verts[0])
    if len(verts) != d + 1:
        raise ValueError(f"need {d + 1} vertices in dimension {d}, got {len(verts)}")
    p0 = verts[0]
    rows = [
        tuple(Fraction(v[j]) - Fraction(p0[j]) for j in range(d)) for v in verts[1:]
    ]
    det = _frac_det(rows)
    return abs(det) / math.factorial(d)


def _frac_det(rows) -> Fraction:
    m = [list(r) for r in rows]
    n = len(m)
    det = Fraction(1)
    for k in range(n):
        piv = None
        for i in range(k, n):
            if m[i][k] != 0:
                piv = i
                break
        if piv is None:
            return Fraction(0)
        if piv != k:
            m[k], m[piv] = m[piv], m[k]
            det = -det
        det *= m[k][k]
        inv = 1 / Fraction(m[k][k])
        for i in range(k + 1, n):
            f = m[i][k] * inv
            if f:
                for j in range(k, n):
                    m[i][j] -= f * m[k][j]
    return det


def sample_point(domain: str, dim: int, rng) -> SimplexPoint:
    """Draw a Lebesgue-uniform float point of the given domain.

    `rng` is a seeded numpy Generator; identical state gives identical
    points, which the estimator relies on for reproducibility.
    """
    if domain == ORDERED_SIMPLEX:
        u = sorted((float(rng.random()) for _ in range(dim)), reverse=True)
        return SimplexPoint(tuple(u), ORDERED_SIMPLEX)
    if domain == UNIT_CUBE:
        return SimplexPoint(tuple(float(rng.random()) for _ in range(dim)), UNIT_CUBE)
    if domain == TRIANGLE:
        # normalized exponentials: uniform on the 2-simplex
        e = [-math.log(1.0 - float(rng.random())) for _ in range(dim + 1)]
        s = sum(e)
        return SimplexPoint(tuple(v / s for v in e), TRIANGLE)
    raise ValueError(f"unknown domain {domain!r}")
