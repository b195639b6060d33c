"""Directed floating-point rounding.

Every helper takes the result of an IEEE double operation (correctly
rounded to nearest, so within half an ulp) and steps it one
representable value in the bounding direction, guaranteeing the result
is on the safe side of the exact real value.  Ratios of large integers
step twice to also cover the int-to-double conversions.  Logarithms get
an absolute widening that dominates a faithful libm log error budget.

The compiled certifier kernel performs the same operations in the same
order, so both backends produce identical certificate bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

INF = math.inf

# |log| <= 44 for 63-bit integer arguments; a faithful libm log is off
# by <= 1 ulp(44) ~ 7.2e-15 per call, conversions add <= 2.3e-16: a
# 2e-14 absolute widening is a safe cover for log(p) - log(q).
LOG_EPS = 2e-14

# directed enclosures of the invariant-density normalizing constants:
# 12/pi^2 (two coordinates) and 8/zeta(3) (three coordinates)
C2_LO = float.fromhex("0x1.37423899a1557p+0")
C2_HI = float.fromhex("0x1.37423899a1558p+0")
C3_LO = float.fromhex("0x1.a9efc35d12235p+2")
C3_HI = float.fromhex("0x1.a9efc35d12236p+2")


def up(x: float) -> float:
    return math.nextafter(x, INF)


def down(x: float) -> float:
    return math.nextafter(x, -INF)


# Adding or multiplying by an exact zero is exact in IEEE arithmetic,
# so no directed step is needed; this keeps structurally-zero sums at
# exactly zero instead of a few subnormal steps away.


def add_up(a: float, b: float) -> float:
    r = a + b
    return r if (a == 0.0 or b == 0.0) else up(r)


def add_down(a: float, b: float) -> float:
    r = a + b
    return r if (a == 0.0 or b == 0.0) else down(r)


def mul_up(a: float, b: float) -> float:
    r = a * b
    return r if (a == 0.0 or b == 0.0) else up(r)


def mul_down(a: float, b: float) -> float:
    r = a * b
    return r if (a == 0.0 or b == 0.0) else down(r)


def div_up(a: float, b: float) -> float:
    r = a / b
    return r if a == 0.0 else up(r)


def div_down(a: float, b: float) -> float:
    r = a / b
    return r if a == 0.0 else down(r)


def ratio_up(num: int, den: int) -> float:
    """Upper bound of num/den for positive integers up to 2^63."""
    return up(up(float(num) / float(den)))


def ratio_down(num: int, den: int) -> float:
    return down(down(float(num) / float(den)))


def log_ratio_up(num: int, den: int) -> float:
    """Upper bound of log(num/den) for positive integers up to 2^63."""
    return up(up(math.log(num) - math.log(den)) + LOG_EPS)


def log_ratio_down(num: int, den: int) -> float:
    return down(down(math.log(num) - math.log(den)) - LOG_EPS)


@dataclass(frozen=True)
class DirectedFloat:
    """A float together with its rounding direction.

    All arithmetic steps the underlying IEEE result one representable
    value toward the direction, so an 'up' value never underestimates
    and a 'down' value never overestimates the exact result of the same
    operation sequence.  Choosing operands so that the real-interval
    logic is sound is the caller's job.
    """

    value: float
    direction: str = "up"

    def __post_init__(self):
        if self.direction not in ("up", "down"):
            raise ValueError("direction must be 'up' or 'down'")

    def _step(self, v: float) -> "DirectedFloat":
        target = INF if self.direction == "up" else -INF
        return DirectedFloat(math.nextafter(v, target), self.direction)

    @staticmethod
    def _val(x) -> float:
        return x.value if isinstance(x, DirectedFloat) else float(x)

    def add(self, other) -> "DirectedFloat":
        return self._step(self.value + self._val(other))

    def sub(self, other) -> "DirectedFloat":
        return self._step(self.value - self._val(other))

    def mul(self, other) -> "DirectedFloat":
        return self._step(self.value * self._val(other))

    def div(self, other) -> "DirectedFloat":
        return self._step(self.value / self._val(other))

    def flipped(self) -> "DirectedFloat":
        return DirectedFloat(-self.value, "down" if self.direction == "up" else "up")

    @classmethod
    def from_ratio(cls, num: int, den: int, direction: str) -> "DirectedFloat":
        v = ratio_up(num, den) if direction == "up" else ratio_down(num, den)
        return cls(v, direction)

    @classmethod
    def log_of_ratio(cls, num: int, den: int, direction: str) -> "DirectedFloat":
        v = log_ratio_up(num, den) if direction == "up" else log_ratio_down(num, den)
        return cls(v, direction)
