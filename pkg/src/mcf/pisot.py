"""Primitivity and Pisot classification of d=2 branch words.

For a product of the two d=2 branch matrices (a unimodular nonnegative
3x3 integer matrix) the three predicates below coincide: primitivity,
the Pisot property of the characteristic polynomial, and a purely
combinatorial condition on the squared word.  The classifier decides
all three without floating point and the theorem is verified
exhaustively over all short words.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iter_product

from .algorithms import SELMER, AlgorithmId, branch_matrix
from .core import IntMatrix


def _selmer_matrices():
    alg = AlgorithmId(SELMER, 2)
    return branch_matrix(alg, "a"), branch_matrix(alg, "b")


def word_matrix(word: str) -> IntMatrix:
    """Product of branch matrices for a word over {a, b}, later letters
    multiplying on the left (time order)."""
    sa, sb = _selmer_matrices()
    m = IntMatrix.identity(3)
    for c in word:
        m = (sa if c == "a" else sb) @ m
    return m


def char_poly(m: IntMatrix) -> tuple:
    """Monic characteristic polynomial of a 3x3 integer matrix as
    coefficients (c0, c1, c2, 1) of c0 + c1 x + c2 x^2 + x^3."""
    if m.n != 3:
        raise ValueError("3x3 matrix required")
    r = m.rows
    tr = r[0][0] + r[1][1] + r[2][2]
    minors = (
        r[0][0] * r[1][1] - r[0][1] * r[1][0]
        + r[0][0] * r[2][2] - r[0][2] * r[2][0]
        + r[1][1] * r[2][2] - r[1][2] * r[2][1]
    )
    det = m.det()
    return (-det, minors, -tr, 1)


def _poly_at(p: tuple, x: int) -> int:
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def is_primitive(m: IntMatrix) -> bool:
    """Some power up to the Wielandt bound (n-1)^2 + 1 is positive."""
    n = m.n
    if any(v < 0 for r in m.rows for v in r):
        raise ValueError("nonnegative matrix required")
    bound = (n - 1) ** 2 + 1
    b = [[1 if v else 0 for v in r] for r in m.rows]
    p = b
    for _ in range(bound):
        if all(all(v for v in row) for row in p):
            return True
        p = [
            [1 if any(p[i][k] and b[k][j] for k in range(n)) else 0 for j in range(n)]
            for i in range(n)
        ]
    return all(all(v for v in row) for row in p)


def is_pisot(m: IntMatrix) -> bool:
    """Exact Pisot test for a unimodular 3x3 nonnegative integer matrix.

    With |determinant| = 1 the product of the two non-dominant roots has
    modulus 1/rho, so once a real root rho > 1 exists the only way to
    leave the open unit disk is a real root <= -1.  Both possibilities
    are excluded by sign evaluations at +1 and -1:

      p(1) < 0  gives an odd number of roots above 1; three are
                impossible (the root product has modulus 1), so exactly
                one, and it exceeds 1;
      p(-1) < 0 gives an even number of roots below -1; two are
                impossible for the same reason, so none.

    Roots at +-1 make p vanish there and are rejected as well.
    """
    if m.n != 3:
        raise ValueError("3x3 matrix required")
    if m.det() not in (1, -1):
        raise ValueError("unimodular matrix required")
    p = char_poly(m)
    return _poly_at(p, 1) < 0 and _poly_at(p, -1) < 0


def condition3(word: str) -> bool:
    """Squared-word combinatorial condition: the doubled word, read in
    matrix order, is not a concatenation of 'ab'/'bb' blocks nor of
    'ba'/'bb' blocks."""
    w2 = (word + word)[::-1]  # matrix order: later letters first
    in_first = all(w2[i] == "b" for i in range(1, len(w2), 2))
    in_second = all(w2[i] == "b" for i in range(0, len(w2), 2))
    return not (in_first or in_second)


@dataclass(frozen=True)
class WordClassification:
    word: str
    primitive: bool
    pisot: bool
    condition3: bool
    char_poly: tuple

    @property
    def consistent(self) -> bool:
        return self.primitive == self.pisot == self.condition3


def classify_word(word: str) -> WordClassification:
    if not word or set(word) - {"a", "b"}:
        raise ValueError("word must be a nonempty string over {a, b}")
    m = word_matrix(word)
    return WordClassification(
        word=word,
        primitive=is_primitive(m),
        pisot=is_pisot(m),
        condition3=condition3(word),
        char_poly=char_poly(m),
    )


def verify_theorem(max_len: int = 10) -> dict:
    """Exhaustively check the three-way equivalence on all words up to
    max_len; reports counterexamples (expected none)."""
    if max_len > 14:
        raise ValueError("exhaustive scan capped at length 14")
    rows = []
    mismatches = []
    for n in range(1, max_len + 1):
        for letters in iter_product("ab", repeat=n):
            w = "".join(letters)
            cl = classify_word(w)
            rows.append(cl)
            if not cl.consistent:
                mismatches.append(w)
    return {
        "schema": 1,
        "kind": "pisot",
        "max_len": max_len,
        "words": len(rows),
        "mismatches": mismatches,
        "rows": rows,
    }
