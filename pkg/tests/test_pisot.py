from itertools import product as iter_product

import numpy as np
import pytest

from mcf.algorithms import AlgorithmId, branch_matrix
from mcf.cocycle import d_matrix
from mcf.core import IntMatrix, SimplexPoint
from mcf.pisot import (
    char_poly,
    classify_word,
    condition3,
    is_pisot,
    is_primitive,
    verify_theorem,
    word_matrix,
)

SA = branch_matrix(AlgorithmId("selmer", 2), "a")
SB = branch_matrix(AlgorithmId("selmer", 2), "b")


def test_char_poly_examples():
    # coefficients (c0, c1, c2, 1) of c0 + c1 x + c2 x^2 + x^3
    assert char_poly(SA) == (-1, -1, 0, 1)
    assert char_poly(SB) == (1, -1, -1, 1)
    assert char_poly(IntMatrix.identity(3)) == (-1, 3, -3, 1)


def test_is_primitive_examples():
    assert is_primitive(SA)
    assert not is_primitive(SB)
    assert is_primitive(IntMatrix([[1] * 3] * 3))
    with pytest.raises(ValueError):
        is_primitive(IntMatrix([[-1, 0, 0], [0, 1, 0], [0, 0, 1]]))


def test_is_pisot_examples():
    assert is_pisot(SA)
    assert not is_pisot(SB)
    # plastic-number root moduli: one ~1.3247, complex pair ~0.8689
    roots = np.roots([1, 0, -1, -1])
    dominant = max(abs(r) for r in roots)
    assert abs(dominant - 1.32471795) < 1e-6


def test_pisot_matches_float_root_finding():
    for n in range(1, 9):
        for letters in iter_product("ab", repeat=n):
            w = "".join(letters)
            m = word_matrix(w)
            coeffs = char_poly(m)
            roots = np.roots(list(reversed(coeffs)))
            mods = sorted(abs(r) for r in roots)
            expected = mods[-1] > 1 + 1e-9 and mods[-2] < 1 - 1e-9
            assert is_pisot(m) == expected, w


def test_condition3_matches_matrix_power_definition():
    for n in range(1, 9):
        first = set()
        second = set()
        for blocks in iter_product(((SA @ SB), (SB @ SB)), repeat=n):
            m = IntMatrix.identity(3)
            for b in blocks:
                m = m @ b
            first.add(m.rows)
        for blocks in iter_product(((SB @ SA), (SB @ SB)), repeat=n):
            m = IntMatrix.identity(3)
            for b in blocks:
                m = m @ b
            second.add(m.rows)
        for letters in iter_product("ab", repeat=n):
            w = "".join(letters)
            m2 = word_matrix(w + w)
            assert condition3(w) == (m2.rows not in first | second), w


def test_verify_theorem():
    rep = verify_theorem(10)
    assert rep["words"] == 2046
    assert rep["mismatches"] == []
    assert classify_word("b" * 7).primitive is False
    assert classify_word("b" * 7).pisot is False
    assert classify_word("a").consistent and classify_word("a").pisot
    with pytest.raises(ValueError):
        verify_theorem(15)
    with pytest.raises(ValueError):
        classify_word("abc")


def test_restriction_norm_at_perron_point():
    # for every primitive word the difference cocycle of the doubled word
    # has sup norm at most 1 at the dominant fixed point
    for n in range(1, 11):
        for letters in iter_product("ab", repeat=n):
            w = "".join(letters)
            m = word_matrix(w)
            if not is_primitive(m):
                continue
            arr = np.array(m.rows, dtype=float)
            vals, vecs = np.linalg.eig(arr.T)
            k = int(np.argmax(vals.real))
            v = np.abs(vecs[:, k].real)
            x = SimplexPoint((v[1] / v[0], v[2] / v[0]))
            d = d_matrix(m @ m, x.to_exact())
            assert float(d.inf_norm()) <= 1 + 1e-9, w
