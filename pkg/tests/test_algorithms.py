import random
from fractions import Fraction as F

import pytest

from mcf.algorithms import (
    ALGORITHMS,
    AlgorithmId,
    branch,
    branch_matrix,
    burn_in,
    in_absorbing_set,
    step,
)
from mcf.core import (
    ORDERED_SIMPLEX,
    TRIANGLE,
    UNIT_CUBE,
    AlgorithmTerminatedError,
    BurnInFailedError,
    IntMatrix,
    NotInAbsorbingSetError,
    SimplexPoint,
    lift,
)

RNG = random.Random(20240)


def rand_point(alg, rng=RNG, grid=4096):
    d = alg.dim
    if alg.domain == ORDERED_SIMPLEX:
        v = sorted((F(rng.randrange(1, grid), grid) for _ in range(d)), reverse=True)
        return SimplexPoint(tuple(v), ORDERED_SIMPLEX)
    if alg.domain == UNIT_CUBE:
        return SimplexPoint(tuple(F(rng.randrange(1, grid), grid) for _ in range(d)),
                            UNIT_CUBE)
    e = [F(rng.randrange(1, grid), grid) for _ in range(3)]
    s = sum(e)
    return SimplexPoint(tuple(v / s for v in e), TRIANGLE)


def proportional(u, v):
    c = None
    for a, b in zip(u, v):
        if b == 0:
            if a != 0:
                return False
            continue
        r = F(a) / F(b)
        if c is None:
            c = r
        elif r != c:
            return False
    return c is not None and c > 0


# --- branch examples ------------------------------------------------------


def test_selmer_branch_example():
    alg = AlgorithmId("selmer", 2)
    assert branch(alg, SimplexPoint((F(7, 10), F(6, 10)))) == "a"
    # boundary tie resolves to the smaller label
    assert branch(alg, SimplexPoint((F(3, 4), F(1, 2)))) == "a"
    with pytest.raises(NotInAbsorbingSetError):
        branch(alg, SimplexPoint((F(2, 5), F(3, 10))))


def test_brun_branch_example():
    alg = AlgorithmId("brun", 2)
    assert branch(alg, SimplexPoint((F(6, 10), F(5, 10)))) == 2
    assert branch(alg, SimplexPoint((F(2, 5), F(1, 5)))) == 0


def test_jacobi_perron_branch_example():
    alg = AlgorithmId("jacobi_perron", 2)
    b = branch(alg, SimplexPoint((F(3, 10), F(7, 10)), UNIT_CUBE))
    assert b == (3, 2)
    with pytest.raises(AlgorithmTerminatedError):
        branch(alg, SimplexPoint((F(0), F(1, 2)), UNIT_CUBE))


def test_cassaigne_branch():
    alg = AlgorithmId("cassaigne", 2)
    assert branch(alg, SimplexPoint((F(1, 2), F(3, 10), F(1, 5)), TRIANGLE)) == "a"
    assert branch(alg, SimplexPoint((F(1, 5), F(3, 10), F(1, 2)), TRIANGLE)) == "b"
    # tie goes to 'a'
    assert branch(alg, SimplexPoint((F(2, 5), F(1, 5), F(2, 5)), TRIANGLE)) == "a"


# --- matrices -------------------------------------------------------------


def test_branch_matrices_displayed_values():
    s2 = AlgorithmId("selmer", 2)
    assert branch_matrix(s2, "a").rows == ((0, 1, 0), (1, 0, 1), (1, 0, 0))
    assert branch_matrix(s2, "b").rows == ((0, 1, 0), (1, 0, 0), (1, 0, 1))
    ca = AlgorithmId("cassaigne", 2)
    assert branch_matrix(ca, "a").rows == ((1, 0, 0), (1, 0, 1), (0, 1, 0))
    assert branch_matrix(ca, "b").rows == ((0, 1, 0), (1, 0, 1), (0, 0, 1))
    br = AlgorithmId("brun", 2)
    assert branch_matrix(br, 0).rows == ((1, 0, 0), (1, 1, 0), (0, 0, 1))
    with pytest.raises(ValueError):
        branch_matrix(br, 5)
    with pytest.raises(ValueError):
        branch_matrix(s2, "c")


def test_jacobi_perron_matrix_from_quotients():
    alg = AlgorithmId("jacobi_perron", 2)
    m = branch_matrix(alg, (3, 2))
    assert m.rows == ((3, 1, 2), (0, 0, 1), (1, 0, 0))
    assert m.det() in (1, -1)


def test_arnoux_rauzy_special_case():
    # full-subtraction branches of the intermediate algorithm
    alg = AlgorithmId("intermediate", 3)
    x = SimplexPoint((F(3, 10), F(1, 5), F(1, 10)))
    b = branch(alg, x)
    assert b[0] == 3  # subtracts all coordinates
    m = branch_matrix(alg, b)
    # first column is all ones for these branches
    assert all(r[0] == 1 for r in m.rows)


# --- steps (hand-evaluated examples) ---------------------------------------


def test_selmer_step_example():
    alg = AlgorithmId("selmer", 2)
    s = step(alg, SimplexPoint((F(2, 3), F(1, 2))))
    assert s.next.coords == (F(3, 4), F(3, 4))


def test_jacobi_perron_step_example():
    alg = AlgorithmId("jacobi_perron", 2)
    s = step(alg, SimplexPoint((F(3, 10), F(7, 10)), UNIT_CUBE))
    assert s.next.coords == (F(1, 3), F(1, 3))


def test_cassaigne_step_example():
    alg = AlgorithmId("cassaigne", 2)
    s = step(alg, SimplexPoint((F(1, 2), F(3, 10), F(1, 5)), TRIANGLE))
    assert s.next.coords == (F(3, 8), F(1, 4), F(3, 8))


# --- burn-in ----------------------------------------------------------------


def test_burn_in():
    alg = AlgorithmId("selmer", 2)
    inside = SimplexPoint((F(7, 10), F(6, 10)))
    assert burn_in(alg, inside).coords == inside.coords
    outside = SimplexPoint((F(2, 5), F(3, 10)))
    y = burn_in(alg, outside)
    assert in_absorbing_set(y)
    with pytest.raises(BurnInFailedError):
        burn_in(alg, outside, cap=0)
    with pytest.raises(ValueError):
        burn_in(AlgorithmId("brun", 2), inside)


# --- the one property that validates every matrix against its map ----------


@pytest.mark.parametrize("name,dim", [
    ("selmer", 2), ("selmer", 3), ("selmer", 4),
    ("cassaigne", 2),
    ("brun", 2), ("brun", 4), ("brun", 6),
    ("jacobi_perron", 2), ("jacobi_perron", 4),
    ("intermediate", 2), ("intermediate", 4), ("intermediate", 6),
    ("garrity", 2), ("garrity", 3), ("garrity", 5),
])
def test_map_matrix_consistency(name, dim):
    alg = AlgorithmId(name, dim)
    rng = random.Random(hash((name, dim)) & 0xFFFF)
    checked = 0
    for _ in range(700):
        x = rand_point(alg, rng)
        if name == "selmer":
            x = burn_in(alg, x)
        try:
            s = step(alg, x)
        except AlgorithmTerminatedError:
            continue
        assert proportional(s.matrix.row_mul(lift(s.next)), lift(x))
        assert s.matrix.det() in (1, -1)
        checked += 1
    assert checked > 600


def test_selmer_absorbing_invariance():
    for dim in (2, 3):
        alg = AlgorithmId("selmer", dim)
        rng = random.Random(dim)
        for _ in range(2500):
            x = burn_in(alg, rand_point(alg, rng))
            assert in_absorbing_set(step(alg, x).next)


def test_float_and_exact_steps_agree():
    alg = AlgorithmId("brun", 3)
    rng = random.Random(5)
    for _ in range(100):
        x = rand_point(alg, rng)
        xf = x.to_float()
        se = step(alg, x)
        sf = step(alg, xf)
        assert se.branch == sf.branch
        assert all(abs(float(a) - b) < 1e-12
                   for a, b in zip(se.next.coords, sf.next.coords))
