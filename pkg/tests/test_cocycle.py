import math
import random
from fractions import Fraction as F

import mpmath
import numpy as np
import pytest

from mcf._backend import ALG_CODE, run_segment
from mcf.algorithms import AlgorithmId, branch_matrix, burn_in, step
from mcf.cocycle import (
    accumulate_A,
    chart_coords,
    d_matrix,
    h_matrix,
    inf_norm_flat,
    jacobi_singular_values,
    new_state,
    orbit_word,
    pi_matrix,
    renorm_iterate,
    wedge2,
)
from mcf.core import IntMatrix, RationalMatrix, SimplexPoint, lift

S2 = AlgorithmId("selmer", 2)


def _rand_abs_point(rng, grid=4096):
    v = sorted((F(rng.randrange(1, grid), grid) for _ in range(2)), reverse=True)
    return burn_in(S2, SimplexPoint(tuple(v)))


def test_h_and_pi_matrices():
    x = SimplexPoint((F(1, 2), F(1, 3)))
    h = h_matrix(x)
    assert h.rows == ((F(-1, 2), F(-1, 3)), (1, 0), (0, 1))
    p = pi_matrix(2)
    assert p.rows == ((0, 1, 0), (0, 0, 1))
    lifted = lift(x)
    assert all(
        sum(F(lifted[i]) * h.rows[i][j] for i in range(3)) == 0 for j in range(2)
    )


def test_accumulate_identity_and_square():
    x = _rand_abs_point(random.Random(3))
    assert accumulate_A(S2, x, 0) == IntMatrix.identity(3)
    # a point whose first two branches are both 'a'
    x = SimplexPoint((F(3, 5), F(11, 20)))
    assert orbit_word(S2, x, 2) == ["a", "a"]
    assert accumulate_A(S2, x, 2).rows == ((1, 0, 1), (1, 1, 0), (0, 1, 0))


def test_cocycle_laws_exact():
    rng = random.Random(11)
    for _ in range(25):
        x = _rand_abs_point(rng)
        m, n = rng.randrange(1, 6), rng.randrange(1, 6)
        an = accumulate_A(S2, x, n)
        y = x
        for _ in range(n):
            y = step(S2, y).next
        am = accumulate_A(S2, y, m)
        assert (am @ an) == accumulate_A(S2, x, m + n)
        dn, dm = d_matrix(an, x), d_matrix(am, y)
        assert (dm @ dn) == d_matrix(accumulate_A(S2, x, m + n), x)


def test_d_matrix_paper_displays():
    x = SimplexPoint((F(7, 10), F(3, 5)))
    sa = branch_matrix(S2, "a")
    assert d_matrix(sa, x).rows == (
        (F(-7, 10), F(2, 5)),
        (F(-7, 10), F(-3, 5)),
    )
    sa2 = sa @ sa
    assert d_matrix(sa2, x).rows == (
        (F(3, 10), F(-3, 5)),
        (1, 0),
    )
    assert d_matrix(IntMatrix.identity(3), x).rows == ((1, 0), (0, 1))


def test_d_matrix_entry_formula():
    rng = random.Random(8)
    for _ in range(50):
        x = _rand_abs_point(rng)
        a = accumulate_A(S2, x, 6)
        d = d_matrix(a, x)
        xt = chart_coords(x)
        for i in range(2):
            for j in range(2):
                assert d.rows[i][j] == a.rows[i + 1][j + 1] - a.rows[i + 1][0] * F(xt[j])


def test_dnorm_identity_on_absorbing_set():
    rng = random.Random(77)
    for _ in range(10_000):
        x = _rand_abs_point(rng)
        d2 = d_matrix(accumulate_A(S2, x, 2), x)
        assert d2.inf_norm() == 1


def test_wedge2():
    m = IntMatrix([[2, 3], [5, 7]])
    assert wedge2(m).rows == ((-1,),)
    assert wedge2(IntMatrix.identity(4)) == IntMatrix.identity(6)
    rng = random.Random(12)
    for _ in range(40):
        a = IntMatrix([[rng.randrange(-9, 10) for _ in range(3)] for _ in range(3)])
        b = IntMatrix([[rng.randrange(-9, 10) for _ in range(3)] for _ in range(3)])
        assert wedge2(a @ b) == wedge2(a) @ wedge2(b)
    with pytest.raises(ValueError):
        wedge2(IntMatrix([[1]]))


def test_renorm_noop_is_plain_product():
    x = SimplexPoint((0.71, 0.62))
    s1 = new_state(S2, x, renorm=10**9)
    s1, _ = renorm_iterate(s1, 500)
    s2 = new_state(S2, x, renorm=501)
    s2, _ = renorm_iterate(s2, 500)
    assert s1.wa == s2.wa and s1.wd == s2.wd
    assert s1.ledger_a == 0.0 and s1.ledger_d == 0.0


def test_renorm_zero_pivot_fallback():
    # after one step the top-left matrix entry is 0; renormalizing each
    # step exercises the largest-entry fallback
    x = SimplexPoint((0.71, 0.62))
    st = new_state(S2, x, renorm=1)
    st, info = renorm_iterate(st, 1)
    assert info["status"] == 0
    assert math.isfinite(st.ledger_a) and math.isfinite(st.ledger_d)


def test_ledger_reconstruction_against_high_precision():
    # same float orbit, difference cocycle accumulated without any
    # renormalization at 80 significant digits
    steps, k = 10_000, 1024
    x0 = SimplexPoint((0.7300000001, 0.5600000002))
    st = new_state(S2, x0, renorm=k)
    st, info = renorm_iterate(st, steps)
    assert info["status"] == 0
    reconstructed = st.log_norm_d()

    mpmath.mp.dps = 80
    d_hp = [[mpmath.mpf(1), mpmath.mpf(0)], [mpmath.mpf(0), mpmath.mpf(1)]]
    x = x0
    for _ in range(steps):
        s = step(S2, x)
        d1 = d_matrix(s.matrix, x)
        rows = [[mpmath.mpf(v.numerator) / mpmath.mpf(v.denominator) for v in r]
                for r in d1.rows]
        d_hp = [
            [rows[i][0] * d_hp[0][j] + rows[i][1] * d_hp[1][j] for j in range(2)]
            for i in range(2)
        ]
        x = s.next
    norm = max(abs(d_hp[0][0]) + abs(d_hp[0][1]), abs(d_hp[1][0]) + abs(d_hp[1][1]))
    exact = mpmath.log(norm)
    assert abs(reconstructed - float(exact)) < 1e-6


def test_ledger_slope_matches_second_exponent():
    x = SimplexPoint((0.81, 0.57))
    st = new_state(S2, burn_in(S2, x), renorm=1024)
    st, _ = renorm_iterate(st, 1_000_000)
    slope = st.log_norm_d() / st.n
    assert abs(slope - (-0.07072)) < 0.01


def test_strong_convergence_monotone_in_mean():
    x = SimplexPoint((0.66, 0.61))
    st = new_state(S2, x, renorm=256)
    values = []
    n = 1024
    while n <= 262144:
        st, _ = renorm_iterate(st, n - st.n)
        values.append(st.log_norm_d())
        n *= 2
    drops = sum(1 for a, b in zip(values, values[1:]) if b < a)
    assert drops >= len(values) - 2
    assert values[-1] < values[0]


def test_jacobi_singular_values():
    rng = np.random.default_rng(5)
    for _ in range(25):
        a = rng.normal(size=(4, 4))
        mine = jacobi_singular_values(a.tolist())
        ref = sorted(np.linalg.svd(a, compute_uv=False).tolist(), reverse=True)
        assert all(abs(x - y) < 1e-9 * max(1.0, abs(y)) for x, y in zip(mine, ref))
