import math
import random
from fractions import Fraction as F

import pytest

from mcf.algorithms import AlgorithmId, step
from mcf.certifier import (
    base_lifts,
    base_measure,
    base_simplex,
    certify,
    cylinder_weight,
    enumerate_cylinders,
    measure_bounds,
    oracle_consistency,
    oracle_recompute,
)
from mcf.cocycle import d_matrix
from mcf.core import ConsistencyError, SimplexPoint, simplex_volume, Simplex
from mcf.rounding import C2_LO


def test_base_simplex_volumes():
    assert base_measure(2) == F(1, 4)
    assert base_measure(3) == F(1, 24)
    # depth-1 cylinders partition the base simplex
    for dim, total in ((2, F(1, 4)), (3, F(1, 24))):
        cs = list(enumerate_cylinders(dim, 1))
        assert sum(c.volume for c in cs) == total
    with pytest.raises(ValueError):
        base_simplex(4)


def test_depth1_cylinders_are_the_branch_regions():
    a, b = enumerate_cylinders(2, 1)
    assert a.word == "a" and b.word == "b"
    assert a.volume == b.volume == F(1, 8)
    assert set(p.coords for p in a.vertices) == {
        (F(1), F(1)), (F(1), F(1, 2)), (F(1, 2), F(1, 2))
    }
    assert set(p.coords for p in b.vertices) == {
        (F(1), F(1, 2)), (F(1), F(0)), (F(1, 2), F(1, 2))
    }


def test_reference_cylinder_baba():
    cyl = next(c for c in enumerate_cylinders(2, 4) if c.word == "baba")
    assert cyl.matrix.rows == ((1, 0, 0), (2, 2, 1), (1, 1, 1))
    assert set(p.coords for p in cyl.vertices) == {
        (F(3, 4), F(1, 2)), (F(2, 3), F(1, 3)), (F(3, 5), F(2, 5))
    }
    # value at the (3/4, 1/2) corner is 3/4; the cylinder max is 1
    d = d_matrix(cyl.matrix, SimplexPoint((F(3, 4), F(1, 2))))
    assert d.inf_norm() == F(3, 4)
    mx, w = cylinder_weight(cyl)
    assert mx == 1 and w.value == 0.0


def test_depth2_weights_vanish():
    for c in enumerate_cylinders(2, 2):
        mx, w = cylinder_weight(c)
        assert mx == 1 and w.value == 0.0


def test_tiling_exact():
    for depth in range(1, 13):
        assert sum(c.volume for c in enumerate_cylinders(2, depth)) == F(1, 4)
    for depth in range(1, 9):
        assert sum(c.volume for c in enumerate_cylinders(3, depth)) == F(1, 24)


def test_singular_cylinders_are_the_all_b_words():
    for dim, depths in ((2, range(1, 11)), (3, range(1, 9))):
        for depth in depths:
            sing = [c.word for c in enumerate_cylinders(dim, depth) if c.singular]
            assert sing == ["b" * depth]


def test_convexity_domination():
    rng = random.Random(31)
    cyls = list(enumerate_cylinders(2, 6))
    for c in rng.sample(cyls, 12):
        mx, _ = cylinder_weight(c)
        for _ in range(90):
            ws = [F(rng.randrange(1, 50)) for _ in c.vertices]
            s = sum(ws)
            pt = tuple(
                sum(w * v.coords[j] for w, v in zip(ws, c.vertices)) / s
                for j in range(2)
            )
            d = d_matrix(c.matrix, SimplexPoint(pt))
            assert d.inf_norm() <= mx


def test_word_replay_consistency():
    rng = random.Random(13)
    alg2, alg3 = AlgorithmId("selmer", 2), AlgorithmId("selmer", 3)
    for dim, alg, depth in ((2, alg2, 8), (3, alg3, 6)):
        cyls = list(enumerate_cylinders(dim, depth))
        for c in rng.sample(cyls, 50):
            # interior point: vertex average
            pt = tuple(
                sum(v.coords[j] for v in c.vertices) / (dim + 1)
                for j in range(dim)
            )
            x = SimplexPoint(pt)
            for letter in c.word:
                s = step(alg, x)
                assert s.branch == letter
                x = s.next


def test_measure_bounds_hand_value():
    cyl_a = next(c for c in enumerate_cylinders(2, 1) if c.word == "a")
    lower, upper = measure_bounds(cyl_a, 2)
    # the branch-a region touches (1,1): lower = c * 1 * (1/8), downward
    assert abs(lower.value - C2_LO / 8) < 1e-12
    assert lower.value <= upper.value
    allb = next(c for c in enumerate_cylinders(3, 4) if c.word == "bbbb")
    lo3, up3 = measure_bounds(allb, 3)
    assert allb.singular and up3.value == math.inf and lo3.value >= 0


def test_measure_bounds_sum_below_one():
    # lower bounds of a probability measure over a partition stay below 1
    tot = 0.0
    for c in enumerate_cylinders(2, 8):
        tot += measure_bounds(c, 2)[0].value
    assert 0.7 < tot <= 1.0


def test_certify_validation():
    with pytest.raises(ValueError):
        certify(4, 8)
    with pytest.raises(ValueError):
        certify(2, 7)
    with pytest.raises(ValueError):
        certify(2, 8, singular_measure=0.5)


def test_certify_depth4_negative():
    cert = certify(2, 4)
    assert cert.bound < 0
    assert cert.class_counts["singular_plus"] == 1
    assert cert.checksum_num == 1 and cert.checksum_den == 4
    orc = oracle_recompute(2, 4)
    assert orc["lo"] <= cert.bound <= orc["hi"] + 1e-9


def test_certify_depth2_exactly_zero():
    cert = certify(2, 2)
    assert cert.bound == 0.0
    orc = oracle_recompute(2, 2)
    assert orc["lo"] <= 0.0 <= orc["hi"]


@pytest.mark.parametrize("dim,depth,refine", [
    (2, 8, 0), (2, 8, 2), (3, 8, 0), (3, 8, 1), (3, 4, 0),
])
def test_certify_oracle_consistency(dim, depth, refine):
    out = oracle_consistency(dim, depth, refine=refine)
    assert out["safe"]
    assert out["gap"] < 1e-6


def test_certify_task_invariance():
    a = certify(3, 10, refine=1)
    b = certify(3, 10, refine=1, tasks=2)
    da, db = a.to_dict(), b.to_dict()
    for skip in ("tasks", "elapsed_s"):
        da.pop(skip), db.pop(skip)
    assert da == db


def test_refinement_tightens():
    b0 = certify(2, 10).bound
    b1 = certify(2, 10, refine=1).bound
    b2 = certify(2, 10, refine=2).bound
    assert b2 < b1 < b0 < 0


def test_aggregation_is_sound():
    base = certify(3, 12)
    agg = certify(3, 12, aggregate=True, agg_log2=0)
    assert agg.closed > 0
    assert agg.bound >= base.bound - 1e-12
    orc = oracle_recompute(3, 12, aggregate=True, agg_log2=0)
    assert agg.bound >= orc["lo"]
    # tight threshold closes nothing at these shallow depths
    assert certify(3, 12, aggregate=True).closed == 0


def test_external_singular_measure():
    # measure of any set is at most 1, so 1.0 is always a sound stand-in
    cert = certify(3, 8, singular_measure=1.0, provenance="trivial-upper")
    assert cert.singular_policy == "external"
    assert cert.provenance == "trivial-upper"
    assert cert.singular_measure == 1.0
    base = certify(3, 8)
    assert cert.bound >= base.bound - 1e-12
    orc = oracle_recompute(3, 8, singular_measure=1.0)
    assert cert.bound >= orc["lo"]


def test_certificate_json_roundtrip():
    import json

    cert = certify(2, 6)
    data = json.loads(cert.to_json())
    assert data["schema"] == 1
    assert data["kind"] == "certificate"
    for key in ("algorithm", "dim", "depth", "bound", "class_counts",
                "singular_policy", "singular_measure", "provenance",
                "checksum_num", "checksum_den", "elapsed_s", "tasks"):
        assert key in data


def test_all_b_vertex_persistence():
    # the d=2 all-'b' product fixes the lift of the degenerate corner
    from mcf.algorithms import branch_matrix

    sb = branch_matrix(AlgorithmId("selmer", 2), "b")
    v = (1, 1, 0)
    for _ in range(10):
        v = tuple(sum(v[i] * sb.rows[i][j] for i in range(3)) for j in range(3))
    assert v == (1, 1, 0)
