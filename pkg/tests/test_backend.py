import pytest

from mcf import _backend, _kernels_py
from mcf.algorithms import AlgorithmId, burn_in
from mcf.certifier import _walk_subtree_py, certify
from mcf.cocycle import new_state
from mcf.core import KernelPrecisionError, SimplexPoint, sample_point
import numpy as np

COMBOS = [
    ("selmer", 2), ("selmer", 3), ("selmer", 5),
    ("cassaigne", 2),
    ("brun", 2), ("brun", 7),
    ("jacobi_perron", 2), ("jacobi_perron", 5),
    ("intermediate", 2), ("intermediate", 6),
    ("garrity", 2), ("garrity", 4),
]


def _start(name, dim, seed=5):
    alg = AlgorithmId(name, dim)
    rng = np.random.default_rng(seed)
    x = sample_point(alg.domain, dim, rng)
    if name == "selmer":
        x = burn_in(alg, x)
    return alg, x


@pytest.mark.parametrize("name,dim", COMBOS)
def test_orbit_backends_bit_identical(name, dim, compiled):
    if not compiled:
        pytest.skip("compiled kernel unavailable")
    from mcf import _kernels

    alg, x = _start(name, dim)
    st = new_state(alg, x, 64)
    code = _backend.ALG_CODE[name]
    args = (code, dim, list(st.point), st.wa, st.wd, 0.0, 0.0, 0, 20_000, 64, 1)
    rc = _kernels.run_segment(*args)
    rp = _kernels_py.run_segment(*args)
    assert rc == rp


@pytest.mark.parametrize("dim", (2, 3))
@pytest.mark.parametrize("agg", (0, 1))
@pytest.mark.parametrize("refine", (0, 1, 2))
def test_cert_backends_identical(dim, agg, refine, compiled):
    if not compiled:
        pytest.skip("compiled kernel unavailable")
    from mcf import _kernels

    n = dim + 1
    ident = tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n))
    flat = [v for r in ident for v in r]
    rp = _walk_subtree_py(dim, 8, 0, ident, True, bool(agg), -44, refine)
    rc = _kernels.cert_subtree(dim, 8, 0, flat, 1, agg, -44, refine)
    assert rp == rc


def test_cert_fast_path_reports_overflow(compiled):
    if not compiled:
        pytest.skip("compiled kernel unavailable")
    from mcf import _kernels

    big = 1 << 30  # beyond the fixed-width guard
    flat = [big, 0, 0, 0, big, 0, 0, 0, big]
    with pytest.raises(KernelPrecisionError):
        _kernels.cert_subtree(2, 2, 0, flat, 0, 0, -44, 0)


def test_certify_backend_equivalence(compiled):
    if not compiled:
        pytest.skip("compiled kernel unavailable")
    a = certify(2, 10, refine=1)
    b = certify(2, 10, refine=1, force_python=True)
    da, db = a.to_dict(), b.to_dict()
    for skip in ("backend", "elapsed_s"):
        da.pop(skip), db.pop(skip)
    assert da == db
