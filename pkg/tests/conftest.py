import os

import pytest

# timing fields are zeroed so reports compare bit for bit
os.environ.setdefault("MCF_NO_TIMING", "1")


@pytest.fixture(scope="session")
def compiled():
    from mcf import _backend

    return _backend.COMPILED
