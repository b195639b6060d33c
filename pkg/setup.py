import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# -ffp-contract=off keeps the compiled kernels bit-identical to the pure
# Python fallback (no FMA contraction, no reassociation).
extra = ["-O3", "-ffp-contract=off", "-fno-fast-math"]

if cythonize is not None and not os.environ.get("MCF_SKIP_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "mcf._kernels",
                ["src/mcf/_kernels.pyx"],
                extra_compile_args=extra,
            )
        ],
        language_level=3,
    )
else:
    ext_modules = []

setup(ext_modules=ext_modules)
