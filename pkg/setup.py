"""Builds the optional compiled kernels.

The package works without the extension (a NumPy fallback is selected at
import time); building it just makes tree growing and concordance counting
faster. `pip install -e . --no-build-isolation` compiles it in place.
"""

from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "injurycast.kernels._native",
        ["src/injurycast/kernels/_native.pyx"],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
)
