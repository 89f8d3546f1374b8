"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (a numpy fallback is selected at
import time), so a failed compile only costs speed. Set RYDMIMO_REQUIRE_EXT=1
to turn a build failure into a hard error.
"""

import os
import sys

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

REQUIRE_EXT = os.environ.get("RYDMIMO_REQUIRE_EXT", "") == "1"

ext_modules = []
if cythonize is not None:
    ext = Extension(
        "rydmimo._core",
        ["src/rydmimo/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    try:
        ext_modules = cythonize(
            [ext],
            compiler_directives={
                "language_level": "3",
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except Exception as exc:  # cythonization failure
        if REQUIRE_EXT:
            raise
        sys.stderr.write(f"warning: skipping Cython extension ({exc})\n")
elif REQUIRE_EXT:
    raise RuntimeError("RYDMIMO_REQUIRE_EXT=1 but Cython is not installed")

setup(ext_modules=ext_modules)
