"""Build script: compiles the optional Cython kernel extension.

The package works without the extension (NumPy fallback is selected at
import time), so a missing compiler or Cython only costs speed. Set
TRIATTACK_SKIP_EXT=1 to skip the extension build explicitly.
"""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("TRIATTACK_SKIP_EXT") != "1":
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "triattack.kernels._core",
                    sources=["src/triattack/kernels/_core.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level="3",
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
