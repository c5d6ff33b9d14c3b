"""Build script: compiles the accelerated core when Cython is available.

The package is fully functional without the extension; `longrun._backend`
falls back to the NumPy reference implementations at import time.
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("LONGRUN_NO_EXTENSION"):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "longrun._recursions_cy",
                    ["src/longrun/_recursions_cy.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
