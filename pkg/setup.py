"""Build the optional Cython kernels.

The package works without them: ``hfsubsample.kernels`` falls back to the
NumPy implementations when the extension cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("HFSUB_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "hfsubsample._ckernels",
                    ["src/hfsubsample/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
