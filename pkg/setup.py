"""Build script: compiles the optional Cython kernel extension.

Set BRAINALIGN_NO_EXT=1 to skip compilation; the package then runs on the
pure-NumPy kernel backend selected at import time.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("BRAINALIGN_NO_EXT"):
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "brainalign._kernels",
                ["src/brainalign/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
