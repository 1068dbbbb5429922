"""Build script: compiles the optional simulation kernel extension.

The package works without the extension (pure-Python fallback is selected at
import time); building it is strongly recommended for sweep workloads.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "forksim._speedups",
                ["src/forksim/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
