"""Build script for the optional compiled kernel backend.

The package is fully functional without the extension (the NumPy backend
is selected at import time); a failed compile therefore downgrades to a
warning instead of aborting the install.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "astra.kernels._native",
                ["src/astra/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-host dependent
    print(f"astra: skipping native kernel build ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
