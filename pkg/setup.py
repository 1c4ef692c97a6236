import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; the fallback kernels are used
    cythonize = None

extensions = []
if cythonize is not None and not os.environ.get("DCTRECOVER_NO_EXT"):
    extensions = cythonize(
        [
            Extension(
                "dctrecover._kernels._csparse",
                ["src/dctrecover/_kernels/_csparse.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=extensions)
