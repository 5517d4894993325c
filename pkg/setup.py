"""Build script: compiles the optional fast-kernel extension.

The package is fully functional without the extension (a pure-Python twin is
selected at import time); a failed compile therefore only costs speed.
"""

from setuptools import Extension, setup

extensions = []
try:
    import numpy as np
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "tmcodec._kernels",
                ["src/tmcodec/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
    for ext in extensions:
        ext.optional = True
except ImportError:
    pass

setup(ext_modules=extensions)
