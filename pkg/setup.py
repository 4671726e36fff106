"""Build script: compiles the optional RK4 extension when Cython is available.

The package is fully functional without the extension; the pure-numpy
fallback in ``cqedsim._kernels`` is selected automatically at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("cqedsim._kernels._rk4_cy", ["src/cqedsim/_kernels/_rk4_cy.pyx"])],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "initializedcheck": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
