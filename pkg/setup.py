"""Build script for the optional compiled MCMC kernel.

The package is fully functional without the extension: ``dscopula.sampler``
falls back to the pure-Python twin kernel when the import of
``dscopula._kernel`` fails.  ``optional=True`` keeps a failed compile from
aborting the install.
"""

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "dscopula._kernel",
                ["src/dscopula/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                # The compiled kernel must round exactly like the pure-Python
                # twin: forbid FMA contraction of a*b+c.
                extra_compile_args=["-ffp-contract=off"],
                optional=True,
            )
        ],
        language_level="3",
    )
else:
    extensions = []

setup(ext_modules=extensions)
