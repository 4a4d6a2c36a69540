"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: dubkit._kernels
falls back to a vectorized numpy implementation at import time. The
extension is skipped when Cython is unavailable so that pure-Python
installs keep working.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "dubkit._kernels._native",
                ["src/dubkit/_kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
