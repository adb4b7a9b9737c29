"""Build script: compiles the optional kernel extension.

The package works without the extension (a NumPy fallback is selected at
import time), so a missing compiler or Cython must not fail the install.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    extensions = [
        Extension(
            "bincalib._fastkern",
            ["src/bincalib/_fastkern.pyx"],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(extensions, language_level=3)
    for ext in ext_modules:
        ext.optional = True

setup(ext_modules=ext_modules)
