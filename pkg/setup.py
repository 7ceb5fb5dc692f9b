"""Build script for the optional compiled kernel.

The package works without the extension (numpy fallback), so a missing
Cython or compiler only downgrades performance.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FDMIMO_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension("fdmimo._kernels", ["src/fdmimo/_kernels.pyx"],
                       include_dirs=[np.get_include()],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                       extra_compile_args=["-O3"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
