"""Build script for the optional compiled routing kernels.

The package works without the extension (a NumPy fallback is selected at
import time); building it just makes training and classification faster.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "rdtforest.kernels._compiled",
                ["src/rdtforest/kernels/_compiled.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    # No Cython available: install the pure-NumPy lane only.
    pass

setup(ext_modules=ext_modules)
