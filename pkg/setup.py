"""Build the optional compiled kernel extension.

The package works without it; quantalgames.kernels falls back to the
numpy implementation when the extension is absent.
"""

import os

from setuptools import setup

ext_modules = []
pyx = os.path.join("src", "quantalgames", "kernels", "_ctree.pyx")
if os.path.exists(pyx):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "quantalgames.kernels._ctree",
                    [pyx],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
