import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("LPBALL_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("Cython not found; installing the pure-Python kernels only")
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "lpball._kernels",
                    ["src/lpball/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )

setup(ext_modules=ext_modules)
