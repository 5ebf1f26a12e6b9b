import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the numpy fallback still works without the extension
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("INTERVALDYN_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "intervaldyn.kernels._ckernels",
                ["src/intervaldyn/kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: keeps results bit-identical to the Python branch forms
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
