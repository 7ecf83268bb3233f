from setuptools import Extension, setup

import numpy as np
from Cython.Build import cythonize

# -ffp-contract=off keeps scalar arithmetic bit-identical to the pure-Python
# kernel twin (no FMA contraction), which the backend parity tests rely on.
ext = Extension(
    "spinport._kernel",
    ["src/spinport/_kernel.pyx"],
    include_dirs=[np.get_include()],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O2", "-ffp-contract=off"],
)

setup(ext_modules=cythonize(ext, language_level=3))
