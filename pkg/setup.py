import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

ext = Extension(
    "shproof._kernels",
    ["src/shproof/_kernels.pyx"],
    include_dirs=[np.get_include()],
    # no fused multiply-add: the kernel must round exactly like the numpy fallback
    extra_compile_args=["-O2", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(ext_modules=cythonize([ext], language_level=3))
