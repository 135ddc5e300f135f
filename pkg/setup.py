import numpy
from setuptools import Extension, setup

# The compiled kernels are optional: without Cython the package falls back to
# the numpy reference implementation selected at import time in
# pcmanip.kernels.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "pcmanip.kernels._native",
                ["src/pcmanip/kernels/_native.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
