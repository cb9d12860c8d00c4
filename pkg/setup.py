import numpy
from setuptools import setup
from setuptools.extension import Extension

# The compiled kernel is optional: the package falls back to the NumPy
# implementation when the extension is missing (see fedsim.kernels).
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fedsim.kernels._fast",
                sources=["src/fedsim/kernels/_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
