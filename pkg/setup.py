"""Build script for the optional compiled kernels.

The package works without the extension (a pure-numpy fallback is selected
at import time); building it makes the hot mixture-evaluation loops several
times faster.  See benchmarks/bench_kernels.py.
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "mfgmf._kernels",
                ["src/mfgmf/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )

setup(ext_modules=ext_modules)
