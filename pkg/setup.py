import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# The package works without the compiled kernels: mmattack.backend falls
# back to the numpy implementation when this extension is absent.
extensions = []
if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "mmattack.backend._ck",
                ["src/mmattack/backend/_ck.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=extensions)
