import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# no fast-math / FMA contraction: the compiled core must match the
# pure-Python reference bit for bit
extensions = [
    Extension(
        "leoqueue.rtc._core",
        ["src/leoqueue/rtc/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
