import numpy
from setuptools import Extension, setup
from Cython.Build import cythonize

# IEEE-strict flags: the pure-Python backend must reproduce kernel results,
# so no -ffast-math / -march=native here.
extensions = [
    Extension(
        "depsim._kernels",
        ["src/depsim/_kernels.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )
)
