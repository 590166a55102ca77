import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("TRITRANSFER_NO_EXT"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "tritransfer._kernels._compiled",
                ["src/tritransfer/_kernels/_compiled.pyx"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
