import os

from setuptools import Extension, setup

ext_modules = []
pyx = os.path.join("src", "corotwave", "_fastkernels.pyx")
if os.path.exists(pyx):
    try:
        import numpy as np
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "corotwave._fastkernels",
                    [pyx],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": 3},
        )
    except ImportError:
        # no Cython toolchain: install pure-Python only, kernels fall back
        ext_modules = []

setup(ext_modules=ext_modules)
