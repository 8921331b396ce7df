import os

from setuptools import setup

ext_modules = []
if not os.environ.get("NOMASIM_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("Cython/numpy unavailable: installing pure-Python kernels only")
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "nomasim._kernels",
                    ["src/nomasim/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    # keep IEEE semantics identical to the numpy fallback
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
