"""Build the optional Cython kernels.

The package works without them: ``htsurrogate._backend`` falls back to the
numpy implementation when ``_ckernels`` cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("HTSURROGATE_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "htsurrogate._ckernels",
                    ["src/htsurrogate/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    # no fast-math / fp-contract: results must be reproducible
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
