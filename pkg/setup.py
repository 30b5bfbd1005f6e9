"""Build script: compiles the split-scan kernel when Cython and a C compiler
are available.  The package works without it (pure numpy fallback selected at
import time), so the extension is marked optional."""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext = Extension(
        "appkeep.gbdt._scan",
        ["src/appkeep/gbdt/_scan.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
    ext_modules = cythonize([ext], language_level=3)
except ImportError:
    pass

setup(ext_modules=ext_modules)
