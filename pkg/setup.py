import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("MODESHAPE_NO_EXT", "") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "modeshape._kernels._propagate_cy",
                    ["src/modeshape/_kernels/_propagate_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    # amplitudes are finite by construction: skip Annex-G
                    # inf/nan recovery in complex multiplies
                    extra_compile_args=["-O3", "-fcx-limited-range"],
                )
            ],
            language_level="3",
        )
    except ImportError:
        # No Cython available: install the pure-Python fallback only.
        ext_modules = []

setup(ext_modules=ext_modules)
