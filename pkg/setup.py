"""Build hooks for the compiled interpreter backend.

The package is fully functional without the extension (a pure-Python backend
is selected at import time), so any build failure here should be treated as
"slower, not broken".
"""
import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("REGTOP_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("regtop._interp_cy", ["src/regtop/_interp_cy.pyx"])],
            language_level=3,
        )
    except ImportError:
        # fall back to a pre-generated C file when Cython is absent
        c_source = os.path.join("src", "regtop", "_interp_cy.c")
        if os.path.exists(c_source):
            ext_modules = [Extension("regtop._interp_cy", [c_source])]

setup(ext_modules=ext_modules)
