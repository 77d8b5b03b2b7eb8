"""Build script: compiles the ray-stepping kernel if a C toolchain is present.

The package is fully functional without the extension (a numpy fallback is
selected at import time), so any failure here downgrades to a pure build
instead of aborting the install.
"""

import warnings

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            warnings.warn(f"compiled kernel skipped ({exc}); using pure-python backend")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"compiled kernel skipped ({exc}); using pure-python backend")


ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/billiard3d/_trace_fast.pyx"],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    warnings.warn("Cython not available; using pure-python backend")

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
