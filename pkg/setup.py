"""Build script: compiles the optional integrator extension.

The package works without the extension (a pure-Python integrator is
selected at import time), so a failed compile only costs speed.
"""
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the extension if possible; fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, broken toolchain, ...
            warnings.warn(f"building qubitvna._bloch_core failed ({exc}); "
                          "the pure-Python integrator will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"building {ext.name} failed ({exc}); "
                          "the pure-Python integrator will be used")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qubitvna._bloch_core",
                ["src/qubitvna/_bloch_core.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
