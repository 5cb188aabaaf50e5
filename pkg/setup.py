"""Build script: compiles the optional SMO extension module.

The package works without the extension (a pure-Python kernel is selected at
import time), so compilation failures downgrade to a warning instead of
aborting the install.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the Cython core if possible, fall back to pure Python otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, broken toolchain, ...
            warnings.warn(f"emgds._smo extension skipped ({exc}); using pure-Python SMO kernel")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"emgds._smo extension skipped ({exc}); using pure-Python SMO kernel")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; using pure-Python SMO kernel")
        return []
    ext = Extension(
        "emgds._smo",
        sources=["src/emgds/_smo.pyx"],
        # -ffp-contract=off keeps IEEE semantics so the compiled kernel is
        # bit-identical to the pure-Python fallback.
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
