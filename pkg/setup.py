"""Build script for the optional compiled scoring kernels.

The extension is a pure speedup: when Cython or a C toolchain is missing the
build silently skips it and the package falls back to the pure-Python kernels
at import time (see sampleselect/scoring.py).
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """build_ext that downgrades compile failures to a warning."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # toolchain missing entirely
            print(f"warning: skipping extension build ({exc})", file=sys.stderr)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: skipping {ext.name} ({exc})", file=sys.stderr)


ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/sampleselect/_kernels.pyx"],
        language_level="3",
    )
except ImportError:
    print("warning: Cython not available; building pure-Python only", file=sys.stderr)

setup(ext_modules=ext_modules, cmdclass={"build_ext": OptionalBuildExt})
