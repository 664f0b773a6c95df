"""Build script: compiles the optional range-coder extension.

The compiled coder is a drop-in replacement for the pure-Python one in
``nvc.entropy.coder._range_py``; if compilation fails the package still
installs and falls back to the Python implementation at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build extensions, but never fail the install over them."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: skipping extension build ({exc}); "
                  "nvc will use the pure-Python range coder")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: failed to build {ext.name} ({exc}); "
                  "nvc will use the pure-Python range coder")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    return cythonize(
        [Extension("nvc.entropy.coder._range_cy",
                   ["src/nvc/entropy/coder/_range_cy.pyx"])],
        language_level=3,
    )


setup(ext_modules=extensions(), cmdclass={"build_ext": OptionalBuildExt})
