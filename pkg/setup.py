"""Build script: compiles the optional Cython speedup kernels when Cython and a
C compiler are available.  Without them the package still installs and falls
back to the pure NumPy kernels at import time."""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Build the speedup extension if possible, otherwise skip silently."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # missing compiler, etc.
            print(f"speedup extension skipped ({exc!r}); pure kernels will be used")

    def build_extensions(self):
        try:
            super().build_extensions()
        except Exception as exc:
            print(f"speedup extension skipped ({exc!r}); pure kernels will be used")


def _extensions():
    try:
        from Cython.Build import cythonize
        import numpy as np
    except ImportError:
        print("Cython not found; pure kernels will be used")
        return []
    from setuptools import Extension

    ext = Extension(
        "parabolab._kernels._speedups",
        ["src/parabolab/_kernels/_speedups.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": OptionalBuildExt},
)
