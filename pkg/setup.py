"""Builds the optional compiled kernels; the package works without them."""
from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    # a missing compiler only costs speed, the numpy fallback is selected at import
    def run(self):
        try:
            super().run()
        except Exception as exc:
            print(f"warning: compiled kernels not built ({exc}); using the numpy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); using the numpy fallback")


try:
    from Cython.Build import cythonize
    extensions = cythonize([Extension("burgerscap._core", ["src/burgerscap/_core.pyx"])],
                           language_level=3, quiet=True)
except ImportError:
    extensions = []

setup(ext_modules=extensions, cmdclass={"build_ext": OptionalBuildExt})
