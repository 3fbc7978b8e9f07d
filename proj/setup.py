"""CMake-driven build of the _gqc extension module."""

import os
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name, sourcedir=""):
        super().__init__(name, sources=[])
        self.sourcedir = os.fspath(Path(sourcedir).resolve())


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        ext_fullpath = Path.cwd() / self.get_ext_fullpath(ext.name)
        extdir = ext_fullpath.parent.resolve()
        cmake_args = [
            f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={extdir}{os.sep}",
            f"-DPython3_EXECUTABLE={sys.executable}",
            "-DCMAKE_BUILD_TYPE=Release",
            "-DGQC_SKIP_TESTS=ON",
        ]
        build_temp = Path(self.build_temp) / ext.name
        build_temp.mkdir(parents=True, exist_ok=True)
        subprocess.run(["cmake", ext.sourcedir, *cmake_args],
                       cwd=build_temp, check=True)
        subprocess.run(["cmake", "--build", ".", "--target", "_gqc",
                        f"-j{os.cpu_count() or 2}"],
                       cwd=build_temp, check=True)


setup(
    ext_modules=[CMakeExtension("gqc._gqc")],
    cmdclass={"build_ext": CMakeBuild},
)
