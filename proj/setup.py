"""Builds the pybind11 extension by driving the repository's CMake project.

scikit-build would normally own this glue; a plain setuptools command keeps
the dependency footprint to cmake + pybind11, which the C++ build already
needs.
"""

import subprocess
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name: str):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext: CMakeExtension) -> None:
        import pybind11

        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve() / "cmake"
        build_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                "-DCMAKE_BUILD_TYPE=Release",
                f"-Dpybind11_DIR={pybind11.get_cmake_dir()}",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_core", "--parallel"],
            check=True,
        )

        built = sorted(build_dir.glob("_core*.so"))
        if not built:
            raise RuntimeError("cmake did not produce the _core extension")
        out_path = Path(self.get_ext_fullpath(ext.name)).resolve()
        out_path.parent.mkdir(parents=True, exist_ok=True)
        self.copy_file(str(built[-1]), str(out_path))


setup(
    ext_modules=[CMakeExtension("pxlm._core")],
    cmdclass={"build_ext": CMakeBuild},
)
