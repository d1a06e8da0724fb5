import glob
import subprocess

from pybind11.setup_helpers import ParallelCompile, Pybind11Extension, build_ext
from setuptools import setup

ParallelCompile("NPY_NUM_BUILD_JOBS").install()


def eigen_include():
    try:
        out = subprocess.run(
            ["pkg-config", "--cflags-only-I", "eigen3"],
            capture_output=True, text=True, check=True,
        ).stdout
        return [flag[2:] for flag in out.split() if flag.startswith("-I")]
    except (OSError, subprocess.CalledProcessError):
        return ["/usr/include/eigen3"]


ext = Pybind11Extension(
    "crnreduce._core",
    sources=sorted(glob.glob("src/*.cpp")) + ["python/crnreduce/_core.cpp"],
    include_dirs=["include", "vendor"] + eigen_include(),
    cxx_std=20,
)

setup(
    packages=["crnreduce"],
    package_dir={"": "python"},
    ext_modules=[ext],
    cmdclass={"build_ext": build_ext},
)
