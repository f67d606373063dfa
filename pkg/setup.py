"""Build script: compiles the optional Cython rollout kernel.

The compiled extension is a pure accelerator. If Cython or a C compiler is
unavailable (or SIDTHE_SMPC_NO_EXT=1 is set), the build degrades to the
NumPy reference kernels and the package stays fully functional.
"""

import os

from setuptools import setup

# -ffp-contract=off keeps the C kernel bit-identical to the NumPy reference
# (no FMA contraction); do not add -ffast-math for the same reason.
EXTRA_COMPILE_ARGS = ["-O3", "-ffp-contract=off"]
if os.environ.get("SIDTHE_SMPC_PORTABLE", "0") != "1":
    EXTRA_COMPILE_ARGS.append("-march=native")


def _extensions():
    if os.environ.get("SIDTHE_SMPC_NO_EXT", "0") == "1":
        return []
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        print("sidthe-smpc: Cython/NumPy unavailable at build time; "
              "building without the compiled kernel")
        return []
    ext = Extension(
        "sidthe_smpc.kernels._core",
        ["src/sidthe_smpc/kernels/_core.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=EXTRA_COMPILE_ARGS,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
