import numpy as np
from setuptools import setup, Extension

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "paneldiag._kernel",
                sources=["src/paneldiag/_kernel.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
else:
    # No Cython available: install with the pure-Python kernel only.
    extensions = []

setup(ext_modules=extensions)
