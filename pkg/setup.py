import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is not None:
    extensions = cythonize(
        [
            Extension(
                "landopt._backend._ctree",
                ["src/landopt/_backend/_ctree.pyx"],
                language="c++",
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
else:
    # Pure-python tree builder is used when the extension is unavailable.
    extensions = []

setup(ext_modules=extensions)
