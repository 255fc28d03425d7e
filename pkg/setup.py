from setuptools import Extension, setup
from Cython.Build import cythonize

# -ffp-contract=off keeps the compiled kernel bit-identical to the pure-Python
# fallback (no fused multiply-add), which the benchmark and tests rely on.
ext = Extension(
    "eco._sim1d",
    ["src/eco/_sim1d.pyx"],
    extra_compile_args=["-O2", "-ffp-contract=off"],
)

setup(ext_modules=cythonize([ext], compiler_directives={"language_level": "3"}))
