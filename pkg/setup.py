"""Builds the optional Cython fast path for tokenizer encoding.

The package works without the extension (a pure-Python encoder is selected
at import time), so build failures here should not block installation.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [Extension("cbqa._bpe_cy", ["src/cbqa/_bpe_cy.pyx"])],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
