"""Quasimorphisms along random walks on free and free-abelian groups.

Thin wrapper over the C++ core: reduced-word group arithmetic, finitely
supported measures with exact convolution, Brooks counting quasimorphisms,
quasi-biharmonic representatives with certified residuals, boundary
cocycles on free groups, and CLT/LIL walk experiments.
"""

from ._qmwalk import *  # noqa: F401,F403
from ._qmwalk import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
