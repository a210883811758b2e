"""Computing with general (non-factor) quantum subsystems.

Dense complex linear algebra on numpy arrays: Von Neumann algebra
decompositions, splitting maps with their locality and comprehension
structure, algebra traces, and constructive semi-causality analysis of
quantum channels.
"""

try:
    from ._core import *  # noqa: F401,F403
    from ._core import __doc__ as _core_doc
except ImportError:  # build-tree layout: extension sits next to the package
    from _core import *  # noqa: F401,F403
    from _core import __doc__ as _core_doc

__all__ = [name for name in dir() if not name.startswith("_")]
