"""Explicit diffeomorphisms of the circle and the line, with numerical checks.

Modules by topic: ``modulus`` (concave moduli), ``homeo`` (maps and words),
``rotation``, ``denjoy``, ``expansion`` (fast bumps), ``chains`` (covering
lengths), ``thompson`` and ``optgroup`` (the chain action with slow progress).
The hot loops live in ``kernels``, which picks the compiled extension when it
is importable; set CRITREG_PURE_PYTHON=1 to force the Python versions.
"""
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
