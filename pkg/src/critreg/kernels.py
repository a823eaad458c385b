"""Selects the compiled kernels when present, else the pure-Python twins."""
from __future__ import annotations

import os

BACKEND = "python"

if os.environ.get("CRITREG_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from ._kernels import denjoy_orbit, denjoy_unit_eval, greedy_cover, phi_eval  # noqa: F401

        BACKEND = "compiled"
    except ImportError:  # extension not built
        pass

if BACKEND == "python":
    from ._pykernels import denjoy_orbit, denjoy_unit_eval, greedy_cover, phi_eval  # noqa: F401

__all__ = ["BACKEND", "phi_eval", "denjoy_unit_eval", "denjoy_orbit", "greedy_cover"]
