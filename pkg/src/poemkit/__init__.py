"""Discretization-error estimation by grid refinement with preset orders.

The main entry points are re-exported here; see the submodules for the
full API.
"""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("poemkit")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .errors import PoemError, ConfigError  # noqa: E402
from .grid import build_ladder, irreducible_unit, shared_fraction  # noqa: E402
from .schemes import ProblemSpec, solve, solve_ladder  # noqa: E402
from .estimator import (PresetOrders, fit_expansion, check_orders,  # noqa: E402
                        iterate_orders, gre_baseline)
from .midas import fit_from_differences, run_midas  # noqa: E402

__all__ = [
    "PoemError", "ConfigError", "build_ladder", "irreducible_unit", "shared_fraction",
    "ProblemSpec", "solve", "solve_ladder", "PresetOrders", "fit_expansion",
    "check_orders", "iterate_orders", "gre_baseline", "fit_from_differences", "run_midas",
]
