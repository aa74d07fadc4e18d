"""Besov-Herz norms, Littlewood-Paley tools and an iterative solver for
density-dependent incompressible Euler flow on periodic grids."""
from .errors import *  # noqa: F401,F403
from .grid import (Field, Grid, divergence, gradient, leray_project, make_grid,  # noqa: F401
                   random_field, set_threads)
from .dyadic import DyadicFilterBank, build_filter_bank, default_bank  # noqa: F401
from .herz import EstimateReport, NormParams, herz_norm, ring_partition  # noqa: F401
from .besov import besov_herz_norm  # noqa: F401
from .transport import TimeSeries, integrate_flow, solve_transport  # noqa: F401
from .euler import SchemeConfig, iterate_scheme, solve_pressure  # noqa: F401
from .diagnostics import bkm_functional, vorticity  # noqa: F401

__version__ = "0.1.0"
