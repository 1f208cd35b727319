"""Sandpile self-organized criticality simulation and wildfire class-size slope analysis."""

__version__ = "0.1.0"

from .errors import ConfigError, DegenerateInputError, InsufficientDataError, ParseError  # noqa: E402
from .sandpile import (  # noqa: E402
    AvalancheEvent,
    Lattice,
    LatticeConfig,
    SimulationRun,
    run_simulation,
    size_distribution,
    stabilize,
)
from .stats import compare_slopes, ols_fit, student_t_tail  # noqa: E402
