"""Partitioned aeroelastic coupling engine.

Driver-level surface for scripts: load a configuration and a structural
model, build the solvers, launch a simulation and read the history back
with columns addressable by name.
"""

from __future__ import annotations

import pathlib

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    AerocoupleError,
    ConfigError,
    ConvergenceError,
    DegenerateCloudError,
    ModelFormatError,
    SignalError,
    SingularSystemError,
)
from .model_io import (  # noqa: F401
    CouplingConfig,
    History,
    StructuralModel,
    parse_config,
    parse_history,
    parse_structural_model,
)


def load_config(path) -> CouplingConfig:
    """Parse a coupling configuration file."""
    return parse_config(pathlib.Path(path).read_text())


def load_model(path) -> StructuralModel:
    """Parse a structural model file."""
    return parse_structural_model(pathlib.Path(path).read_text())


def build_solvers(config: CouplingConfig, model: StructuralModel):
    """Construct the (fluid, solid) pair for ``run``.

    The fluid side is the configured built-in aerodynamic solver; the
    solid side is the validated structural model.
    """
    from .driver import build_aero_solver

    model.validate()
    return build_aero_solver(config, model), model


def run(config: CouplingConfig, fluid, solid: StructuralModel) -> History:
    """Launch the configured simulation; return the history by columns."""
    from . import coupling
    from .model_io import format_history

    result = coupling.run(config, solid, fluid)
    text = format_history(result.records, result.monitor_names)
    return parse_history(text)
