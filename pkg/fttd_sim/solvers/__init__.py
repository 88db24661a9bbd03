"""Precoder design algorithms."""

from .rd import (
    DigitalUpdate,
    RdConfig,
    RdResult,
    RdSolver,
    aligned_switch,
    energy_matched,
    normalize_power,
    objective,
    rd_solve,
    switch_costs,
    switch_row_cost,
    update_digital,
    update_switch,
)

__all__ = [
    "DigitalUpdate",
    "RdConfig",
    "RdResult",
    "RdSolver",
    "aligned_switch",
    "energy_matched",
    "normalize_power",
    "objective",
    "rd_solve",
    "switch_costs",
    "switch_row_cost",
    "update_digital",
    "update_switch",
]
