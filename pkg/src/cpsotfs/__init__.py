"""Circularly pulse shaped OTFS: transforms, modem, channel, and metrics."""

from .params import (
    DelayDopplerGrid,
    OtfsParams,
    TimeFrequencyGrid,
    dd_index,
    dd_unindex,
    permutation_indices,
    tf_index,
    tf_unindex,
)
from .pulse import PrototypePulse, dirichlet_pulse, is_cmcm, rect_pulse
from .transforms import ModulationOperator, characteristic_diagonal, isfft, sfft

__all__ = [
    "DelayDopplerGrid",
    "ModulationOperator",
    "OtfsParams",
    "PrototypePulse",
    "TimeFrequencyGrid",
    "characteristic_diagonal",
    "dd_index",
    "dd_unindex",
    "dirichlet_pulse",
    "is_cmcm",
    "isfft",
    "permutation_indices",
    "rect_pulse",
    "sfft",
    "tf_index",
    "tf_unindex",
]
