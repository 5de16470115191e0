"""Optimal DoS attack energy allocation against remote state estimation."""

from .channel import ChannelModel, arrival_prob, dropout_prob, power_for_dropout, q_function, sinr
from .model import (
    ErrorLadder,
    SteadyState,
    SystemModel,
    build_ladder,
    ladder_step,
    spectral_check,
    steady_state,
)
from .schedule import (
    ArrivalProfile,
    AttackSchedule,
    DropoutBounds,
    PowerBudget,
    canonical_average_schedule,
    canonical_terminal_schedule,
    dropout_bounds,
    expected_average,
    expected_terminal,
    occupancy,
    terminal_closed_form,
)

__version__ = "0.1.0"
