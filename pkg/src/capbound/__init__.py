"""Upper bounds on quantum capacity, private capacity and one-way distillable
entanglement from flagged extensions and approximate degradability."""

from .bounds import (
    BoundReport,
    alpha_scan,
    approx_degradable_bound,
    channel_flag_bound,
    choi_channel_bound,
    degradable_flag_bound,
    dp_gad_bound,
    gad_flag_bound,
    general_flag_bound,
    state_pure_flag_bound,
)
from .channel import CPDecomposition, CPMap, complementary, flag_extend, from_kraus
from .coherent import q1_maximize, state_coherent_info
from .qmat import DensityMatrix
from .sdp import SolverError, diamond_distance, eta_channel, eta_state

__version__ = "0.1.0"

__all__ = [
    "BoundReport", "CPDecomposition", "CPMap", "DensityMatrix", "SolverError",
    "alpha_scan", "approx_degradable_bound", "channel_flag_bound", "choi_channel_bound",
    "complementary", "degradable_flag_bound", "diamond_distance", "dp_gad_bound",
    "eta_channel", "eta_state", "flag_extend", "from_kraus", "gad_flag_bound",
    "general_flag_bound", "q1_maximize", "state_coherent_info", "state_pure_flag_bound",
]
