"""Outage-constrained beamforming for dual-function radar-communication transmitters."""

from .array import AngleGrid, ArrayConfig, BeampatternSpec, beampattern, steering_vector
from .channel import ChannelSet, DependentError, IndependentError, clt_validate, generate_rayleigh
from .conic import ConicBuilder, ConicProblem, SolverSettings, solve
from .optimizer import (
    CommCentricConfig,
    RadarCentricConfig,
    RelaxationInfeasible,
    extract_rank1,
    penalty,
    randomization_baseline,
    solve_comm_centric,
    solve_radar_centric,
)
from .outage import UserQoS, empirical_outage, epsilon_of, variance_dependent, variance_independent
from .radar_loss import RadarLossConfig, combined_loss

__version__ = "0.1.0"
