"""Online coordinated precoding simulator for virtualized multi-cell MIMO.

A seedable, deterministic library plus CLI that simulates an infrastructure
provider tracking service providers' zero-forcing virtualization demands over
a time-correlated fading channel, using only multi-slot-delayed CSI, under
long-term and short-term per-cell transmit power constraints.
"""

from .baselines import OfflineSolution, delayed_saddle_step, fd_zf_step, offline_fixed_solver
from .channel import (
    ChannelState,
    FadingStreams,
    LargeScale,
    Topology,
    build_topology,
    init_channel,
    large_scale_gain,
    normalize_gains,
    step_channel,
)
from .config import ScenarioConfig, load_config
from .harness import DelayBuffer, ExperimentResult, RunRecord, run_experiment, sweep, write_outputs
from .metrics import BoundConstants, problem_constants, loss, per_user_rates, regret_and_violation
from .online_precoder import (
    AlgoParams,
    PowerBudget,
    PrecoderSet,
    distributed_step,
    init_precoders,
    local_gradient,
    precoder_update,
    queue_update,
    schedule_params,
)
from .virtualization import Demand, build_demand, zf_virtual_precoder

__version__ = "0.1.0"

__all__ = [
    "AlgoParams", "BoundConstants", "ChannelState", "Demand", "DelayBuffer",
    "ExperimentResult", "FadingStreams", "LargeScale", "OfflineSolution",
    "PowerBudget", "PrecoderSet", "RunRecord", "ScenarioConfig", "Topology",
    "build_demand", "build_topology", "delayed_saddle_step", "distributed_step",
    "fd_zf_step", "init_channel", "init_precoders", "large_scale_gain",
    "problem_constants", "load_config", "local_gradient", "loss", "normalize_gains",
    "offline_fixed_solver", "per_user_rates", "precoder_update", "queue_update",
    "regret_and_violation", "run_experiment", "schedule_params", "step_channel",
    "sweep", "write_outputs", "zf_virtual_precoder",
]
