"""Joint sensing, sampling and offloading optimization for status-update freshness
in a multi-device edge computing system."""

from .aoi import device_cost, simulate_renewal, system_cost
from .game import exhaustive_offload_oracle, run_best_response_dynamics
from .harness import (ConfigError, ScenarioSpec, generate_scenario, load_config, run_sweep,
                      write_results)
from .model import DecisionState, DeviceProfile, Environment
from .orchestrator import (POLICIES, MiscoConfig, RunReport, check_constraints,
                           run_baseline, run_misco, run_policy)
from .stages import optimal_sampling_interval, optimize_sensing

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "DecisionState", "DeviceProfile", "Environment", "MiscoConfig",
    "POLICIES", "RunReport", "ScenarioSpec", "check_constraints", "device_cost",
    "exhaustive_offload_oracle", "generate_scenario", "load_config",
    "optimal_sampling_interval", "optimize_sensing", "run_baseline",
    "run_best_response_dynamics", "run_misco", "run_policy", "run_sweep",
    "simulate_renewal", "system_cost", "write_results",
]
