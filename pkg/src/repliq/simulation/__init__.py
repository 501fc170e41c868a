"""Monte Carlo verification of directional error-rate control."""

from .bounds import theoretical_fdr_bound, theoretical_fwer_bound
from .harness import SimResult, estimate_error_rates, generate_replication
from .scenario import Dependence, SimScenario, load_scenario, scenario_f00, scenario_f_dot0

__all__ = [
    "Dependence",
    "SimScenario",
    "SimResult",
    "estimate_error_rates",
    "generate_replication",
    "load_scenario",
    "scenario_f00",
    "scenario_f_dot0",
    "theoretical_fdr_bound",
    "theoretical_fwer_bound",
]
