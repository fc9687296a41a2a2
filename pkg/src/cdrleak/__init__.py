"""Two-region carbon-pricing model with inter-regional leakage.

Solves the world energy-market equilibrium, computes emission-reduction
and removal leakage rates, optimizes the unilateral policy of the pricing
region, and derives the carbon tax and removal subsidy that decentralize
it.
"""

from .analysis import (
    DEFAULT_BOUNDS,
    SweepSpec,
    mc_mb_curves,
    random_scenario,
    sweep,
    verify_propositions,
)
from .equilibrium import (
    LeakageRates,
    ResponseEvaluation,
    leakage_rates,
    phi_partials_fd,
    solve_phi,
    world_price,
)
from .model import (
    DamageSpec,
    ExtractionSpec,
    ProductionSpec,
    RemovalSpec,
    Scenario,
    ValidationReport,
    damage_eval,
    extraction_eval,
    load_scenario,
    make_scenario,
    production_eval,
    removal_eval,
    replace_param,
    scenario_from_dict,
    scenario_to_dict,
    validate_scenario,
)
from .policy import (
    CommandControlOptimum,
    PolicyPrices,
    balanced_scenario,
    classify_trade_case,
    consumption,
    decentralized_check,
    foc_residuals,
    optimal_prices,
    optimize_command_control,
    theta,
)

__version__ = "0.1.0"
