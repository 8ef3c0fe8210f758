"""priceshock: microsimulation of price shocks on household welfare.

Propagates cost shocks (observed inflation, carbon pricing, indirect
taxes) through an inter-industry economy to consumer prices, models
household demand responses with a calibrated linear expenditure system,
and quantifies the distributional and welfare impact across the
expenditure distribution.
"""

from ._version import __version__
from .data import (
    BridgingMatrix,
    CategorySet,
    FuelTable,
    HouseholdRecord,
    IncomeRecord,
    MrioTable,
    PriceScenario,
    load_bridge,
    load_fuels,
    load_household_survey,
    load_income_survey,
    load_mrio,
    load_price_relatives,
    write_household_survey,
)
from .demand import (
    ElasticitySet,
    LesParameters,
    behavioural_emissions,
    budget_elasticity,
    compensating_variation,
    equivalent_income,
    equivalent_variation,
    frisch_parameter,
    frisch_parameter_lahiri,
    les_calibrate,
    les_calibrate_frisch,
    les_demand,
    price_elasticities,
)
from .errors import (
    ConvergenceError,
    DataValidationError,
    InfeasibleBudgetError,
    NonProductiveEconomyError,
    NumericalModelError,
    PriceShockError,
    SeparationError,
)
from .fixtures import canonical_fixtures, write_fixture_bundle
from .imputation import (
    BinaryFit,
    RegressionFit,
    binary_fit,
    calibrate_income,
    chauvenet_outliers,
    impute_budget_shares,
    impute_expenditure_patterns,
    impute_participation,
    impute_total_expenditure,
    wls_fit,
)
from .inputoutput import (
    CarbonIntensity,
    LeontiefInverse,
    TechnologyMatrix,
    bridge_to_categories,
    bridge_to_industry,
    cost_passthrough,
    embodied_intensity,
    energy_industry_intensity,
    household_footprint,
    leontief_inverse,
    sector_intensity,
    technology_matrix,
)
from .metrics import (
    AtkinsonResult,
    WeightedSample,
    atkinson,
    concentration,
    distributional_characteristic,
    equivalise,
    gini,
    household_inflation,
    progressivity_table,
    weighted_quantile_groups,
    welfare_decomposition,
    welfare_weights,
)
from .scenario import (
    RunConfig,
    ScenarioResult,
    carbon_tax_scenario,
    compose_relatives,
    consumer_price,
    emit_reports,
    parse_config,
    recycle_revenue,
    run_scenario,
)

__all__ = [name for name in dir() if not name.startswith("_")]
