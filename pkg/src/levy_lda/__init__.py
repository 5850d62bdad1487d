"""Closed-form loss distribution approach models with Levy severities."""

from .aggregate import (
    AggregateModel,
    aggregate_cdf,
    aggregate_components,
    aggregate_density,
    aggregate_var,
)
from .compound import (
    CompoundModel,
    MixtureComponent,
    cdf,
    components,
    density,
    expected_shortfall,
    retained_mass,
    survival,
    tail_prob_asymptotic,
    value_at_risk,
)
from .frequency import (
    BetaBinomial,
    BetaNegBinomial,
    Binomial,
    FrequencyModel,
    NegBinomial,
    Poisson,
    PoissonGamma,
)
from .montecarlo import (
    EmpiricalCdf,
    SimulationConfig,
    empirical_cdf,
    simulate_aggregate_years,
    simulate_years,
    timing_study,
    truncation_study,
)
from .stable import Form, LevyParams, StableParams
from .truncation import TruncationBounds, truncation_bounds

__version__ = "0.1.0"
