import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from levy_lda.compound import CompoundModel
from levy_lda.frequency import (
    BetaBinomial,
    BetaNegBinomial,
    Binomial,
    NegBinomial,
    Poisson,
    PoissonGamma,
)
from levy_lda.stable import LevyParams

settings.register_profile(
    "default", max_examples=50, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ROOT = Path(__file__).resolve().parents[1]
BENCH_DIR = ROOT / "configs" / "benchmark"

BENCH = {
    "low_binomial": Binomial(12, 0.1),
    "low_beta_binomial": BetaBinomial(12, 1, 5),
    "low_negative_binomial": NegBinomial(2, 0.1),
    "low_beta_negative_binomial": BetaNegBinomial(2, 1, 5),
    "low_poisson": Poisson(0.1),
    "low_poisson_gamma": PoissonGamma(1, 0.1),
    "high_binomial": Binomial(12, 0.6),
    "high_beta_binomial": BetaBinomial(12, 5, 1),
    "high_negative_binomial": NegBinomial(10, 0.6),
    "high_beta_negative_binomial": BetaNegBinomial(10, 5, 1),
    "high_poisson": Poisson(10),
    "high_poisson_gamma": PoissonGamma(1, 10),
}

SEVERITY = LevyParams(0.01, 0.0)


def bench_model(name: str) -> CompoundModel:
    return CompoundModel(BENCH[name], SEVERITY)


@pytest.fixture(params=sorted(BENCH))
def bench_name(request):
    return request.param


@pytest.fixture
def bench(bench_name):
    return bench_model(bench_name)


@pytest.fixture
def write_config(tmp_path):
    def write(data, name="run.json"):
        path = tmp_path / name
        path.write_text(data if isinstance(data, str) else json.dumps(data, indent=2))
        return path

    return write
