"""Closed-form CDF against block Monte Carlo for every benchmark configuration.

Reports the share of grid points within 3 and 5 block standard errors.
"""

import numpy as np

from _common import benchmark_configs, emit, parser
from levy_lda.cli import Table
from levy_lda.compound import cdf
from levy_lda.montecarlo import SimulationConfig, empirical_cdf, simulate_years


def main() -> None:
    p = parser(__doc__)
    p.add_argument("--years", type=int, default=200_000)
    p.add_argument("--block-size", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=20240101)
    p.add_argument("--threads", type=int, default=1)
    args = p.parse_args()
    rows = []
    for name, cfg in benchmark_configs(args.configs):
        m = cfg.compound_models()[0]
        sim = SimulationConfig(args.years, args.block_size, args.seed, cfg.grid, args.threads)
        emp = empirical_cdf(simulate_years(m, sim), sim)
        err = np.abs(cdf(m, sim.grid) - emp.estimate)
        within3 = float(np.mean(err <= 3 * emp.std_error))
        within5 = float(np.mean(err <= 5 * emp.std_error))
        rows.append([name, within3, within5, float(err.max()), float(emp.std_error.max())])
    cols = ["config", "within_3se", "within_5se", "max_abs_error", "max_std_error"]
    emit(Table(cols, rows, {"years": args.years, "block_size": args.block_size}), args.out)


if __name__ == "__main__":
    main()
