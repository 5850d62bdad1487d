"""Wall time of closed-form grid evaluation against Monte Carlo, per benchmark configuration."""

from _common import benchmark_configs, emit, parser
from levy_lda.cli import Table
from levy_lda.montecarlo import SimulationConfig, timing_study


def main() -> None:
    p = parser(__doc__)
    p.add_argument("--years", type=int, default=200_000)
    p.add_argument("--block-size", type=int, default=50_000)
    p.add_argument("--n-cap", type=int, default=1000)
    p.add_argument("--repeats", type=int, default=3)
    args = p.parse_args()
    rows = []
    for name, cfg in benchmark_configs(args.configs):
        m = cfg.compound_models()[0]
        sim = SimulationConfig(args.years, args.block_size, cfg.seed, cfg.grid)
        t = timing_study(m, sim, n_cap=args.n_cap, repeats=args.repeats)
        rows.append([name, t.closed_form_seconds, t.monte_carlo_seconds, t.ratio])
    cols = ["config", "closed_form_seconds", "monte_carlo_seconds", "ratio"]
    emit(Table(cols, rows, {"years": args.years, "n_cap": args.n_cap}), args.out)


if __name__ == "__main__":
    main()
