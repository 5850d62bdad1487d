"""Mean squared CDF error against the truncation cap, for every benchmark configuration.

The reference is the CDF with 1000 terms; caps run from 1 to 1000 plus n_upper.
"""

from _common import benchmark_configs, emit, parser
from levy_lda.cli import Table
from levy_lda.montecarlo import truncation_study


def main() -> None:
    p = parser(__doc__)
    p.add_argument("--max-cap", type=int, default=1000)
    args = p.parse_args()
    rows = []
    for name, cfg in benchmark_configs(args.configs):
        m = cfg.compound_models()[0]
        caps = sorted(set(range(1, args.max_cap + 1)) | {m.bounds.n_upper})
        mse = truncation_study(m, caps, cfg.grid, reference_cap=args.max_cap)
        rows.extend([name, c, e, c == m.bounds.n_upper] for c, e in zip(caps, mse))
    emit(Table(["config", "cap", "mse", "is_n_upper"], rows), args.out)


if __name__ == "__main__":
    main()
