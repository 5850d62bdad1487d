"""Truncation bounds (n_lower, mode, n_upper) for every benchmark configuration."""

import time

from _common import benchmark_configs, emit, parser
from levy_lda.cli import Table


def main() -> None:
    args = parser(__doc__).parse_args()
    rows = []
    for name, cfg in benchmark_configs(args.configs):
        m = cfg.compound_models()[0]
        t0 = time.perf_counter()
        b = m.bounds
        elapsed = time.perf_counter() - t0
        rows.append([name, b.n_lower, b.n_mode, b.n_upper, b.mass_dropped, m.zero_prob, elapsed])
    cols = ["config", "n_lower", "n_mode", "n_upper", "mass_dropped", "zero_prob", "seconds"]
    emit(Table(cols, rows), args.out)


if __name__ == "__main__":
    main()
