"""Command line entry point: ``levy-lda <command> --config run.json``.

Exit status: 0 success, 1 runtime failure, 2 invalid configuration or
arguments, 3 outputs written but a mass/normalization check failed.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import aggregate as agg
from .compound import CompoundModel, cdf, density, retained_mass, value_at_risk
from .config import ConfigError, RunConfig, load_config
from .montecarlo import SimulationConfig, empirical_cdf, simulate_years, timing_study, truncation_study

log = logging.getLogger("levy_lda")

#: retained probability mass below which a run is flagged
MASS_CHECK = 1e-9

EXIT_OK, EXIT_RUNTIME, EXIT_CONFIG, EXIT_CHECK = 0, 1, 2, 3


@dataclass
class Table:
    """A result table with ``key=value`` metadata; round-trips through CSV and JSON."""

    columns: list[str]
    rows: list[list]
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        out = []
        if self.meta:
            out.append("# " + ",".join(f"{k}={_fmt(v)}" for k, v in self.meta.items()))
        out.append(",".join(self.columns))
        out.extend(",".join(_fmt(v) for v in row) for row in self.rows)
        return "\n".join(out) + "\n"

    def to_json(self) -> str:
        rows = [dict(zip(self.columns, (_jsonable(v) for v in row))) for row in self.rows]
        meta = {k: _jsonable(v) for k, v in self.meta.items()}
        return json.dumps({"meta": meta, "rows": rows}, indent=2) + "\n"

    def render(self, fmt: str) -> str:
        return self.to_csv() if fmt == "csv" else self.to_json()

    @classmethod
    def from_csv(cls, text: str) -> "Table":
        lines = text.splitlines()
        meta = {}
        if lines and lines[0].startswith("# "):
            for item in lines[0][2:].split(","):
                k, v = item.split("=", 1)
                meta[k] = _parse(v)
            lines = lines[1:]
        columns = lines[0].split(",")
        rows = [[_parse(v) for v in line.split(",")] for line in lines[1:]]
        return cls(columns, rows, meta)


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def _parse(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return {"true": True, "false": False}.get(s, s)


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    return v


class CheckFailed(Exception):
    pass


def _mass_check(models: list[CompoundModel]) -> None:
    for i, m in enumerate(models):
        mass = retained_mass(m)
        if not mass >= 1.0 - MASS_CHECK:
            raise CheckFailed(f"cell {i}: retained probability mass {mass!r} < 1 - {MASS_CHECK}")


def _bounds_meta(m: CompoundModel) -> dict:
    b = m.bounds
    return {
        "zero_prob": m.zero_prob,
        "n_lower": b.n_lower,
        "n_mode": b.n_mode,
        "n_upper": b.n_upper,
    }


def _sim_config(cfg: RunConfig, args) -> SimulationConfig:
    return SimulationConfig(
        years=cfg.years,
        block_size=cfg.block_size,
        seed=args.seed if args.seed is not None else cfg.seed,
        grid=np.asarray(cfg.grid),
        threads=args.threads,
        sampler=cfg.sampler,
    )


def _single(cfg: RunConfig, command: str) -> CompoundModel:
    if cfg.is_aggregate:
        raise ConfigError(f"{cfg.source}: '{command}' needs a single 'model', not 'cells'")
    return cfg.compound_models()[0]


def cmd_eval(cfg: RunConfig, args) -> list[Table]:
    m = _single(cfg, "eval")
    z = np.asarray(cfg.grid)
    rows = [[zi, p, c] for zi, p, c in zip(z, density(m, z), cdf(m, z))]
    return [Table(["z", "pdf", "cdf"], rows, _bounds_meta(m))]


def cmd_var(cfg: RunConfig, args) -> list[Table]:
    m = _single(cfg, "var")
    rows = []
    for q in cfg.q:
        try:
            rows.append([q, value_at_risk(m, q)])
        except ValueError as exc:
            raise CheckFailed(str(exc)) from None
    meta = _bounds_meta(m) | {"expected_shortfall": "divergent"}
    return [Table(["q", "var"], rows, meta)]


def cmd_truncate(cfg: RunConfig, args) -> list[Table]:
    m = _single(cfg, "truncate")
    b = m.bounds
    row = [b.n_lower, b.n_mode, b.n_upper, b.mass_dropped, b.threshold_log, m.zero_prob]
    cols = ["n_lower", "n_mode", "n_upper", "mass_dropped", "threshold_log", "zero_prob"]
    return [Table(cols, [row])]


def cmd_simulate(cfg: RunConfig, args) -> list[Table]:
    m = _single(cfg, "simulate")
    sim = _sim_config(cfg, args)
    emp = empirical_cdf(simulate_years(m, sim), sim)
    closed = cdf(m, sim.grid)
    rows = [list(r) for r in zip(sim.grid, closed, emp.estimate, emp.std_error)]
    meta = _bounds_meta(m) | {"years": sim.years, "block_size": sim.block_size, "seed": sim.seed}
    return [Table(["z", "closed_form", "empirical", "std_error"], rows, meta)]


def cmd_study(cfg: RunConfig, args) -> list[Table]:
    m = _single(cfg, "study")
    if cfg.study == "truncation":
        mse = truncation_study(m, cfg.caps, cfg.grid)
        meta = _bounds_meta(m)
        return [Table(["cap", "mse"], [[c, e] for c, e in zip(cfg.caps, mse)], meta)]
    sim = _sim_config(cfg, args)
    t = timing_study(m, sim)
    row = [t.closed_form_seconds, t.monte_carlo_seconds, t.ratio]
    return [Table(["closed_form_seconds", "monte_carlo_seconds", "ratio"], [row])]


def cmd_aggregate(cfg: RunConfig, args) -> list[Table]:
    if not cfg.is_aggregate or len(cfg.models) < 2:
        raise ConfigError(f"{cfg.source}: 'aggregate' needs a 'cells' list with at least 2 models")
    a = agg.AggregateModel(cfg.compound_models(), cfg.budget)
    z = np.asarray(cfg.grid)
    n_comp = len(agg.aggregate_component_set(a, float(z.max()) if z.size else 0.0))
    meta = {
        "zero_prob": a.zero_prob,
        "components": n_comp,
        "budget": a.budget,
        "retained_mass": agg.aggregate_retained_mass(a),
    }
    rows = [[zi, p, c] for zi, p, c in zip(z, agg.aggregate_density(a, z), agg.aggregate_cdf(a, z))]
    var_rows = []
    for q in cfg.q:
        try:
            var_rows.append([q, agg.aggregate_var(a, q)])
        except ValueError as exc:
            raise CheckFailed(str(exc)) from None
    return [Table(["z", "pdf", "cdf"], rows, meta), Table(["q", "var"], var_rows)]


COMMANDS = {
    "eval": cmd_eval,
    "var": cmd_var,
    "truncate": cmd_truncate,
    "simulate": cmd_simulate,
    "study": cmd_study,
    "aggregate": cmd_aggregate,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="levy-lda",
        description="Closed-form annual loss distributions with Levy severities.",
    )
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, type=Path, help="JSON run configuration")
    p.add_argument("--out", type=Path, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, help="override the config seed (unsigned 64-bit)")
    p.add_argument(
        "--threads", type=int, default=os.cpu_count() or 1, help="worker threads for simulation"
    )
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _render(tables: list[Table], fmt: str) -> str:
    if fmt == "csv":
        return "\n".join(t.to_csv() for t in tables)
    if len(tables) == 1:
        return tables[0].to_json()
    return json.dumps([json.loads(t.to_json()) for t in tables], indent=2) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s"
    )
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG

    status = EXIT_OK
    try:
        cfg = load_config(args.config)
        tables = COMMANDS[args.command](cfg, args)
        try:
            _mass_check(cfg.compound_models())
        except CheckFailed as exc:
            print(f"check failed: {exc}", file=sys.stderr)
            status = EXIT_CHECK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    text = _render(tables, args.format)
    if args.out is None:
        sys.stdout.write(text)
        return status
    try:
        args.out.write_text(text)
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc.strerror}", file=sys.stderr)
        return EXIT_RUNTIME
    log.info("wrote %s", args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
