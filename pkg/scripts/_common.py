"""Shared helpers for the study scripts."""

import argparse
import sys
from pathlib import Path

from levy_lda.cli import Table
from levy_lda.config import RunConfig, load_config

CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument(
        "--configs",
        type=Path,
        default=CONFIG_DIR / "benchmark",
        help="directory of single-model JSON configs",
    )
    p.add_argument("--out", type=Path, help="CSV output path (default: stdout)")
    return p


def benchmark_configs(directory: Path) -> list[tuple[str, RunConfig]]:
    paths = sorted(directory.glob("*.json"))
    if not paths:
        sys.exit(f"no configs in {directory}")
    return [(p.stem, load_config(p)) for p in paths]


def emit(table: Table, out: Path | None) -> None:
    text = table.to_csv()
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text)
