#!/usr/bin/env python3
"""Regenerate the small real-harness fixtures used by the frontend tests.

Shapes mirror the acceptance experiments at toy scale: a banana ensemble-size
study for two filters, a Lorenz '96 ensemble-size study, and a banana density
dump.  Run from the repository root:  python3 scripts/generate_fixture_data.py
"""

import pathlib
import sys

from mfgmf.harness import ExperimentConfig, emit_csv, run_banana, run_lorenz96

FIXTURES = pathlib.Path(__file__).resolve().parents[1] / "frontend" / "tests" / "fixtures"


def banana_vs_nx():
    rows = []
    for filter_name in ("engmf", "mfengmf"):
        for n_x in (10, 25, 50):
            cfg = ExperimentConfig(experiment="banana", filter=filter_name, n_x=n_x,
                                   n_u=20, replicates=3, seed=100, workers=1)
            rows.extend(run_banana(cfg))
    emit_csv(rows, FIXTURES / "banana_kld_nx.csv")


def banana_vs_sx():
    rows = []
    for filter_name in ("engmf", "aengmf"):
        for s_x in (0.5, 1.0, 2.0):
            cfg = ExperimentConfig(experiment="banana", filter=filter_name, n_x=10,
                                   s_x=s_x, replicates=3, seed=101, workers=1)
            rows.extend(run_banana(cfg))
    emit_csv(rows, FIXTURES / "banana_kld_sx.csv")


def l96_vs_nx():
    rows = []
    for filter_name, extra in (("enkf", {"alpha_x": 1.05}), ("none", {})):
        for n_x in (10, 25):
            cfg = ExperimentConfig(experiment="lorenz96", filter=filter_name, n_x=n_x,
                                   steps=60, spinup=20, replicates=2, seed=102,
                                   workers=1, **extra)
            rows.extend(run_lorenz96(cfg))
    emit_csv(rows, FIXTURES / "l96_rmse_nx.csv")


def banana_dump():
    cfg = ExperimentConfig(experiment="banana", filter="engmf", n_x=10, n_u=30,
                           replicates=1, seed=103, workers=1,
                           dump_density=str(FIXTURES / "banana_dump.json"),
                           dump_resolution=101)
    run_banana(cfg)


def header_only():
    emit_csv([], FIXTURES / "header_only.csv")


if __name__ == "__main__":
    FIXTURES.mkdir(parents=True, exist_ok=True)
    banana_vs_nx()
    banana_vs_sx()
    l96_vs_nx()
    banana_dump()
    header_only()
    print(f"fixtures written to {FIXTURES}", file=sys.stderr)
