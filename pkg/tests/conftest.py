import sys
from dataclasses import replace
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from maskselect.harness import build_synthetic_config, run_experiment

ACCEPTANCE_SEEDS = (1, 2, 3, 4, 5)
DATA_DIR = Path(__file__).resolve().parent.parent / "data"


@pytest.fixture(scope="session")
def synthetic_runs(tmp_path_factory):
    """Full synthetic benchmark runs (mask selectors only), one per seed.

    Shared by several acceptance criteria; the dominant cost is the
    96-spec model tuning, so this runs once per session.
    """
    runs = {}
    for seed in ACCEPTANCE_SEEDS:
        out = tmp_path_factory.mktemp(f"synth_seed{seed}")
        config = replace(
            build_synthetic_config(seed, str(out)), selectors=("gbmo", "flbmo")
        )
        runs[seed] = run_experiment(config)
    return runs


@pytest.fixture(scope="session")
def benchmark_csvs(tmp_path_factory):
    """Paths to the two benchmark CSVs.

    Real UCI exports are used when placed under data/ (see README);
    otherwise deterministic surrogate tables with the same shapes and
    statistical character are generated.
    """
    from surrogates import write_residential_like, write_sonar_like

    sonar_real = DATA_DIR / "sonar.csv"
    resid_real = DATA_DIR / "residential.csv"
    if sonar_real.exists() and resid_real.exists():
        return {"sonar": sonar_real, "residential": resid_real, "provenance": "real"}
    tmp = tmp_path_factory.mktemp("benchmark_data")
    return {
        "sonar": write_sonar_like(tmp / "sonar.csv"),
        "residential": write_residential_like(tmp / "residential.csv"),
        "provenance": "surrogate",
    }
