from pathlib import Path

import numpy as np
import pytest

from aocsi import RewardParams, build_mdp, solve_rvi, validate_model

ROOT = Path(__file__).resolve().parents[1]
PAPER_CFG = ROOT / "configs" / "paper.cfg"

PAPER_P = [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]]
PAPER_R = [0.1, 0.5, 0.95]


def random_stochastic(rng: np.random.Generator, m: int) -> np.ndarray:
    p = rng.random((m, m)) + 1e-3
    return p / p.sum(axis=1, keepdims=True)


@pytest.fixture(scope="session")
def paper_model():
    return validate_model(PAPER_P, PAPER_R)


@pytest.fixture(scope="session")
def paper_params():
    return RewardParams(r_suc=1.0, r_fail=0.0, eps_t=0.4, eps_c=0.3, beta=1.8)


@pytest.fixture(scope="session")
def paper_mdp(paper_model, paper_params):
    return build_mdp(paper_model, paper_params, 14)


@pytest.fixture(scope="session")
def optimal_report(paper_mdp):
    return solve_rvi(paper_mdp)


@pytest.fixture(scope="session")
def paper_cfg_path():
    return PAPER_CFG


def random_small_instance(rng: np.random.Generator, delta_max: int):
    """Two-state channel with random dynamics and random valid reward params."""
    model = validate_model(rng.dirichlet([1.0, 1.0], size=2), rng.uniform(0, 1, 2))
    r_fail = rng.uniform(0, 0.5)
    eps_t = rng.uniform(0.05, 0.8)
    params = RewardParams(
        r_suc=rng.uniform(r_fail, 1.5),
        r_fail=r_fail,
        eps_t=eps_t,
        eps_c=rng.uniform(0.01, 0.99) * eps_t,
        beta=rng.uniform(0, 3),
    )
    return build_mdp(model, params, delta_max)


# criterion number -> (passed, one-line detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
