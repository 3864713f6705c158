import copy

import pytest
import yaml

from aocsi.config import load_config, parse_config
from aocsi.errors import ParseError, ValidationError
from aocsi.simulator import Accounting

BASE = {
    "channel": {
        "transition_matrix": [[0.8, 0.1, 0.1], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]],
        "reliabilities": [0.1, 0.5, 0.95],
    },
    "reward": {"r_suc": 1, "r_fail": 0, "eps_t": 0.4, "eps_c": 0.3, "beta": 1.8},
    "solver": {"delta_max": 14},
}


def variant(**edits):
    raw = copy.deepcopy(BASE)
    for path, value in edits.items():
        section, key = path.split("__")
        raw.setdefault(section, {})
        if value is None:
            raw[section].pop(key, None)
        else:
            raw[section][key] = value
    return raw


def key_of(raw):
    with pytest.raises(ValidationError) as info:
        parse_config(raw)
    return info.value.key


def test_shipped_config(paper_cfg_path):
    cfg = load_config(paper_cfg_path)
    assert cfg.params.beta == 1.8
    assert cfg.delta_max == 14
    assert cfg.solver.theta == 1e-9
    assert cfg.sim.horizon == 10**7
    assert cfg.model.num_states == 3


def test_defaults():
    cfg = parse_config(BASE)
    assert cfg.solver.theta == 1e-9
    assert cfg.solver.damping == 0.0
    assert cfg.solver.max_iterations == 100_000
    assert (cfg.solver.ref_state.age, cfg.solver.ref_state.last_state) == (1, 0)
    assert cfg.sim.accounting is Accounting.EXPECTED
    assert cfg.sim.warmup == 0 and cfg.sim.replications == 1


def test_probe_cost_above_transmit_cost():
    assert key_of(variant(reward__eps_c=0.5)) == "reward"


def test_bad_row_is_located():
    raw = variant(channel__transition_matrix=[[0.5, 0.4, 0.0], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]])
    assert key_of(raw) == "channel.transition_matrix[0]"


def test_bad_entry_and_reliability_are_located():
    raw = variant(channel__transition_matrix=[[1.1, -0.1, 0.0], [0.1, 0.8, 0.1], [0.1, 0.1, 0.8]])
    assert key_of(raw) == "channel.transition_matrix[0][0]"
    assert key_of(variant(channel__reliabilities=[0.1, 1.5, 0.9])) == "channel.reliabilities[1]"
    assert key_of(variant(channel__reliabilities=[0.1, 0.5])) == "channel"


@pytest.mark.parametrize(
    "edits, key",
    [
        (dict(solver__tolerance=1e-3), "solver.tolerance"),
        (dict(reward__beta=None), "reward.beta"),
        (dict(reward__beta="high"), "reward.beta"),
        (dict(reward__beta=True), "reward.beta"),
        (dict(solver__delta_max=1), "solver.delta_max"),
        (dict(solver__delta_max=7.5), "solver.delta_max"),
        (dict(solver__ref_state=[15, 0]), "solver.ref_state"),
        (dict(solver__ref_state="1,0"), "solver.ref_state"),
        (dict(solver__theta=-1.0), "solver"),
        (dict(sim__accounting="sometimes"), "sim.accounting"),
        (dict(sim__horizon=10, sim__replications=3), "sim"),
    ],
)
def test_validation_key_paths(edits, key):
    assert key_of(variant(**edits)) == key


def test_unknown_or_missing_sections():
    raw = copy.deepcopy(BASE)
    raw["plots"] = {}
    assert key_of(raw) == "plots"
    raw = copy.deepcopy(BASE)
    del raw["solver"]
    assert key_of(raw) == "solver"
    assert key_of([1, 2]) == ""


def test_unreadable_and_malformed_files(tmp_path):
    with pytest.raises(ParseError):
        load_config(tmp_path / "missing.cfg")
    bad = tmp_path / "bad.cfg"
    bad.write_text("channel: [unclosed\n")
    with pytest.raises(ParseError):
        load_config(bad)


def test_round_trip_through_yaml(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text(yaml.safe_dump(variant(sim__accounting="realized", sim__seed=5)))
    cfg = load_config(path)
    assert cfg.sim.accounting is Accounting.REALIZED and cfg.sim.seed == 5


def test_hash_tracks_content():
    assert parse_config(BASE).config_hash == parse_config(copy.deepcopy(BASE)).config_hash
    assert parse_config(variant(reward__beta=1.0)).config_hash != parse_config(BASE).config_hash


def test_overrides():
    cfg = parse_config(BASE).with_overrides(horizon=1000, seed=3, delta_max=6, replications=10)
    assert (cfg.sim.horizon, cfg.sim.seed, cfg.delta_max, cfg.sim.replications) == (1000, 3, 6, 10)
    with pytest.raises(ValidationError):
        parse_config(BASE).with_overrides(delta_max=1)
    with pytest.raises(ValidationError):
        parse_config(variant(solver__ref_state=[10, 0])).with_overrides(delta_max=6)
    with pytest.raises(ValidationError):
        parse_config(BASE).with_overrides(horizon=1000, replications=7)
